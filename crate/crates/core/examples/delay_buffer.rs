//! The delay-buffer cascade update lets all stages run in parallel at the
//! cost of one sample of delay per stage. Its impulse response is the ripple
//! response shifted by the channel index, and closed-loop outputs stay close.
//!
//! cargo run --release --example delay_buffer

use carfac::analysis::delay::{closed_loop_difference, impulse_stagger};
use carfac::default_design;

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let (_, _, mismatch) = impulse_stagger(&params, 4096)?;
    println!("impulse response after removing the per-channel delay: max |diff| = {mismatch:.3e}");

    let cmp = closed_loop_difference(&params, 0.5, 0.01, 0.1, 1)?;
    println!("closed-loop NAP, relative RMS difference: {:.3}%", 100.0 * cmp.relative_rms);
    println!("  without delay alignment: {:.1}%", 100.0 * cmp.relative_rms_unaligned);
    Ok(())
}

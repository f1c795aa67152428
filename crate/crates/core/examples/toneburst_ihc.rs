//! Compare the two inner-hair-cell models on a 3 kHz tone burst and a
//! 300 Hz tone: the two-capacitor model keeps onset emphasis but passes
//! less phase-locked (AC) signal at high frequencies.
//!
//! cargo run --release --example toneburst_ihc

use carfac::analysis::synchrony::{compare_tone_burst, ToneBurstConfig};
use carfac::default_design;

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    for cfg in [ToneBurstConfig::three_khz(), ToneBurstConfig::steady_tone(300.0, 54)] {
        let c = compare_tone_burst(&params, &cfg)?;
        println!("{} Hz, channel {}", cfg.freq, cfg.channel);
        for v in [&c.two_cap, &c.one_cap] {
            println!("  {:?}: AC {:.4}  DC {:.4}  AC/DC {:.3}", v.variant, v.synchrony.ac, v.synchrony.dc, v.synchrony.index());
        }
        println!("  two_cap / one_cap AC ratio: {:.3}", c.ac_ratio());
    }
    Ok(())
}

//! The model is generic over the sample type. Run the same noise in 32-bit
//! and 64-bit and report how far the NAP outputs drift apart.
//!
//! cargo run --release --example single_precision

use carfac::io::uniform_noise;
use carfac::{default_design, Carfac, RunOptions};

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let x = uniform_noise(22050, 0.1, 5);
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();

    let mut m64 = Carfac::<f64>::new(&params, 1)?;
    let mut m32 = Carfac::<f32>::new(&params, 1)?;
    let a = m64.run_segment(&[&x], RunOptions::default())?.nap.remove(0);
    let b = m32.run_segment(&[&x32], RunOptions::default())?.to_f64().nap.remove(0);

    let max_diff = a.data().iter().zip(b.data()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let peak = a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max |f32 - f64| NAP difference: {max_diff:.3e} (peak NAP {peak:.3})");
    Ok(())
}

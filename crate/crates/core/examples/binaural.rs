//! Two ears with coupled AGC: noise in the left ear alone turns down the
//! undamping of the silent right ear as well.
//!
//! cargo run --release --example binaural

use carfac::io::uniform_noise;
use carfac::{default_design, Carfac, OutputSelection, RunOptions};

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let noise = uniform_noise(6615, 0.3, 3);
    let silence = vec![0.0; noise.len()];
    let opts = RunOptions { outputs: OutputSelection::NONE, ..Default::default() };

    let mut pair = Carfac::<f64>::new(&params, 2)?;
    pair.run_segment(&[&noise, &silence], opts)?;
    let mut alone = Carfac::<f64>::new(&params, 1)?;
    alone.run_segment(&[&silence], opts)?;

    println!("channel  undamping: unstimulated  silent ear  driven ear");
    for c in (0..pair.n_ch()).step_by(5) {
        println!(
            "{c:7} {:23.4} {:11.4} {:11.4}",
            alone.ears()[0].car.zb[c],
            pair.ears()[1].car.zb[c],
            pair.ears()[0].car.zb[c]
        );
    }
    Ok(())
}

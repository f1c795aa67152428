//! Small-signal frequency response of every channel: a linear, open-loop
//! impulse response, transformed to find each channel's peak gain and CF.
//!
//! cargo run --release --example impulse_response

use carfac::analysis::response::{ac_coupler_corner, linear_response};
use carfac::{default_design, Carfac};

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let model = Carfac::<f64>::new(&params, 1)?;
    let response = linear_response(&params, 8192)?;

    println!("channel   pole Hz   peak Hz   peak gain dB");
    for (c, pole) in model.pole_freqs().iter().enumerate() {
        println!("{c:7} {pole:9.1} {:9.1} {:14.2}", response.peak_freq_hz[c], response.peak_gain_db[c]);
    }
    println!("AC coupler half-power corner: {:.2} Hz", ac_coupler_corner(&params)?);
    Ok(())
}

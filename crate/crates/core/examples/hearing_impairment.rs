//! Outer-hair-cell loss: set health to zero over the basal half and compare
//! each channel's small-signal peak gain with the healthy model.
//!
//! cargo run --release --example hearing_impairment

use carfac::analysis::response::{basal_health, impairment};
use carfac::{default_design, Carfac};

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let n_ch = Carfac::<f64>::new(&params, 1)?.n_ch();
    let health = basal_health(n_ch, n_ch / 2, 0.0);
    let report = impairment(&params, &health, 8192)?;

    println!("channel  CF Hz   healthy dB  impaired dB  loss dB");
    for (c, loss) in report.reduction_db().iter().enumerate() {
        println!(
            "{c:7} {:7.0} {:11.2} {:12.2} {loss:8.2}",
            report.normal.peak_freq_hz[c], report.normal.peak_gain_db[c], report.impaired.peak_gain_db[c]
        );
    }
    Ok(())
}

//! Design the model at a chosen sample rate and print its coefficient
//! tables as CSV.
//!
//! cargo run --release --example design_tables -- [sample_rate]

use carfac::analysis::coeffs_dump::{write_agc_csv, write_car_csv, write_ihc_csv};
use carfac::{default_design, design_carfac};

fn main() -> carfac::Result<()> {
    let fs: f64 = std::env::args().nth(1).map(|s| s.parse().expect("sample rate")).unwrap_or(22050.0);
    let coeffs = design_carfac(&default_design(fs)?)?;
    let stdout = std::io::stdout();
    println!("# cascade ({} channels)", coeffs.car.n_ch());
    write_car_csv(stdout.lock(), &coeffs)?;
    println!("# AGC stages");
    write_agc_csv(stdout.lock(), &coeffs)?;
    println!("# inner hair cell");
    write_ihc_csv(stdout.lock(), &coeffs)?;
    Ok(())
}

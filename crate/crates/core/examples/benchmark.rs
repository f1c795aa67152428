//! Real-time factor of the model on noise, for whole-file and chunked runs
//! and for both cascade update modes.
//!
//! cargo run --release --example benchmark

use carfac::analysis::benchmark::{format_table, run_benchmark, BenchCase};
use carfac::default_design;

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let cases = [
        BenchCase::new(1.0, None, false),
        BenchCase::new(1.0, Some(0.01), false),
        BenchCase::new(1.0, None, true),
        BenchCase::new(10.0, None, false),
    ];
    let results = run_benchmark(&params, &cases, 2.0, 0)?;
    print!("{}", format_table(&results));
    Ok(())
}

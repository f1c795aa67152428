//! Render a rising chirp as a cochleagram image (PGM, base at the top).
//!
//! cargo run --release --example cochleagram -- [out.pgm]

use std::fs::File;
use std::io::BufWriter;

use carfac::analysis::cochleagram::{brightest_channels, cochleagram, CochleagramConfig};
use carfac::io::{write_pgm, Stimulus, StimulusSpec};
use carfac::{default_design, Carfac, OutputSelection, RunOptions};

fn main() -> carfac::Result<()> {
    let out_path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("chirp.pgm").display().to_string());
    let fs = 22050.0;
    let chirp = StimulusSpec::new(Stimulus::Chirp { f0: 100.0, f1: 8000.0, level_dbfs: -30.0 }, 1.0).synthesize(fs)?;

    let params = default_design(fs)?;
    let mut model = Carfac::<f64>::new(&params, 1)?;
    let out = model.run_segment(&[chirp], RunOptions { outputs: OutputSelection::nap_only(), ..Default::default() })?;
    let image = cochleagram(&out.nap[0], fs, &CochleagramConfig::default());
    write_pgm(BufWriter::new(File::create(&out_path)?), &image)?;

    let track = brightest_channels(&image);
    println!("wrote {} ({} frames x {} channels)", out_path, image.n_samples(), image.n_ch());
    println!("brightest channel every 10th frame: {:?}", track.iter().step_by(10).collect::<Vec<_>>());
    Ok(())
}

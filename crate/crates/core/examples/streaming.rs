//! Streaming use: feed audio in 10 ms blocks, checkpoint the model state
//! halfway, restore it into a fresh model and confirm the output matches a
//! single whole-signal run sample for sample.
//!
//! cargo run --release --example streaming

use carfac::io::uniform_noise;
use carfac::{default_design, Carfac, Plane, RunOptions};

fn main() -> carfac::Result<()> {
    let params = default_design(22050.0)?;
    let x = uniform_noise(22050, 0.05, 7);

    let mut whole = Carfac::<f64>::new(&params, 1)?;
    let reference = whole.run_segment(&[&x], RunOptions::default())?.nap.remove(0);

    let block = 220;
    let half = x.len() / 2 / block * block;
    let mut first = Carfac::<f64>::new(&params, 1)?;
    let mut pieces = Vec::new();
    for chunk in x[..half].chunks(block) {
        pieces.push(first.run_segment(&[chunk], RunOptions::default())?.nap.remove(0));
    }
    let checkpoint = first.save_state();
    println!("checkpoint after {half} samples: {} bytes", checkpoint.len());

    let mut second = Carfac::<f64>::new(&params, 1)?;
    second.load_state(&checkpoint)?;
    for chunk in x[half..].chunks(block) {
        pieces.push(second.run_segment(&[chunk], RunOptions::default())?.nap.remove(0));
    }
    let streamed = Plane::concat(&pieces)?;
    println!("streamed output identical to whole run: {}", streamed.data() == reference.data());
    Ok(())
}

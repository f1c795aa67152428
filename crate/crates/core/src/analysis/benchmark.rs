//! Throughput benchmark on noise segments. Design and allocation of the
//! model are excluded from the timings.

use std::time::Instant;

use crate::design::CarfacDesignParams;
use crate::error::Result;
use crate::io::stimulus::uniform_noise;
use crate::model::{Carfac, Plane, RunOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchCase {
    pub label: String,
    pub audio_s: f64,
    /// Split the audio into consecutive `run_segment` calls of this length.
    pub chunk_s: Option<f64>,
    pub delay_buffer: bool,
}

impl BenchCase {
    pub fn new(audio_s: f64, chunk_s: Option<f64>, delay_buffer: bool) -> Self {
        let mut label = fmt_dur(audio_s).to_string();
        if let Some(c) = chunk_s {
            label += &format!(" in {} chunks", fmt_dur(c));
        }
        if delay_buffer {
            label += " (delay buffer)";
        }
        Self { label, audio_s, chunk_s, delay_buffer }
    }
}

fn fmt_dur(s: f64) -> String {
    if s < 1.0 {
        format!("{} ms", (s * 1000.0).round())
    } else {
        format!("{s} s")
    }
}

/// 10 ms, 100 ms, 1 s and 10 s segments, 1 s split into 10 ms and 100 ms
/// chunks, and 1 s and 10 s in delay-buffer mode.
pub fn default_cases() -> Vec<BenchCase> {
    vec![
        BenchCase::new(0.01, None, false),
        BenchCase::new(0.1, None, false),
        BenchCase::new(1.0, None, false),
        BenchCase::new(10.0, None, false),
        BenchCase::new(1.0, Some(0.01), false),
        BenchCase::new(1.0, Some(0.1), false),
        BenchCase::new(1.0, None, true),
        BenchCase::new(10.0, None, true),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub case: BenchCase,
    pub repetitions: usize,
    /// Mean wall time per repetition, seconds.
    pub wall_s: f64,
    /// Wall time over audio duration.
    pub rtf: f64,
}

/// Run one case, repeating short segments until at least `min_total_s` of
/// audio has been processed. Returns the result and the NAP of the last
/// repetition.
pub fn run_case(params: &CarfacDesignParams, case: &BenchCase, min_total_s: f64, seed: u64) -> Result<(BenchResult, Plane<f64>)> {
    let fs = params.sample_rate;
    let x = uniform_noise((case.audio_s * fs).round() as usize, 0.1, seed);
    let chunk = case.chunk_s.map_or(x.len(), |c| ((c * fs).round() as usize).max(1));
    let mut model = Carfac::<f64>::new(&params.clone().with_delay_buffer(case.delay_buffer), 1)?;
    let reps = ((min_total_s / case.audio_s).ceil() as usize).clamp(1, 10_000);
    let mut total = 0.0;
    let mut naps = Vec::new();
    for _ in 0..reps {
        model.reset();
        naps.clear();
        let t0 = Instant::now();
        for piece in x.chunks(chunk.max(1)) {
            naps.push(model.run_segment(&[piece], RunOptions::default())?.nap.remove(0));
        }
        total += t0.elapsed().as_secs_f64();
    }
    let wall_s = total / reps as f64;
    let nap = Plane::concat(&naps)?;
    Ok((BenchResult { case: case.clone(), repetitions: reps, wall_s, rtf: wall_s / case.audio_s }, nap))
}

pub fn run_benchmark(params: &CarfacDesignParams, cases: &[BenchCase], min_total_s: f64, seed: u64) -> Result<Vec<BenchResult>> {
    cases.iter().map(|c| run_case(params, c, min_total_s, seed).map(|r| r.0)).collect()
}

pub fn format_table(results: &[BenchResult]) -> String {
    let mut s = format!("{:<32} {:>6} {:>12} {:>10}\n", "case", "reps", "wall (ms)", "RTF");
    for r in results {
        s += &format!("{:<32} {:>6} {:>12.3} {:>10.4}\n", r.case.label, r.repetitions, r.wall_s * 1e3, r.rtf);
    }
    s
}

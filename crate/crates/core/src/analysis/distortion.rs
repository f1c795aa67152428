//! Four-tone distortion-product analysis of the BM output.

use crate::design::CarfacDesignParams;
use crate::error::{CarfacError, Result};
use crate::io::stimulus::{Stimulus, StimulusSpec};
use crate::model::{Carfac, OutputSelection, Plane, RunOptions};

use super::spectrum::{bin_frequency, db, hann, magnitude_spectrum, nearest_bin};

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionConfig {
    pub primaries: Vec<f64>,
    pub level_dbfs: f64,
    /// Total run length in seconds.
    pub duration: f64,
    /// Length of the analysis window at the end of the run, in seconds.
    pub window: f64,
    /// Analyze the pre-coupler BM signal, as if the AC coupler were absent.
    pub use_bm_raw: bool,
    /// A line counts as detected when it exceeds the channel's median
    /// spectral floor by this many dB.
    pub detection_margin_db: f64,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            primaries: vec![1600.0, 1800.0, 2000.0, 2200.0],
            level_dbfs: -20.0,
            duration: 2.0,
            window: 0.8,
            use_bm_raw: false,
            detection_margin_db: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineKind {
    Quadratic,
    Cubic,
}

/// Expected distortion products of the primaries: positive difference tones
/// (quadratic) and 2f1 − f2 / 2f2 − f1 style cubic terms that do not
/// coincide with a primary.
pub fn expected_lines(primaries: &[f64]) -> Vec<(f64, LineKind)> {
    let mut lines: Vec<(f64, LineKind)> = Vec::new();
    let is_primary = |f: f64| primaries.iter().any(|&p| (p - f).abs() < 1e-6);
    let push = |f: f64, k: LineKind, lines: &mut Vec<(f64, LineKind)>| {
        if f > 0.0 && !is_primary(f) && !lines.iter().any(|(g, _)| (g - f).abs() < 1e-6) {
            lines.push((f, k));
        }
    };
    for (i, &a) in primaries.iter().enumerate() {
        for &b in &primaries[i + 1..] {
            push((b - a).abs(), LineKind::Quadratic, &mut lines);
        }
    }
    for &a in primaries {
        for &b in primaries {
            if a != b {
                push(2.0 * a - b, LineKind::Cubic, &mut lines);
            }
        }
    }
    lines.sort_by(|x, y| x.0.total_cmp(&y.0));
    lines
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineReport {
    pub freq_hz: f64,
    pub kind: LineKind,
    /// Strongest magnitude of this line over channels, dB re full scale.
    pub peak_db: f64,
    pub peak_channel: usize,
    /// Margin over that channel's median spectral floor.
    pub snr_db: f64,
    pub detected: bool,
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub sample_rate: f64,
    pub fft_len: usize,
    /// Frequencies of the rows of `spectrum`.
    pub bin_freqs: Vec<f64>,
    /// channels × bins magnitude table, dB re full-scale amplitude.
    pub spectrum_db: Plane<f64>,
    pub lines: Vec<LineReport>,
    /// Per channel: 0 Hz bin minus that channel's strongest distortion line, dB.
    pub dc_rel_db: Vec<f64>,
}

impl DistortionReport {
    pub fn worst_dc_rel_db(&self) -> f64 {
        self.dc_rel_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_detected(&self) -> bool {
        self.lines.iter().all(|l| l.detected)
    }
}

fn peak_near(spec: &[f64], bin: usize) -> f64 {
    let lo = bin.saturating_sub(2);
    let hi = (bin + 2).min(spec.len() - 1);
    spec[lo..=hi].iter().copied().fold(0.0, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

pub fn analyze_distortion(params: &CarfacDesignParams, cfg: &DistortionConfig) -> Result<DistortionReport> {
    if !(cfg.window > 0.0 && cfg.window <= cfg.duration) {
        return Err(CarfacError::Usage("analysis window must be positive and no longer than the run".into()));
    }
    let fs = params.sample_rate;
    let stim = StimulusSpec::new(
        Stimulus::Multitone {
            freqs: cfg.primaries.clone(),
            levels_dbfs: vec![cfg.level_dbfs; cfg.primaries.len()],
            ramp: 0.005,
        },
        cfg.duration,
    )
    .synthesize(fs)?;
    let mut model = Carfac::<f64>::new(params, 1)?;
    let outputs = OutputSelection { bm: !cfg.use_bm_raw, bm_raw: cfg.use_bm_raw, ..OutputSelection::NONE };
    let out = model.run_segment(&[stim], RunOptions { outputs, ..Default::default() })?;
    let bm = if cfg.use_bm_raw { &out.bm_raw[0] } else { &out.bm[0] };

    let n = (cfg.window * fs).round() as usize;
    let start = bm.n_samples() - n;
    let w = hann(n);
    let n_ch = bm.n_ch();
    let n_bins = n / 2 + 1;
    let lines = expected_lines(&cfg.primaries);
    let line_bins: Vec<usize> = lines.iter().map(|(f, _)| nearest_bin(*f, n, fs)).collect();

    let mut table = Vec::with_capacity(n_ch * n_bins);
    let mut dc_rel_db = Vec::with_capacity(n_ch);
    let mut line_best = vec![(f64::NEG_INFINITY, 0usize, 0.0f64); lines.len()];
    for ch in 0..n_ch {
        let x: Vec<f64> = bm.channel(ch)[start..].to_vec();
        let spec = magnitude_spectrum(&x, Some(&w));
        let floor = median(spec.clone());
        let mut strongest = 0.0f64;
        for (i, &b) in line_bins.iter().enumerate() {
            let m = peak_near(&spec, b);
            strongest = strongest.max(m);
            if db(m) > line_best[i].0 {
                line_best[i] = (db(m), ch, db(m) - db(floor));
            }
        }
        dc_rel_db.push(db(spec[0]) - db(strongest));
        table.extend(spec.iter().map(|&m| db(m)));
    }
    let lines = lines
        .iter()
        .zip(line_best)
        .map(|(&(freq_hz, kind), (peak_db, peak_channel, snr_db))| LineReport {
            freq_hz,
            kind,
            peak_db,
            peak_channel,
            snr_db,
            detected: snr_db >= cfg.detection_margin_db,
        })
        .collect();
    Ok(DistortionReport {
        sample_rate: fs,
        fft_len: n,
        bin_freqs: (0..n_bins).map(|k| bin_frequency(k, n, fs)).collect(),
        spectrum_db: Plane::from_vec(n_ch, n_bins, table)?,
        lines,
        dc_rel_db,
    })
}

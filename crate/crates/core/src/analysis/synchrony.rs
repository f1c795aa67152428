//! Tone-burst comparison of the IHC variants and the AC/DC synchrony
//! measure of the NAP.

use crate::design::{CarfacDesignParams, IhcVariant};
use crate::error::Result;
use crate::io::stimulus::{Stimulus, StimulusSpec};
use crate::model::{Carfac, OutputSelection, RunOptions};

use super::spectrum::tone_component;

/// Zero-based channel whose CF is near 3 kHz in the default 22050 Hz design.
pub const CHANNEL_NEAR_3KHZ: usize = 22;

/// AC (fundamental amplitude) and DC (mean) of a NAP trace over a window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Synchrony {
    pub ac: f64,
    pub dc: f64,
}

impl Synchrony {
    /// Ratio of AC to DC, a vector-strength-like synchrony index.
    pub fn index(&self) -> f64 {
        self.ac / self.dc
    }
}

/// Measure over the longest whole number of stimulus periods that fits in
/// `x[start..end]`.
pub fn measure_synchrony(x: &[f64], freq: f64, sample_rate: f64, start: usize, end: usize) -> Synchrony {
    let period = sample_rate / freq;
    let cycles = ((end - start) as f64 / period).floor().max(1.0);
    let n = ((cycles * period).round() as usize).min(end - start);
    let (ac, dc) = tone_component(&x[start..start + n], freq, sample_rate);
    Synchrony { ac, dc }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantTrace {
    pub variant: IhcVariant,
    pub bm: Vec<f64>,
    pub receptor_potential: Vec<f64>,
    pub nap: Vec<f64>,
    pub synchrony: Synchrony,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToneBurstComparison {
    pub freq: f64,
    pub channel: usize,
    pub sample_rate: f64,
    pub stimulus: Vec<f64>,
    pub two_cap: VariantTrace,
    pub one_cap: VariantTrace,
}

impl ToneBurstComparison {
    pub fn ac_ratio(&self) -> f64 {
        self.two_cap.synchrony.ac / self.one_cap.synchrony.ac
    }

    pub fn index_ratio(&self) -> f64 {
        self.two_cap.synchrony.index() / self.one_cap.synchrony.index()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToneBurstConfig {
    pub freq: f64,
    pub level_dbfs: f64,
    /// Burst length in seconds; the tone starts at t = 0 with no ramp.
    pub burst: f64,
    /// Total run length in seconds.
    pub duration: f64,
    pub channel: usize,
    /// Measurement window (seconds from onset).
    pub window: (f64, f64),
}

impl ToneBurstConfig {
    /// 3 kHz, 10 ms, −40 dBFS burst; measured over the second half of the burst.
    pub fn three_khz() -> Self {
        Self {
            freq: 3000.0,
            level_dbfs: -40.0,
            burst: 0.010,
            duration: 0.030,
            channel: CHANNEL_NEAR_3KHZ,
            window: (0.005, 0.010),
        }
    }

    /// A long low-frequency tone measured in steady state, at `channel`.
    pub fn steady_tone(freq: f64, channel: usize) -> Self {
        Self { freq, level_dbfs: -40.0, burst: 0.2, duration: 0.2, channel, window: (0.1, 0.2) }
    }
}

pub fn compare_tone_burst(params: &CarfacDesignParams, cfg: &ToneBurstConfig) -> Result<ToneBurstComparison> {
    let fs = params.sample_rate;
    let stimulus = StimulusSpec::new(
        Stimulus::ToneBurst { freq: cfg.freq, burst: cfg.burst, level_dbfs: cfg.level_dbfs },
        cfg.duration,
    )
    .synthesize(fs)?;
    let start = (cfg.window.0 * fs).round() as usize;
    let end = ((cfg.window.1 * fs).round() as usize).min(stimulus.len());
    let trace = |variant: IhcVariant| -> Result<VariantTrace> {
        let mut m = Carfac::<f64>::new(&params.clone().with_ihc_variant(variant), 1)?;
        let outputs = OutputSelection { nap: true, bm: true, receptor_potential: true, ..OutputSelection::NONE };
        let out = m.run_segment(&[&stimulus[..]], RunOptions { outputs, ..Default::default() })?;
        let nap = out.nap[0].channel(cfg.channel);
        let synchrony = measure_synchrony(&nap, cfg.freq, fs, start, end);
        Ok(VariantTrace {
            variant,
            bm: out.bm[0].channel(cfg.channel),
            receptor_potential: out.receptor_potential[0].channel(cfg.channel),
            nap,
            synchrony,
        })
    };
    Ok(ToneBurstComparison {
        freq: cfg.freq,
        channel: cfg.channel,
        sample_rate: fs,
        two_cap: trace(IhcVariant::TwoCap)?,
        one_cap: trace(IhcVariant::OneCap)?,
        stimulus,
    })
}

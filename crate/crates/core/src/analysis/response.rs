//! Small-signal transfer functions, characteristic frequencies, and the
//! effect of OHC impairment on them.

use crate::design::CarfacDesignParams;
use crate::error::{CarfacError, Result};
use crate::model::{Carfac, OutputSelection, Plane, RunOptions};

use super::spectrum::{bin_frequency, db, transfer_function};

/// Per-channel peak of a linear transfer function.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelResponse {
    pub peak_gain_db: Vec<f64>,
    pub peak_freq_hz: Vec<f64>,
}

/// BM impulse response (samples × channels) of `model` in linear open-loop
/// mode, starting from its current state.
pub fn impulse_response(model: &mut Carfac<f64>, n_samples: usize) -> Result<Plane<f64>> {
    if model.n_ears() != 1 {
        return Err(CarfacError::Usage("impulse response needs a one-ear model".into()));
    }
    let mut x = vec![0.0; n_samples];
    if let Some(first) = x.first_mut() {
        *first = 1.0;
    }
    let opts = RunOptions { outputs: OutputSelection { bm: true, ..OutputSelection::NONE }, ..RunOptions::linear_open_loop() };
    let mut out = model.run_segment(&[x], opts)?;
    Ok(out.bm.remove(0))
}

/// Peak gain and frequency of each channel's transfer function.
pub fn channel_response(ir: &Plane<f64>, sample_rate: f64) -> ChannelResponse {
    let n = ir.n_samples();
    let (mut peak_gain_db, mut peak_freq_hz) = (Vec::new(), Vec::new());
    for ch in 0..ir.n_ch() {
        let h = transfer_function(&ir.channel(ch));
        let (k, m) = h
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| (k, c.norm()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        peak_gain_db.push(db(m));
        peak_freq_hz.push(bin_frequency(k, n, sample_rate));
    }
    ChannelResponse { peak_gain_db, peak_freq_hz }
}

/// Small-signal response of a fresh model with full OHC health.
pub fn linear_response(params: &CarfacDesignParams, n_samples: usize) -> Result<ChannelResponse> {
    let mut m = Carfac::<f64>::new(params, 1)?;
    let ir = impulse_response(&mut m, n_samples)?;
    Ok(channel_response(&ir, params.sample_rate))
}

/// Small-signal response with the given OHC health: the model first idles
/// closed-loop in silence so the damping settles to the health-limited
/// undamping, then the loop is opened for a linear impulse measurement.
pub fn response_with_health(params: &CarfacDesignParams, health: &[f64], n_samples: usize) -> Result<ChannelResponse> {
    let mut m = Carfac::<f64>::new(params, 1)?;
    m.set_ohc_health(health)?;
    let settle = 200.max(4 * m.coeffs().agc.stages[0].decimation);
    let opts = RunOptions { outputs: OutputSelection::NONE, ..Default::default() };
    m.run_segment(&[vec![0.0; settle]], opts)?;
    let ir = impulse_response(&mut m, n_samples)?;
    Ok(channel_response(&ir, params.sample_rate))
}

/// Gain of the BM output coupler at `freq`: amplitude of `bm` over `bm_raw`
/// in the most apical channel for a linear open-loop tone, measured over
/// whole periods after a settling time.
pub fn ac_coupler_gain(params: &CarfacDesignParams, freq: f64) -> Result<f64> {
    let fs = params.sample_rate;
    let mut m = Carfac::<f64>::new(params, 1)?;
    let ch = m.n_ch() - 1;
    let period = fs / freq;
    let settle = (0.5 * fs) as usize;
    let n_meas = (period * freq.ceil().max(4.0)).round() as usize;
    let x: Vec<f64> =
        (0..settle + n_meas).map(|i| 0.01 * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin()).collect();
    let outputs = OutputSelection { bm: true, bm_raw: true, ..OutputSelection::NONE };
    let out = m.run_segment(&[x], RunOptions { outputs, ..RunOptions::linear_open_loop() })?;
    let amp = |p: &Plane<f64>| super::spectrum::tone_component(&p.channel(ch)[settle..], freq, fs).0;
    Ok(amp(&out.bm[0]) / amp(&out.bm_raw[0]))
}

/// Frequency where the coupler's power gain crosses one half, by bisection.
pub fn ac_coupler_corner(params: &CarfacDesignParams) -> Result<f64> {
    let target = 0.5f64.sqrt();
    let (mut lo, mut hi) = (1.0f64, 200.0f64);
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if ac_coupler_gain(params, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-5 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpairmentReport {
    pub normal: ChannelResponse,
    pub impaired: ChannelResponse,
}

impl ImpairmentReport {
    /// Per-channel sensitivity loss in dB (positive = less gain).
    pub fn reduction_db(&self) -> Vec<f64> {
        self.normal.peak_gain_db.iter().zip(&self.impaired.peak_gain_db).map(|(a, b)| a - b).collect()
    }
}

pub fn impairment(params: &CarfacDesignParams, health: &[f64], n_samples: usize) -> Result<ImpairmentReport> {
    let normal = response_with_health(params, &vec![1.0; health.len()], n_samples)?;
    let impaired = response_with_health(params, health, n_samples)?;
    Ok(ImpairmentReport { normal, impaired })
}

/// Health vector with channels `0..cutoff` (the basal end) set to `level`.
pub fn basal_health(n_ch: usize, cutoff: usize, level: f64) -> Vec<f64> {
    (0..n_ch).map(|c| if c < cutoff { level } else { 1.0 }).collect()
}

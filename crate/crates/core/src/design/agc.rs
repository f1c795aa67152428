use super::AgcDesignParams;
use crate::error::{CarfacError, Result};
use crate::real::Real;

/// Largest number of 3-tap FIR passes per stage update before the design is
/// declared infeasible at the current decimation.
pub const MAX_FIR_ITERATIONS: usize = 16;

/// Smallest middle tap accepted; keeps the spatial kernel well-behaved.
const MIN_MID_TAP: f64 = 0.25;

/// Weights applied to the basalward neighbor, the channel itself and the
/// apicalward neighbor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirTaps<T: Real = f64> {
    pub left: T,
    pub mid: T,
    pub right: T,
}

impl FirTaps<f64> {
    pub const IDENTITY: FirTaps<f64> = FirTaps { left: 0.0, mid: 1.0, right: 0.0 };

    /// Match mean `delay` and variance `spread_sq` of `[left, mid, right]`
    /// after `n_iter` passes. Returns `None` when any tap would be infeasible.
    pub fn for_spread(spread_sq: f64, delay: f64, n_iter: usize) -> Option<Self> {
        let mean = delay / n_iter as f64;
        let var = spread_sq / n_iter as f64;
        let left = (var + mean * mean - mean) / 2.0;
        let right = (var + mean * mean + mean) / 2.0;
        let taps = FirTaps { left, mid: 1.0 - left - right, right };
        (taps.mid >= MIN_MID_TAP && left >= 0.0 && right >= 0.0).then_some(taps)
    }

    pub fn cast<U: Real>(&self) -> FirTaps<U> {
        FirTaps { left: U::of(self.left), mid: U::of(self.mid), right: U::of(self.right) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgcStageCoeffs<T: Real = f64> {
    /// Decimation relative to the previous stage.
    pub decimation: usize,
    /// Product of decimations through this stage (update interval in samples).
    pub total_decimation: usize,
    /// Temporal one-pole coefficient at the decimated rate.
    pub epsilon: T,
    pub taps: FirTaps<T>,
    pub n_iterations: usize,
    /// Gain applied to the next slower stage's memory when added to this
    /// stage's input.
    pub stage_gain: T,
    /// Cross-ear mixing coefficient (zero for stage 0).
    pub mix_coeff: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgcCoeffs<T: Real = f64> {
    pub stages: Vec<AgcStageCoeffs<T>>,
    /// Input scale: reciprocal of the cascade's total DC gain.
    pub detect_scale: T,
    /// First-stage decimation that was requested, before any reduction.
    pub requested_decimation: usize,
}

impl<T: Real> AgcCoeffs<T> {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Samples between stage-0 updates (and loop closures).
    pub fn decimation(&self) -> usize {
        self.stages[0].decimation
    }

    pub fn decimation_reduced(&self) -> bool {
        self.stages[0].decimation != self.requested_decimation
    }
}

impl AgcCoeffs<f64> {
    pub fn cast<U: Real>(&self) -> AgcCoeffs<U> {
        AgcCoeffs {
            stages: self
                .stages
                .iter()
                .map(|s| AgcStageCoeffs {
                    decimation: s.decimation,
                    total_decimation: s.total_decimation,
                    epsilon: U::of(s.epsilon),
                    taps: s.taps.cast(),
                    n_iterations: s.n_iterations,
                    stage_gain: U::of(s.stage_gain),
                    mix_coeff: U::of(s.mix_coeff),
                })
                .collect(),
            detect_scale: U::of(self.detect_scale),
            requested_decimation: self.requested_decimation,
        }
    }
}

/// Design all stages. When a stage's spatial spread cannot be realized by at
/// most [`MAX_FIR_ITERATIONS`] 3-tap passes, the first decimation factor is
/// halved (more updates per time constant) and the whole design retried.
pub fn design_agc_coeffs(params: &AgcDesignParams, sample_rate: f64, n_ch: usize) -> Result<AgcCoeffs<f64>> {
    params.validate()?;
    if n_ch == 0 {
        return Err(CarfacError::Design("AGC needs at least one channel".into()));
    }
    let mut decimation = params.decimation.clone();
    loop {
        match try_design(params, &decimation, sample_rate) {
            Ok(stages) => {
                let total_dc_gain: f64 =
                    (0..params.n_stages).map(|k| params.agc_stage_gain.powi(k as i32)).sum();
                return Ok(AgcCoeffs {
                    stages,
                    detect_scale: 1.0 / total_dc_gain,
                    requested_decimation: params.decimation[0],
                });
            }
            Err(_) if decimation[0] > 1 => decimation[0] = (decimation[0] / 2).max(1),
            Err(stage) => {
                return Err(CarfacError::Design(format!(
                    "AGC stage {stage}: requested spatial smoothing is not achievable with a 3-tap FIR \
                     in {MAX_FIR_ITERATIONS} iterations, even without decimation"
                )));
            }
        }
    }
}

/// Returns the index of the first infeasible stage on failure.
fn try_design(
    params: &AgcDesignParams,
    decimation: &[usize],
    fs: f64,
) -> std::result::Result<Vec<AgcStageCoeffs<f64>>, usize> {
    let mut total_decimation = 1;
    let mut stages = Vec::with_capacity(params.n_stages);
    for k in 0..params.n_stages {
        let tau = params.time_constants[k];
        total_decimation *= decimation[k];
        let decim = total_decimation as f64;
        let epsilon = 1.0 - (-decim / (tau * fs)).exp();
        // Number of smoothing updates within one time constant.
        let n_times = tau * fs / decim;
        let (s1, s2) = (params.agc1_scales[k], params.agc2_scales[k]);
        let delay = (s2 - s1) / n_times;
        let spread_sq = (s1 * s1 + s2 * s2) / n_times;

        let (taps, n_iterations) = (1..=MAX_FIR_ITERATIONS)
            .find_map(|n| FirTaps::for_spread(spread_sq, delay, n).map(|t| (t, n)))
            .ok_or(k)?;
        let mix_coeff = if k == 0 { 0.0 } else { params.agc_mix_coeff / n_times };
        stages.push(AgcStageCoeffs {
            decimation: decimation[k],
            total_decimation,
            epsilon,
            taps,
            n_iterations,
            stage_gain: params.agc_stage_gain,
            mix_coeff,
        });
    }
    Ok(stages)
}

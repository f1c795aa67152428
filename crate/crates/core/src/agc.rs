//! Multi-stage decimating AGC loop filter and its feedback into the CAR.

use crate::car::CarState;
use crate::design::{AgcCoeffs, CarCoeffs, FirTaps};
use crate::real::Real;

#[derive(Clone, Debug)]
pub struct AgcStageState<T: Real = f64> {
    /// Smoothed activity.
    pub memory: Vec<T>,
    /// Inputs accumulated since the last update of this stage.
    pub input_accum: Vec<T>,
    /// Samples (at this stage's input rate) since the last update, mod decimation.
    pub decim_phase: usize,
    input: Vec<T>,
}

/// Equality over the persistent state only; `input` is per-update scratch.
impl<T: Real> PartialEq for AgcStageState<T> {
    fn eq(&self, other: &Self) -> bool {
        self.memory == other.memory && self.input_accum == other.input_accum && self.decim_phase == other.decim_phase
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgcState<T: Real = f64> {
    pub stages: Vec<AgcStageState<T>>,
}

impl<T: Real> AgcState<T> {
    pub fn new(coeffs: &AgcCoeffs<T>, n_ch: usize) -> Self {
        let zeros = vec![T::zero(); n_ch];
        Self {
            stages: (0..coeffs.n_stages())
                .map(|_| AgcStageState {
                    memory: zeros.clone(),
                    input_accum: zeros.clone(),
                    decim_phase: 0,
                    input: zeros.clone(),
                })
                .collect(),
        }
    }

    /// Stage-0 activity, the signal that closes the loop.
    pub fn activity(&self) -> &[T] {
        &self.stages[0].memory
    }
}

/// `n_iterations` passes of the 3-tap FIR, in place. The end channels reuse
/// their own value for the missing neighbor.
pub fn spatial_smooth_3tap<T: Real>(activity: &mut [T], taps: FirTaps<T>, n_iterations: usize) {
    let n = activity.len();
    if n == 0 {
        return;
    }
    for _ in 0..n_iterations {
        let mut prev = activity[0];
        for i in 0..n {
            let cur = activity[i];
            let next = if i + 1 < n { activity[i + 1] } else { cur };
            activity[i] = taps.left * prev + taps.mid * cur + taps.right * next;
            prev = cur;
        }
    }
}

/// Accumulate one sample of per-channel detect drive. Returns true iff stage
/// 0 updated on this sample, i.e. the loop should be re-closed.
pub fn agc_step<T: Real>(detect: &[T], coeffs: &AgcCoeffs<T>, state: &mut AgcState<T>) -> bool {
    let scale = coeffs.detect_scale;
    let st = &mut state.stages[0];
    for (acc, &d) in st.input_accum.iter_mut().zip(detect) {
        *acc = *acc + scale * d;
    }
    update_stage(coeffs, &mut state.stages, 0)
}

/// Advance stage `k` whose accumulator already holds the new input.
fn update_stage<T: Real>(coeffs: &AgcCoeffs<T>, stages: &mut [AgcStageState<T>], k: usize) -> bool {
    let sc = &coeffs.stages[k];
    {
        let this = &mut stages[k];
        this.decim_phase = (this.decim_phase + 1) % sc.decimation;
        if this.decim_phase != 0 {
            return false;
        }
        let decim = T::of(sc.decimation as f64);
        for (x, acc) in this.input.iter_mut().zip(this.input_accum.iter_mut()) {
            *x = *acc / decim;
            *acc = T::zero();
        }
    }
    if k + 1 < stages.len() {
        {
            let (lo, hi) = stages.split_at_mut(k + 1);
            for (acc, &x) in hi[0].input_accum.iter_mut().zip(&lo[k].input) {
                *acc = *acc + x;
            }
        }
        update_stage(coeffs, stages, k + 1);
        // The slower stage feeds back whether or not it updated just now.
        let (lo, hi) = stages.split_at_mut(k + 1);
        for (x, &m) in lo[k].input.iter_mut().zip(&hi[0].memory) {
            *x = *x + sc.stage_gain * m;
        }
    }
    let this = &mut stages[k];
    for (m, &x) in this.memory.iter_mut().zip(&this.input) {
        *m = *m + sc.epsilon * (x - *m);
    }
    spatial_smooth_3tap(&mut this.memory, sc.taps, sc.n_iterations);
    true
}

/// Move every ear's freshly updated stage memories toward the across-ear
/// mean. Stages are visited from 0 upward while they updated on this sample
/// (decimation phase 0). A single ear is left unchanged.
pub fn cross_ear_mix<T: Real>(coeffs: &AgcCoeffs<T>, states: &mut [AgcState<T>]) {
    let n_ears = states.len();
    if n_ears < 2 {
        return;
    }
    let n_ch = states[0].stages[0].memory.len();
    let inv_ears = T::one() / T::of(n_ears as f64);
    let mut mean = vec![T::zero(); n_ch];
    for (k, sc) in coeffs.stages.iter().enumerate() {
        if states[0].stages[k].decim_phase > 0 {
            break;
        }
        if sc.mix_coeff <= T::zero() {
            continue;
        }
        mean.iter_mut().for_each(|m| *m = T::zero());
        for st in states.iter() {
            for (m, &x) in mean.iter_mut().zip(&st.stages[k].memory) {
                *m = *m + x;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m * inv_ears);
        for st in states.iter_mut() {
            for (x, &m) in st.stages[k].memory.iter_mut().zip(&mean) {
                *x = *x + sc.mix_coeff * (m - *x);
            }
        }
    }
}

/// Relative undamping target for one channel: `clamp(1 − activity, 0, 1)·health`.
#[inline]
pub fn target_undamping<T: Real>(activity: T, health: T) -> T {
    (T::one() - activity).max(T::zero()).min(T::one()) * health
}

/// Set the CAR interpolation deltas so undamping and stage gain reach the
/// targets implied by `agc_activity` over the next `decimation` samples. In
/// open-loop mode the ramps are frozen instead.
pub fn close_agc_loop<T: Real>(
    agc_activity: &[T],
    ohc_health: &[T],
    coeffs: &CarCoeffs<T>,
    car_state: &mut CarState<T>,
    decimation: usize,
    open_loop: bool,
) {
    if open_loop {
        car_state.freeze_ramps();
        return;
    }
    let decim = T::of(decimation as f64);
    for ch in 0..coeffs.n_ch() {
        let u = target_undamping(agc_activity[ch], ohc_health[ch]);
        let new_g = coeffs.stage_gain(ch, u);
        car_state.dzb[ch] = (coeffs.zr[ch] * u - car_state.zb[ch]) / decim;
        car_state.dg[ch] = (new_g - car_state.g[ch]) / decim;
    }
}

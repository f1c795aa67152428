//! Per-sample update of the cascade of asymmetric resonators.
//!
//! Each stage is a two-pole/two-zero resonator in coupled form whose pole
//! radius is `r1 + zB·nlf`: the AGC sets the undamping `zB` (interpolated
//! every sample toward its target), and the OHC nonlinearity scales it down
//! with stage velocity. The cascade output of every stage passes through a
//! one-pole highpass (the AC coupler) to form the BM output.

use crate::design::CarCoeffs;
use crate::real::Real;

/// Mutable resonator state for one ear.
#[derive(Clone, Debug, PartialEq)]
pub struct CarState<T: Real = f64> {
    pub z1: Vec<T>,
    pub z2: Vec<T>,
    /// Previous `z2`, for the velocity first difference.
    pub za: Vec<T>,
    /// Current undamping (`zr·u`, before the NLF).
    pub zb: Vec<T>,
    pub dzb: Vec<T>,
    /// Current stage gain.
    pub g: Vec<T>,
    pub dg: Vec<T>,
    /// Last stage outputs; the inter-stage delay line in delay-buffer mode.
    pub zy: Vec<T>,
    /// AC coupler memory.
    pub ac_state: Vec<T>,
}

impl<T: Real> CarState<T> {
    /// Rest state: zero signal memory, design-time undamping and gain.
    pub fn new(coeffs: &CarCoeffs<T>) -> Self {
        let n = coeffs.n_ch();
        let zeros = vec![T::zero(); n];
        Self {
            z1: zeros.clone(),
            z2: zeros.clone(),
            za: zeros.clone(),
            zb: coeffs.zr.clone(),
            dzb: zeros.clone(),
            g: coeffs.g_init.clone(),
            dg: zeros.clone(),
            zy: zeros.clone(),
            ac_state: zeros,
        }
    }

    pub fn n_ch(&self) -> usize {
        self.z1.len()
    }

    /// Stop any pending interpolation of undamping and gain.
    pub fn freeze_ramps(&mut self) {
        self.dzb.iter_mut().for_each(|d| *d = T::zero());
        self.dg.iter_mut().for_each(|d| *d = T::zero());
    }
}

/// Per-channel results of one CAR step.
#[derive(Clone, Debug, PartialEq)]
pub struct CarStepOutput<T: Real = f64> {
    /// AC-coupled BM output.
    pub bm: Vec<T>,
    /// Cascade output before the AC coupler.
    pub bm_raw: Vec<T>,
    /// Velocity that drove the NLF this step.
    pub velocities: Vec<T>,
    pub nlf: Vec<T>,
}

impl<T: Real> CarStepOutput<T> {
    pub fn new(n_ch: usize) -> Self {
        Self {
            bm: vec![T::zero(); n_ch],
            bm_raw: vec![T::zero(); n_ch],
            velocities: vec![T::zero(); n_ch],
            nlf: vec![T::one(); n_ch],
        }
    }
}

/// OHC nonlinear function, `1 / (1 + (v·velocity_scale + v_offset)²)`.
#[inline]
pub fn ohc_nlf_scalar<T: Real>(velocity: T, velocity_scale: T, v_offset: T) -> T {
    let x = velocity * velocity_scale + v_offset;
    T::one() / (T::one() + x * x)
}

/// Vector form of the OHC nonlinearity; all ones in linear mode.
pub fn ohc_nlf<T: Real>(velocities: &[T], coeffs: &CarCoeffs<T>, linear: bool) -> Vec<T> {
    velocities
        .iter()
        .map(|&v| if linear { T::one() } else { ohc_nlf_scalar(v, coeffs.velocity_scale, coeffs.v_offset) })
        .collect()
}

/// One-pole highpass per channel: `out = x − s; s += ac_coeff·(x − s)`.
pub fn ac_couple<T: Real>(bm_raw: &[T], ac_state: &mut [T], ac_coeff: T, out: &mut [T]) {
    for ((o, &x), s) in out.iter_mut().zip(bm_raw).zip(ac_state.iter_mut()) {
        let diff = x - *s;
        *s = *s + ac_coeff * diff;
        *o = diff;
    }
}

/// Rotate/decay the resonator state for every channel. Leaves the stage
/// input to be added to `z1` by the caller; returns nothing, writes `z1`,
/// `z2`, `za`, `zb`, `g` in place and records velocity and NLF.
#[inline]
fn resonate<T: Real>(coeffs: &CarCoeffs<T>, state: &mut CarState<T>, linear: bool, out: &mut CarStepOutput<T>) {
    let n = coeffs.n_ch();
    for ch in 0..n {
        let g = state.g[ch] + state.dg[ch];
        let zb = state.zb[ch] + state.dzb[ch];
        let z1 = state.z1[ch];
        let z2 = state.z2[ch];
        let v = z2 - state.za[ch];
        let nlf = if linear { T::one() } else { ohc_nlf_scalar(v, coeffs.velocity_scale, coeffs.v_offset) };
        let r = coeffs.r1[ch] + zb * nlf;
        state.za[ch] = z2;
        state.z1[ch] = r * (coeffs.a0[ch] * z1 - coeffs.c0[ch] * z2);
        state.z2[ch] = r * (coeffs.c0[ch] * z1 + coeffs.a0[ch] * z2);
        state.zb[ch] = zb;
        state.g[ch] = g;
        out.velocities[ch] = v;
        out.nlf[ch] = nlf;
    }
}

/// Minimum-phase step: each stage consumes the same-sample output of the
/// stage above it, so the cascade ripples sequentially from base to apex.
pub fn car_step_ripple<T: Real>(
    input: T,
    coeffs: &CarCoeffs<T>,
    state: &mut CarState<T>,
    linear: bool,
    out: &mut CarStepOutput<T>,
) {
    resonate(coeffs, state, linear, out);
    let mut in_out = input;
    for ch in 0..coeffs.n_ch() {
        state.z1[ch] = state.z1[ch] + in_out;
        in_out = state.g[ch] * (in_out + coeffs.h[ch] * state.z2[ch]);
        state.zy[ch] = in_out;
    }
    finish(coeffs, state, out);
}

/// Channel-parallel step: each stage consumes the previous sample's output
/// of the stage above it (one sample of delay per stage).
pub fn car_step_delay_buffer<T: Real>(
    input: T,
    coeffs: &CarCoeffs<T>,
    state: &mut CarState<T>,
    linear: bool,
    out: &mut CarStepOutput<T>,
) {
    resonate(coeffs, state, linear, out);
    let mut stage_in = input;
    for ch in 0..coeffs.n_ch() {
        let next_in = state.zy[ch];
        state.z1[ch] = state.z1[ch] + stage_in;
        state.zy[ch] = state.g[ch] * (stage_in + coeffs.h[ch] * state.z2[ch]);
        stage_in = next_in;
    }
    finish(coeffs, state, out);
}

#[inline]
fn finish<T: Real>(coeffs: &CarCoeffs<T>, state: &mut CarState<T>, out: &mut CarStepOutput<T>) {
    out.bm_raw.copy_from_slice(&state.zy);
    ac_couple(&out.bm_raw, &mut state.ac_state, coeffs.ac_coeff, &mut out.bm);
}

/// Step in whichever mode the coefficients were designed for.
#[inline]
pub fn car_step<T: Real>(
    input: T,
    coeffs: &CarCoeffs<T>,
    state: &mut CarState<T>,
    linear: bool,
    out: &mut CarStepOutput<T>,
) {
    if coeffs.use_delay_buffer {
        car_step_delay_buffer(input, coeffs, state, linear, out)
    } else {
        car_step_ripple(input, coeffs, state, linear, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_car_coeffs, design_channels, CarDesignParams};

    fn coeffs(delay: bool) -> CarCoeffs {
        let p = CarDesignParams { use_delay_buffer: delay, ..Default::default() };
        let map = design_channels(&p, 22050.0).unwrap();
        design_car_coeffs(&p, 22050.0, &map).unwrap()
    }

    fn impulse_response(c: &CarCoeffs, n: usize) -> Vec<Vec<f64>> {
        let mut s = CarState::new(c);
        let mut out = CarStepOutput::new(c.n_ch());
        (0..n)
            .map(|t| {
                car_step(if t == 0 { 1.0 } else { 0.0 }, c, &mut s, true, &mut out);
                out.bm.clone()
            })
            .collect()
    }

    #[test]
    fn nlf_linear_mode_is_exactly_one() {
        let c = coeffs(false);
        let v = [-3.0, 0.0, 0.5, 1e6];
        assert!(ohc_nlf(&v, &c, true).iter().all(|&x| x == 1.0));
    }

    #[test]
    fn nlf_peaks_at_offset_zero() {
        let c = coeffs(false);
        let v0 = -c.v_offset / c.velocity_scale;
        assert_eq!(ohc_nlf(&[v0], &c, false)[0], 1.0);
    }

    #[test]
    fn nlf_at_rest_velocity() {
        let c = coeffs(false);
        let got = ohc_nlf(&[0.0], &c, false)[0];
        assert!((got - 1.0 / 1.0016).abs() < 1e-15);
        assert!((got - 0.998402).abs() < 1e-6);
    }

    #[test]
    fn zero_input_keeps_rest_state() {
        for delay in [false, true] {
            let c = coeffs(delay);
            let mut s = CarState::new(&c);
            let rest = s.clone();
            let mut out = CarStepOutput::new(c.n_ch());
            for _ in 0..100 {
                car_step(0.0, &c, &mut s, false, &mut out);
                assert!(out.bm.iter().all(|&x| x == 0.0));
            }
            assert_eq!(s, rest);
        }
    }

    #[test]
    fn delay_buffer_staggers_ripple_exactly() {
        let n = 400;
        let ripple = impulse_response(&coeffs(false), n);
        let delayed = impulse_response(&coeffs(true), n);
        for ch in 0..71 {
            for t in 0..n - ch {
                assert_eq!(delayed[t + ch][ch], ripple[t][ch], "ch {ch} t {t}");
            }
            for t in 0..ch {
                assert_eq!(delayed[t][ch], 0.0);
            }
        }
    }

    #[test]
    fn ac_coupler_rejects_dc() {
        let c = coeffs(false);
        let mut s = vec![0.0; 1];
        let mut y = vec![0.0; 1];
        ac_couple(&[0.7], &mut s, c.ac_coeff, &mut y);
        assert_eq!(y[0], 0.7);
        for _ in 0..22050 {
            ac_couple(&[0.7], &mut s, c.ac_coeff, &mut y);
        }
        assert!(y[0].abs() < 1e-12, "{}", y[0]);
    }

    #[test]
    fn ac_coupler_half_power_at_corner() {
        let c = coeffs(false);
        let fs = 22050.0;
        let (mut s, mut y) = (vec![0.0], vec![0.0]);
        let n = 5 * 22050;
        let mut peak: f64 = 0.0;
        for t in 0..n {
            let x = (2.0 * std::f64::consts::PI * 20.0 * t as f64 / fs).sin();
            ac_couple(&[x], &mut s, c.ac_coeff, &mut y);
            if t > 3 * 22050 {
                peak = peak.max(y[0].abs());
            }
        }
        assert!((peak - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01 * std::f64::consts::FRAC_1_SQRT_2, "{peak}");
    }

    #[test]
    fn non_finite_input_propagates() {
        let c = coeffs(false);
        let mut s = CarState::new(&c);
        let mut out = CarStepOutput::new(c.n_ch());
        car_step(f64::NAN, &c, &mut s, false, &mut out);
        assert!(out.bm[0].is_nan());
    }
}

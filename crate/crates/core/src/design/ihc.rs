use super::{IhcDesignParams, IhcVariant};
use crate::error::Result;
use crate::real::Real;

/// Upper clip level of the half-wave-rectifier IHC.
pub const JUST_HWR_CLIP: f64 = 2.0;

/// Offset of the detection nonlinearity's low tail into negative input.
const DETECT_OFFSET: f64 = 0.175;

/// Transduction conductance: a saturating soft rectifier,
/// `z³ / (z³ + z² + 0.1)` with `z = max(x + 0.175, 0)`.
#[inline]
pub fn detect_nonlinearity<T: Real>(x: T) -> T {
    let z = (x + T::of(DETECT_OFFSET)).max(T::zero());
    let z2 = z * z;
    let z3 = z2 * z;
    z3 / (z3 + z2 + T::of(0.1))
}

/// One-pole smoothing coefficient for time constant `tau` at `fs`.
pub(crate) fn one_pole_coeff(tau: f64, fs: f64) -> f64 {
    1.0 - (-1.0 / (tau * fs)).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoCapCoeffs<T: Real = f64> {
    /// Output smoother (80 µs by default).
    pub lpf_coeff: T,
    /// Receptor capacitor depletion rate per unit conductance.
    pub out1_rate: T,
    /// Receptor capacitor recovery; the receptor-potential smoother (200 µs).
    pub in1_rate: T,
    pub out2_rate: T,
    pub in2_rate: T,
    pub output_gain: T,
    /// Quiescent output, subtracted so silence maps to zero NAP.
    pub rest_output: T,
    pub rest_cap1: T,
    pub rest_cap2: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneCapCoeffs<T: Real = f64> {
    /// Coefficient of both cascaded 80 µs output smoothers.
    pub lpf_coeff: T,
    pub out_rate: T,
    pub in_rate: T,
    pub output_gain: T,
    pub rest_output: T,
    pub rest_cap: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IhcCoeffs<T: Real = f64> {
    TwoCap(TwoCapCoeffs<T>),
    OneCap(OneCapCoeffs<T>),
    JustHwr { clip: T },
}

impl<T: Real> IhcCoeffs<T> {
    pub fn variant(&self) -> IhcVariant {
        match self {
            IhcCoeffs::TwoCap(_) => IhcVariant::TwoCap,
            IhcCoeffs::OneCap(_) => IhcVariant::OneCap,
            IhcCoeffs::JustHwr { .. } => IhcVariant::JustHwr,
        }
    }

    /// NAP-domain value subtracted at the output; zero for the rectifier.
    pub fn quiescent_output(&self) -> T {
        match self {
            IhcCoeffs::TwoCap(c) => c.rest_output,
            IhcCoeffs::OneCap(c) => c.rest_output,
            IhcCoeffs::JustHwr { .. } => T::zero(),
        }
    }

    /// Named per-sample rates, for coefficient dumps.
    pub fn rates(&self) -> Vec<(&'static str, f64)> {
        match self {
            IhcCoeffs::TwoCap(c) => vec![
                ("lpf_coeff", c.lpf_coeff.to_f64_lossy()),
                ("out1_rate", c.out1_rate.to_f64_lossy()),
                ("in1_rate", c.in1_rate.to_f64_lossy()),
                ("out2_rate", c.out2_rate.to_f64_lossy()),
                ("in2_rate", c.in2_rate.to_f64_lossy()),
                ("output_gain", c.output_gain.to_f64_lossy()),
                ("rest_output", c.rest_output.to_f64_lossy()),
                ("rest_cap1", c.rest_cap1.to_f64_lossy()),
                ("rest_cap2", c.rest_cap2.to_f64_lossy()),
            ],
            IhcCoeffs::OneCap(c) => vec![
                ("lpf_coeff", c.lpf_coeff.to_f64_lossy()),
                ("out_rate", c.out_rate.to_f64_lossy()),
                ("in_rate", c.in_rate.to_f64_lossy()),
                ("output_gain", c.output_gain.to_f64_lossy()),
                ("rest_output", c.rest_output.to_f64_lossy()),
                ("rest_cap", c.rest_cap.to_f64_lossy()),
            ],
            IhcCoeffs::JustHwr { .. } => Vec::new(),
        }
    }
}

impl IhcCoeffs<f64> {
    pub fn cast<U: Real>(&self) -> IhcCoeffs<U> {
        match self {
            IhcCoeffs::TwoCap(c) => IhcCoeffs::TwoCap(TwoCapCoeffs {
                lpf_coeff: U::of(c.lpf_coeff),
                out1_rate: U::of(c.out1_rate),
                in1_rate: U::of(c.in1_rate),
                out2_rate: U::of(c.out2_rate),
                in2_rate: U::of(c.in2_rate),
                output_gain: U::of(c.output_gain),
                rest_output: U::of(c.rest_output),
                rest_cap1: U::of(c.rest_cap1),
                rest_cap2: U::of(c.rest_cap2),
            }),
            IhcCoeffs::OneCap(c) => IhcCoeffs::OneCap(OneCapCoeffs {
                lpf_coeff: U::of(c.lpf_coeff),
                out_rate: U::of(c.out_rate),
                in_rate: U::of(c.in_rate),
                output_gain: U::of(c.output_gain),
                rest_output: U::of(c.rest_output),
                rest_cap: U::of(c.rest_cap),
            }),
            IhcCoeffs::JustHwr { clip } => IhcCoeffs::JustHwr { clip: U::of(*clip) },
        }
    }
}

/// Design the selected IHC variant.
///
/// Output gains come from the continuous-time circuit analysis (saturating
/// output at 50% duty cycle). Rest values are the exact fixed point of the
/// discrete update with zero input, so silence produces zero NAP from the
/// first sample.
pub fn design_ihc_coeffs(params: &IhcDesignParams, sample_rate: f64) -> Result<IhcCoeffs<f64>> {
    params.validate()?;
    let fs = sample_rate;
    let g_sat = detect_nonlinearity(10.0_f64);
    let g_rest = detect_nonlinearity(0.0_f64);
    let lpf_coeff = one_pole_coeff(params.tau_lpf, fs);

    Ok(match params.variant {
        IhcVariant::JustHwr => IhcCoeffs::JustHwr { clip: JUST_HWR_CLIP },
        IhcVariant::OneCap => {
            let r_out = 1.0 / g_sat;
            let cap = params.tau_out / r_out;
            let r_in = params.tau_in / cap;
            let saturation_output = 1.0 / (2.0 * r_out + r_in);
            let rest_current = 1.0 / (r_in + 1.0 / g_rest);
            let output_gain = 1.0 / (saturation_output - rest_current);

            let out_rate = 1.0 / (cap * fs);
            let in_rate = one_pole_coeff(params.tau_in, fs);
            let rest_cap = in_rate / (g_rest * out_rate + in_rate);
            IhcCoeffs::OneCap(OneCapCoeffs {
                lpf_coeff,
                out_rate,
                in_rate,
                output_gain,
                rest_output: g_rest * rest_cap * output_gain,
                rest_cap,
            })
        }
        IhcVariant::TwoCap => {
            let r1_min = 1.0 / g_sat;
            let cap1 = params.tau1_out * g_sat;
            let r1 = params.tau1_in / cap1;
            // The receptor potential (1 - cap1 voltage) drives the second
            // stage; at saturation it is a divider from 1.
            let g2_max = r1 / (r1_min + r1);
            let r2_min = 1.0 / g2_max;
            let cap2 = params.tau2_out * g2_max;
            let r2 = params.tau2_in / cap2;
            let saturation_current2 = 1.0 / (2.0 * r2_min + r2);
            let rest_current1 = 1.0 / (r1 + 1.0 / g_rest);
            let rest_current2 = 1.0 / (r2 + 1.0 / (r1 * rest_current1));
            let output_gain = 1.0 / (saturation_current2 - rest_current2);

            let out1_rate = 1.0 / (cap1 * fs);
            let in1_rate = one_pole_coeff(params.tau1_in, fs);
            let out2_rate = 1.0 / (cap2 * fs);
            let in2_rate = one_pole_coeff(params.tau2_in, fs);
            let rest_cap1 = in1_rate / (g_rest * out1_rate + in1_rate);
            let rest_receptor = 1.0 - rest_cap1;
            let rest_cap2 = in2_rate / (rest_receptor * out2_rate + in2_rate);
            IhcCoeffs::TwoCap(TwoCapCoeffs {
                lpf_coeff,
                out1_rate,
                in1_rate,
                out2_rate,
                in2_rate,
                output_gain,
                rest_output: rest_receptor * rest_cap2 * output_gain,
                rest_cap1,
                rest_cap2,
            })
        }
    })
}

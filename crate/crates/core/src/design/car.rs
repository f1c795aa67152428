use super::{erb_hz, CarDesignParams, ChannelMap};
use crate::error::{CarfacError, Result};
use crate::real::{cast_vec, Real};

/// Quadratic approximation `p0 + p1·u + p2·u²` to a stage's DC gain as a
/// function of relative undamping `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageGainParabola {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl StageGainParabola {
    pub fn eval(&self, u: f64) -> f64 {
        (self.p2 * u + self.p1) * u + self.p0
    }
}

/// Per-channel run-time coefficients of the resonator cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct CarCoeffs<T: Real = f64> {
    pub velocity_scale: T,
    pub v_offset: T,
    /// cos θ per channel.
    pub a0: Vec<T>,
    /// sin θ per channel.
    pub c0: Vec<T>,
    /// Pole radius with no undamping.
    pub r1: Vec<T>,
    /// Pole-radius increase at full undamping.
    pub zr: Vec<T>,
    /// Zero-forming feed coefficient.
    pub h: Vec<T>,
    /// Stage gain parabola, constant / linear / quadratic terms.
    pub g0: Vec<T>,
    pub g1: Vec<T>,
    pub g2: Vec<T>,
    /// Stage gain at the design-time undamping (u = 1).
    pub g_init: Vec<T>,
    /// One-pole smoothing constant of the BM-output AC coupler.
    pub ac_coeff: T,
    pub use_delay_buffer: bool,
}

impl<T: Real> CarCoeffs<T> {
    pub fn n_ch(&self) -> usize {
        self.a0.len()
    }

    /// Stage gain from the fitted parabola.
    #[inline]
    pub fn stage_gain(&self, ch: usize, u: T) -> T {
        (self.g2[ch] * u + self.g1[ch]) * u + self.g0[ch]
    }

    pub fn parabola(&self, ch: usize) -> StageGainParabola {
        StageGainParabola {
            p0: self.g0[ch].to_f64_lossy(),
            p1: self.g1[ch].to_f64_lossy(),
            p2: self.g2[ch].to_f64_lossy(),
        }
    }
}

impl CarCoeffs<f64> {
    pub fn cast<U: Real>(&self) -> CarCoeffs<U> {
        CarCoeffs {
            velocity_scale: U::of(self.velocity_scale),
            v_offset: U::of(self.v_offset),
            a0: cast_vec(&self.a0),
            c0: cast_vec(&self.c0),
            r1: cast_vec(&self.r1),
            zr: cast_vec(&self.zr),
            h: cast_vec(&self.h),
            g0: cast_vec(&self.g0),
            g1: cast_vec(&self.g1),
            g2: cast_vec(&self.g2),
            g_init: cast_vec(&self.g_init),
            ac_coeff: U::of(self.ac_coeff),
            use_delay_buffer: self.use_delay_buffer,
        }
    }
}

/// Exact DC gain normalization of one stage at relative undamping `u`:
/// the reciprocal of the resonator's DC response with zeros included.
pub fn stage_gain_exact(a0: f64, c0: f64, h: f64, r1: f64, zr: f64, u: f64) -> f64 {
    let r = r1 + zr * u;
    let pole_poly = 1.0 - 2.0 * r * a0 + r * r;
    pole_poly / (pole_poly + h * r * c0)
}

/// Interpolate the exact stage gain at u = 0, 0.5 and 1 with a parabola.
pub fn fit_stage_gain_parabola(a0: f64, c0: f64, h: f64, r1: f64, zr: f64) -> StageGainParabola {
    let g_lo = stage_gain_exact(a0, c0, h, r1, zr, 0.0);
    let g_mid = stage_gain_exact(a0, c0, h, r1, zr, 0.5);
    let g_hi = stage_gain_exact(a0, c0, h, r1, zr, 1.0);
    StageGainParabola {
        p0: g_lo,
        p1: 4.0 * g_mid - 3.0 * g_lo - g_hi,
        p2: 2.0 * (g_lo + g_hi - 2.0 * g_mid),
    }
}

pub fn design_car_coeffs(
    params: &CarDesignParams,
    sample_rate: f64,
    channels: &ChannelMap,
) -> Result<CarCoeffs<f64>> {
    params.validate(sample_rate)?;
    let n = channels.n_ch();
    let pi = std::f64::consts::PI;
    // zero_ratio² = 1 + f, where h = f·sin θ.
    let f = params.zero_ratio * params.zero_ratio - 1.0;
    let ff = params.high_f_damping_compression;

    let mut c = CarCoeffs {
        velocity_scale: params.velocity_scale,
        v_offset: params.v_offset,
        a0: Vec::with_capacity(n),
        c0: Vec::with_capacity(n),
        r1: Vec::with_capacity(n),
        zr: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        g0: Vec::with_capacity(n),
        g1: Vec::with_capacity(n),
        g2: Vec::with_capacity(n),
        g_init: Vec::with_capacity(n),
        ac_coeff: 2.0 * pi * params.ac_corner_hz / sample_rate,
        use_delay_buffer: params.use_delay_buffer,
    };

    for (ch, &pole_hz) in channels.pole_freqs.iter().enumerate() {
        let theta = pole_hz * 2.0 * pi / sample_rate;
        let (c0, a0) = theta.sin_cos();
        let x = theta / pi;
        // theta compressed toward Nyquist: higher Q at the highest channels.
        let zr_base = pi * (x - ff * x * x * x);
        let r1 = 1.0 - zr_base * params.max_zeta;
        // Min damping rises where channels are sparse (pulled 25% toward ERB/f).
        let erb_ratio = erb_hz(pole_hz, params.erb_break_freq_hz, params.erb_q) / pole_hz;
        let min_zeta = params.min_zeta + 0.25 * (erb_ratio - params.min_zeta);
        let zr = zr_base * (params.max_zeta - min_zeta);
        let h = c0 * f;

        if !(r1 > 0.0 && r1 + zr.max(0.0) < 1.0 && zr >= 0.0) {
            return Err(CarfacError::Design(format!(
                "channel {ch} ({pole_hz:.2} Hz) is unstable or inverted: r1={r1}, zr={zr}"
            )));
        }

        let parabola = fit_stage_gain_parabola(a0, c0, h, r1, zr);
        c.a0.push(a0);
        c.c0.push(c0);
        c.r1.push(r1);
        c.zr.push(zr);
        c.h.push(h);
        c.g0.push(parabola.p0);
        c.g1.push(parabola.p1);
        c.g2.push(parabola.p2);
        c.g_init.push(parabola.eval(1.0));
    }
    Ok(c)
}

//! Design-time parameters and their conversion into run-time coefficients.
//!
//! Design is a pure function of `(params, sample_rate)` and always runs in
//! `f64`; [`CarfacCoeffs::cast`] produces the coefficients for a 32-bit model.

mod agc;
mod car;
mod ihc;

pub use agc::{design_agc_coeffs, AgcCoeffs, AgcStageCoeffs, FirTaps};
pub use car::{design_car_coeffs, fit_stage_gain_parabola, stage_gain_exact, CarCoeffs, StageGainParabola};
pub use ihc::{design_ihc_coeffs, detect_nonlinearity, IhcCoeffs, OneCapCoeffs, TwoCapCoeffs, JUST_HWR_CLIP};

use crate::error::{CarfacError, Result};
use crate::real::Real;

/// Glasberg & Moore equivalent rectangular bandwidth, in Hz, with
/// configurable break frequency and high-frequency Q.
pub fn erb_hz(cf_hz: f64, break_freq_hz: f64, erb_q: f64) -> f64 {
    (break_freq_hz + cf_hz) / erb_q
}

/// Knobs for the cascade of asymmetric resonators.
#[derive(Clone, Debug, PartialEq)]
pub struct CarDesignParams {
    /// Scale applied to stage velocity before the OHC nonlinearity.
    pub velocity_scale: f64,
    /// Offset added to scaled velocity; gives the NLF its quadratic part.
    pub v_offset: f64,
    /// Damping ratio at full undamping (most active).
    pub min_zeta: f64,
    /// Damping ratio with no undamping (passive cochlea).
    pub max_zeta: f64,
    /// Top pole frequency as a fraction of Nyquist.
    pub first_pole_fraction: f64,
    /// Channel placement stops below this pole frequency.
    pub min_pole_hz: f64,
    pub erb_per_step: f64,
    pub erb_break_freq_hz: f64,
    pub erb_q: f64,
    /// 0 to 1; compresses zeta toward Nyquist.
    pub high_f_damping_compression: f64,
    /// Zero frequency over pole frequency.
    pub zero_ratio: f64,
    /// Half-power corner of the BM-output highpass.
    pub ac_corner_hz: f64,
    /// Insert one sample of delay between stages (channel-parallel update).
    pub use_delay_buffer: bool,
}

impl Default for CarDesignParams {
    fn default() -> Self {
        Self {
            velocity_scale: 0.1,
            v_offset: 0.04,
            min_zeta: 0.10,
            max_zeta: 0.30,
            first_pole_fraction: 0.85,
            min_pole_hz: 30.0,
            erb_per_step: 0.5,
            erb_break_freq_hz: 165.3,
            erb_q: 1000.0 / (24.7 * 4.37),
            high_f_damping_compression: 0.5,
            zero_ratio: std::f64::consts::SQRT_2,
            ac_corner_hz: 20.0,
            use_delay_buffer: false,
        }
    }
}

impl CarDesignParams {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let bad = |msg: String| Err(CarfacError::InvalidParameter(msg));
        if !(self.min_zeta > 0.0 && self.min_zeta < self.max_zeta && self.max_zeta < 1.0) {
            return bad(format!(
                "need 0 < min_zeta < max_zeta < 1, got min_zeta={} max_zeta={}",
                self.min_zeta, self.max_zeta
            ));
        }
        if !(self.first_pole_fraction > 0.0 && self.first_pole_fraction < 1.0) {
            return bad(format!(
                "first_pole_fraction must be in (0, 1), got {}",
                self.first_pole_fraction
            ));
        }
        if !(self.min_pole_hz > 0.0 && self.min_pole_hz < sample_rate / 2.0) {
            return bad(format!("min_pole_hz must be in (0, fs/2), got {}", self.min_pole_hz));
        }
        if !(self.erb_per_step > 0.0 && self.erb_q > 0.0 && self.erb_break_freq_hz >= 0.0) {
            return bad("erb_per_step and erb_q must be positive, erb_break_freq_hz nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.high_f_damping_compression) {
            return bad(format!(
                "high_f_damping_compression must be in [0, 1], got {}",
                self.high_f_damping_compression
            ));
        }
        if !(self.zero_ratio >= 1.0) {
            return bad(format!("zero_ratio must be >= 1, got {}", self.zero_ratio));
        }
        if !(self.ac_corner_hz > 0.0 && self.ac_corner_hz < sample_rate / 2.0) {
            return bad(format!("ac_corner_hz must be in (0, fs/2), got {}", self.ac_corner_hz));
        }
        if !(self.velocity_scale.is_finite() && self.v_offset.is_finite()) {
            return bad("NLF constants must be finite".into());
        }
        Ok(())
    }
}

/// Inner hair cell model selection. Fixed for the lifetime of a model; the
/// variants have incompatible state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum IhcVariant {
    #[default]
    TwoCap,
    OneCap,
    JustHwr,
}

impl IhcVariant {
    pub fn name(self) -> &'static str {
        match self {
            IhcVariant::TwoCap => "two_cap",
            IhcVariant::OneCap => "one_cap",
            IhcVariant::JustHwr => "just_hwr",
        }
    }

    pub(crate) fn tag(self) -> u32 {
        match self {
            IhcVariant::TwoCap => 2,
            IhcVariant::OneCap => 1,
            IhcVariant::JustHwr => 0,
        }
    }
}

impl std::str::FromStr for IhcVariant {
    type Err = CarfacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_cap" | "two-cap" => Ok(IhcVariant::TwoCap),
            "one_cap" | "one-cap" => Ok(IhcVariant::OneCap),
            "just_hwr" | "just-hwr" => Ok(IhcVariant::JustHwr),
            other => Err(CarfacError::InvalidParameter(format!(
                "unknown IHC variant {other:?} (expected two_cap, one_cap or just_hwr)"
            ))),
        }
    }
}

/// Time constants (seconds) for the IHC variants.
#[derive(Clone, Debug, PartialEq)]
pub struct IhcDesignParams {
    pub variant: IhcVariant,
    /// Output smoother; applied twice in one_cap, once in two_cap.
    pub tau_lpf: f64,
    /// one_cap reservoir depletion and recovery.
    pub tau_out: f64,
    pub tau_in: f64,
    /// two_cap receptor capacitor depletion and recovery. `tau1_in` is the
    /// receptor-potential smoothing time constant.
    pub tau1_out: f64,
    pub tau1_in: f64,
    /// two_cap transmitter reservoir depletion and recovery.
    pub tau2_out: f64,
    pub tau2_in: f64,
}

impl Default for IhcDesignParams {
    fn default() -> Self {
        Self {
            variant: IhcVariant::TwoCap,
            tau_lpf: 80e-6,
            tau_out: 0.5e-3,
            tau_in: 10e-3,
            tau1_out: 0.5e-3,
            tau1_in: 200e-6,
            tau2_out: 1e-3,
            tau2_in: 10e-3,
        }
    }
}

impl IhcDesignParams {
    pub fn validate(&self) -> Result<()> {
        let taus = [
            ("tau_lpf", self.tau_lpf),
            ("tau_out", self.tau_out),
            ("tau_in", self.tau_in),
            ("tau1_out", self.tau1_out),
            ("tau1_in", self.tau1_in),
            ("tau2_out", self.tau2_out),
            ("tau2_in", self.tau2_in),
        ];
        for (name, tau) in taus {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(CarfacError::InvalidParameter(format!(
                    "{name} must be positive, got {tau}"
                )));
            }
        }
        Ok(())
    }
}

/// Multi-stage AGC loop filter parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AgcDesignParams {
    pub n_stages: usize,
    /// Seconds, one per stage, nondecreasing.
    pub time_constants: Vec<f64>,
    /// Per-stage decimation relative to the previous stage.
    pub decimation: Vec<usize>,
    /// Spatial spread (channels) toward the apex, per stage.
    pub agc1_scales: Vec<f64>,
    /// Spatial spread (channels) toward the base, per stage.
    pub agc2_scales: Vec<f64>,
    /// Gain from each stage into the next faster one.
    pub agc_stage_gain: f64,
    /// Cross-ear mixing strength.
    pub agc_mix_coeff: f64,
}

impl Default for AgcDesignParams {
    fn default() -> Self {
        let sqrt2 = std::f64::consts::SQRT_2;
        Self {
            n_stages: 4,
            time_constants: (0..4).map(|k| 0.002 * 4f64.powi(k)).collect(),
            decimation: vec![8, 2, 2, 2],
            agc1_scales: (0..4).map(|k| sqrt2.powi(k)).collect(),
            agc2_scales: (0..4).map(|k| 1.65 * sqrt2.powi(k)).collect(),
            agc_stage_gain: 2.0,
            agc_mix_coeff: 0.5,
        }
    }
}

impl AgcDesignParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CarfacError::InvalidParameter(msg));
        let n = self.n_stages;
        if n == 0 {
            return bad("AGC needs at least one stage".into());
        }
        for (name, len) in [
            ("time_constants", self.time_constants.len()),
            ("decimation", self.decimation.len()),
            ("agc1_scales", self.agc1_scales.len()),
            ("agc2_scales", self.agc2_scales.len()),
        ] {
            if len != n {
                return bad(format!("{name} has {len} entries, expected {n}"));
            }
        }
        if self.decimation.contains(&0) {
            return bad("decimation entries must be >= 1".into());
        }
        if self.time_constants.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("AGC time constants must be positive".into());
        }
        if self.time_constants.windows(2).any(|w| w[1] < w[0]) {
            return bad("AGC time constants must be nondecreasing".into());
        }
        for k in 0..n {
            let (s1, s2) = (self.agc1_scales[k], self.agc2_scales[k]);
            if !(s1 >= 0.0 && s1 < s2) {
                return bad(format!(
                    "stage {k}: need 0 <= agc1_scale < agc2_scale, got {s1} and {s2}"
                ));
            }
        }
        if !(self.agc_stage_gain >= 0.0 && self.agc_mix_coeff >= 0.0) {
            return bad("agc_stage_gain and agc_mix_coeff must be nonnegative".into());
        }
        Ok(())
    }
}

/// Everything needed to design a model.
#[derive(Clone, Debug, PartialEq)]
pub struct CarfacDesignParams {
    pub sample_rate: f64,
    pub car: CarDesignParams,
    pub ihc: IhcDesignParams,
    pub agc: AgcDesignParams,
}

/// The default parameter set at `sample_rate`.
pub fn default_design(sample_rate: f64) -> Result<CarfacDesignParams> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(CarfacError::InvalidParameter(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    Ok(CarfacDesignParams {
        sample_rate,
        car: CarDesignParams::default(),
        ihc: IhcDesignParams::default(),
        agc: AgcDesignParams::default(),
    })
}

impl CarfacDesignParams {
    pub fn with_ihc_variant(mut self, variant: IhcVariant) -> Self {
        self.ihc.variant = variant;
        self
    }

    pub fn with_delay_buffer(mut self, on: bool) -> Self {
        self.car.use_delay_buffer = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(CarfacError::InvalidParameter(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        self.car.validate(self.sample_rate)?;
        self.ihc.validate()?;
        self.agc.validate()
    }
}

/// Pole frequencies of the cascade, base (channel 0) to apex.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMap {
    pub pole_freqs: Vec<f64>,
}

impl ChannelMap {
    pub fn n_ch(&self) -> usize {
        self.pole_freqs.len()
    }
}

/// Place poles from `first_pole_fraction` of Nyquist downward in steps of
/// `erb_per_step` ERBs, keeping every pole at or above `min_pole_hz`.
pub fn design_channels(params: &CarDesignParams, sample_rate: f64) -> Result<ChannelMap> {
    params.validate(sample_rate)?;
    let step = |f: f64| f - params.erb_per_step * erb_hz(f, params.erb_break_freq_hz, params.erb_q);
    let mut pole_hz = params.first_pole_fraction * sample_rate / 2.0;
    let mut pole_freqs = Vec::new();
    while pole_hz >= params.min_pole_hz {
        pole_freqs.push(pole_hz);
        pole_hz = step(pole_hz);
    }
    if pole_freqs.is_empty() {
        return Err(CarfacError::Design(format!(
            "no channels: top pole {:.3} Hz is below min_pole_hz {} Hz",
            params.first_pole_fraction * sample_rate / 2.0,
            params.min_pole_hz
        )));
    }
    Ok(ChannelMap { pole_freqs })
}

/// All run-time coefficients for one model (shared by every ear).
#[derive(Clone, Debug, PartialEq)]
pub struct CarfacCoeffs<T: Real = f64> {
    pub sample_rate: f64,
    pub channels: ChannelMap,
    pub car: CarCoeffs<T>,
    pub ihc: IhcCoeffs<T>,
    pub agc: AgcCoeffs<T>,
}

/// Run every design step. Deterministic: identical inputs give bit-identical
/// coefficients.
pub fn design_carfac(params: &CarfacDesignParams) -> Result<CarfacCoeffs<f64>> {
    params.validate()?;
    let fs = params.sample_rate;
    let channels = design_channels(&params.car, fs)?;
    let car = design_car_coeffs(&params.car, fs, &channels)?;
    let ihc = design_ihc_coeffs(&params.ihc, fs)?;
    let agc = design_agc_coeffs(&params.agc, fs, channels.n_ch())?;
    Ok(CarfacCoeffs { sample_rate: fs, channels, car, ihc, agc })
}

impl CarfacCoeffs<f64> {
    pub fn cast<U: Real>(&self) -> CarfacCoeffs<U> {
        CarfacCoeffs {
            sample_rate: self.sample_rate,
            channels: self.channels.clone(),
            car: self.car.cast(),
            ihc: self.ihc.cast(),
            agc: self.agc.cast(),
        }
    }
}

impl<T: Real> CarfacCoeffs<T> {
    pub fn n_ch(&self) -> usize {
        self.channels.n_ch()
    }
}

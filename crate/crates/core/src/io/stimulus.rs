//! Synthetic test stimuli. Levels are dBFS relative to a full-scale sine,
//! so a 0 dBFS tone has peak amplitude 1.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CarfacError, Result};

pub fn dbfs_to_amplitude(level_dbfs: f64) -> f64 {
    10f64.powf(level_dbfs / 20.0)
}

/// Uniform noise in `[-amplitude, amplitude)`, reproducible from `seed`.
pub fn uniform_noise(n: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| amplitude * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stimulus {
    Silence,
    /// Single sample of `amplitude` at t = 0.
    Impulse { amplitude: f64 },
    /// Sine with raised-cosine onset and offset ramps of `ramp` seconds.
    Tone { freq: f64, level_dbfs: f64, ramp: f64 },
    /// Sum of sines, one level per frequency, with `ramp`-second ramps.
    Multitone { freqs: Vec<f64>, levels_dbfs: Vec<f64>, ramp: f64 },
    /// Uniform white noise whose RMS equals that of a sine at `level_dbfs`.
    Noise { level_dbfs: f64 },
    /// Sine switched on at t = 0 for `burst` seconds with no ramps.
    ToneBurst { freq: f64, burst: f64, level_dbfs: f64 },
    /// Exponential sweep from `f0` to `f1` over the full duration.
    Chirp { f0: f64, f1: f64, level_dbfs: f64 },
}

/// A stimulus plus its duration and noise seed.
#[derive(Clone, Debug, PartialEq)]
pub struct StimulusSpec {
    pub kind: Stimulus,
    pub duration: f64,
    pub seed: u64,
}

impl StimulusSpec {
    pub fn new(kind: Stimulus, duration: f64) -> Self {
        Self { kind, duration, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_samples(&self, sample_rate: f64) -> usize {
        (self.duration * sample_rate).round() as usize
    }

    pub fn synthesize(&self, sample_rate: f64) -> Result<Vec<f64>> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(CarfacError::Usage(format!("bad stimulus duration {}", self.duration)));
        }
        let n = self.n_samples(sample_rate);
        let t = |i: usize| i as f64 / sample_rate;
        let sine = |f: f64, a: f64| (0..n).map(move |i| a * (2.0 * PI * f * i as f64 / sample_rate).sin());
        let out = match &self.kind {
            Stimulus::Silence => vec![0.0; n],
            Stimulus::Impulse { amplitude } => (0..n).map(|i| if i == 0 { *amplitude } else { 0.0 }).collect(),
            Stimulus::Tone { freq, level_dbfs, ramp } => {
                let mut x: Vec<f64> = sine(*freq, dbfs_to_amplitude(*level_dbfs)).collect();
                apply_ramps(&mut x, *ramp, sample_rate);
                x
            }
            Stimulus::Multitone { freqs, levels_dbfs, ramp } => {
                if freqs.len() != levels_dbfs.len() || freqs.is_empty() {
                    return Err(CarfacError::Usage("multitone needs one level per frequency".into()));
                }
                let mut x = vec![0.0; n];
                for (&f, &l) in freqs.iter().zip(levels_dbfs) {
                    for (xi, s) in x.iter_mut().zip(sine(f, dbfs_to_amplitude(l))) {
                        *xi += s;
                    }
                }
                apply_ramps(&mut x, *ramp, sample_rate);
                x
            }
            Stimulus::Noise { level_dbfs } => {
                // uniform on [-a, a] has RMS a/√3; match a sine's peak/√2
                let a = dbfs_to_amplitude(*level_dbfs) * (1.5f64).sqrt();
                uniform_noise(n, a, self.seed)
            }
            Stimulus::ToneBurst { freq, burst, level_dbfs } => {
                let a = dbfs_to_amplitude(*level_dbfs);
                (0..n).map(|i| if t(i) < *burst { a * (2.0 * PI * freq * t(i)).sin() } else { 0.0 }).collect()
            }
            Stimulus::Chirp { f0, f1, level_dbfs } => {
                if !(*f0 > 0.0 && *f1 > 0.0) {
                    return Err(CarfacError::Usage("chirp frequencies must be positive".into()));
                }
                let a = dbfs_to_amplitude(*level_dbfs);
                let d = self.duration.max(1.0 / sample_rate);
                let k = (f1 / f0).ln() / d;
                (0..n)
                    .map(|i| {
                        let phase = if k.abs() < 1e-12 { f0 * t(i) } else { f0 * ((k * t(i)).exp() - 1.0) / k };
                        a * (2.0 * PI * phase).sin()
                    })
                    .collect()
            }
        };
        Ok(out)
    }
}

fn apply_ramps(x: &mut [f64], ramp: f64, sample_rate: f64) {
    let n_ramp = ((ramp * sample_rate).round() as usize).min(x.len() / 2);
    let n = x.len();
    for i in 0..n_ramp {
        let w = 0.5 - 0.5 * (PI * (i as f64 + 0.5) / n_ramp as f64).cos();
        x[i] *= w;
        x[n - 1 - i] *= w;
    }
}

/// Parses `kind:key=value,...`, for example
/// `tone:freq=1000,level=-40,dur=0.5,ramp=0.005`,
/// `multitone:freqs=1600/1800,levels=-20/-20,dur=2`,
/// `noise:level=-20,dur=1,seed=7`, `toneburst:freq=3000,burst=0.01,level=-40,dur=0.03`,
/// `chirp:f0=100,f1=8000,level=-30,dur=1`, `impulse:dur=0.1`, `silence:dur=1`.
impl FromStr for StimulusSpec {
    type Err = CarfacError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| CarfacError::Usage(format!("stimulus '{s}': {msg}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for item in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{item}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            match kv.remove(key) {
                Some(v) => v.parse().map_err(|_| bad(format!("{key}='{v}' is not a number"))),
                None => default.ok_or_else(|| bad(format!("missing {key}="))),
            }
        };
        let duration = take("dur", Some(1.0))?;
        let seed = take("seed", Some(0.0))? as u64;
        let stim = match kind {
            "silence" => Stimulus::Silence,
            "impulse" => Stimulus::Impulse { amplitude: take("amp", Some(1.0))? },
            "tone" => Stimulus::Tone {
                freq: take("freq", None)?,
                level_dbfs: take("level", Some(-40.0))?,
                ramp: take("ramp", Some(0.005))?,
            },
            "noise" => Stimulus::Noise { level_dbfs: take("level", Some(-20.0))? },
            "toneburst" => Stimulus::ToneBurst {
                freq: take("freq", Some(3000.0))?,
                burst: take("burst", Some(0.010))?,
                level_dbfs: take("level", Some(-40.0))?,
            },
            "chirp" => Stimulus::Chirp {
                f0: take("f0", Some(100.0))?,
                f1: take("f1", Some(8000.0))?,
                level_dbfs: take("level", Some(-30.0))?,
            },
            "multitone" => {
                let list = |v: Option<String>, key: &str| -> Result<Vec<f64>> {
                    v.ok_or_else(|| bad(format!("missing {key}=")))?
                        .split('/')
                        .map(|x| x.parse().map_err(|_| bad(format!("bad {key} entry '{x}'"))))
                        .collect()
                };
                let ramp = take("ramp", Some(0.005))?;
                let freqs = list(kv.remove("freqs"), "freqs")?;
                let levels_dbfs = match kv.remove("levels") {
                    Some(v) => list(Some(v), "levels")?,
                    None => vec![-20.0; freqs.len()],
                };
                Stimulus::Multitone { freqs, levels_dbfs, ramp }
            }
            other => return Err(bad(format!("unknown kind '{other}'"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(bad(format!("unknown key '{k}'")));
        }
        Ok(StimulusSpec { kind: stim, duration, seed })
    }
}

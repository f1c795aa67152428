//! Golden-data dump and comparison for a fixed set of canonical stimuli.
//!
//! A golden directory holds the stimuli (`stim_*.raw64`), the expected
//! output planes, and `car_coeffs.csv`. Comparison always re-reads the
//! stimuli from the directory, so dumps from any implementation can be used.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::design::{design_carfac, CarfacDesignParams, IhcVariant};
use crate::error::{CarfacError, Result};
use crate::io::planes::{read_raw64, write_raw64};
use crate::io::stimulus::{uniform_noise, Stimulus, StimulusSpec};
use crate::model::{Carfac, Plane, RunOptions, SegmentOutput};
use crate::real::Real;

use super::coeffs_dump::{read_car_csv, write_car_csv};

/// Environment variable naming the default golden directory.
pub const GOLDEN_DIR_ENV: &str = "CARFAC_GOLDEN_DIR";

/// Golden tolerance for double-precision runs.
pub const TOLERANCE_F64: f64 = 1e-6;
/// Golden tolerance for single-precision runs.
pub const TOLERANCE_F32: f64 = 1e-3;

pub fn default_tolerance<T: Real>() -> f64 {
    if std::mem::size_of::<T>() >= 8 {
        TOLERANCE_F64
    } else {
        TOLERANCE_F32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PlaneKind {
    Nap,
    Bm,
    ReceptorPotential,
}

struct Case {
    output: &'static str,
    stimulus: &'static str,
    variant: IhcVariant,
    linear_open_loop: bool,
    plane: PlaneKind,
    ear: usize,
}

const CASES: &[Case] = &[
    Case { output: "impulse_bm", stimulus: "stim_impulse", variant: IhcVariant::TwoCap, linear_open_loop: true, plane: PlaneKind::Bm, ear: 0 },
    Case { output: "noise_two_cap_nap", stimulus: "stim_noise", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 0 },
    Case { output: "noise_two_cap_bm", stimulus: "stim_noise", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::Bm, ear: 0 },
    Case { output: "noise_two_cap_rp", stimulus: "stim_noise", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::ReceptorPotential, ear: 0 },
    Case { output: "noise_one_cap_nap", stimulus: "stim_noise", variant: IhcVariant::OneCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 0 },
    Case { output: "binaural_ear0_nap", stimulus: "stim_binaural", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 0 },
    Case { output: "binaural_ear1_nap", stimulus: "stim_binaural", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 1 },
    Case { output: "toneburst_two_cap_nap", stimulus: "stim_toneburst", variant: IhcVariant::TwoCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 0 },
    Case { output: "toneburst_one_cap_nap", stimulus: "stim_toneburst", variant: IhcVariant::OneCap, linear_open_loop: false, plane: PlaneKind::Nap, ear: 0 },
];

/// Names of the output planes checked by [`compare`].
pub fn golden_plane_names() -> Vec<&'static str> {
    CASES.iter().map(|c| c.output).collect()
}

fn raw_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.raw64"))
}

fn load(dir: &Path, name: &str) -> Result<Plane<f64>> {
    let p = raw_path(dir, name);
    if !p.exists() {
        return Err(CarfacError::MissingGolden(p));
    }
    read_raw64(&p)
}

fn save(dir: &Path, name: &str, plane: &Plane<f64>) -> Result<()> {
    write_raw64(BufWriter::new(File::create(raw_path(dir, name))?), plane)
}

/// The canonical stimuli as samples × ears planes.
pub fn canonical_stimuli(sample_rate: f64, seed: u64) -> Result<Vec<(&'static str, Plane<f64>)>> {
    let mono = |x: Vec<f64>| Plane::from_vec(x.len(), 1, x);
    let mut impulse = vec![0.0; 512];
    impulse[0] = 1.0;
    let noise = uniform_noise((0.1 * sample_rate) as usize, 0.1, seed);
    let n_bin = (0.05 * sample_rate) as usize;
    let binaural: Vec<f64> = (0..n_bin).flat_map(|t| [3.0 * noise[t], 0.3 * noise[n_bin - 1 - t]]).collect();
    let burst = StimulusSpec::new(Stimulus::ToneBurst { freq: 3000.0, burst: 0.010, level_dbfs: -40.0 }, 0.03)
        .synthesize(sample_rate)?;
    Ok(vec![
        ("stim_impulse", mono(impulse)?),
        ("stim_noise", mono(noise)?),
        ("stim_binaural", Plane::from_vec(n_bin, 2, binaural)?),
        ("stim_toneburst", mono(burst)?),
    ])
}

fn run_case<T: Real>(params: &CarfacDesignParams, case: &Case, stim: &Plane<f64>) -> Result<Plane<f64>> {
    let mut model = Carfac::<T>::new(&params.clone().with_ihc_variant(case.variant), stim.n_ch())?;
    let audio: Vec<Vec<T>> = (0..stim.n_ch()).map(|e| stim.channel(e).into_iter().map(T::of).collect()).collect();
    let opts = if case.linear_open_loop { RunOptions::linear_open_loop() } else { RunOptions::default() };
    let out: SegmentOutput<T> = model.run_segment(&audio, opts)?;
    let planes = match case.plane {
        PlaneKind::Nap => &out.nap,
        PlaneKind::Bm => &out.bm,
        PlaneKind::ReceptorPotential => &out.receptor_potential,
    };
    Ok(planes[case.ear].to_f64())
}

/// Write the canonical stimuli, the outputs of this build for them, and the
/// CAR coefficient table into `dir`.
pub fn dump<T: Real>(params: &CarfacDesignParams, dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, plane) in canonical_stimuli(params.sample_rate, seed)? {
        save(dir, name, &plane)?;
    }
    for case in CASES {
        let stim = load(dir, case.stimulus)?;
        save(dir, case.output, &run_case::<T>(params, case, &stim)?)?;
    }
    write_car_csv(BufWriter::new(File::create(dir.join("car_coeffs.csv"))?), &design_carfac(params)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneDiff {
    pub name: String,
    pub max_abs_diff: f64,
    pub sample: usize,
    pub channel: usize,
    /// Whether the tolerance applies to this plane. Single-precision runs
    /// hold only closed-loop segment outputs to the tolerance; coefficient
    /// tables and linear impulse responses are reported for information.
    pub enforced: bool,
}

/// Largest absolute difference and where it occurs. NaN anywhere counts as
/// an infinite difference; a shape mismatch is a usage error.
pub fn plane_diff(name: &str, got: &Plane<f64>, want: &Plane<f64>) -> Result<PlaneDiff> {
    if (got.n_samples(), got.n_ch()) != (want.n_samples(), want.n_ch()) {
        return Err(CarfacError::Usage(format!(
            "{name}: shape {}x{} differs from golden {}x{}",
            got.n_samples(),
            got.n_ch(),
            want.n_samples(),
            want.n_ch()
        )));
    }
    let mut d = PlaneDiff { name: name.to_string(), max_abs_diff: 0.0, sample: 0, channel: 0, enforced: true };
    for t in 0..got.n_samples() {
        for c in 0..got.n_ch() {
            let mut e = (got.get(t, c) - want.get(t, c)).abs();
            if e.is_nan() {
                e = f64::INFINITY;
            }
            if e > d.max_abs_diff {
                d = PlaneDiff { max_abs_diff: e, sample: t, channel: c, ..d };
            }
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenReport {
    pub tolerance: f64,
    pub planes: Vec<PlaneDiff>,
}

impl GoldenReport {
    /// Worst plane among those the tolerance applies to.
    pub fn worst(&self) -> Option<&PlaneDiff> {
        self.planes.iter().filter(|d| d.enforced).max_by(|a, b| a.max_abs_diff.total_cmp(&b.max_abs_diff))
    }

    pub fn max_abs_diff(&self) -> f64 {
        self.worst().map_or(0.0, |d| d.max_abs_diff)
    }

    pub fn plane(&self, name: &str) -> Option<&PlaneDiff> {
        self.planes.iter().find(|d| d.name == name)
    }

    /// Error naming the worst plane, channel and sample if any plane
    /// exceeds the tolerance.
    pub fn check(&self) -> Result<()> {
        match self.worst() {
            Some(w) if !(w.max_abs_diff <= self.tolerance) => Err(CarfacError::Tolerance {
                plane: w.name.clone(),
                max_abs_diff: w.max_abs_diff,
                tolerance: self.tolerance,
                channel: w.channel,
                sample: w.sample,
            }),
            _ => Ok(()),
        }
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for d in &self.planes {
            let verdict = match (d.enforced, d.max_abs_diff <= self.tolerance) {
                (false, _) => "info",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            s += &format!(
                "{:<24} max |diff| {:>10.3e} (channel {}, sample {}) {verdict}\n",
                d.name, d.max_abs_diff, d.channel, d.sample
            );
        }
        s
    }
}

/// Compare this build (precision `T`) against the goldens in `dir`. The
/// coefficient table, when present, is compared as columns `coeff:<name>`.
/// In double precision every plane is held to `tolerance`; in single
/// precision only the closed-loop segment outputs are.
pub fn compare<T: Real>(params: &CarfacDesignParams, dir: &Path, tolerance: f64) -> Result<GoldenReport> {
    let double = std::mem::size_of::<T>() >= 8;
    let mut planes = Vec::new();
    let coeff_path = dir.join("car_coeffs.csv");
    if coeff_path.exists() {
        let coeffs = design_carfac(params)?;
        let mut buf = Vec::new();
        write_car_csv(&mut buf, &coeffs)?;
        let ours = read_car_csv(&buf[..])?;
        let theirs = read_car_csv(File::open(&coeff_path)?)?;
        for ((name, a), (_, b)) in ours.iter().zip(&theirs) {
            let pa = Plane::from_vec(a.len(), 1, a.clone())?;
            let pb = Plane::from_vec(b.len(), 1, b.clone())?;
            let mut d = plane_diff(&format!("coeff:{name}"), &pa, &pb)?;
            // report the channel, not the row, for a single-column table
            d.channel = d.sample;
            d.sample = 0;
            d.enforced = double;
            planes.push(d);
        }
    }
    for case in CASES {
        let stim = load(dir, case.stimulus)?;
        let want = load(dir, case.output)?;
        let mut d = plane_diff(case.output, &run_case::<T>(params, case, &stim)?, &want)?;
        d.enforced = double || !case.linear_open_loop;
        planes.push(d);
    }
    Ok(GoldenReport { tolerance, planes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::default_design;

    #[test]
    fn self_dump_compares_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = default_design(22050.0).unwrap();
        dump::<f64>(&p, dir.path(), 3).unwrap();
        let r = compare::<f64>(&p, dir.path(), TOLERANCE_F64).unwrap();
        assert_eq!(r.max_abs_diff(), 0.0);
        assert_eq!(r.planes.len(), 9 + 9);
        r.check().unwrap();
    }

    #[test]
    fn violation_names_worst_location() {
        let a = Plane::from_vec(2, 2, vec![0.0; 4]).unwrap();
        let b = Plane::from_vec(2, 2, vec![0.0, 0.0, 0.0, 0.5]).unwrap();
        let r = GoldenReport { tolerance: 1e-6, planes: vec![plane_diff("nap", &a, &b).unwrap()] };
        match r.check() {
            Err(CarfacError::Tolerance { plane, channel, sample, .. }) => {
                assert_eq!((plane.as_str(), channel, sample), ("nap", 1, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unenforced_planes_are_informational() {
        let a = Plane::from_vec(1, 1, vec![1.0]).unwrap();
        let b = Plane::from_vec(1, 1, vec![0.0]).unwrap();
        let mut d = plane_diff("impulse_bm", &a, &b).unwrap();
        d.enforced = false;
        let r = GoldenReport { tolerance: 1e-3, planes: vec![d] };
        assert!(r.check().is_ok());
        assert_eq!(r.max_abs_diff(), 0.0);
        assert_eq!(r.plane("impulse_bm").unwrap().max_abs_diff, 1.0);
        assert!(r.format().contains("info"));
    }

    #[test]
    fn nan_is_a_violation() {
        let a = Plane::from_vec(1, 1, vec![f64::NAN]).unwrap();
        let b = Plane::from_vec(1, 1, vec![0.0]).unwrap();
        let r = GoldenReport { tolerance: 1e-6, planes: vec![plane_diff("bm", &a, &b).unwrap()] };
        assert!(r.check().is_err());
    }

    #[test]
    fn missing_directory_is_reported() {
        let p = default_design(22050.0).unwrap();
        assert!(matches!(compare::<f64>(&p, Path::new("/nonexistent/golden"), 1e-6), Err(CarfacError::MissingGolden(_))));
    }
}

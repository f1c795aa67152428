//! Inner hair cell transduction: BM motion to neural activity (NAP).

use crate::design::{detect_nonlinearity, IhcCoeffs, OneCapCoeffs, TwoCapCoeffs};
use crate::real::Real;

pub use crate::design::IhcVariant;

/// Per-channel IHC state. Field meaning depends on the variant:
///
/// | field  | two_cap              | one_cap            | just_hwr |
/// |--------|----------------------|--------------------|----------|
/// | `cap1` | receptor capacitor   | reservoir          | unused   |
/// | `cap2` | transmitter reservoir| unused             | unused   |
/// | `lpf1` | output smoother      | first smoother     | unused   |
/// | `lpf2` | unused               | second smoother    | unused   |
#[derive(Clone, Debug, PartialEq)]
pub struct IhcState<T: Real = f64> {
    pub cap1: Vec<T>,
    pub cap2: Vec<T>,
    pub lpf1: Vec<T>,
    pub lpf2: Vec<T>,
}

impl<T: Real> IhcState<T> {
    /// Quiescent state for the designed variant.
    pub fn new(coeffs: &IhcCoeffs<T>, n_ch: usize) -> Self {
        let fill = |v: T| vec![v; n_ch];
        match coeffs {
            IhcCoeffs::TwoCap(c) => Self {
                cap1: fill(c.rest_cap1),
                cap2: fill(c.rest_cap2),
                lpf1: fill(c.rest_output),
                lpf2: fill(T::zero()),
            },
            IhcCoeffs::OneCap(c) => Self {
                cap1: fill(c.rest_cap),
                cap2: fill(T::zero()),
                lpf1: fill(c.rest_output),
                lpf2: fill(c.rest_output),
            },
            IhcCoeffs::JustHwr { .. } => Self {
                cap1: fill(T::zero()),
                cap2: fill(T::zero()),
                lpf1: fill(T::zero()),
                lpf2: fill(T::zero()),
            },
        }
    }
}

/// Conductance of the detection nonlinearity for every channel.
pub fn detect<T: Real>(bm: &[T]) -> Vec<T> {
    bm.iter().map(|&x| detect_nonlinearity(x)).collect()
}

/// Two-capacitor model. The receptor capacitor smooths the forward path
/// (receptor potential `1 − cap1`); the transmitter reservoir depletes with
/// release and recovers without smoothing the forward signal; a final
/// one-pole smoother feeds the output. `receptor_potential` is reported
/// relative to rest.
pub fn ihc_step_two_cap<T: Real>(
    bm: &[T],
    c: &TwoCapCoeffs<T>,
    state: &mut IhcState<T>,
    nap: &mut [T],
    receptor_potential: &mut [T],
) {
    let one = T::one();
    for ch in 0..bm.len() {
        let conductance = detect_nonlinearity(bm[ch]);
        let cap1 = state.cap1[ch];
        let receptor_current = conductance * cap1;
        let cap1 = cap1 - receptor_current * c.out1_rate + (one - cap1) * c.in1_rate;
        let v_recep = one - cap1;
        let cap2 = state.cap2[ch];
        let release = v_recep * cap2;
        let cap2 = cap2 - release * c.out2_rate + (one - cap2) * c.in2_rate;
        let out = release * c.output_gain;
        let lpf = state.lpf1[ch] + c.lpf_coeff * (out - state.lpf1[ch]);
        state.cap1[ch] = cap1;
        state.cap2[ch] = cap2;
        state.lpf1[ch] = lpf;
        nap[ch] = lpf - c.rest_output;
        receptor_potential[ch] = c.rest_cap1 - cap1;
    }
}

/// One-capacitor (v1) model: conductance times reservoir, then two
/// cascaded one-pole smoothers.
pub fn ihc_step_one_cap<T: Real>(bm: &[T], c: &OneCapCoeffs<T>, state: &mut IhcState<T>, nap: &mut [T]) {
    let one = T::one();
    for ch in 0..bm.len() {
        let conductance = detect_nonlinearity(bm[ch]);
        let cap = state.cap1[ch];
        let current = conductance * cap;
        state.cap1[ch] = cap - current * c.out_rate + (one - cap) * c.in_rate;
        let out = current * c.output_gain;
        let lpf1 = state.lpf1[ch] + c.lpf_coeff * (out - state.lpf1[ch]);
        let lpf2 = state.lpf2[ch] + c.lpf_coeff * (lpf1 - state.lpf2[ch]);
        state.lpf1[ch] = lpf1;
        state.lpf2[ch] = lpf2;
        nap[ch] = lpf2 - c.rest_output;
    }
}

/// Stateless half-wave rectifier clipped at `clip`.
pub fn ihc_step_just_hwr<T: Real>(bm: &[T], clip: T, nap: &mut [T]) {
    for (n, &x) in nap.iter_mut().zip(bm) {
        *n = x.max(T::zero()).min(clip);
    }
}

/// Dispatch on the designed variant. `receptor_potential` is zeroed for the
/// variants that do not model it.
pub fn ihc_step<T: Real>(
    bm: &[T],
    coeffs: &IhcCoeffs<T>,
    state: &mut IhcState<T>,
    nap: &mut [T],
    receptor_potential: &mut [T],
) {
    match coeffs {
        IhcCoeffs::TwoCap(c) => ihc_step_two_cap(bm, c, state, nap, receptor_potential),
        IhcCoeffs::OneCap(c) => {
            ihc_step_one_cap(bm, c, state, nap);
            receptor_potential.iter_mut().for_each(|r| *r = T::zero());
        }
        IhcCoeffs::JustHwr { clip } => {
            ihc_step_just_hwr(bm, *clip, nap);
            receptor_potential.iter_mut().for_each(|r| *r = T::zero());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_ihc_coeffs, IhcDesignParams, JUST_HWR_CLIP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coeffs(variant: IhcVariant) -> IhcCoeffs {
        design_ihc_coeffs(&IhcDesignParams { variant, ..Default::default() }, 22050.0).unwrap()
    }

    fn run(variant: IhcVariant, input: impl Fn(usize) -> f64, n: usize) -> (IhcState, Vec<f64>) {
        let c = coeffs(variant);
        let mut s = IhcState::new(&c, 1);
        let (mut nap, mut rp) = (vec![0.0], vec![0.0]);
        let mut trace = Vec::with_capacity(n);
        for t in 0..n {
            ihc_step(&[input(t)], &c, &mut s, &mut nap, &mut rp);
            trace.push(nap[0]);
        }
        (s, trace)
    }

    #[test]
    fn silence_is_quiescent_for_every_variant() {
        for v in [IhcVariant::TwoCap, IhcVariant::OneCap, IhcVariant::JustHwr] {
            let (_, trace) = run(v, |_| 0.0, 2000);
            assert!(trace.iter().all(|x| x.abs() < 1e-12), "{v:?}");
        }
    }

    #[test]
    fn settles_back_to_zero_after_sound() {
        for v in [IhcVariant::TwoCap, IhcVariant::OneCap] {
            let (_, trace) = run(v, |t| if t < 2000 { 0.3 * (t as f64 * 0.3).sin() } else { 0.0 }, 2000 + 1103 * 4);
            let tail = *trace.last().unwrap();
            assert!(tail.abs() < 1e-9, "{v:?}: {tail}");
        }
    }

    #[test]
    fn hwr_rectifies_and_clips() {
        let mut nap = vec![0.0; 3];
        ihc_step_just_hwr(&[-0.5, 0.1, 5.0], JUST_HWR_CLIP, &mut nap);
        assert_eq!(nap, vec![0.0, 0.1, JUST_HWR_CLIP]);
    }

    #[test]
    fn capacitors_stay_in_unit_interval_under_random_drive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for v in [IhcVariant::TwoCap, IhcVariant::OneCap] {
            let c = coeffs(v);
            let n_ch = 8;
            let mut s = IhcState::new(&c, n_ch);
            let (mut nap, mut rp) = (vec![0.0; n_ch], vec![0.0; n_ch]);
            let mut bm = vec![0.0; n_ch];
            for _ in 0..20_000 {
                bm.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0));
                ihc_step(&bm, &c, &mut s, &mut nap, &mut rp);
                assert!(s.cap1.iter().all(|&x| (0.0..=1.0).contains(&x)));
                if v == IhcVariant::TwoCap {
                    assert!(s.cap2.iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
            }
        }
    }

    #[test]
    fn receptor_potential_only_for_two_cap() {
        let c = coeffs(IhcVariant::OneCap);
        let mut s = IhcState::new(&c, 2);
        let (mut nap, mut rp) = (vec![0.0; 2], vec![9.0; 2]);
        ihc_step(&[0.5, 0.5], &c, &mut s, &mut nap, &mut rp);
        assert_eq!(rp, vec![0.0, 0.0]);

        let c = coeffs(IhcVariant::TwoCap);
        let mut s = IhcState::new(&c, 1);
        let (mut nap, mut rp) = (vec![0.0], vec![0.0]);
        ihc_step(&[0.5], &c, &mut s, &mut nap, &mut rp);
        assert!(rp[0] > 0.0);
    }
}

//! The top-level model: design, per-sample CAR → IHC → AGC pipeline with
//! loop closure, multi-ear coupling, impairment and state management.

use crate::agc::{agc_step, close_agc_loop, cross_ear_mix, AgcState};
use crate::car::{car_step, CarState, CarStepOutput};
use crate::design::{design_carfac, CarfacCoeffs, CarfacDesignParams, IhcVariant};
use crate::error::{CarfacError, Result};
use crate::ihc::{ihc_step, IhcState};
use crate::real::Real;

/// A samples × channels array in row-major (C) order.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T = f64> {
    n_samples: usize,
    n_ch: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Plane<T> {
    pub fn zeros(n_samples: usize, n_ch: usize) -> Self {
        Self { n_samples, n_ch, data: vec![T::default(); n_samples * n_ch] }
    }

    pub fn from_vec(n_samples: usize, n_ch: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_samples * n_ch {
            return Err(CarfacError::Usage(format!(
                "plane data has {} values, expected {n_samples} x {n_ch}",
                data.len()
            )));
        }
        Ok(Self { n_samples, n_ch, data })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_ch(&self) -> usize {
        self.n_ch
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.n_ch..(t + 1) * self.n_ch]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [T] {
        &mut self.data[t * self.n_ch..(t + 1) * self.n_ch]
    }

    pub fn get(&self, t: usize, ch: usize) -> T {
        self.data[t * self.n_ch + ch]
    }

    /// Copy out one channel's time series.
    pub fn channel(&self, ch: usize) -> Vec<T> {
        (0..self.n_samples).map(|t| self.get(t, ch)).collect()
    }

    /// Stack planes along time. All must have the same channel count.
    pub fn concat(planes: &[Plane<T>]) -> Result<Self> {
        let n_ch = planes.first().map_or(0, |p| p.n_ch);
        if planes.iter().any(|p| p.n_ch != n_ch) {
            return Err(CarfacError::Usage("cannot concatenate planes with different channel counts".into()));
        }
        let data: Vec<T> = planes.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Self { n_samples: planes.iter().map(|p| p.n_samples).sum(), n_ch, data })
    }
}

impl<T: Real> Plane<T> {
    pub fn to_f64(&self) -> Plane<f64> {
        Plane {
            n_samples: self.n_samples,
            n_ch: self.n_ch,
            data: self.data.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }
}

/// Which output planes [`Carfac::run_segment`] records. Unselected planes
/// are returned with zero channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputSelection {
    pub nap: bool,
    pub bm: bool,
    pub bm_raw: bool,
    pub receptor_potential: bool,
    pub ohc: bool,
    pub agc: bool,
}

impl Default for OutputSelection {
    fn default() -> Self {
        Self { nap: true, bm: true, bm_raw: true, receptor_potential: true, ohc: true, agc: true }
    }
}

impl OutputSelection {
    pub const NONE: OutputSelection =
        OutputSelection { nap: false, bm: false, bm_raw: false, receptor_potential: false, ohc: false, agc: false };

    pub fn nap_only() -> Self {
        Self { nap: true, ..Self::NONE }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Do not close the AGC loop; pending undamping ramps are stopped.
    pub open_loop: bool,
    /// Force the OHC nonlinearity to 1.
    pub linear: bool,
    pub outputs: OutputSelection,
}

impl RunOptions {
    /// Open-loop and linear: the cascade is a fixed LTI filter.
    pub fn linear_open_loop() -> Self {
        Self { open_loop: true, linear: true, ..Default::default() }
    }
}

/// Per-ear output planes for one segment, all `n_samples` long.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentOutput<T = f64> {
    pub nap: Vec<Plane<T>>,
    pub bm: Vec<Plane<T>>,
    pub bm_raw: Vec<Plane<T>>,
    /// Receptor potential relative to rest; all zeros unless two_cap.
    pub receptor_potential: Vec<Plane<T>>,
    pub receptor_potential_valid: bool,
    /// Effective relative undamping `zB·nlf/zr` per sample.
    pub ohc: Vec<Plane<T>>,
    /// Stage-0 AGC activity, one row per update.
    pub agc: Vec<Plane<T>>,
    /// Sample index (within the segment) of each AGC row.
    pub agc_update_times: Vec<usize>,
}

impl<T: Real> SegmentOutput<T> {
    /// Widen every plane to f64.
    pub fn to_f64(&self) -> SegmentOutput<f64> {
        let conv = |v: &[Plane<T>]| v.iter().map(Plane::to_f64).collect();
        SegmentOutput {
            nap: conv(&self.nap),
            bm: conv(&self.bm),
            bm_raw: conv(&self.bm_raw),
            receptor_potential: conv(&self.receptor_potential),
            receptor_potential_valid: self.receptor_potential_valid,
            ohc: conv(&self.ohc),
            agc: conv(&self.agc),
            agc_update_times: self.agc_update_times.clone(),
        }
    }
}

/// All mutable state of one ear.
#[derive(Clone, Debug, PartialEq)]
pub struct EarState<T: Real = f64> {
    pub car: CarState<T>,
    pub ihc: IhcState<T>,
    pub agc: AgcState<T>,
}

impl<T: Real> EarState<T> {
    fn new(coeffs: &CarfacCoeffs<T>) -> Self {
        Self {
            car: CarState::new(&coeffs.car),
            ihc: IhcState::new(&coeffs.ihc, coeffs.n_ch()),
            agc: AgcState::new(&coeffs.agc, coeffs.n_ch()),
        }
    }
}

struct Scratch<T: Real> {
    car: Vec<CarStepOutput<T>>,
    nap: Vec<Vec<T>>,
    receptor_potential: Vec<Vec<T>>,
}

impl<T: Real> Scratch<T> {
    fn new(n_ears: usize, n_ch: usize) -> Self {
        Self {
            car: (0..n_ears).map(|_| CarStepOutput::new(n_ch)).collect(),
            nap: vec![vec![T::zero(); n_ch]; n_ears],
            receptor_potential: vec![vec![T::zero(); n_ch]; n_ears],
        }
    }
}

/// A designed, initialized CARFAC model for `n_ears` ears sharing one
/// design. `T` is the run-time precision.
pub struct Carfac<T: Real = f64> {
    params: CarfacDesignParams,
    coeffs: CarfacCoeffs<T>,
    ears: Vec<EarState<T>>,
    ohc_health: Vec<T>,
    scratch: Scratch<T>,
}

impl<T: Real> Clone for Carfac<T> {
    fn clone(&self) -> Self {
        Self {
            params: self.params.clone(),
            coeffs: self.coeffs.clone(),
            ears: self.ears.clone(),
            ohc_health: self.ohc_health.clone(),
            scratch: Scratch::new(self.ears.len(), self.coeffs.n_ch()),
        }
    }
}

const STATE_MAGIC: &[u8; 8] = b"CARFACST";
const STATE_VERSION: u32 = 1;

impl<T: Real> Carfac<T> {
    /// Design every stage and initialize all ears at rest.
    pub fn new(params: &CarfacDesignParams, n_ears: usize) -> Result<Self> {
        if n_ears == 0 {
            return Err(CarfacError::Usage("a model needs at least one ear".into()));
        }
        let coeffs = design_carfac(params)?.cast::<T>();
        let n_ch = coeffs.n_ch();
        let ears = (0..n_ears).map(|_| EarState::new(&coeffs)).collect();
        Ok(Self {
            params: params.clone(),
            coeffs,
            ears,
            ohc_health: vec![T::one(); n_ch],
            scratch: Scratch::new(n_ears, n_ch),
        })
    }

    pub fn params(&self) -> &CarfacDesignParams {
        &self.params
    }

    pub fn coeffs(&self) -> &CarfacCoeffs<T> {
        &self.coeffs
    }

    pub fn n_ch(&self) -> usize {
        self.coeffs.n_ch()
    }

    pub fn n_ears(&self) -> usize {
        self.ears.len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.coeffs.sample_rate
    }

    pub fn ihc_variant(&self) -> IhcVariant {
        self.coeffs.ihc.variant()
    }

    pub fn pole_freqs(&self) -> &[f64] {
        &self.coeffs.channels.pole_freqs
    }

    pub fn ears(&self) -> &[EarState<T>] {
        &self.ears
    }

    pub fn ohc_health(&self) -> &[T] {
        &self.ohc_health
    }

    /// Per-channel OHC health in [0, 1]; 0 is a passive cochlea. Applied at
    /// the next AGC loop closure.
    pub fn set_ohc_health(&mut self, health: &[f64]) -> Result<()> {
        if let Some((ch, &h)) = health.iter().enumerate().find(|(_, &h)| !(0.0..=1.0).contains(&h)) {
            return Err(CarfacError::Usage(format!("ohc_health[{ch}] = {h} is outside [0, 1]")));
        }
        self.set_ohc_health_unchecked(health)
    }

    /// Like [`set_ohc_health`](Self::set_ohc_health) but accepts any finite
    /// value. Negative health pushes damping beyond `max_zeta`, where the NLF
    /// no longer behaves as designed.
    pub fn set_ohc_health_unchecked(&mut self, health: &[f64]) -> Result<()> {
        if health.len() != self.n_ch() {
            return Err(CarfacError::Usage(format!(
                "ohc_health has {} entries, model has {} channels",
                health.len(),
                self.n_ch()
            )));
        }
        if health.iter().any(|h| !h.is_finite()) {
            return Err(CarfacError::Usage("ohc_health must be finite".into()));
        }
        self.ohc_health = health.iter().map(|&h| T::of(h)).collect();
        Ok(())
    }

    /// Return every ear to rest. Coefficients and OHC health are kept.
    pub fn reset(&mut self) {
        for ear in &mut self.ears {
            *ear = EarState::new(&self.coeffs);
        }
    }

    /// Advance every ear by one sample. Returns true if the AGC updated (and
    /// the loop was re-closed, or frozen in open-loop mode). Per-channel
    /// results are available through [`last_bm`](Self::last_bm) and friends.
    pub fn process_sample(&mut self, inputs: &[T], open_loop: bool, linear: bool) -> bool {
        let c = &self.coeffs;
        let mut updated = false;
        for (e, ear) in self.ears.iter_mut().enumerate() {
            let car_out = &mut self.scratch.car[e];
            car_step(inputs[e], &c.car, &mut ear.car, linear, car_out);
            ihc_step(
                &car_out.bm,
                &c.ihc,
                &mut ear.ihc,
                &mut self.scratch.nap[e],
                &mut self.scratch.receptor_potential[e],
            );
            updated = agc_step(&self.scratch.nap[e], &c.agc, &mut ear.agc);
        }
        if updated {
            if self.ears.len() > 1 {
                let mut agc_states: Vec<AgcState<T>> =
                    self.ears.iter_mut().map(|e| std::mem::replace(&mut e.agc, AgcState { stages: Vec::new() })).collect();
                cross_ear_mix(&c.agc, &mut agc_states);
                for (ear, st) in self.ears.iter_mut().zip(agc_states) {
                    ear.agc = st;
                }
            }
            for ear in &mut self.ears {
                close_agc_loop(ear.agc.activity(), &self.ohc_health, &c.car, &mut ear.car, c.agc.decimation(), open_loop);
            }
        }
        updated
    }

    pub fn last_bm(&self, ear: usize) -> &[T] {
        &self.scratch.car[ear].bm
    }

    pub fn last_bm_raw(&self, ear: usize) -> &[T] {
        &self.scratch.car[ear].bm_raw
    }

    pub fn last_nap(&self, ear: usize) -> &[T] {
        &self.scratch.nap[ear]
    }

    pub fn last_receptor_potential(&self, ear: usize) -> &[T] {
        &self.scratch.receptor_potential[ear]
    }

    /// Run a segment of audio (one slice per ear, equal lengths). State
    /// carries over between calls, so splitting a stream into segments gives
    /// bit-identical results to a single call.
    pub fn run_segment<S: AsRef<[T]>>(&mut self, audio: &[S], opts: RunOptions) -> Result<SegmentOutput<T>> {
        if audio.len() != self.n_ears() {
            return Err(CarfacError::Usage(format!(
                "audio has {} ears, model has {}",
                audio.len(),
                self.n_ears()
            )));
        }
        let n_samples = audio[0].as_ref().len();
        if audio.iter().any(|a| a.as_ref().len() != n_samples) {
            return Err(CarfacError::Usage("all ears must have the same number of samples".into()));
        }
        let n_ch = self.n_ch();
        let n_ears = self.n_ears();
        let sel = opts.outputs;
        let plane = |on: bool| -> Vec<Plane<T>> {
            (0..n_ears).map(|_| Plane::zeros(n_samples, if on { n_ch } else { 0 })).collect()
        };
        let rp_valid = self.ihc_variant() == IhcVariant::TwoCap;
        let mut out = SegmentOutput {
            nap: plane(sel.nap),
            bm: plane(sel.bm),
            bm_raw: plane(sel.bm_raw),
            receptor_potential: plane(sel.receptor_potential),
            receptor_potential_valid: rp_valid,
            ohc: plane(sel.ohc),
            agc: Vec::new(),
            agc_update_times: Vec::new(),
        };
        let mut agc_rows: Vec<Vec<T>> = vec![Vec::new(); n_ears];

        if opts.open_loop {
            for ear in &mut self.ears {
                ear.car.freeze_ramps();
            }
        }

        let mut inputs = vec![T::zero(); n_ears];
        for t in 0..n_samples {
            for (x, a) in inputs.iter_mut().zip(audio) {
                *x = a.as_ref()[t];
            }
            let updated = self.process_sample(&inputs, opts.open_loop, opts.linear);
            for e in 0..n_ears {
                if sel.nap {
                    out.nap[e].row_mut(t).copy_from_slice(&self.scratch.nap[e]);
                }
                if sel.bm {
                    out.bm[e].row_mut(t).copy_from_slice(&self.scratch.car[e].bm);
                }
                if sel.bm_raw {
                    out.bm_raw[e].row_mut(t).copy_from_slice(&self.scratch.car[e].bm_raw);
                }
                if sel.receptor_potential {
                    out.receptor_potential[e].row_mut(t).copy_from_slice(&self.scratch.receptor_potential[e]);
                }
                if sel.ohc {
                    let car = &self.ears[e].car;
                    let nlf = &self.scratch.car[e].nlf;
                    let zr = &self.coeffs.car.zr;
                    for (ch, o) in out.ohc[e].row_mut(t).iter_mut().enumerate() {
                        *o = car.zb[ch] * nlf[ch] / zr[ch];
                    }
                }
                if sel.agc && updated {
                    agc_rows[e].extend_from_slice(self.ears[e].agc.activity());
                }
            }
            if sel.agc && updated {
                out.agc_update_times.push(t);
            }
        }
        let n_updates = out.agc_update_times.len();
        out.agc = agc_rows
            .into_iter()
            .map(|rows| Plane::from_vec(n_updates, if sel.agc { n_ch } else { 0 }, rows))
            .collect::<Result<_>>()?;
        Ok(out)
    }

    /// Serialize all mutable state. Layout (little-endian):
    /// `b"CARFACST"`, u32 version, u32 n_ears, u32 n_ch, u32 IHC variant tag
    /// (2 two_cap, 1 one_cap, 0 just_hwr), u32 n_agc_stages; then per ear,
    /// f64 vectors of length n_ch: CAR `z1 z2 za zb dzb g dg zy ac_state`,
    /// IHC `cap1 cap2 lpf1 lpf2`, and per AGC stage `memory input_accum`
    /// followed by one f64 holding `decim_phase`.
    pub fn save_state(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(STATE_MAGIC);
        for v in [
            STATE_VERSION,
            self.n_ears() as u32,
            self.n_ch() as u32,
            self.ihc_variant().tag(),
            self.coeffs.agc.n_stages() as u32,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut put = |v: &[T]| {
            for x in v {
                buf.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
            }
        };
        for ear in &self.ears {
            let c = &ear.car;
            for v in [&c.z1, &c.z2, &c.za, &c.zb, &c.dzb, &c.g, &c.dg, &c.zy, &c.ac_state] {
                put(v);
            }
            let i = &ear.ihc;
            for v in [&i.cap1, &i.cap2, &i.lpf1, &i.lpf2] {
                put(v);
            }
            for st in &ear.agc.stages {
                put(&st.memory);
                put(&st.input_accum);
                put(&[T::of(st.decim_phase as f64)]);
            }
        }
        buf
    }

    /// Restore state written by [`save_state`](Self::save_state) from a model
    /// with the same shape and IHC variant.
    pub fn load_state(&mut self, bytes: &[u8]) -> Result<()> {
        let fmt = |detail: String| CarfacError::Format { kind: "state", detail };
        if bytes.len() < 28 || &bytes[..8] != STATE_MAGIC {
            return Err(fmt("missing CARFACST header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        let (version, n_ears, n_ch, tag, n_stages) = (word(0), word(1), word(2), word(3), word(4));
        if version != STATE_VERSION {
            return Err(fmt(format!("unsupported state version {version}")));
        }
        if n_ears as usize != self.n_ears()
            || n_ch as usize != self.n_ch()
            || tag != self.ihc_variant().tag()
            || n_stages as usize != self.coeffs.agc.n_stages()
        {
            return Err(fmt(format!(
                "shape mismatch: state has {n_ears} ears, {n_ch} channels, IHC tag {tag}, {n_stages} AGC stages"
            )));
        }
        let n_ch = n_ch as usize;
        let per_ear = 13 * n_ch + n_stages as usize * (2 * n_ch + 1);
        let expected = 28 + 8 * per_ear * n_ears as usize;
        if bytes.len() != expected {
            return Err(fmt(format!("state is {} bytes, expected {expected}", bytes.len())));
        }
        let mut pos = 28;
        let mut take = |n: usize| -> Vec<T> {
            let v = bytes[pos..pos + 8 * n]
                .chunks_exact(8)
                .map(|b| T::of(f64::from_le_bytes(b.try_into().unwrap())))
                .collect();
            pos += 8 * n;
            v
        };
        let mut ears = self.ears.clone();
        for ear in &mut ears {
            let c = &mut ear.car;
            for v in [&mut c.z1, &mut c.z2, &mut c.za, &mut c.zb, &mut c.dzb, &mut c.g, &mut c.dg, &mut c.zy, &mut c.ac_state] {
                *v = take(n_ch);
            }
            let i = &mut ear.ihc;
            for v in [&mut i.cap1, &mut i.cap2, &mut i.lpf1, &mut i.lpf2] {
                *v = take(n_ch);
            }
            for (st, sc) in ear.agc.stages.iter_mut().zip(&self.coeffs.agc.stages) {
                st.memory = take(n_ch);
                st.input_accum = take(n_ch);
                let phase = take(1)[0].to_f64_lossy();
                if !(phase >= 0.0 && phase < sc.decimation as f64 && phase.fract() == 0.0) {
                    return Err(fmt(format!("invalid AGC decimation phase {phase}")));
                }
                st.decim_phase = phase as usize;
            }
        }
        self.ears = ears;
        Ok(())
    }
}

//! Comparison of delay-buffer and ripple cascade updates.

use crate::design::CarfacDesignParams;
use crate::error::Result;
use crate::io::stimulus::uniform_noise;
use crate::model::{Carfac, OutputSelection, Plane, RunOptions};

use super::response::impulse_response;

/// Max |ripple[t][c] − delay[t + c][c]| over all channels and every sample
/// where both are defined. Zero when the delay-buffer cascade is exactly the
/// ripple cascade with one extra sample of delay per stage.
pub fn stagger_mismatch(ripple: &Plane<f64>, delayed: &Plane<f64>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..ripple.n_ch() {
        for t in 0..ripple.n_samples().saturating_sub(c) {
            let d = (ripple.get(t, c) - delayed.get(t + c, c)).abs();
            worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
        }
    }
    worst
}

/// Linear open-loop impulse responses of both modes and their stagger mismatch.
pub fn impulse_stagger(params: &CarfacDesignParams, n_samples: usize) -> Result<(Plane<f64>, Plane<f64>, f64)> {
    let ripple = impulse_response(&mut Carfac::new(&params.clone().with_delay_buffer(false), 1)?, n_samples)?;
    let delayed = impulse_response(&mut Carfac::new(&params.clone().with_delay_buffer(true), 1)?, n_samples)?;
    let mismatch = stagger_mismatch(&ripple, &delayed);
    Ok((ripple, delayed, mismatch))
}

fn boxcar(x: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for (i, &v) in x.iter().enumerate() {
        acc += v;
        if i >= width {
            acc -= x[i - width];
        }
        out.push(acc / width.min(i + 1) as f64);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopComparison {
    /// RMS of the difference over RMS of the ripple output, after aligning
    /// the stagger and smoothing.
    pub relative_rms: f64,
    /// The same measure without stagger compensation, for scale.
    pub relative_rms_unaligned: f64,
}

/// Run closed-loop noise through both modes and compare NAPs smoothed with a
/// `smooth_s` boxcar, ignoring the first `skip_s` seconds.
pub fn closed_loop_difference(
    params: &CarfacDesignParams,
    duration_s: f64,
    smooth_s: f64,
    skip_s: f64,
    seed: u64,
) -> Result<ClosedLoopComparison> {
    let fs = params.sample_rate;
    let x = uniform_noise((duration_s * fs).round() as usize, 0.1, seed);
    let opts = RunOptions { outputs: OutputSelection::nap_only(), ..Default::default() };
    let run = |delay: bool| -> Result<Plane<f64>> {
        let mut m = Carfac::<f64>::new(&params.clone().with_delay_buffer(delay), 1)?;
        Ok(m.run_segment(&[&x[..]], opts)?.nap.remove(0))
    };
    let (ripple, delayed) = (run(false)?, run(true)?);
    let width = ((smooth_s * fs).round() as usize).max(1);
    let skip = (skip_s * fs).round() as usize;
    let measure = |align: bool| {
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..ripple.n_ch() {
            let shift = if align { c } else { 0 };
            let a = boxcar(&ripple.channel(c), width);
            let b = boxcar(&delayed.channel(c), width);
            for t in skip..a.len().saturating_sub(shift) {
                num += (a[t] - b[t + shift]).powi(2);
                den += a[t] * a[t];
            }
        }
        (num / den).sqrt()
    };
    Ok(ClosedLoopComparison { relative_rms: measure(true), relative_rms_unaligned: measure(false) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxcar_mean() {
        assert_eq!(boxcar(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn stagger_of_shifted_copy_is_zero() {
        let a = Plane::from_vec(4, 2, vec![1.0, 0.0, 2.0, 1.0, 3.0, 2.0, 4.0, 3.0]).unwrap();
        let b = Plane::from_vec(4, 2, vec![1.0, 9.0, 2.0, 0.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(stagger_mismatch(&a, &b), 0.0);
    }
}

//! Behavior of the resonator cascade observed through the full model.

use carfac::analysis::response::linear_response;
use carfac::analysis::spectrum::tone_component;
use carfac::io::uniform_noise;
use carfac::{default_design, Carfac, OutputSelection, Plane, RunOptions};

fn bm_linear(x: &[f64]) -> Plane<f64> {
    let mut m = Carfac::<f64>::new(&default_design(22050.0).unwrap(), 1).unwrap();
    let opts = RunOptions { outputs: OutputSelection { bm: true, ..OutputSelection::NONE }, ..RunOptions::linear_open_loop() };
    m.run_segment(&[x], opts).unwrap().bm.remove(0)
}

fn peak_abs(p: &Plane<f64>) -> f64 {
    p.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn linear_open_loop_is_superposable() {
    let x = uniform_noise(3000, 0.1, 1);
    let y = uniform_noise(3000, 0.1, 2);
    let (a, b) = (0.7, -1.9);
    let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    let (rx, ry, rm) = (bm_linear(&x), bm_linear(&y), bm_linear(&mix));
    let scale = peak_abs(&rm);
    let worst = rm
        .data()
        .iter()
        .zip(rx.data().iter().zip(ry.data()))
        .map(|(m, (p, q))| (m - (a * p + b * q)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10 * scale, "superposition error {worst:e} vs scale {scale}");
}

#[test]
fn linear_open_loop_is_time_invariant() {
    let x = uniform_noise(2000, 0.1, 3);
    let shift = 137;
    let mut xs = vec![0.0; shift];
    xs.extend_from_slice(&x);
    let (r, rs) = (bm_linear(&x), bm_linear(&xs));
    let scale = peak_abs(&r);
    for t in 0..x.len() {
        for c in 0..r.n_ch() {
            assert!((r.get(t, c) - rs.get(t + shift, c)).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn impulse_responses_decay_at_both_damping_extremes() {
    let fs = 22050.0;
    let n = fs as usize;
    let mut imp = vec![0.0; n];
    imp[0] = 1.0;
    for health in [1.0, 0.0] {
        let mut m = Carfac::<f64>::new(&default_design(fs).unwrap(), 1).unwrap();
        m.set_ohc_health(&vec![health; m.n_ch()]).unwrap();
        m.run_segment(&[vec![0.0; 200]], RunOptions { outputs: OutputSelection::NONE, ..Default::default() }).unwrap();
        let opts = RunOptions { outputs: OutputSelection { bm_raw: true, ..OutputSelection::NONE }, ..RunOptions::linear_open_loop() };
        let ir = m.run_segment(&[&imp], opts).unwrap().bm_raw.remove(0);
        for c in 0..ir.n_ch() {
            let ch = ir.channel(c);
            let peak = ch.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tail = &ch[n - n / 10..];
            let rms = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
            assert!(rms < 1e-9 * peak, "health {health} channel {c}: tail {rms:e} peak {peak:e}");
        }
    }
}

#[test]
fn bm_has_no_dc_over_long_noise() {
    // The mean of a one-pole highpass output over N samples equals the change
    // of its state divided by c*N. The apical channels carry little noise
    // energy next to the DC the nonlinearity creates ahead of the coupler,
    // so the segment must be long: 300 s, streamed in 1 s chunks.
    let fs = 22050usize;
    let mut m = Carfac::<f64>::new(&default_design(fs as f64).unwrap(), 1).unwrap();
    let opts = RunOptions { outputs: OutputSelection { bm: true, ..OutputSelection::NONE }, ..Default::default() };
    let n_ch = m.n_ch();
    let (mut sum, mut sum_sq) = (vec![0.0; n_ch], vec![0.0; n_ch]);
    for chunk in 0..300u64 {
        let out = m.run_segment(&[uniform_noise(fs, 0.1, 100 + chunk)], opts).unwrap();
        // skip the first second while the coupler and AGC settle
        if chunk == 0 {
            continue;
        }
        for t in 0..fs {
            for (c, &v) in out.bm[0].row(t).iter().enumerate() {
                sum[c] += v;
                sum_sq[c] += v * v;
            }
        }
    }
    let n = (299 * fs) as f64;
    let worst = (0..n_ch)
        .map(|c| (sum[c] / n).abs() / (sum_sq[c] / n).sqrt())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "worst |mean|/rms {worst:e}");
}

#[test]
fn closed_loop_growth_is_compressive() {
    let fs = 22050.0;
    let params = default_design(fs).unwrap();
    let cfs = linear_response(&params, 8192).unwrap().peak_freq_hz;
    for ch in [22, 35] {
        let cf = cfs[ch];
        let response = |level_db: f64| {
            let a = 10f64.powf(level_db / 20.0);
            let x: Vec<f64> = (0..(0.3 * fs) as usize).map(|i| a * (2.0 * std::f64::consts::PI * cf * i as f64 / fs).sin()).collect();
            let mut m = Carfac::<f64>::new(&params, 1).unwrap();
            let out = m.run_segment(&[x], RunOptions { outputs: OutputSelection { bm: true, ..OutputSelection::NONE }, ..Default::default() }).unwrap();
            let trace = out.bm[0].channel(ch);
            tone_component(&trace[(0.2 * fs) as usize..], cf, fs).0
        };
        let growth = 20.0 * (response(-20.0) / response(-60.0)).log10();
        assert!(growth > 0.0 && growth < 20.0, "channel {ch}: BM growth {growth:.1} dB for 40 dB input");
    }
}

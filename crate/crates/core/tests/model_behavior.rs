//! Closed-loop behavior of the assembled model: impairment, binaural
//! coupling, streaming.

use carfac::analysis::response::response_with_health;
use carfac::io::uniform_noise;
use carfac::{default_design, Carfac, OutputSelection, Plane, RunOptions};

const FS: f64 = 22050.0;

fn bm_only() -> RunOptions {
    RunOptions { outputs: OutputSelection { bm: true, ..OutputSelection::NONE }, ..Default::default() }
}

fn rms_per_channel(p: &Plane<f64>, start: usize) -> Vec<f64> {
    (0..p.n_ch())
        .map(|c| {
            let ch = &p.channel(c)[start..];
            (ch.iter().map(|v| v * v).sum::<f64>() / ch.len() as f64).sqrt()
        })
        .collect()
}

#[test]
fn bm_rms_is_monotone_in_health() {
    let params = default_design(FS).unwrap();
    let x = uniform_noise((0.5 * FS) as usize, 0.03, 11);
    let rms: Vec<Vec<f64>> = [1.0, 0.5, 0.0]
        .iter()
        .map(|&h| {
            let mut m = Carfac::<f64>::new(&params, 1).unwrap();
            m.set_ohc_health(&vec![h; m.n_ch()]).unwrap();
            let out = m.run_segment(&[&x], bm_only()).unwrap();
            rms_per_channel(&out.bm[0], (0.25 * FS) as usize)
        })
        .collect();
    let (full, half, none) = (&rms[0], &rms[1], &rms[2]);
    for (c, ((a, b), z)) in full.iter().zip(half).zip(none).enumerate() {
        assert!(a >= b && b >= z, "channel {c}: {a} {b} {z}");
    }
}

#[test]
fn half_health_gives_intermediate_gain() {
    let params = default_design(FS).unwrap();
    let n_ch = Carfac::<f64>::new(&params, 1).unwrap().n_ch();
    let gain = |h: f64| response_with_health(&params, &vec![h; n_ch], 4096).unwrap().peak_gain_db;
    let (full, half, none) = (gain(1.0), gain(0.5), gain(0.0));
    for c in 0..n_ch {
        assert!(full[c] > half[c] && half[c] > none[c], "channel {c}: {} {} {}", full[c], half[c], none[c]);
    }
}

#[test]
fn identical_ears_match_a_single_ear() {
    let params = default_design(FS).unwrap();
    let x = uniform_noise(4410, 0.1, 12);
    let mut mono = Carfac::<f64>::new(&params, 1).unwrap();
    let mut stereo = Carfac::<f64>::new(&params, 2).unwrap();
    let a = mono.run_segment(&[&x], RunOptions::default()).unwrap();
    let b = stereo.run_segment(&[&x, &x], RunOptions::default()).unwrap();
    assert_eq!(b.nap[0].data(), b.nap[1].data());
    let diff = a.nap[0].data().iter().zip(b.nap[0].data()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    assert!(diff < 1e-12, "mono vs binaural {diff:e}");
}

#[test]
fn a_driven_ear_suppresses_the_silent_ear() {
    let params = default_design(FS).unwrap();
    let noise = uniform_noise((0.3 * FS) as usize, 0.3, 13);
    let silence = vec![0.0; noise.len()];

    let mut binaural = Carfac::<f64>::new(&params, 2).unwrap();
    binaural.run_segment(&[&noise, &silence], RunOptions { outputs: OutputSelection::NONE, ..Default::default() }).unwrap();
    let mut alone = Carfac::<f64>::new(&params, 1).unwrap();
    alone.run_segment(&[&silence], RunOptions { outputs: OutputSelection::NONE, ..Default::default() }).unwrap();

    // Undamping sets each channel's sensitivity; the per-stage DC gain moves
    // the other way, so compare undamping.
    let quiet_ear = &binaural.ears()[1].car.zb;
    let reference = &alone.ears()[0].car.zb;
    let driven = &binaural.ears()[0].car.zb;
    let mut suppressed = 0;
    for c in 0..quiet_ear.len() {
        // partial: below the unstimulated gain, above the driven ear's gain
        assert!(quiet_ear[c] <= reference[c] + 1e-12, "channel {c}");
        assert!(quiet_ear[c] >= driven[c] - 1e-12, "channel {c}");
        if quiet_ear[c] < reference[c] - 1e-6 {
            suppressed += 1;
        }
    }
    assert!(suppressed > quiet_ear.len() / 2, "only {suppressed} channels suppressed");
}

#[test]
fn health_setter_validates_range_and_length() {
    let mut m = Carfac::<f64>::new(&default_design(FS).unwrap(), 1).unwrap();
    let n = m.n_ch();
    assert!(m.set_ohc_health(&vec![1.5; n]).is_err());
    assert!(m.set_ohc_health(&vec![-0.1; n]).is_err());
    assert!(m.set_ohc_health(&vec![0.5; n - 1]).is_err());
    assert!(m.set_ohc_health_unchecked(&vec![-0.1; n]).is_ok());
}

#[test]
fn saved_state_resumes_a_stream_exactly() {
    let params = default_design(FS).unwrap();
    let x = uniform_noise(3000, 0.1, 14);
    let mut whole = Carfac::<f64>::new(&params, 1).unwrap();
    let reference = whole.run_segment(&[&x], RunOptions::default()).unwrap();

    let mut first = Carfac::<f64>::new(&params, 1).unwrap();
    first.run_segment(&[&x[..1234]], RunOptions::default()).unwrap();
    let snapshot = first.save_state();
    let mut second = Carfac::<f64>::new(&params, 1).unwrap();
    second.load_state(&snapshot).unwrap();
    let tail = second.run_segment(&[&x[1234..]], RunOptions::default()).unwrap();
    for t in 0..tail.nap[0].n_samples() {
        assert_eq!(tail.nap[0].row(t), reference.nap[0].row(1234 + t));
    }
}

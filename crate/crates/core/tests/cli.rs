//! End-to-end checks of the `carfac` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use carfac::io::{read_raw64, uniform_noise};

fn carfac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carfac")).args(args).env_remove("CARFAC_GOLDEN_DIR").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = carfac(args);
    assert!(out.status.success(), "carfac {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_wav(path: &Path, fs: u32, channels: &[Vec<f64>], bits: u16, float: bool) {
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: fs,
        bits_per_sample: bits,
        sample_format: if float { hound::SampleFormat::Float } else { hound::SampleFormat::Int },
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for t in 0..channels[0].len() {
        for ch in channels {
            if float {
                w.write_sample(ch[t] as f32).unwrap();
            } else {
                let scale = (1i64 << (bits - 1)) as f64;
                w.write_sample((ch[t] * scale).round() as i32).unwrap();
            }
        }
    }
    w.finalize().unwrap();
}

fn read_pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let text = String::from_utf8_lossy(&bytes[..32.min(bytes.len())]).to_string();
    let mut fields = text.split_ascii_whitespace();
    assert_eq!(fields.next(), Some("P5"));
    let w: usize = fields.next().unwrap().parse().unwrap();
    let h: usize = fields.next().unwrap().parse().unwrap();
    let pixels = bytes[bytes.len() - w * h..].to_vec();
    (w, h, pixels)
}

/// Row (channel) of the brightest pixel in each image column.
fn brightest_rows(w: usize, h: usize, px: &[u8]) -> Vec<usize> {
    (0..w).map(|x| (0..h).max_by_key(|&y| px[y * w + x]).unwrap()).collect()
}

#[test]
fn one_second_mono_wav_gives_a_full_nap_table() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    write_wav(&wav, 22050, &[uniform_noise(22050, 0.1, 1)], 16, false);
    let out = dir.path().join("whole");
    ok(&["run", "--input", s(&wav), "--out-dir", s(&out)]);
    let text = fs::read_to_string(out.join("nap.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 22051);
    assert!(lines.iter().all(|l| l.split(',').count() == 71));

    let chunked = dir.path().join("chunked");
    ok(&["run", "--input", s(&wav), "--chunk-ms", "10", "--out-dir", s(&chunked)]);
    assert_eq!(text, fs::read_to_string(chunked.join("nap.csv")).unwrap());
}

#[test]
fn stereo_wav_gives_one_plane_per_ear() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    write_wav(&wav, 22050, &[uniform_noise(2205, 0.1, 1), vec![0.0; 2205]], 24, false);
    ok(&["run", "--input", s(&wav), "--format", "raw64", "--out-dir", s(dir.path())]);
    let left = read_raw64(&dir.path().join("nap_ear0.raw64")).unwrap();
    let right = read_raw64(&dir.path().join("nap_ear1.raw64")).unwrap();
    assert_eq!((left.n_samples(), left.n_ch()), (2205, 71));
    assert_eq!((right.n_samples(), right.n_ch()), (2205, 71));
    assert_ne!(left.data(), right.data());
}

#[test]
fn float_wav_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    write_wav(&wav, 22050, &[uniform_noise(1000, 0.1, 2)], 32, true);
    ok(&["run", "--input", s(&wav), "--outputs", "nap,bm", "--format", "raw64", "--out-dir", s(dir.path())]);
    assert_eq!(read_raw64(&dir.path().join("bm.raw64")).unwrap().n_samples(), 1000);
}

#[test]
fn mismatched_rate_and_unsupported_wav_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("16k.wav");
    write_wav(&wav, 16000, &[vec![0.0; 100]], 16, false);
    let out = carfac(&["run", "--input", s(&wav), "--sample-rate", "22050", "--out-dir", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("16000"));

    let eight = dir.path().join("8bit.wav");
    write_wav(&eight, 22050, &[vec![0.0; 100]], 8, false);
    assert!(!carfac(&["run", "--input", s(&eight), "--out-dir", s(dir.path())]).status.success());

    assert!(!carfac(&["run", "--stimulus", "silence", "--ihc", "three_cap"]).status.success());
}

#[test]
fn seeded_noise_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        ok(&["run", "--stimulus", "noise:level=-30,dur=0.05", "--seed", seed, "--format", "raw64", "--out-dir", s(&out)]);
        fs::read(out.join("nap.raw64")).unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("a", "5"), run("c", "6"));
}

#[test]
fn golden_dump_then_compare_round_trips_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold");
    let with_env = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_carfac")).args(args).env("CARFAC_GOLDEN_DIR", &gold).output().unwrap()
    };
    assert!(with_env(&["golden", "dump"]).status.success());
    let good = with_env(&["golden", "compare"]);
    assert!(good.status.success(), "{}", String::from_utf8_lossy(&good.stdout));

    let target = gold.join("noise_two_cap_nap.raw64");
    let mut bytes = fs::read(&target).unwrap();
    let n = bytes.len();
    let last = f64::from_le_bytes(bytes[n - 8..].try_into().unwrap());
    bytes[n - 8..].copy_from_slice(&(last + 0.01).to_le_bytes());
    fs::write(&target, bytes).unwrap();
    let bad = with_env(&["golden", "compare"]);
    assert!(!bad.status.success());
    let report = String::from_utf8_lossy(&bad.stdout);
    assert!(report.lines().any(|l| l.contains("noise_two_cap_nap") && l.contains("FAIL")), "{report}");

    assert!(!carfac(&["golden", "compare"]).status.success(), "no directory given");
}

#[test]
fn analysis_commands_pass_their_checks() {
    ok(&["analyze-distortion", "--check"]);
    // without the coupler the 0 Hz line is back
    assert!(!carfac(&["analyze-distortion", "--bm-raw", "--check"]).status.success());
    ok(&["toneburst-compare", "--check"]);
    ok(&["benchmark", "--segments", "0.2", "--min-total", "0.2", "--check"]);
}

#[test]
fn toneburst_compare_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["toneburst-compare", "--out-dir", s(dir.path())]);
    for f in ["traces_3000hz.csv", "traces_300hz.csv", "summary.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

fn cochleagram(dir: &Path, stimulus: &str) -> (usize, usize, Vec<u8>) {
    let out: PathBuf = dir.join(format!("{}.pgm", stimulus.split(':').next().unwrap()));
    ok(&["cochleagram", "--stimulus", stimulus, "--out", s(&out)]);
    read_pgm(&out)
}

#[test]
fn cochleagram_images_follow_the_stimulus() {
    let dir = tempfile::tempdir().unwrap();
    let (_, h, px) = cochleagram(dir.path(), "silence:dur=0.2");
    assert_eq!(h, 71);
    assert!(px.iter().all(|&p| p == px[0]), "silence should be uniform");

    let (w, h, px) = cochleagram(dir.path(), "tone:freq=3000,level=-30,dur=0.3");
    let rows = brightest_rows(w, h, &px);
    let late = &rows[w / 2..];
    assert!(late.iter().all(|&r| (20..=24).contains(&r)), "{late:?}");

    let (w, h, px) = cochleagram(dir.path(), "chirp:f0=200,f1=6000,level=-30,dur=1.0");
    let rows = brightest_rows(w, h, &px);
    let (early, late) = (rows[w / 10], rows[w - w / 10]);
    assert!(early > late + 20, "brightest channel should move toward the base: {rows:?}");
}

#[test]
fn design_dump_lists_every_channel() {
    let text = ok(&["design-dump"]);
    assert_eq!(text.lines().count(), 72);
    assert!(text.starts_with("channel,pole_hz"));
    let at_48k = ok(&["design-dump", "--sample-rate", "48000"]);
    assert!(at_48k.lines().count() > 72);
    assert!(ok(&["design-dump", "--table", "ihc"]).lines().next().is_some());
}

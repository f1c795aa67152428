//! FFT helpers shared by the analyses.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// One-sided magnitude spectrum of `x` (length n/2 + 1), optionally windowed.
/// Magnitudes are normalized so that a sine of amplitude A at an exact bin
/// reads A (with the window's coherent gain removed).
pub fn magnitude_spectrum(x: &[f64], window: Option<&[f64]>) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = match window {
        Some(w) => x.iter().zip(w).map(|(a, b)| Complex::new(a * b, 0.0)).collect(),
        None => x.iter().map(|&a| Complex::new(a, 0.0)).collect(),
    };
    let gain: f64 = window.map_or(n as f64, |w| w.iter().sum());
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() / gain * if k == 0 || 2 * k == n { 1.0 } else { 2.0 })
        .collect()
}

/// Complex transfer function (one-sided) of an impulse response.
pub fn transfer_function(h: &[f64]) -> Vec<Complex<f64>> {
    let n = h.len();
    let mut buf: Vec<Complex<f64>> = h.iter().map(|&a| Complex::new(a, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    k as f64 * sample_rate / n as f64
}

pub fn nearest_bin(freq: f64, n: usize, sample_rate: f64) -> usize {
    (freq * n as f64 / sample_rate).round() as usize
}

pub fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Amplitude and mean of `x` at `freq`: returns (|first harmonic|, mean),
/// using a single-bin DFT over the whole slice.
pub fn tone_component(x: &[f64], freq: f64, sample_rate: f64) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut re, mut im, mut sum) = (0.0, 0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let ph = 2.0 * PI * freq * i as f64 / sample_rate;
        re += v * ph.cos();
        im += v * ph.sin();
        sum += v;
    }
    (2.0 * (re * re + im * im).sqrt() / n, sum / n)
}

//! Smoothed, decimated NAP images.

use crate::model::Plane;

#[derive(Clone, Debug, PartialEq)]
pub struct CochleagramConfig {
    /// One-pole smoothing time constant, seconds.
    pub smoothing_s: f64,
    /// Output one frame every `hop` samples.
    pub hop: usize,
    /// Value mapped to white; `None` uses the image maximum.
    pub clip: Option<f64>,
}

impl Default for CochleagramConfig {
    fn default() -> Self {
        Self { smoothing_s: 0.010, hop: 110, clip: None }
    }
}

/// Frames × channels plane scaled to [0, 1], ready for
/// [`write_pgm`](crate::io::write_pgm).
pub fn cochleagram(nap: &Plane<f64>, sample_rate: f64, cfg: &CochleagramConfig) -> Plane<f64> {
    let hop = cfg.hop.max(1);
    let n_ch = nap.n_ch();
    let alpha = 1.0 - (-1.0 / (cfg.smoothing_s.max(0.0) * sample_rate)).exp();
    let mut state = vec![0.0; n_ch];
    let mut frames = Vec::new();
    for t in 0..nap.n_samples() {
        for (s, &x) in state.iter_mut().zip(nap.row(t)) {
            *s += alpha * (x - *s);
        }
        if (t + 1) % hop == 0 {
            frames.extend_from_slice(&state);
        }
    }
    let n_frames = frames.len() / n_ch.max(1);
    let white = cfg.clip.unwrap_or_else(|| frames.iter().copied().fold(0.0, f64::max));
    let scale = if white > 0.0 { 1.0 / white } else { 0.0 };
    for v in &mut frames {
        *v = (*v * scale).clamp(0.0, 1.0);
    }
    Plane::from_vec(n_frames, n_ch, frames).expect("frame count matches")
}

/// Index of the brightest channel in each frame.
pub fn brightest_channels(image: &Plane<f64>) -> Vec<usize> {
    (0..image.n_samples())
        .map(|t| {
            image.row(t).iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (c, &v)| if v > b.1 { (c, v) } else { b }).0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_uniform() {
        let nap = Plane::zeros(1000, 5);
        let img = cochleagram(&nap, 22050.0, &CochleagramConfig::default());
        assert_eq!(img.n_samples(), 9);
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn brightest_channel_tracks_input() {
        let mut nap = Plane::zeros(440, 3);
        for t in 0..440 {
            nap.row_mut(t)[if t < 220 { 0 } else { 2 }] = 1.0;
        }
        let img = cochleagram(&nap, 22050.0, &CochleagramConfig { smoothing_s: 0.0005, hop: 110, clip: None });
        assert_eq!(brightest_channels(&img), vec![0, 0, 2, 2]);
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

//! WAV input and output. 16- and 24-bit PCM and 32-bit IEEE float, mono or
//! stereo. No resampling is done anywhere.

use std::path::Path;

use crate::error::{CarfacError, Result};

/// Decoded audio, one vector per channel (ear), scaled to ±1 full scale.
#[derive(Clone, Debug, PartialEq)]
pub struct WavAudio {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl WavAudio {
    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

pub fn read_wav(path: &Path) -> Result<WavAudio> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let n_ch = spec.channels as usize;
    if !(1..=2).contains(&n_ch) {
        return Err(CarfacError::UnsupportedWav(format!("{n_ch} channels (mono or stereo only)")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1u32 << (bits - 1)) as f64;
            reader.samples::<i32>().map(|s| s.map(|v| v as f64 * scale)).collect::<std::result::Result<_, _>>()?
        }
        (hound::SampleFormat::Float, 32) => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(CarfacError::UnsupportedWav(format!(
                "{bits}-bit {} (16/24-bit PCM or 32-bit float only)",
                if fmt == hound::SampleFormat::Int { "PCM" } else { "float" }
            )))
        }
    };
    let channels = (0..n_ch).map(|c| interleaved.iter().skip(c).step_by(n_ch).copied().collect()).collect();
    Ok(WavAudio { sample_rate: spec.sample_rate, channels })
}

/// Write `audio` (one slice per channel); PCM values are clipped to full scale.
pub fn write_wav(path: &Path, audio: &WavAudio, encoding: WavEncoding) -> Result<()> {
    let n_ch = audio.channels.len();
    if !(1..=2).contains(&n_ch) || audio.channels.iter().any(|c| c.len() != audio.n_samples()) {
        return Err(CarfacError::Usage("WAV output needs 1 or 2 equal-length channels".into()));
    }
    let (bits, sample_format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec { channels: n_ch as u16, sample_rate: audio.sample_rate, bits_per_sample: bits, sample_format };
    let mut w = hound::WavWriter::create(path, spec)?;
    for t in 0..audio.n_samples() {
        for ch in &audio.channels {
            match encoding {
                WavEncoding::Float32 => w.write_sample(ch[t] as f32)?,
                WavEncoding::Pcm16 | WavEncoding::Pcm24 => {
                    let full = (1i64 << (bits - 1)) as f64;
                    let v = (ch[t] * full).round().clamp(-full, full - 1.0) as i32;
                    w.write_sample(v)?
                }
            }
        }
    }
    w.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn audio(n_ch: usize) -> WavAudio {
        let chans = (0..n_ch)
            .map(|c| (0..100).map(|t| ((t as f64) * 0.1 + c as f64).sin() * 0.5).collect())
            .collect();
        WavAudio { sample_rate: 22050, channels: chans }
    }

    #[test]
    fn round_trips_each_encoding() {
        let dir = tempfile::tempdir().unwrap();
        for (enc, tol) in [(WavEncoding::Pcm16, 1.0 / 32768.0), (WavEncoding::Pcm24, 1.0 / 8388608.0), (WavEncoding::Float32, 1e-7)] {
            for n_ch in [1, 2] {
                let a = audio(n_ch);
                let p = dir.path().join(format!("{enc:?}_{n_ch}.wav"));
                write_wav(&p, &a, enc).unwrap();
                let b = read_wav(&p).unwrap();
                assert_eq!(b.sample_rate, 22050);
                assert_eq!(b.channels.len(), n_ch);
                for (x, y) in a.channels.iter().flatten().zip(b.channels.iter().flatten()) {
                    assert!((x - y).abs() <= tol, "{enc:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rejects_8_bit_and_multichannel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u8.wav");
        let spec = hound::WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 8, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p), Err(CarfacError::UnsupportedWav(_))));

        let p = dir.path().join("quad.wav");
        let spec = hound::WavSpec { channels: 4, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for _ in 0..4 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p), Err(CarfacError::UnsupportedWav(_))));
    }
}

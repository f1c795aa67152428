//! Output plane serialization: CSV with a CF header, lossless raw64, and PGM
//! images.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CarfacError, Result};
use crate::model::Plane;

/// Eight-byte tag at the start of every raw64 file.
pub const RAW64_MAGIC: &[u8; 8] = b"CFR64\0\0\0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Raw64,
    Pgm,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Raw64 => "raw64",
            OutputFormat::Pgm => "pgm",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = CarfacError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "raw64" => Ok(OutputFormat::Raw64),
            "pgm" => Ok(OutputFormat::Pgm),
            other => Err(CarfacError::Usage(format!("unknown output format '{other}' (csv, raw64, pgm)"))),
        }
    }
}

/// One row per sample, one column per channel; the header row holds each
/// channel's CF in Hz. Values use the shortest round-tripping decimal form,
/// so [`read_csv`] recovers them bit-exactly.
pub fn write_csv<W: Write>(writer: W, plane: &Plane<f64>, cf_hz: &[f64]) -> Result<()> {
    if cf_hz.len() != plane.n_ch() {
        return Err(CarfacError::Usage(format!(
            "{} CF labels for a {}-channel plane",
            cf_hz.len(),
            plane.n_ch()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(cf_hz.iter().map(|f| f.to_string()))?;
    for t in 0..plane.n_samples() {
        w.write_record(plane.row(t).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a CSV written by [`write_csv`], returning the plane and CF labels.
pub fn read_csv<R: Read>(reader: R) -> Result<(Plane<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|e| CarfacError::Format { kind: "csv", detail: format!("'{s}': {e}") })
    };
    let cf: Vec<f64> = r.headers()?.iter().map(parse).collect::<Result<_>>()?;
    let mut data = Vec::new();
    let mut n_samples = 0;
    for rec in r.records() {
        let rec = rec?;
        for field in rec.iter() {
            data.push(parse(field)?);
        }
        n_samples += 1;
    }
    let plane = Plane::from_vec(n_samples, cf.len(), data)?;
    Ok((plane, cf))
}

/// Sixteen-byte header (magic, u32 n_ch, u32 n_samples), then little-endian
/// f64 samples in samples × channels order.
pub fn write_raw64<W: Write>(mut writer: W, plane: &Plane<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * plane.data().len());
    buf.extend_from_slice(RAW64_MAGIC);
    buf.extend_from_slice(&(plane.n_ch() as u32).to_le_bytes());
    buf.extend_from_slice(&(plane.n_samples() as u32).to_le_bytes());
    for x in plane.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

pub fn read_raw64_bytes(bytes: &[u8]) -> Result<Plane<f64>> {
    let err = |detail: String| CarfacError::Format { kind: "raw64", detail };
    if bytes.len() < 16 || &bytes[..8] != RAW64_MAGIC {
        return Err(err("missing raw64 header".into()));
    }
    let n_ch = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n_samples = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * n_ch * n_samples {
        return Err(err(format!("{} payload bytes for {n_samples} x {n_ch} values", body.len())));
    }
    let data = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Plane::from_vec(n_samples, n_ch, data)
}

pub fn read_raw64(path: &Path) -> Result<Plane<f64>> {
    read_raw64_bytes(&std::fs::read(path)?)
}

/// Binary PGM with one image row per channel (channel 0, the base, on top)
/// and one column per time frame. `frames` is a frames × channels plane of
/// values already scaled to [0, 1]; values outside are clipped.
pub fn write_pgm<W: Write>(writer: W, frames: &Plane<f64>) -> Result<()> {
    let (width, height) = (frames.n_samples(), frames.n_ch());
    let mut w = BufWriter::new(writer);
    write!(w, "P5\n{width} {height}\n255\n")?;
    let mut row = vec![0u8; width];
    for ch in 0..height {
        for (t, px) in row.iter_mut().enumerate() {
            let v = frames.get(t, ch);
            *px = if v.is_nan() { 0 } else { (v.clamp(0.0, 1.0) * 255.0).round() as u8 };
        }
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a plane to `path` in `format`. For PGM the plane is normalized by
/// its maximum.
pub fn write_plane_file(path: &Path, plane: &Plane<f64>, cf_hz: &[f64], format: OutputFormat) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(f, plane, cf_hz),
        OutputFormat::Raw64 => write_raw64(f, plane),
        OutputFormat::Pgm => {
            let peak = plane.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
            let scaled = plane.data().iter().map(|x| x.abs() * scale).collect();
            write_pgm(f, &Plane::from_vec(plane.n_samples(), plane.n_ch(), scaled)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane_strategy() -> impl Strategy<Value = Plane<f64>> {
        (0usize..20, 1usize..8).prop_flat_map(|(n, c)| {
            proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), n * c)
                .prop_map(move |d| Plane::from_vec(n, c, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(p in plane_strategy()) {
            let cf: Vec<f64> = (0..p.n_ch()).map(|c| 1000.0 / (c as f64 + 1.0)).collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &p, &cf).unwrap();
            let (q, cf2) = read_csv(&buf[..]).unwrap();
            prop_assert_eq!(q.n_ch(), p.n_ch());
            prop_assert_eq!(q.n_samples(), p.n_samples());
            for (a, b) in p.data().iter().zip(q.data()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(cf, cf2);
        }

        #[test]
        fn raw64_round_trip_is_bit_exact(p in plane_strategy()) {
            let mut buf = Vec::new();
            write_raw64(&mut buf, &p).unwrap();
            prop_assert_eq!(buf.len(), 16 + 8 * p.data().len());
            let q = read_raw64_bytes(&buf).unwrap();
            prop_assert_eq!(p, q);
        }
    }

    #[test]
    fn raw64_header_layout() {
        let p = Plane::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut buf = Vec::new();
        write_raw64(&mut buf, &p).unwrap();
        assert_eq!(&buf[..8], RAW64_MAGIC);
        assert_eq!(&buf[8..12], &3u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&buf[24..32], &2.0f64.to_le_bytes());
    }

    #[test]
    fn raw64_rejects_bad_input() {
        assert!(read_raw64_bytes(b"short").is_err());
        let mut buf = RAW64_MAGIC.to_vec();
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1.0f64.to_le_bytes());
        assert!(read_raw64_bytes(&buf).is_err());
    }

    #[test]
    fn csv_header_holds_cfs() {
        let p = Plane::from_vec(1, 2, vec![0.5, -0.25]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &p, &[3000.5, 150.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3000.5,150\n0.5,-0.25\n");
    }

    #[test]
    fn pgm_layout() {
        let frames = Plane::from_vec(3, 2, vec![0.0, 1.0, 0.5, 2.0, -1.0, f64::NAN]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &frames).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        // row 0 = channel 0 over time, row 1 = channel 1
        assert_eq!(&buf[header.len()..], &[0, 128, 0, 255, 255, 0]);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("raw64".parse::<OutputFormat>().unwrap(), OutputFormat::Raw64);
        assert!("png".parse::<OutputFormat>().is_err());
    }
}

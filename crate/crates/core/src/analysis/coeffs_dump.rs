//! CSV tables of designed coefficients.

use std::io::Write;

use crate::design::CarfacCoeffs;
use crate::error::{CarfacError, Result};

pub const CAR_COLUMNS: [&str; 10] = ["channel", "pole_hz", "a0", "c0", "r1", "zr", "h", "g0", "g1", "g2"];

/// One row per channel with the CAR coefficients and stage-gain parabola.
pub fn write_car_csv<W: Write>(writer: W, coeffs: &CarfacCoeffs<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CAR_COLUMNS)?;
    let c = &coeffs.car;
    for ch in 0..coeffs.n_ch() {
        let vals = [coeffs.channels.pole_freqs[ch], c.a0[ch], c.c0[ch], c.r1[ch], c.zr[ch], c.h[ch], c.g0[ch], c.g1[ch], c.g2[ch]];
        let mut rec = vec![ch.to_string()];
        rec.extend(vals.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a CAR table into per-column vectors (excluding `channel`).
pub fn read_car_csv<R: std::io::Read>(reader: R) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if headers != CAR_COLUMNS {
        return Err(CarfacError::Format { kind: "coefficient csv", detail: format!("unexpected columns {headers:?}") });
    }
    let mut cols: Vec<(String, Vec<f64>)> = headers[1..].iter().map(|h| (h.clone(), Vec::new())).collect();
    for rec in r.records() {
        let rec = rec?;
        for (i, field) in rec.iter().skip(1).enumerate() {
            let v = field.parse().map_err(|_| CarfacError::Format { kind: "coefficient csv", detail: format!("'{field}'") })?;
            cols[i].1.push(v);
        }
    }
    Ok(cols)
}

/// One row per AGC stage.
pub fn write_agc_csv<W: Write>(writer: W, coeffs: &CarfacCoeffs<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "stage", "decimation", "total_decimation", "epsilon", "tap_left", "tap_mid", "tap_right", "n_iterations",
        "stage_gain", "mix_coeff", "detect_scale",
    ])?;
    for (k, s) in coeffs.agc.stages.iter().enumerate() {
        w.write_record([
            k.to_string(),
            s.decimation.to_string(),
            s.total_decimation.to_string(),
            s.epsilon.to_string(),
            s.taps.left.to_string(),
            s.taps.mid.to_string(),
            s.taps.right.to_string(),
            s.n_iterations.to_string(),
            s.stage_gain.to_string(),
            s.mix_coeff.to_string(),
            coeffs.agc.detect_scale.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `name,value` rows for the IHC variant in use.
pub fn write_ihc_csv<W: Write>(writer: W, coeffs: &CarfacCoeffs<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["name", "value"])?;
    w.write_record(["variant", coeffs.ihc.variant().name()])?;
    for (name, v) in coeffs.ihc.rates() {
        w.write_record([name.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

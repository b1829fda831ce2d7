//! Curve CSV: `tau_fs,p20,p20_err,p02,p02_err,p11,p11_err`.
//!
//! Values are written in shortest round-trip form, so reading a file back
//! reproduces the numbers exactly.

use std::io::{Read, Write};

use homsim_core::analysis::EstimatedPoint;
use homsim_core::interference::InterferenceCurve;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = ["tau_fs", "p20", "p20_err", "p02", "p02_err", "p11", "p11_err"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub tau_fs: f64,
    pub p20: f64,
    pub p20_err: f64,
    pub p02: f64,
    pub p02_err: f64,
    pub p11: f64,
    pub p11_err: f64,
}

impl From<&EstimatedPoint> for CurveRow {
    fn from(p: &EstimatedPoint) -> Self {
        CurveRow {
            tau_fs: p.tau_fs,
            p20: p.p20,
            p20_err: p.p20_err,
            p02: p.p02,
            p02_err: p.p02_err,
            p11: p.p11,
            p11_err: p.p11_err,
        }
    }
}

/// Theory rows; the errors are zero.
pub fn theory_rows(curve: &InterferenceCurve) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| CurveRow {
            tau_fs: p.tau_fs,
            p20: p.p20,
            p20_err: 0.0,
            p02: p.p02,
            p02_err: 0.0,
            p11: p.p11,
            p11_err: 0.0,
        })
        .collect()
}

pub fn write<W: Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(true).terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    if rows.is_empty() {
        out.write_record(HEADER)?;
    }
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn to_bytes(rows: &[CurveRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write(rows, &mut out).expect("writing to memory");
    out
}

/// Reads a curve; the header must match exactly.
pub fn read<R: Read>(r: R) -> Result<Vec<CurveRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::parse(1, format!("expected columns {}", HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let row: CurveRow = row.map_err(|e| Error::parse(i + 2, e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

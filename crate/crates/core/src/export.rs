//! CSV and PGM writers and readers. Numbers are written with nine
//! significant digits in scientific notation so output is byte-stable.

use std::io::{Read, Write};

use crate::compensator::CompensationPlan;
use crate::error::{Error, Result};
use crate::memory::{DecayCurve, Heatmap};
use crate::slm::PhaseMask;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("I/O: {e}"))
}

/// Header row plus one record per row of numbers.
pub fn write_table<W: Write>(
    out: W,
    headers: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    write_records(
        out,
        headers,
        rows.into_iter()
            .map(|row| row.iter().map(|&x| fmt_num(x)).collect()),
    )
}

/// Header row plus pre-formatted records.
pub fn write_records<W: Write>(
    out: W,
    headers: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_samples<W: Write>(out: W, samples: &[(f64, f64)]) -> Result<()> {
    write_table(
        out,
        &["t_us", "eta"],
        samples.iter().map(|&(t, e)| vec![t, e]),
    )
}

pub fn write_decay_curve<W: Write>(out: W, curve: &DecayCurve) -> Result<()> {
    write_samples(out, &curve.samples)
}

pub fn write_heatmap<W: Write>(out: W, map: &Heatmap) -> Result<()> {
    write_table(
        out,
        &["b1_mG_per_cm", "b2_mG_per_cm2", "tau_norm"],
        map.entries().map(|(a, b, t)| vec![a, b, t]),
    )
}

pub fn write_mask<W: Write>(out: W, mask: &PhaseMask) -> Result<()> {
    write_table(
        out,
        &["z_prime", "m_radians"],
        mask.m
            .iter()
            .enumerate()
            .map(|(i, &m)| vec![mask.grid.z(i), m]),
    )
}

/// Columns cycle, intensity_mW_mm2, q. Empty when the plan has no schedule.
pub fn write_schedule<W: Write>(out: W, plan: &CompensationPlan) -> Result<()> {
    let rows = plan.temporal_schedule.as_deref().unwrap_or_default().iter();
    write_records(
        out,
        &["cycle", "intensity_mW_mm2", "q"],
        rows.map(|e| vec![e.cycle.to_string(), fmt_num(e.intensity), fmt_num(e.q)]),
    )
}

/// Binary 8-bit graymap of the wrapped phase, 0..2π → 0..255, with every
/// row identical.
pub fn mask_pgm(mask: &PhaseMask, rows: usize) -> Vec<u8> {
    let row: Vec<u8> = mask
        .wrapped_phase()
        .iter()
        .map(|p| {
            (p / (2.0 * std::f64::consts::PI) * 256.0)
                .floor()
                .clamp(0.0, 255.0) as u8
        })
        .collect();
    let mut out = format!("P5\n{} {}\n255\n", row.len(), rows).into_bytes();
    for _ in 0..rows {
        out.extend_from_slice(&row);
    }
    out
}

/// Reads numeric columns from a CSV with a header row. `columns` selects by
/// header name; every record must parse.
pub fn read_columns<R: Read>(input: R, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r.headers().map_err(io_err)?.clone();
    let idx = columns
        .iter()
        .map(|c| {
            headers.iter().position(|h| h == *c).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "missing column '{c}' (have {:?})",
                    headers.iter().collect::<Vec<_>>()
                ))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let row = idx
            .iter()
            .map(|&i| {
                let field = rec.get(i).unwrap_or("");
                field.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("row {}: '{field}' is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Two named columns as pairs.
pub fn read_pairs<R: Read>(input: R, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    Ok(read_columns(input, &[x, y])?
        .into_iter()
        .map(|r| (r[0], r[1]))
        .collect())
}

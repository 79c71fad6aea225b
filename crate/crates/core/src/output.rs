//! File formats: CSV tables, JSON fit summaries and plain-text Wigner grids.
//!
//! Wigner grid layout (one value per column, whitespace separated):
//!
//! ```text
//! # pacsim-wigner 1
//! # x_axis <nx> <x_0> ... <x_{nx-1}>
//! # p_axis <np> <p_0> ... <p_{np-1}>
//! <W(x_0,p_0)> ... <W(x_0,p_{np-1})>
//! ...
//! ```
//!
//! Row `i` holds `W(x_i, ·)`. Lines starting with `#` are comments to most
//! loaders (`numpy.loadtxt`, gnuplot), so the body reads as a plain matrix.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{ScalingFit, WignerGrid};

pub const WIGNER_MAGIC: &str = "# pacsim-wigner 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub pattern: String,
    pub clicks: usize,
    pub probability: f64,
    /// Fidelity of the conditional signal with `|alpha, m>`, `m` = clicks.
    pub fidelity_vs_pacs_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub reference_m: u32,
    pub probability: f64,
    pub fidelity_vs_w: f64,
    pub fidelity_vs_idler_vacuum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param: String,
    pub value: f64,
    pub probability: f64,
}

/// JSON summary written next to a lambda sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub stages: usize,
    pub clicks: usize,
    pub alpha: [f64; 2],
    /// Number of click patterns with exactly `clicks` detectors firing.
    pub pattern_count: f64,
    /// `m! L_m(-|alpha|^2)`.
    pub pacs_norm: f64,
    /// `pattern_count * pacs_norm`: the leading-order prefactor.
    pub leading_prefactor: f64,
    pub fit: ScalingFit,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

fn write_axis(out: &mut impl Write, name: &str, axis: &[f64]) -> io::Result<()> {
    write!(out, "# {name} {}", axis.len())?;
    for v in axis {
        write!(out, " {v:e}")?;
    }
    writeln!(out)
}

pub fn write_wigner(grid: &WignerGrid, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{WIGNER_MAGIC}")?;
    write_axis(out, "x_axis", &grid.x_axis)?;
    write_axis(out, "p_axis", &grid.p_axis)?;
    for row in &grid.values {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn wigner_to_bytes(grid: &WignerGrid) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_wigner(grid, &mut buf)?;
    Ok(buf)
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn parse_axis(line: &str, name: &str) -> io::Result<Vec<f64>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some("#") || fields.next() != Some(name) {
        return Err(bad(format!("expected '# {name}' header")));
    }
    let n: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("missing axis length"))?;
    let values = fields
        .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
        .collect::<io::Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(bad(format!("{name}: header says {n} values, found {}", values.len())));
    }
    Ok(values)
}

/// Reads a grid written by [`write_wigner`]. `max_tail` is not stored and
/// comes back as zero.
pub fn read_wigner(input: impl BufRead) -> io::Result<WignerGrid> {
    let mut lines = input.lines();
    let mut next = || lines.next().transpose()?.ok_or_else(|| bad("unexpected end of file"));
    if next()?.trim_end() != WIGNER_MAGIC {
        return Err(bad("not a pacsim Wigner file"));
    }
    let x_axis = parse_axis(&next()?, "x_axis")?;
    let p_axis = parse_axis(&next()?, "p_axis")?;
    let mut values = Vec::with_capacity(x_axis.len());
    for _ in 0..x_axis.len() {
        let row = next()?
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<io::Result<Vec<_>>>()?;
        if row.len() != p_axis.len() {
            return Err(bad(format!("row has {} values, expected {}", row.len(), p_axis.len())));
        }
        values.push(row);
    }
    Ok(WignerGrid {
        x_axis,
        p_axis,
        values,
        max_tail: 0.0,
    })
}

//! Time-indexed record of simulation iterates and CSV output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded step. Norms are Euclidean differences to the previous step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub delta: Option<Vec<f64>>,
    pub dx_norm: f64,
    pub dtheta_norm: f64,
    pub ddelta_norm: Option<f64>,
}

/// Which steps get stored: all of them up to `dense_until`, then every
/// `every`-th.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decimation {
    pub dense_until: usize,
    pub every: usize,
}

impl Default for Decimation {
    fn default() -> Self {
        Self { dense_until: 1000, every: 10 }
    }
}

impl Decimation {
    pub fn keeps(&self, k: usize) -> bool {
        k <= self.dense_until || k.is_multiple_of(self.every.max(1))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

/// Diagnostic norms of one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub k: usize,
    pub dx_norm: f64,
    pub dtheta_norm: f64,
    pub ddelta_norm: Option<f64>,
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    fn has_delta(&self) -> bool {
        self.rows.first().is_some_and(|r| r.delta.is_some())
    }

    /// Full trace: `k, x_1..x_n, theta_1..theta_n, [delta_1..delta_n,]
    /// dx_norm, dtheta_norm[, ddelta_norm]`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.rows.first().map_or(0, |r| r.x.len());
        let with_delta = self.has_delta();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["k".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=n).map(|i| format!("theta_{i}")));
        if with_delta {
            header.extend((1..=n).map(|i| format!("delta_{i}")));
        }
        header.push("dx_norm".into());
        header.push("dtheta_norm".into());
        if with_delta {
            header.push("ddelta_norm".into());
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.k.to_string()];
            rec.extend(row.x.iter().copied().map(fmt));
            rec.extend(row.theta.iter().copied().map(fmt));
            if with_delta {
                rec.extend(row.delta.iter().flatten().copied().map(fmt));
            }
            rec.push(fmt(row.dx_norm));
            rec.push(fmt(row.dtheta_norm));
            if with_delta {
                rec.push(fmt_opt(row.ddelta_norm));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Diagnostics table `k, dx_norm, dtheta_norm, ddelta_norm`.
    pub fn write_diagnostics<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["k", "dx_norm", "dtheta_norm", "ddelta_norm"])?;
        for row in &self.rows {
            w.write_record([row.k.to_string(), fmt(row.dx_norm), fmt(row.dtheta_norm), fmt_opt(row.ddelta_norm)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes the diagnostics table of a nonempty trace to `path`.
pub fn emit_diagnostics(trace: &Trace, path: &Path) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::InvalidParams("cannot emit diagnostics for an empty trace".into()));
    }
    let file = BufWriter::new(File::create(path)?);
    trace.write_diagnostics(file)
}

/// Parses a diagnostics table written by [`Trace::write_diagnostics`].
pub fn read_diagnostics<R: Read>(reader: R) -> Result<Vec<DiagnosticRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::NumericalFailure(format!("bad number {s:?}: {e}")))
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rec.len() });
        }
        let k = rec[0].parse::<usize>().map_err(|e| Error::NumericalFailure(e.to_string()))?;
        let ddelta = if rec[3].is_empty() { None } else { Some(parse(&rec[3])?) };
        out.push(DiagnosticRow { k, dx_norm: parse(&rec[1])?, dtheta_norm: parse(&rec[2])?, ddelta_norm: ddelta });
    }
    Ok(out)
}

//! CSV writers with fixed column order.
//!
//! Every file starts with a `# units:` comment line followed by the header
//! row. Floats use Rust's shortest round-trip exponent form, so identical
//! values always produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use casimir_core::casimir::{BreakdownRow, NodeSample};
use casimir_core::{bem::Formulation, Precision};

pub const UNITS_LINE: &str =
    "# units: lengths L; kappa 1/L; energy integrand 1; force integrand 1/L; energy hbar*c/L; force hbar*c/L^2";

pub const SPECTRUM_HEADER: [&str; 5] = ["kappa", "integrand", "formulation", "precision", "condition_estimate"];
pub const BREAKDOWN_HEADER: [&str; 7] =
    ["kappa", "integrand", "formulation", "precision", "condition_estimate", "relative_error", "singular"];
pub const SWEEP_HEADER: [&str; 3] = ["separation", "energy", "force"];

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One spectrum series: which integrand and which solver settings produced it.
pub struct Series<'a> {
    pub formulation: Formulation,
    pub precision: Precision,
    pub samples: &'a [NodeSample],
    pub force: bool,
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{UNITS_LINE}")?;
    Ok(csv::Writer::from_writer(w))
}

pub fn write_spectrum(path: &Path, series: &[Series<'_>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SPECTRUM_HEADER)?;
    for s in series {
        for n in s.samples {
            let value = if s.force { n.force.unwrap_or(f64::NAN) } else { n.energy };
            w.write_record([
                num(n.kappa),
                num(value),
                s.formulation.to_string(),
                s.precision.to_string(),
                opt(n.condition_estimate),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_breakdown(path: &Path, rows: &[BreakdownRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(BREAKDOWN_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.kappa),
            num(r.integrand),
            r.formulation.to_string(),
            r.precision.to_string(),
            num(r.condition_estimate),
            num(r.relative_error),
            r.singular.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for (s, e, f) in rows {
        w.write_record([num(*s), num(*e), num(*f)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by this module (units line skipped).
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

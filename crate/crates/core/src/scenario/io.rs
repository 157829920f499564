//! Trace and field persistence: CSV with a `#`-comment header carrying
//! the config digest. All indices written to disk are 1-based.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::recovery::SimulationTrace;
use crate::scalar::Real;
use crate::scenario::metrics::CellReport;

/// `iteration,max_normalized_rmse` with an optional `algorithm` column
/// when more than one trace is written.
pub fn trace_csv<T: Real>(traces: &[&SimulationTrace<T>], digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scenario_digest: {}", digest);
    if traces.len() == 1 {
        let _ = writeln!(out, "iteration,max_normalized_rmse");
        for (t, v) in traces[0].rmse.iter().enumerate() {
            let _ = writeln!(out, "{},{}", t, v);
        }
    } else {
        let _ = writeln!(out, "iteration,max_normalized_rmse,algorithm");
        for trace in traces {
            for (t, v) in trace.rmse.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", t, v, trace.algorithm.as_str());
            }
        }
    }
    out
}

/// `row,col,true,recovered,abs_error`, rows and columns 1-based.
pub fn field_csv<T: Real>(cells: &[CellReport<T>], digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scenario_digest: {}", digest);
    let _ = writeln!(out, "row,col,true,recovered,abs_error");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.row + 1,
            c.col + 1,
            c.truth,
            c.recovered,
            c.abs_error
        );
    }
    out
}

/// Loads an explicit field file: `expected` comma- or line-separated
/// finite values, `#` comments ignored.
pub fn load_field_file<T: Real>(path: &Path, expected: usize) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(expected);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| {
                Error::Config(format!(
                    "{}:{}: '{}' is not a number",
                    path.display(),
                    lineno + 1,
                    tok
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Config(format!(
                    "{}:{}: field value must be finite",
                    path.display(),
                    lineno + 1
                )));
            }
            values.push(crate::scalar::real::<T>(v));
        }
    }
    if values.len() != expected {
        return Err(Error::Config(format!(
            "{}: found {} field values, expected {}",
            path.display(),
            values.len(),
            expected
        )));
    }
    Ok(values)
}

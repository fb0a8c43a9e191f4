//! CSV and image emission shared by the commands.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! given run produces byte-identical files every time.

use std::path::Path;

use vpal_core::problems::{write_f64le, write_pgm};
use vpal_core::solver::SolveResult;

use crate::error::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Per-iteration solve log: one row per outer state, starting at the
/// initial zero iterate, with cumulative operator-application counts.
pub fn write_iteration_csv(path: &Path, result: &SolveResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "objective",
        "relative_error",
        "relative_residual",
        "forward_count",
        "adjoint_count",
    ])?;
    for k in 0..result.objective_history.len() {
        let error = result
            .error_history
            .as_ref()
            .map(|h| fmt_f64(h[k]))
            .unwrap_or_default();
        let counts = result.matvec_history[k];
        w.write_record([
            k.to_string(),
            fmt_f64(result.objective_history[k]),
            error,
            fmt_f64(result.residual_history[k]),
            (counts.a_forward + counts.d_forward).to_string(),
            (counts.a_adjoint + counts.d_adjoint).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the reconstruction as a PGM preview plus lossless raw floats,
/// when the unknown vector is an image of the configured side length.
pub fn write_reconstruction(dir: &Path, n_side: usize, x: &[f64]) -> Result<(), CliError> {
    if x.len() != n_side * n_side {
        return Ok(());
    }
    write_pgm(&dir.join("reconstruction.pgm"), n_side, n_side, x)?;
    write_f64le(&dir.join("reconstruction.f64"), n_side, n_side, x)?;
    Ok(())
}

/// Final relative error of a solve, when ground truth exists.
pub fn final_error(result: &SolveResult) -> Option<f64> {
    result.error_history.as_ref().map(|h| *h.last().expect("histories are never empty"))
}

/// `Some(x)` formatted for a CSV field, `None` as an empty field.
pub fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

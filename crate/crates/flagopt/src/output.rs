//! Flat-file emission: CSV with a fixed header and JSON mirroring the same
//! fields, all floating-point values in full double precision (17
//! significant digits).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Result;

use crate::{OutputFormat, SweepReport, TrialOutcome};

/// 17 significant digits: one leading digit plus 16 after the point.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows `iter,f,grad_norm,step,elapsed_ms[,f_star,gap]`; `f` is the
/// maximization value, `gap = |f - f_star|` when a closed-form optimum
/// exists.
pub fn trajectory_csv(outcome: &TrialOutcome) -> String {
    let with_truth = outcome.f_star.is_some();
    let mut out = String::new();
    if with_truth {
        out.push_str("iter,f,grad_norm,step,elapsed_ms,f_star,gap\n");
    } else {
        out.push_str("iter,f,grad_norm,step,elapsed_ms\n");
    }
    for r in &outcome.result.trajectory {
        let f = -r.f;
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.iter,
            fmt_f64(f),
            fmt_f64(r.grad_norm),
            fmt_f64(r.step),
            fmt_f64(r.elapsed_ms)
        );
        if let Some(fs) = outcome.f_star {
            let _ = write!(out, ",{},{}", fmt_f64(fs), fmt_f64((f - fs).abs()));
        }
        out.push('\n');
    }
    out
}

/// A JSON array of row objects with the same fields as the CSV.
pub fn trajectory_json(outcome: &TrialOutcome) -> String {
    let mut out = String::from("[\n");
    let last = outcome.result.trajectory.len().saturating_sub(1);
    for (i, r) in outcome.result.trajectory.iter().enumerate() {
        let f = -r.f;
        let _ = write!(
            out,
            "  {{\"iter\": {}, \"f\": {}, \"grad_norm\": {}, \"step\": {}, \"elapsed_ms\": {}",
            r.iter,
            fmt_f64(f),
            fmt_f64(r.grad_norm),
            fmt_f64(r.step),
            fmt_f64(r.elapsed_ms)
        );
        if let Some(fs) = outcome.f_star {
            let _ = write!(
                out,
                ", \"f_star\": {}, \"gap\": {}",
                fmt_f64(fs),
                fmt_f64((f - fs).abs())
            );
        }
        out.push('}');
        if i != last {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

pub fn write_trajectory(path: &Path, outcome: &TrialOutcome, format: OutputFormat) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => trajectory_csv(outcome),
        OutputFormat::Json => trajectory_json(outcome),
    };
    fs::write(path, body)?;
    Ok(())
}

/// One row per swept configuration; the distance column is empty when the
/// problem has no closed-form truth.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "sig,mean_distance,mean_elapsed_ms,mean_iters,term_grad_tol,term_step_tol,term_max_iters\n",
    );
    for row in &report.rows {
        let dist = row.mean_distance().map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "\"{}\",{},{},{},{},{},{}",
            row.sig,
            dist,
            fmt_f64(row.mean_elapsed_ms()),
            fmt_f64(row.mean_iterations()),
            row.termination_histogram[0],
            row.termination_histogram[1],
            row.termination_histogram[2]
        );
    }
    out
}

pub fn sweep_json(report: &SweepReport) -> String {
    let mut out = String::from("[\n");
    let last = report.rows.len().saturating_sub(1);
    for (i, row) in report.rows.iter().enumerate() {
        let dist = row
            .mean_distance()
            .map(fmt_f64)
            .unwrap_or_else(|| "null".into());
        let _ = write!(
            out,
            "  {{\"sig\": \"{}\", \"mean_distance\": {}, \"mean_elapsed_ms\": {}, \"mean_iters\": {}, \"term_grad_tol\": {}, \"term_step_tol\": {}, \"term_max_iters\": {}}}",
            row.sig,
            dist,
            fmt_f64(row.mean_elapsed_ms()),
            fmt_f64(row.mean_iterations()),
            row.termination_histogram[0],
            row.termination_histogram[1],
            row.termination_histogram[2]
        );
        if i != last {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

pub fn write_sweep(path: &Path, report: &SweepReport, format: OutputFormat) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => sweep_csv(report),
        OutputFormat::Json => sweep_json(report),
    };
    fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 1e-300, -2.5e17] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}

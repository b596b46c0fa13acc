//! Trace serialization and the summary table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bregkacz::linops::mtx::format_scalar;
use bregkacz::verify::{CheckOutcome, SuiteReport};
use bregkacz::{RunOutputF64, TraceRecordF64};
use clap::ValueEnum;

pub const CSV_HEADER: &str =
    "method,epoch,rel_residual,rel_error,dual_objective,bregman,restarts_acc,restarts_rej,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

fn num(v: f64) -> String {
    format_scalar(v)
}

fn json_num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => num(x),
        _ => "null".into(),
    }
}

fn json_str(s: &str) -> String {
    serde_json::Value::from(s).to_string()
}

pub fn csv_row(r: &TraceRecordF64) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.method,
        r.epoch,
        num(r.rel_residual),
        opt(r.rel_error),
        num(r.dual_objective),
        opt(r.bregman_to_xhat),
        r.restarts_accepted,
        r.restarts_rejected,
        r.wall_ms
    )
}

pub fn jsonl_row(r: &TraceRecordF64) -> String {
    format!(
        "{{\"method\":{},\"epoch\":{},\"rel_residual\":{},\"rel_error\":{},\"dual_objective\":{},\"bregman\":{},\"restarts_acc\":{},\"restarts_rej\":{},\"wall_ms\":{}}}",
        json_str(&r.method),
        r.epoch,
        json_num(Some(r.rel_residual)),
        json_num(r.rel_error),
        json_num(Some(r.dual_objective)),
        json_num(r.bregman_to_xhat),
        r.restarts_accepted,
        r.restarts_rejected,
        r.wall_ms
    )
}

pub fn render_trace(trace: &[TraceRecordF64], format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Csv => {
            s.push_str(CSV_HEADER);
            s.push('\n');
            for r in trace {
                s.push_str(&csv_row(r));
                s.push('\n');
            }
        }
        Format::Jsonl => {
            for r in trace {
                s.push_str(&jsonl_row(r));
                s.push('\n');
            }
        }
    }
    s
}

pub fn write_trace(dir: &Path, stem: &str, trace: &[TraceRecordF64], format: Format) -> Result<()> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    fs::write(&path, render_trace(trace, format)).with_context(|| format!("writing {}", path.display()))
}

/// One summary row per run; unmet tolerance is marked with `*` on the epoch
/// count and time, as in the comparison tables.
pub struct SummaryRow {
    pub label: String,
    pub seed: u64,
    pub converged: bool,
    pub epochs: usize,
    pub seconds: f64,
    pub rel_residual: f64,
    pub rel_error: Option<f64>,
    pub restarts: (usize, usize),
}

impl SummaryRow {
    pub fn from_output(out: &RunOutputF64, seed: u64) -> Self {
        let last = out.trace.last().expect("trace has an epoch-0 row");
        Self {
            label: out.label.clone(),
            seed,
            converged: out.converged,
            epochs: out.epochs_to_tol.unwrap_or(out.epochs),
            seconds: out.wall.as_secs_f64(),
            rel_residual: last.rel_residual,
            rel_error: last.rel_error,
            restarts: (out.restarts_accepted, out.restarts_rejected),
        }
    }
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>6} {:>10} {:>10} {:>14} {:>14} {:>9}",
        "run", "seed", "epochs", "time_s", "rel_residual", "rel_error", "restarts"
    );
    for r in rows {
        let star = if r.converged { "" } else { "*" };
        let err = r.rel_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
        let restarts = format!("{}/{}", r.restarts.0, r.restarts.1);
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>10} {:>10} {:>14} {:>14} {:>9}",
            r.label,
            r.seed,
            format!("{}{star}", r.epochs),
            format!("{:.3}{star}", r.seconds),
            format!("{:.3e}", r.rel_residual),
            err,
            restarts
        );
    }
    if rows.iter().any(|r| !r.converged) {
        s.push_str("* tolerance not reached within the epoch budget\n");
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("run,seed,converged,epochs,wall_s,rel_residual,rel_error,restarts_acc,restarts_rej\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.label,
            r.seed,
            r.converged,
            r.epochs,
            num(r.seconds),
            num(r.rel_residual),
            r.rel_error.map(num).unwrap_or_default(),
            r.restarts.0,
            r.restarts.1
        );
    }
    s
}

pub fn check_json(suite: &SuiteReport, c: &CheckOutcome) -> String {
    format!(
        "{{\"suite\":{},\"check\":{},\"passed\":{},\"samples\":{},\"violations\":{},\"worst\":{},\"note\":{}}}",
        json_str(suite.suite.as_str()),
        json_str(&c.name),
        c.passed(),
        c.samples,
        c.violations,
        json_num(Some(c.worst)),
        json_str(&c.note)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(err: Option<f64>) -> TraceRecordF64 {
        TraceRecordF64 {
            method: "ARBK-5".into(),
            epoch: 3,
            rel_residual: 0.1,
            rel_error: err,
            dual_objective: -2.5,
            bregman_to_xhat: err,
            restarts_accepted: 0,
            restarts_rejected: 0,
            wall_ms: 7,
        }
    }

    #[test]
    fn csv_fields_in_order_with_empty_absent_metrics() {
        let row = csv_row(&record(None));
        let fields: Vec<_> = row.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[0], "ARBK-5");
        assert_eq!(fields[2], "1.0000000000000001e-1");
        assert_eq!(fields[3], "");
        assert_eq!(fields[5], "");
    }

    #[test]
    fn jsonl_is_valid_json_with_nulls() {
        let v: serde_json::Value = serde_json::from_str(&jsonl_row(&record(None))).unwrap();
        assert!(v["rel_error"].is_null());
        assert_eq!(v["epoch"], 3);
        let v: serde_json::Value = serde_json::from_str(&jsonl_row(&record(Some(0.25)))).unwrap();
        assert_eq!(v["rel_error"], 0.25);
    }

    #[test]
    fn star_marks_unmet_tolerance() {
        let row = |converged| SummaryRow {
            label: "BK-125".into(),
            seed: 1,
            converged,
            epochs: 10,
            seconds: 1.0,
            rel_residual: 1e-3,
            rel_error: None,
            restarts: (0, 0),
        };
        let t = summary_table(&[row(false)]);
        assert!(t.contains("10*") && t.contains("1.000*"));
        assert!(!summary_table(&[row(true)]).contains('*'));
    }
}

//! CSV trace, summary and comparison files.
//!
//! Floats are written with 17 significant digits so that reading a trace
//! back reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use bregman_core::diagnostics::{MeanStd, RunTrace, SummaryStats, TraceRow};
use thiserror::Error;

pub const TRACE_HEADER: [&str; 9] = [
    "n",
    "loss",
    "bregman_to_ref",
    "grad_norm",
    "eta_used",
    "lambda_used",
    "step_norm",
    "descent_term",
    "domain_clamp_flag",
];

pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
const NOT_REACHED: &str = "not_reached";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch in {path}: {message}")]
    SchemaMismatch { path: PathBuf, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_file_name(seed_index: u64) -> String {
    format!("trace_seed{seed_index}.csv")
}

pub fn reference_file_name(seed_index: u64) -> String {
    format!("reference_seed{seed_index}.csv")
}

/// Directory name of one sweep cell, e.g. `lambda_1.3`.
pub fn lambda_dir_name(lambda: f64) -> String {
    format!("lambda_{lambda:?}")
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn trace_csv(trace: &RunTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in &trace.rows {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.loss),
            r.bregman_to_ref.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.grad_norm),
            fmt_f64(r.eta_used),
            fmt_f64(r.lambda_used),
            fmt_f64(r.step_norm),
            fmt_f64(r.descent_term),
            u8::from(r.domain_clamp_flag).to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn read_trace(path: &Path) -> Result<RunTrace, OutputError> {
    let mismatch = |message: String| OutputError::SchemaMismatch { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(mismatch(format!("expected header {}", TRACE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let float = |k: usize| -> Result<f64, OutputError> {
            record[k]
                .parse::<f64>()
                .map_err(|_| mismatch(format!("row {i}, column {}: not a number", TRACE_HEADER[k])))
        };
        let n: u64 = record[0].parse().map_err(|_| mismatch(format!("row {i}: bad iteration index")))?;
        if n != i as u64 {
            return Err(mismatch(format!("row {i} has iteration index {n}")));
        }
        rows.push(TraceRow {
            n,
            loss: float(1)?,
            bregman_to_ref: if record[2].is_empty() { None } else { Some(float(2)?) },
            grad_norm: float(3)?,
            eta_used: float(4)?,
            lambda_used: float(5)?,
            step_norm: float(6)?,
            descent_term: float(7)?,
            domain_clamp_flag: match &record[8] {
                "0" => false,
                "1" => true,
                _ => return Err(mismatch(format!("row {i}: clamp flag must be 0 or 1"))),
            },
        });
    }
    if rows.is_empty() {
        return Err(mismatch("no rows".into()));
    }
    Ok(RunTrace { rows })
}

/// Reads every `trace_seed<i>.csv` in `dir`, ordered by seed index. All
/// traces must have the same length.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<(u64, RunTrace)>, OutputError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(index) = name.strip_prefix("trace_seed").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(index) = index.parse::<u64>() {
                found.push((index, entry.path()));
            }
        }
    }
    found.sort();
    let mut traces: Vec<(u64, RunTrace)> = Vec::with_capacity(found.len());
    for (index, path) in found {
        let trace = read_trace(&path)?;
        if let Some((_, first)) = traces.first() {
            if first.len() != trace.len() {
                return Err(OutputError::SchemaMismatch {
                    path,
                    message: format!("{} rows, other traces have {}", trace.len(), first.len()),
                });
            }
        }
        traces.push((index, trace));
    }
    Ok(traces)
}

pub fn point_csv(x: &[f64]) -> String {
    x.iter().map(|v| fmt_f64(*v) + "\n").collect()
}

fn steps_cell(steps: Option<u64>, has_target: bool) -> String {
    match (has_target, steps) {
        (false, _) => String::new(),
        (true, Some(s)) => s.to_string(),
        (true, None) => NOT_REACHED.into(),
    }
}

fn mean_std_cells(m: Option<MeanStd>, has_target: bool) -> [String; 2] {
    match (has_target, m) {
        (false, _) => [String::new(), String::new()],
        (true, Some(m)) => [fmt_f64(m.mean), fmt_f64(m.std)],
        (true, None) => [NOT_REACHED.into(), NOT_REACHED.into()],
    }
}

/// One row per seed, then `mean` and `std` rows. A single-seed summary labels
/// its std row `std_single_seed`.
pub fn summary_csv(stats: &SummaryStats, has_target: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "early_slope", "steps_to_target", "final_loss", "loss_variance"])
        .expect("in-memory write");
    for s in &stats.per_seed {
        w.write_record([
            s.seed.to_string(),
            fmt_f64(s.early_slope),
            steps_cell(s.steps_to_target, has_target),
            fmt_f64(s.final_loss),
            fmt_f64(s.loss_variance),
        ])
        .expect("in-memory write");
    }
    let [steps_mean, steps_std] = mean_std_cells(stats.steps_to_target, has_target);
    w.write_record([
        "mean".to_string(),
        fmt_f64(stats.early_slope.mean),
        steps_mean,
        fmt_f64(stats.final_loss.mean),
        fmt_f64(stats.loss_variance.mean),
    ])
    .expect("in-memory write");
    let label = if stats.std_defined { "std" } else { "std_single_seed" };
    w.write_record([
        label.to_string(),
        fmt_f64(stats.early_slope.std),
        steps_std,
        fmt_f64(stats.final_loss.std),
        fmt_f64(stats.loss_variance.std),
    ])
    .expect("in-memory write");
    finish(w)
}

pub fn comparison_csv(rows: &[(f64, SummaryStats)], has_target: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda",
        "early_slope_mean",
        "early_slope_std",
        "steps_to_target_mean",
        "steps_to_target_std",
        "final_loss_mean",
        "final_loss_std",
        "loss_variance_mean",
        "seeds",
    ])
    .expect("in-memory write");
    for (lambda, s) in rows {
        let [steps_mean, steps_std] = mean_std_cells(s.steps_to_target, has_target);
        w.write_record([
            format!("{lambda:?}"),
            fmt_f64(s.early_slope.mean),
            fmt_f64(s.early_slope.std),
            steps_mean,
            steps_std,
            fmt_f64(s.final_loss.mean),
            fmt_f64(s.final_loss.std),
            fmt_f64(s.loss_variance.mean),
            s.per_seed.len().to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

//! Executes configs: seeded runs, λ sweeps and trace-only summaries.

use std::fs;
use std::path::{Path, PathBuf};

use bregman_core::algorithms::{run_iteration, AlgorithmError, RunSpec};
use bregman_core::diagnostics::{reference_solution, DiagnosticsError, RunTrace, SummaryStats};
use bregman_core::geometry::PrimalPoint;
use bregman_core::problems::{Problem, ProblemError};
use bregman_core::relaxation::RelaxationSchedule;
use bregman_core::streams::derive_seed;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, OutputError, COMPARISON_FILE, SUMMARY_FILE};

/// Tolerance of reference solves.
pub const REFERENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("problem generation failed: {0}")]
    Problem(#[from] ProblemError),
    #[error("seed {seed_index}: {source}")]
    Numerical {
        seed_index: u64,
        #[source]
        source: AlgorithmError,
    },
    #[error("reference solution for seed {seed_index}: {source}")]
    Reference {
        seed_index: u64,
        #[source]
        source: DiagnosticsError,
    },
    #[error("summary: {0}")]
    Summary(#[source] DiagnosticsError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    /// 2 for configuration and input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Problem(_) | RunError::Usage(_) => 2,
            RunError::Output(OutputError::SchemaMismatch { .. }) => 2,
            RunError::Numerical { .. } | RunError::Reference { .. } | RunError::Summary(_) => 3,
            RunError::Output(_) => 1,
        }
    }
}

/// Problem instance and reference point of one seed index.
pub struct SeedCell {
    pub seed_index: u64,
    pub problem: Box<dyn Problem>,
    pub reference: Option<PrimalPoint>,
}

/// Generates each seed's data (seeded by the problem seed and the seed index)
/// and, when enabled, its reference solution.
pub fn prepare_seeds(config: &RunConfig) -> Result<Vec<SeedCell>, RunError> {
    config
        .seeds
        .par_iter()
        .map(|&seed_index| {
            let problem = config.problem.build(derive_seed(config.problem.data_seed(), seed_index))?;
            let reference = if config.reference {
                Some(
                    reference_solution(problem.as_ref(), REFERENCE_TOLERANCE)
                        .map_err(|source| RunError::Reference { seed_index, source })?,
                )
            } else {
                None
            };
            Ok(SeedCell { seed_index, problem, reference })
        })
        .collect()
}

/// Runs every seed of `config` under `schedule`.
pub fn run_cells(
    config: &RunConfig,
    cells: &[SeedCell],
    schedule: RelaxationSchedule,
) -> Result<Vec<(u64, RunTrace)>, RunError> {
    let method = config.method.resolve()?;
    let step = config.step.resolve();
    cells
        .par_iter()
        .map(|cell| {
            let spec = RunSpec {
                problem: cell.problem.as_ref(),
                mirror: config.mirror(cell.problem.dim()),
                method,
                step,
                schedule,
                mode: config.relaxation.mode(),
                noise_sigma: config.noise_sigma,
                n_iters: config.n_iters,
                run_seed: derive_seed(config.master_seed, cell.seed_index),
                reference: cell.reference.as_ref(),
            };
            let outcome = run_iteration(&spec).map_err(|source| RunError::Numerical { seed_index: cell.seed_index, source })?;
            Ok((cell.seed_index, outcome.trace))
        })
        .collect()
}

pub fn summarize_traces(traces: &[(u64, RunTrace)], targets: Option<&[f64]>) -> Result<SummaryStats, RunError> {
    let pairs: Vec<(u64, &RunTrace)> = traces.iter().map(|(i, t)| (*i, t)).collect();
    let fallback = vec![f64::NEG_INFINITY; traces.len()];
    SummaryStats::from_traces(&pairs, targets.unwrap_or(&fallback)).map_err(RunError::Summary)
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)
        .map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })
        .map_err(RunError::from)
}

fn write_traces(dir: &Path, traces: &[(u64, RunTrace)]) -> Result<(), RunError> {
    ensure_dir(dir)?;
    for (index, trace) in traces {
        output::write_file(&dir.join(output::trace_file_name(*index)), &output::trace_csv(trace))?;
    }
    Ok(())
}

fn write_references(dir: &Path, cells: &[SeedCell]) -> Result<(), RunError> {
    for cell in cells {
        if let Some(z) = &cell.reference {
            output::write_file(&dir.join(output::reference_file_name(cell.seed_index)), &output::point_csv(z))?;
        }
    }
    Ok(())
}

pub struct RunReport {
    pub out: PathBuf,
    pub summary: SummaryStats,
}

/// `run`: one trace per seed plus `summary.csv`.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<RunReport, RunError> {
    let cells = prepare_seeds(config)?;
    let traces = run_cells(config, &cells, config.relaxation.schedule())?;
    write_traces(out, &traces)?;
    write_references(out, &cells)?;
    let targets = config.target_loss.map(|t| vec![t; traces.len()]);
    let summary = summarize_traces(&traces, targets.as_deref())?;
    output::write_file(&out.join(SUMMARY_FILE), &output::summary_csv(&summary, targets.is_some()))?;
    Ok(RunReport { out: out.to_path_buf(), summary })
}

pub struct SweepReport {
    pub rows: Vec<(f64, SummaryStats)>,
    pub has_target: bool,
}

/// Baseline final losses, one per seed, taken from the λ = 1 cell.
fn baseline_targets(rows: &[(f64, Vec<(u64, RunTrace)>)]) -> Option<Vec<f64>> {
    rows.iter()
        .find(|(lambda, _)| *lambda == 1.0)
        .map(|(_, traces)| traces.iter().map(|(_, t)| t.final_loss().unwrap_or(f64::NAN)).collect())
}

fn summarize_sweep(cells: &[(f64, Vec<(u64, RunTrace)>)], with_target: bool) -> Result<SweepReport, RunError> {
    let targets = if with_target {
        Some(baseline_targets(cells).ok_or_else(|| {
            RunError::Usage("steps-to-target needs lambda = 1.0 in the grid (or pass --no-target)".into())
        })?)
    } else {
        None
    };
    let rows = cells
        .iter()
        .map(|(lambda, traces)| Ok((*lambda, summarize_traces(traces, targets.as_deref())?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(SweepReport { rows, has_target: with_target })
}

/// `sweep`: the full seed set for every λ in `grid` with a constant schedule.
/// Each cell writes `lambda_<λ>/`; `comparison.csv` is written last.
pub fn cmd_sweep(config: &RunConfig, grid: &[f64], out: &Path, with_target: bool) -> Result<SweepReport, RunError> {
    if grid.is_empty() {
        return Err(RunError::Usage("the lambda grid is empty".into()));
    }
    if !config.method.resolve()?.uses_lambda() {
        return Err(RunError::Usage(format!("method {:?} takes no relaxation parameter", config.method.kind)));
    }
    if with_target && !grid.contains(&1.0) {
        return Err(RunError::Usage("steps-to-target needs lambda = 1.0 in the grid (or pass --no-target)".into()));
    }
    let mode = config.relaxation.mode();
    for &lambda in grid {
        RelaxationSchedule::constant(lambda)
            .validate(mode)
            .map_err(|e| ConfigError::Invalid { field: "grid", message: e.to_string() })?;
    }
    let seeds = prepare_seeds(config)?;
    ensure_dir(out)?;
    write_references(out, &seeds)?;
    let cells = grid
        .par_iter()
        .map(|&lambda| {
            let traces = run_cells(config, &seeds, RelaxationSchedule::constant(lambda))?;
            write_traces(&out.join(output::lambda_dir_name(lambda)), &traces)?;
            Ok((lambda, traces))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let report = summarize_sweep(&cells, with_target)?;
    write_sweep_files(out, &report)?;
    Ok(report)
}

fn write_sweep_files(out: &Path, report: &SweepReport) -> Result<(), RunError> {
    for (lambda, stats) in &report.rows {
        let dir = out.join(output::lambda_dir_name(*lambda));
        output::write_file(&dir.join(SUMMARY_FILE), &output::summary_csv(stats, report.has_target))?;
    }
    output::write_file(&out.join(COMPARISON_FILE), &output::comparison_csv(&report.rows, report.has_target))?;
    Ok(())
}

/// What `summarize` found and recomputed.
pub enum Summarized {
    Run { csv: String },
    Sweep { csv: String, summaries: Vec<(f64, String)> },
}

fn sweep_dirs(dir: &Path) -> Result<Vec<(f64, PathBuf)>, RunError> {
    let mut found = Vec::new();
    let entries = fs::read_dir(dir).map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })?;
    for entry in entries {
        let entry = entry.map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(lambda) = name.strip_prefix("lambda_").and_then(|s| s.parse::<f64>().ok()) {
            if entry.path().is_dir() {
                found.push((lambda, entry.path()));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found)
}

/// `summarize`: recomputes summaries from trace files alone. A directory of
/// `lambda_*` cells is treated as a sweep; its steps-to-target baseline is
/// the `lambda_1.0` cell. A plain trace directory uses `target_loss` if given.
pub fn cmd_summarize(dir: &Path, target_loss: Option<f64>, with_target: bool) -> Result<Summarized, RunError> {
    let cells = sweep_dirs(dir)?;
    if cells.is_empty() {
        let traces = output::read_trace_dir(dir)?;
        if traces.is_empty() {
            return Err(RunError::Usage(format!("no trace files in {}", dir.display())));
        }
        let targets = target_loss.map(|t| vec![t; traces.len()]);
        let stats = summarize_traces(&traces, targets.as_deref())?;
        return Ok(Summarized::Run { csv: output::summary_csv(&stats, targets.is_some()) });
    }
    let mut loaded = Vec::with_capacity(cells.len());
    for (lambda, path) in cells {
        let traces = output::read_trace_dir(&path)?;
        if traces.is_empty() {
            return Err(RunError::Usage(format!("no trace files in {}", path.display())));
        }
        loaded.push((lambda, traces));
    }
    let with_target = with_target && loaded.iter().any(|(l, _)| *l == 1.0);
    let report = summarize_sweep(&loaded, with_target)?;
    let summaries = report
        .rows
        .iter()
        .map(|(l, s)| (*l, output::summary_csv(s, report.has_target)))
        .collect();
    Ok(Summarized::Sweep { csv: output::comparison_csv(&report.rows, report.has_target), summaries })
}

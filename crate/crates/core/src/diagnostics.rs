//! Trace analysis: the reported metrics (early slope, steps-to-target, final
//! loss, late-run variance), Bregman–Fejér monotonicity checks on
//! seed-averaged distances, geometric rate fitting, a numerical
//! Robbins–Siegmund check, and high-accuracy reference solutions.

use std::ops::Range;

use thiserror::Error;

use crate::geometry::{dot, DualVector, GeometryError, PrimalPoint};
use crate::problems::Problem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("loss {value:e} at row {index} is not positive; log-slope undefined")]
    NonPositiveLoss { index: usize, value: f64 },
    #[error("trace has {rows} rows, need at least {needed}")]
    TooShort { rows: usize, needed: usize },
    #[error("trace {trace} has no Bregman distance to a reference point")]
    MissingReference { trace: usize },
    #[error("traces have different lengths ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("Robbins-Siegmund inequality violated at index {index}")]
    InequalityViolated { index: usize },
    #[error("reference solve stopped after {iterations} iterations at residual {achieved:e}")]
    NoConvergence { iterations: usize, achieved: f64 },
    #[error("no reference solver for problem {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One iteration of a run. Row 0 is the initial point; row n ≥ 1 describes
/// the step G_{n−1} → G_n.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: u64,
    pub loss: f64,
    /// D_φ(z*, G_n).
    pub bregman_to_ref: Option<f64>,
    /// Dual norm of the (sampled) gradient that produced this row.
    pub grad_norm: f64,
    pub eta_used: f64,
    pub lambda_used: f64,
    /// ‖G_n − G_{n−1}‖.
    pub step_norm: f64,
    /// Θ_n = U_n‖u_n*‖² for half-space steps, 0 otherwise.
    pub descent_term: f64,
    pub domain_clamp_flag: bool,
}

impl TraceRow {
    pub fn initial(loss: f64, bregman_to_ref: Option<f64>) -> Self {
        Self {
            n: 0,
            loss,
            bregman_to_ref,
            grad_norm: 0.0,
            eta_used: 0.0,
            lambda_used: 0.0,
            step_norm: 0.0,
            descent_term: 0.0,
            domain_clamp_flag: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss).collect()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    pub fn bregman(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.bregman_to_ref).collect()
    }

    /// Trace whose `loss` column is the given sequence, indexed from 0.
    pub fn from_losses(losses: &[f64]) -> Self {
        Self {
            rows: losses
                .iter()
                .enumerate()
                .map(|(n, &l)| TraceRow { n: n as u64, ..TraceRow::initial(l, None) })
                .collect(),
        }
    }

    /// Trace whose Bregman column is the given sequence (loss mirrors it).
    pub fn from_distances(distances: &[f64]) -> Self {
        Self {
            rows: distances
                .iter()
                .enumerate()
                .map(|(n, &d)| TraceRow { n: n as u64, ..TraceRow::initial(d, Some(d)) })
                .collect(),
        }
    }
}

/// Ordinary least-squares fit y = a + b·x; returns (slope, r²). r² is 1 for
/// a perfectly flat series.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

fn log_series(values: impl Iterator<Item = (usize, f64)>) -> Result<Vec<f64>, DiagnosticsError> {
    values
        .map(|(index, value)| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(DiagnosticsError::NonPositiveLoss { index, value })
            }
        })
        .collect()
}

/// Least-squares slope of log(loss) against n over rows 0..=k.
pub fn early_slope(trace: &RunTrace, k: usize) -> Result<f64, DiagnosticsError> {
    if trace.len() < k + 1 {
        return Err(DiagnosticsError::TooShort { rows: trace.len(), needed: k + 1 });
    }
    let window = &trace.rows[..=k];
    let logs = log_series(window.iter().enumerate().map(|(i, r)| (i, r.loss)))?;
    let ns: Vec<f64> = window.iter().map(|r| r.n as f64).collect();
    Ok(linear_fit(&ns, &logs).0)
}

/// First iteration index whose loss is ≤ `target_loss`.
pub fn steps_to_target(trace: &RunTrace, target_loss: f64) -> Option<u64> {
    trace.rows.iter().find(|r| r.loss <= target_loss).map(|r| r.n)
}

/// Population variance of the loss over the final quarter of the run.
pub fn loss_variance(trace: &RunTrace) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    let start = (trace.len() * 3) / 4;
    let tail: Vec<f64> = trace.rows[start..].iter().map(|r| r.loss).collect();
    let m = tail.iter().sum::<f64>() / tail.len() as f64;
    tail.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / tail.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FejerReport {
    /// Seed-averaged D̄_n.
    pub averaged: Vec<f64>,
    /// Indices n with D̄_{n+1} > D̄_n + slack.
    pub violations: Vec<usize>,
    /// Per-seed violation counts; advisory only, the inequality holds in
    /// conditional expectation rather than pathwise.
    pub per_seed_violations: Vec<usize>,
}

impl FejerReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn count_increases(series: &[f64], slack: f64) -> Vec<usize> {
    series
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + slack)
        .map(|(i, _)| i)
        .collect()
}

pub fn fejer_check(traces: &[RunTrace], slack: f64) -> Result<FejerReport, DiagnosticsError> {
    let series: Vec<Vec<f64>> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| t.bregman().ok_or(DiagnosticsError::MissingReference { trace: i }))
        .collect::<Result<_, _>>()?;
    let len = series.first().map_or(0, Vec::len);
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(DiagnosticsError::LengthMismatch { expected: len, found: bad.len() });
    }
    let averaged: Vec<f64> = (0..len)
        .map(|n| series.iter().map(|s| s[n]).sum::<f64>() / series.len() as f64)
        .collect();
    Ok(FejerReport {
        violations: count_increases(&averaged, slack),
        per_seed_violations: series.iter().map(|s| count_increases(s, slack).len()).collect(),
        averaged,
    })
}

/// Minimum r² for accepting a geometric fit.
pub const MIN_RATE_R2: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// exp(slope of log D_n); `None` when the fit is rejected (r² below
    /// [`MIN_RATE_R2`] or an increasing sequence).
    pub chi_hat: Option<f64>,
    pub r_squared: f64,
    pub window: Range<usize>,
}

/// Fits log D_n = a + n·log χ over the rows in `window`.
pub fn geometric_rate_fit(trace: &RunTrace, window: Range<usize>) -> Result<RateFit, DiagnosticsError> {
    if window.end > trace.len() || window.len() < 2 {
        return Err(DiagnosticsError::TooShort { rows: trace.len(), needed: window.end.max(2) });
    }
    let rows = &trace.rows[window.clone()];
    let values: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.bregman_to_ref
                .map(|d| (window.start + i, d))
                .ok_or(DiagnosticsError::MissingReference { trace: 0 })
        })
        .collect::<Result<_, _>>()?;
    let logs = log_series(values.into_iter())?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let (slope, r_squared) = linear_fit(&ns, &logs);
    let chi = slope.exp();
    let chi_hat = (r_squared >= MIN_RATE_R2 && chi <= 1.0).then_some(chi);
    Ok(RateFit { chi_hat, r_squared, window })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobbinsSiegmundOptions {
    /// Caller-supplied bounds on the partial sums of α and β.
    pub alpha_sum_cap: f64,
    pub beta_sum_cap: f64,
    /// Rounding slack in the per-step inequality, relative to 1 + |u_n|.
    pub inequality_tol: f64,
    /// Tolerance for the tail checks (oscillation of u, growth of Σθ).
    pub tail_tol: f64,
    /// Fraction of the sequence treated as its tail.
    pub tail_fraction: f64,
}

impl Default for RobbinsSiegmundOptions {
    fn default() -> Self {
        Self {
            alpha_sum_cap: f64::INFINITY,
            beta_sum_cap: f64::INFINITY,
            inequality_tol: 1e-12,
            tail_tol: 1e-8,
            tail_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobbinsSiegmundReport {
    pub alpha_sum: f64,
    pub beta_sum: f64,
    pub theta_sum: f64,
    pub sums_within_caps: bool,
    /// max − min of u over the tail is below the tolerance.
    pub u_converged: bool,
    pub u_last: f64,
    /// Σθ gained less than tail_tol·max(1, Σθ) over the tail.
    pub theta_sum_stabilized: bool,
}

/// Checks u_{n+1} ≤ (1 + α_n)u_n − θ_n + β_n step by step, then inspects the
/// tails for the corollary's conclusion (u converges, Σθ finite).
pub fn robbins_siegmund_verify(
    u: &[f64],
    alpha: &[f64],
    theta: &[f64],
    beta: &[f64],
    options: RobbinsSiegmundOptions,
) -> Result<RobbinsSiegmundReport, DiagnosticsError> {
    let steps = u.len().saturating_sub(1);
    for s in [alpha, theta, beta] {
        if s.len() < steps {
            return Err(DiagnosticsError::LengthMismatch { expected: steps, found: s.len() });
        }
    }
    for n in 0..steps {
        let bound = (1.0 + alpha[n]) * u[n] - theta[n] + beta[n];
        if u[n + 1] > bound + options.inequality_tol * (1.0 + u[n].abs()) {
            return Err(DiagnosticsError::InequalityViolated { index: n });
        }
    }
    let alpha_sum: f64 = alpha[..steps].iter().sum();
    let beta_sum: f64 = beta[..steps].iter().sum();
    let theta_sum: f64 = theta[..steps].iter().sum();
    let tail_start = ((1.0 - options.tail_fraction) * u.len() as f64).floor() as usize;
    let tail = &u[tail_start.min(u.len().saturating_sub(1))..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let theta_tail: f64 = theta[tail_start.min(steps)..steps].iter().sum();
    Ok(RobbinsSiegmundReport {
        alpha_sum,
        beta_sum,
        theta_sum,
        sums_within_caps: alpha_sum <= options.alpha_sum_cap && beta_sum <= options.beta_sum_cap,
        u_converged: hi - lo < options.tail_tol,
        u_last: u.last().copied().unwrap_or(f64::NAN),
        theta_sum_stabilized: theta_tail <= options.tail_tol * theta_sum.max(1.0),
    })
}

/// Iteration cap for [`reference_solution`].
pub const REFERENCE_MAX_ITERS: usize = 200_000;

/// A high-accuracy minimizer z*.
///
/// Closed-form solutions are returned as is. Otherwise a deterministic
/// full-gradient (proximal, when the problem carries an ℓ1 term) iteration
/// runs with step halving until the gradient mapping has norm ≤ `tolerance`.
pub fn reference_solution(problem: &dyn Problem, tolerance: f64) -> Result<PrimalPoint, DiagnosticsError> {
    if let Some(z) = problem.closed_form_solution() {
        return Ok(z);
    }
    if problem.simplex_constrained() || problem.is_operator() {
        return Err(DiagnosticsError::Unsupported(problem.name()));
    }
    let l1 = problem.l1_weight();
    let prox = |v: f64, t: f64| v.signum() * (v.abs() - t * l1).max(0.0);
    let mut x = problem.initial_point();
    let mut g = problem.gradient(&x)?;
    let mut step = 1.0;
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_MAX_ITERS {
        // proximal-gradient candidate and its mapping norm at the current step
        let candidate = |t: f64| PrimalPoint(x.iter().zip(g.iter()).map(|(xi, gi)| prox(xi - t * gi, t)).collect());
        let mut trial = candidate(step);
        let mut g_trial = problem.gradient(&trial)?;
        loop {
            let dx: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = g_trial.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
            let dx2 = dot(&dx, &dx);
            // local curvature estimate must not exceed 1/step
            if dot(&dg, &dx) <= dx2 / step || dx2 == 0.0 {
                residual = dx2.sqrt() / step;
                break;
            }
            step *= 0.5;
            trial = candidate(step);
            g_trial = problem.gradient(&trial)?;
        }
        if residual <= tolerance {
            return Ok(x);
        }
        x = trial;
        g = g_trial;
        step *= 1.5;
    }
    Err(DiagnosticsError::NoConvergence { iterations: REFERENCE_MAX_ITERS, achieved: residual })
}

/// Norm of the proximal-gradient mapping at `x` with unit step; equals the
/// gradient norm when the problem has no ℓ1 term.
pub fn gradient_mapping_norm(problem: &dyn Problem, x: &PrimalPoint) -> Result<f64, DiagnosticsError> {
    let g: DualVector = problem.gradient(x)?;
    let l1 = problem.l1_weight();
    Ok(x.iter()
        .zip(g.iter())
        .map(|(xi, gi)| {
            let v = xi - gi;
            let p = v.signum() * (v.abs() - l1).max(0.0);
            (xi - p).powi(2)
        })
        .sum::<f64>()
        .sqrt())
}

/// Per-seed summary values.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub early_slope: f64,
    pub steps_to_target: Option<u64>,
    pub final_loss: f64,
    pub loss_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation; a single value carries std 0.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub per_seed: Vec<SeedSummary>,
    pub early_slope: MeanStd,
    /// `None` when any seed did not reach its target.
    pub steps_to_target: Option<MeanStd>,
    pub final_loss: MeanStd,
    pub loss_variance: MeanStd,
    /// False for single-seed summaries, whose std is reported as 0.
    pub std_defined: bool,
}

/// Window of the early-slope metric.
pub const EARLY_SLOPE_STEPS: usize = 20;

impl SummaryStats {
    /// Summarizes `(seed, trace)` pairs; `targets[i]` is the steps-to-target
    /// threshold for the i-th trace. The early slope uses the first
    /// min(20, len − 1) steps and is NaN for traces with a single row.
    pub fn from_traces(traces: &[(u64, &RunTrace)], targets: &[f64]) -> Result<Self, DiagnosticsError> {
        assert_eq!(traces.len(), targets.len(), "one target per trace");
        let per_seed: Vec<SeedSummary> = traces
            .iter()
            .zip(targets)
            .map(|(&(seed, trace), &target)| {
                let k = EARLY_SLOPE_STEPS.min(trace.len().saturating_sub(1));
                let slope = if k == 0 { f64::NAN } else { early_slope(trace, k)? };
                Ok(SeedSummary {
                    seed,
                    early_slope: slope,
                    steps_to_target: steps_to_target(trace, target),
                    final_loss: trace.final_loss().unwrap_or(f64::NAN),
                    loss_variance: loss_variance(trace),
                })
            })
            .collect::<Result<_, DiagnosticsError>>()?;
        let column = |f: fn(&SeedSummary) -> f64| MeanStd::of(&per_seed.iter().map(f).collect::<Vec<_>>());
        let steps: Option<Vec<f64>> = per_seed.iter().map(|s| s.steps_to_target.map(|v| v as f64)).collect();
        Ok(Self {
            early_slope: column(|s| s.early_slope),
            steps_to_target: steps.map(|v| MeanStd::of(&v)),
            final_loss: column(|s| s.final_loss),
            loss_variance: column(|s| s.loss_variance),
            std_defined: per_seed.len() >= 2,
            per_seed,
        })
    }
}

//! Relaxation parameters λ_n for bounded, over-relaxed and super-relaxed
//! iterations.
//!
//! A schedule is validated against a [`ScheduleMode`] before use:
//! `Bounded` requires every realizable λ in (0, 2], `Super` only requires the
//! analytic descent factor E[λ(2 − λ)] to be nonnegative, so individual draws
//! may exceed 2.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::streams::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelaxationSchedule {
    Constant { lambda: f64 },
    /// λ = `lambda_lo` with probability `p_lo`, else `lambda_hi`.
    TwoPoint { lambda_lo: f64, lambda_hi: f64, p_lo: f64 },
    /// Linear ramp from `start` to `end` over `ramp_steps` iterations.
    Warmup { start: f64, end: f64, ramp_steps: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Bounded,
    Super,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleMode::Bounded => f.write_str("bounded"),
            ScheduleMode::Super => f.write_str("super"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid schedule: {rule} (got {value})")]
    Invalid { rule: &'static str, value: f64 },
    #[error("{mode} mode violated: {rule} (offending value {value})")]
    ModeViolation {
        mode: ScheduleMode,
        rule: &'static str,
        value: f64,
    },
}

impl RelaxationSchedule {
    pub fn constant(lambda: f64) -> Self {
        Self::Constant { lambda }
    }

    pub fn two_point(lambda_lo: f64, lambda_hi: f64, p_lo: f64) -> Self {
        Self::TwoPoint { lambda_lo, lambda_hi, p_lo }
    }

    pub fn warmup(start: f64, end: f64, ramp_steps: u64) -> Self {
        Self::Warmup { start, end, ramp_steps }
    }

    /// Draws λ_n. Only `TwoPoint` consumes randomness, and only from the
    /// dedicated relaxation stream handed in by the caller.
    pub fn sample(&self, rng: &mut StreamRng, n: u64) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::TwoPoint { lambda_lo, lambda_hi, p_lo } => {
                if rng.random::<f64>() < p_lo {
                    lambda_lo
                } else {
                    lambda_hi
                }
            }
            Self::Warmup { .. } => self.warmup_value(n),
        }
    }

    fn warmup_value(&self, n: u64) -> f64 {
        match *self {
            Self::Warmup { start, end, ramp_steps } => {
                let frac = (n as f64 / ramp_steps as f64).min(1.0);
                start + (end - start) * frac
            }
            _ => unreachable!("warmup_value on a non-warmup schedule"),
        }
    }

    /// Analytic E[λ(2 − λ)] at iteration `n` (`n` only matters for Warmup).
    pub fn expected_descent_factor(&self, n: u64) -> f64 {
        let f = |l: f64| l * (2.0 - l);
        match *self {
            Self::Constant { lambda } => f(lambda),
            Self::TwoPoint { lambda_lo, lambda_hi, p_lo } => p_lo * f(lambda_lo) + (1.0 - p_lo) * f(lambda_hi),
            Self::Warmup { .. } => f(self.warmup_value(n)),
        }
    }

    /// Analytic E[λ].
    pub fn expected_lambda(&self, n: u64) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::TwoPoint { lambda_lo, lambda_hi, p_lo } => p_lo * lambda_lo + (1.0 - p_lo) * lambda_hi,
            Self::Warmup { .. } => self.warmup_value(n),
        }
    }

    /// Largest value any draw can take.
    pub fn max_lambda(&self) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::TwoPoint { lambda_lo, lambda_hi, p_lo } => {
                if p_lo >= 1.0 {
                    lambda_lo
                } else {
                    lambda_hi
                }
            }
            Self::Warmup { start, end, .. } => start.max(end),
        }
    }

    fn check_structure(&self) -> Result<(), ScheduleError> {
        let invalid = |rule, value| Err(ScheduleError::Invalid { rule, value });
        match *self {
            Self::Constant { lambda } => {
                if !(lambda > 0.0) {
                    return invalid("constant lambda must be > 0", lambda);
                }
            }
            Self::TwoPoint { lambda_lo, lambda_hi, p_lo } => {
                if !(lambda_lo > 0.0) {
                    return invalid("two-point lambda_lo must be > 0", lambda_lo);
                }
                if !(lambda_lo < lambda_hi) {
                    return invalid("two-point requires lambda_lo < lambda_hi", lambda_hi);
                }
                if !(0.0..=1.0).contains(&p_lo) {
                    return invalid("two-point p_lo must lie in [0, 1]", p_lo);
                }
            }
            Self::Warmup { start, end, ramp_steps } => {
                if !(start > 0.0) {
                    return invalid("warmup start must be > 0", start);
                }
                if !(start <= end) {
                    return invalid("warmup requires start <= end", end);
                }
                if !(end < 2.0) {
                    return invalid("warmup end must be < 2", end);
                }
                if ramp_steps == 0 {
                    return invalid("warmup ramp_steps must be positive", 0.0);
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self, mode: ScheduleMode) -> Result<(), ScheduleError> {
        self.check_structure()?;
        match mode {
            ScheduleMode::Bounded => {
                let max = self.max_lambda();
                if max > 2.0 {
                    return Err(ScheduleError::ModeViolation {
                        mode,
                        rule: "every realizable lambda must lie in (0, 2]",
                        value: max,
                    });
                }
            }
            ScheduleMode::Super => {
                // Warmup is increasing in n and bounded below 2, so n = 0 is the worst case
                let factor = match self {
                    Self::Warmup { start, end, .. } => {
                        let f = |l: f64| l * (2.0 - l);
                        f(*start).min(f(*end))
                    }
                    _ => self.expected_descent_factor(0),
                };
                if factor < 0.0 {
                    return Err(ScheduleError::ModeViolation {
                        mode,
                        rule: "E[lambda (2 - lambda)] must be >= 0",
                        value: factor,
                    });
                }
            }
        }
        Ok(())
    }
}

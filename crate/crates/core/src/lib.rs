//! Over-relaxed stochastic mirror descent and its relatives in Bregman
//! geometry, with the problems and diagnostics used to study them.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod diagnostics;
pub mod geometry;
pub mod problems;
pub mod relaxation;
pub mod streams;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Schedule(#[from] relaxation::ScheduleError),
    #[error(transparent)]
    Problem(#[from] problems::ProblemError),
    #[error(transparent)]
    Algorithm(#[from] algorithms::AlgorithmError),
    #[error(transparent)]
    Diagnostics(#[from] diagnostics::DiagnosticsError),
}

//! Iteration rules in Bregman geometry behind one step-driver interface.
//!
//! Every step takes the current [`OptimizerState`] by reference and returns
//! the next one. The state keeps ∇φ(iterate) cached in `dual_cache`; mirror
//! steps move that dual point and map it back with (∇φ)⁻¹. Problems
//! constrained to the simplex compose each step with a Bregman projection.
//!
//! Over-relaxed variants come in two flavors:
//! - Type A scales the dual step by λ;
//! - Type B takes the plain step to G̃ and then averages
//!   G⁺ = (1 − λ)G + λG̃ in the primal.
//!
//! In Euclidean geometry the mirror map is affine and both coincide.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::diagnostics::{RunTrace, TraceRow};
use crate::geometry::{distance, dot, DualVector, GeometryError, LegendrePotential, PotentialKind, PrimalPoint};
use crate::problems::Problem;
use crate::relaxation::{RelaxationSchedule, ScheduleError, ScheduleMode};
use crate::streams::{RunStreams, StreamRng};

/// Damping added to entropy Hessians by natural-gradient steps by default.
pub const DEFAULT_NATGRAD_DAMPING: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: u64,
        #[source]
        source: Box<AlgorithmError>,
    },
}

fn positive(name: &'static str, value: f64) -> Result<f64, AlgorithmError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AlgorithmError::InvalidParameter { name, value })
    }
}

/// The geometry an iteration runs in: a potential plus an optional simplex
/// constraint enforced by Bregman projection after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mirror {
    pub potential: LegendrePotential,
    pub simplex: bool,
}

impl Mirror {
    pub fn euclidean(dim: usize) -> Self {
        Self { potential: LegendrePotential::squared_euclidean(dim), simplex: false }
    }

    pub fn entropy_simplex(dim: usize) -> Self {
        Self { potential: LegendrePotential::negative_entropy(dim), simplex: true }
    }

    pub fn new(potential: LegendrePotential, simplex: bool) -> Self {
        Self { potential, simplex }
    }

    fn is_euclidean(&self) -> bool {
        self.potential.kind() == PotentialKind::SquaredEuclidean
    }

    /// Restores feasibility of a candidate iterate and returns it with its
    /// mirror image. `dual` is the candidate's known ∇φ image, if any; it is
    /// recomputed whenever the candidate had to move. The flag reports
    /// clamping at the entropy domain floor.
    fn settle(&self, mut x: PrimalPoint, dual: Option<DualVector>) -> Result<(PrimalPoint, DualVector, bool), AlgorithmError> {
        let phi = &self.potential;
        if self.is_euclidean() {
            if self.simplex {
                x = phi.project_simplex(&x)?;
            }
            let dual = DualVector(x.0.clone());
            return Ok((x, dual, false));
        }
        let floor = phi.domain_floor();
        let mut clamped = phi.clamp_to_domain(&mut x) || x.contains(&floor);
        if self.simplex {
            x = phi.project_simplex(&x)?;
            clamped |= x.contains(&floor);
        }
        let dual = match dual {
            Some(d) if !clamped && !self.simplex => d,
            _ => phi.gradient(&x)?,
        };
        Ok((x, dual, clamped))
    }
}

/// Bookkeeping of the most recent step, copied into trace rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecord {
    pub eta: f64,
    pub lambda: f64,
    pub grad_norm: f64,
    pub descent_term: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub iterate: PrimalPoint,
    /// ∇φ(iterate), kept in sync by every step.
    pub dual_cache: DualVector,
    /// AdaGrad / RMSProp accumulator v_n.
    pub accumulator_v: f64,
    pub step_count: u64,
    /// Mirror-prox extrapolation point G̃.
    pub extrapolation: Option<PrimalPoint>,
    pub last: StepRecord,
}

impl OptimizerState {
    /// Starts at `x0`, projected onto the simplex first when the mirror
    /// demands it.
    pub fn new(mirror: &Mirror, x0: PrimalPoint) -> Result<Self, AlgorithmError> {
        let x0 = if mirror.simplex { mirror.potential.project_simplex(&x0)? } else { x0 };
        let dual_cache = mirror.potential.gradient(&x0)?;
        Ok(Self {
            iterate: x0,
            dual_cache,
            accumulator_v: 0.0,
            step_count: 0,
            extrapolation: None,
            last: StepRecord::default(),
        })
    }

    /// max |dual_cache − ∇φ(iterate)|, relative to 1 + |∇φ(iterate)|.
    pub fn sync_error(&self, mirror: &Mirror) -> Result<f64, AlgorithmError> {
        let fresh = mirror.potential.gradient(&self.iterate)?;
        Ok(fresh
            .iter()
            .zip(self.dual_cache.iter())
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max))
    }

    fn advance(&self, iterate: PrimalPoint, dual_cache: DualVector, last: StepRecord) -> Self {
        let state = Self {
            iterate,
            dual_cache,
            accumulator_v: self.accumulator_v,
            step_count: self.step_count + 1,
            extrapolation: None,
            last,
        };
        debug_assert!(state.iterate.iter().all(|v| v.is_finite()));
        state
    }
}

/// Noisy gradient (or operator) samples g = ∇f(x) + σξ, ξ standard normal,
/// drawn from the run's noise stream.
pub struct StochasticOracle<'a> {
    problem: &'a dyn Problem,
    noise_sigma: f64,
    rng: StreamRng,
}

impl<'a> StochasticOracle<'a> {
    pub fn new(problem: &'a dyn Problem, noise_sigma: f64, rng: StreamRng) -> Self {
        assert!(noise_sigma >= 0.0, "noise_sigma must be nonnegative");
        Self { problem, noise_sigma, rng }
    }

    pub fn problem(&self) -> &'a dyn Problem {
        self.problem
    }

    pub fn mean_gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        self.problem.gradient(x)
    }

    pub fn query(&mut self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        let mut g = self.problem.gradient(x)?;
        if self.noise_sigma > 0.0 {
            for v in g.iter_mut() {
                let xi: f64 = StandardNormal.sample(&mut self.rng);
                *v += self.noise_sigma * xi;
            }
        }
        Ok(g)
    }

    /// Draws a uniform index below `len` from the noise stream.
    pub fn sample_index(&mut self, len: usize) -> usize {
        use rand::Rng;
        self.rng.random_range(0..len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveRule {
    pub eta_base: f64,
    pub epsilon: f64,
    /// `None` selects AdaGrad, `Some(ρ)` RMSProp.
    pub rho: Option<f64>,
}

impl AdaptiveRule {
    pub fn adagrad(eta_base: f64, epsilon: f64) -> Self {
        Self { eta_base, epsilon, rho: None }
    }

    pub fn rmsprop(eta_base: f64, epsilon: f64, rho: f64) -> Self {
        Self { eta_base, epsilon, rho: Some(rho) }
    }

    /// v_n from v_{n−1} and ‖g_n‖².
    pub fn accumulate(&self, v: f64, grad_norm_sq: f64) -> f64 {
        match self.rho {
            None => v + grad_norm_sq,
            Some(rho) => rho * v + (1.0 - rho) * grad_norm_sq,
        }
    }

    /// η_n = η / √(v_n + ε).
    pub fn eta(&self, v: f64) -> f64 {
        self.eta_base / (v + self.epsilon).sqrt()
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        positive("eta_base", self.eta_base)?;
        positive("epsilon", self.epsilon)?;
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(AlgorithmError::InvalidParameter { name: "rho", value: rho });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizeRule {
    Constant { eta: f64 },
    /// η_n = η₀ / (n + 1)^power.
    Polynomial { eta0: f64, power: f64 },
    Adaptive(AdaptiveRule),
}

impl StepSizeRule {
    /// Step size at iteration `n` for non-adaptive rules.
    pub fn eta_at(&self, n: u64) -> Option<f64> {
        match *self {
            Self::Constant { eta } => Some(eta),
            Self::Polynomial { eta0, power } => Some(eta0 / ((n + 1) as f64).powf(power)),
            Self::Adaptive(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        match *self {
            Self::Constant { eta } => positive("eta", eta).map(drop),
            Self::Polynomial { eta0, power } => {
                positive("eta0", eta0)?;
                positive("power", power).map(drop)
            }
            Self::Adaptive(rule) => rule.validate(),
        }
    }
}

/// Over-relaxation flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Dual step scaled by λ.
    A,
    /// Primal Krasnosel'skiĭ–Mann average of G and the plain step.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxVariant {
    Standard,
    A,
    B,
}

fn mirror_image_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
) -> Result<(PrimalPoint, DualVector, bool), AlgorithmError> {
    let dual = DualVector(state.dual_cache.iter().zip(g.iter()).map(|(y, gi)| y - eta * gi).collect());
    let x = mirror.potential.gradient_inverse(&dual)?;
    mirror.settle(x, Some(dual))
}

fn km_average(base: &[f64], target: &[f64], lambda: f64) -> PrimalPoint {
    PrimalPoint(base.iter().zip(target).map(|(b, t)| (1.0 - lambda) * b + lambda * t).collect())
}

/// G⁺ = (∇φ)⁻¹(∇φ(G) − ηg), then projected when simplex-constrained.
pub fn smd_step(mirror: &Mirror, state: &OptimizerState, g: &DualVector, eta: f64) -> Result<OptimizerState, AlgorithmError> {
    positive("eta", eta)?;
    let (x, dual, clamped) = mirror_image_step(mirror, state, g, eta)?;
    Ok(state.advance(x, dual, StepRecord { eta, lambda: 1.0, grad_norm: g.norm(), descent_term: 0.0, clamped }))
}

/// Type A: ∇φ(G⁺) = ∇φ(G) − ληg.
pub fn or_smd_step_a(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
    lambda: f64,
) -> Result<OptimizerState, AlgorithmError> {
    positive("eta", eta)?;
    positive("lambda", lambda)?;
    let (x, dual, clamped) = mirror_image_step(mirror, state, g, lambda * eta)?;
    Ok(state.advance(x, dual, StepRecord { eta, lambda, grad_norm: g.norm(), descent_term: 0.0, clamped }))
}

/// Type B: G̃ = (∇φ)⁻¹(∇φ(G) − ηg), G⁺ = (1 − λ)G + λG̃. Entropy iterates
/// that leave the domain (λ > 1) are clamped at the floor and renormalized;
/// the step record flags it.
pub fn or_smd_step_b(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
    lambda: f64,
) -> Result<OptimizerState, AlgorithmError> {
    positive("lambda", lambda)?;
    let tilde = smd_step(mirror, state, g, eta)?;
    relax_towards(mirror, state, tilde, lambda)
}

/// KM-averages `state` towards an already computed step `target`.
fn relax_towards(
    mirror: &Mirror,
    state: &OptimizerState,
    target: OptimizerState,
    lambda: f64,
) -> Result<OptimizerState, AlgorithmError> {
    let mut record = StepRecord { lambda, ..target.last.clone() };
    if lambda == 1.0 {
        return Ok(OptimizerState { last: record, ..target });
    }
    let x = km_average(&state.iterate, &target.iterate, lambda);
    let (x, dual, clamped) = mirror.settle(x, None)?;
    record.clamped |= clamped;
    Ok(OptimizerState {
        iterate: x,
        dual_cache: dual,
        last: record,
        ..target
    })
}

/// AdaGrad in mirror form: v ← v + ‖g‖², η_n = η/√(v + ε), then an SMD step.
pub fn adagrad_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta_base: f64,
    epsilon: f64,
) -> Result<OptimizerState, AlgorithmError> {
    adaptive_step(mirror, state, g, AdaptiveRule::adagrad(eta_base, epsilon))
}

/// RMSProp in mirror form: v ← ρv + (1 − ρ)‖g‖², η_n = η/√(v + ε).
pub fn rmsprop_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta_base: f64,
    epsilon: f64,
    rho: f64,
) -> Result<OptimizerState, AlgorithmError> {
    adaptive_step(mirror, state, g, AdaptiveRule::rmsprop(eta_base, epsilon, rho))
}

pub fn adaptive_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    rule: AdaptiveRule,
) -> Result<OptimizerState, AlgorithmError> {
    rule.validate()?;
    let v = rule.accumulate(state.accumulator_v, dot(g, g));
    let mut next = smd_step(mirror, state, g, rule.eta(v))?;
    next.accumulator_v = v;
    Ok(next)
}

/// Over-relaxed AdaGrad / RMSProp: the adaptive η_n feeds a Type A or
/// Type B over-relaxed SMD step.
pub fn or_adaptive_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    rule: AdaptiveRule,
    lambda: f64,
    variant: Variant,
) -> Result<OptimizerState, AlgorithmError> {
    rule.validate()?;
    let v = rule.accumulate(state.accumulator_v, dot(g, g));
    let eta = rule.eta(v);
    let mut next = match variant {
        Variant::A => or_smd_step_a(mirror, state, g, eta, lambda)?,
        Variant::B => or_smd_step_b(mirror, state, g, eta, lambda)?,
    };
    next.accumulator_v = v;
    Ok(next)
}

fn natgrad_candidate(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    scaled_eta: f64,
    damping: f64,
) -> Result<PrimalPoint, AlgorithmError> {
    if !(damping >= 0.0) {
        return Err(AlgorithmError::InvalidParameter { name: "damping", value: damping });
    }
    let direction = mirror.potential.hessian_inverse_apply(&state.iterate, g, damping)?;
    Ok(PrimalPoint(
        state.iterate.iter().zip(direction.iter()).map(|(x, d)| x - scaled_eta * d).collect(),
    ))
}

/// G⁺ = G − η(∇²φ(G) + damping·I)⁻¹g, re-projected on the simplex. Entropy
/// iterates pushed out of the domain are clamped and flagged.
pub fn natgrad_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
    damping: f64,
) -> Result<OptimizerState, AlgorithmError> {
    positive("eta", eta)?;
    let x = natgrad_candidate(mirror, state, g, eta, damping)?;
    let (x, dual, clamped) = mirror.settle(x, None)?;
    Ok(state.advance(x, dual, StepRecord { eta, lambda: 1.0, grad_norm: g.norm(), descent_term: 0.0, clamped }))
}

/// Over-relaxed natural gradient: Type A scales the preconditioned step by
/// λ, Type B KM-averages G with the plain natural-gradient step.
pub fn natgrad_or_step(
    mirror: &Mirror,
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
    damping: f64,
    lambda: f64,
    variant: Variant,
) -> Result<OptimizerState, AlgorithmError> {
    positive("eta", eta)?;
    positive("lambda", lambda)?;
    match variant {
        Variant::A => {
            let x = natgrad_candidate(mirror, state, g, lambda * eta, damping)?;
            let (x, dual, clamped) = mirror.settle(x, None)?;
            Ok(state.advance(x, dual, StepRecord { eta, lambda, grad_norm: g.norm(), descent_term: 0.0, clamped }))
        }
        Variant::B => {
            let plain = natgrad_step(mirror, state, g, eta, damping)?;
            relax_towards(mirror, state, plain, lambda)
        }
    }
}

/// Extrapolation half of mirror-prox; returns G̃ and the oracle sample at G̃.
fn mirror_prox_extrapolate(
    mirror: &Mirror,
    state: &OptimizerState,
    oracle: &mut StochasticOracle<'_>,
    eta: f64,
) -> Result<(OptimizerState, DualVector), AlgorithmError> {
    positive("eta", eta)?;
    let g0 = oracle.query(&state.iterate)?;
    let tilde = smd_step(mirror, state, &g0, eta)?;
    let g1 = oracle.query(&tilde.iterate)?;
    Ok((tilde, g1))
}

/// G̃ = (∇φ)⁻¹(∇φ(G) − ηg(G)), G⁺ = (∇φ)⁻¹(∇φ(G) − ηg(G̃)).
pub fn mirror_prox_step(
    mirror: &Mirror,
    state: &OptimizerState,
    oracle: &mut StochasticOracle<'_>,
    eta: f64,
) -> Result<OptimizerState, AlgorithmError> {
    let (tilde, g1) = mirror_prox_extrapolate(mirror, state, oracle, eta)?;
    let mut next = smd_step(mirror, state, &g1, eta)?;
    next.extrapolation = Some(tilde.iterate);
    Ok(next)
}

/// Type A uses λη in the second step; Type B KM-averages G with the plain
/// mirror-prox output Y.
pub fn mirror_prox_or_step(
    mirror: &Mirror,
    state: &OptimizerState,
    oracle: &mut StochasticOracle<'_>,
    eta: f64,
    lambda: f64,
    variant: Variant,
) -> Result<OptimizerState, AlgorithmError> {
    positive("lambda", lambda)?;
    let (tilde, g1) = mirror_prox_extrapolate(mirror, state, oracle, eta)?;
    let mut next = match variant {
        Variant::A => or_smd_step_a(mirror, state, &g1, eta, lambda)?,
        Variant::B => {
            let y = smd_step(mirror, state, &g1, eta)?;
            relax_towards(mirror, state, y, lambda)?
        }
    };
    next.extrapolation = Some(tilde.iterate);
    Ok(next)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Proximal SGD for f + l1_weight·‖·‖₁ in Euclidean geometry.
///
/// Standard: P = soft(G − ηg, η·l1). Type A: G⁺ = G − λη(g + ξ) with
/// ξ = (G − ηg − P)/η the ℓ1 subgradient realized by the threshold (it
/// equals l1·sign(Pᵢ) on the support). Type B: G⁺ = (1 − λ)G + λP.
pub fn prox_sgd_step(
    state: &OptimizerState,
    g: &DualVector,
    eta: f64,
    lambda: f64,
    l1_weight: f64,
    variant: ProxVariant,
) -> Result<OptimizerState, AlgorithmError> {
    positive("eta", eta)?;
    positive("lambda", lambda)?;
    if !(l1_weight >= 0.0) {
        return Err(AlgorithmError::InvalidParameter { name: "l1_weight", value: l1_weight });
    }
    let forward: Vec<f64> = state.iterate.iter().zip(g.iter()).map(|(x, gi)| x - eta * gi).collect();
    let prox: Vec<f64> = forward.iter().map(|&v| soft_threshold(v, eta * l1_weight)).collect();
    let (x, lambda) = match variant {
        ProxVariant::Standard => (prox, 1.0),
        ProxVariant::A => {
            let x = state
                .iterate
                .iter()
                .zip(g.iter())
                .zip(forward.iter().zip(&prox))
                .map(|((x, gi), (f, p))| {
                    let xi = (f - p) / eta;
                    x - lambda * eta * (gi + xi)
                })
                .collect();
            (x, lambda)
        }
        ProxVariant::B if lambda == 1.0 => (prox, lambda),
        ProxVariant::B => (km_average(&state.iterate, &prox, lambda).0, lambda),
    };
    let dual = DualVector(x.clone());
    Ok(state.advance(
        PrimalPoint(x),
        dual,
        StepRecord { eta, lambda, grad_norm: g.norm(), descent_term: 0.0, clamped: false },
    ))
}

/// Half-space step towards {z : ⟨z, u*⟩ ≤ β}:
/// U = 1[u* ≠ 0]·1[⟨G,u*⟩ > β]·(⟨G,u*⟩ − β)/(‖u*‖² + 1[u* = 0]),
/// ∇φ(G⁺) = ∇φ(G) − λU u*. The record's descent term is Θ = U‖u*‖².
pub fn half_space_step(
    mirror: &Mirror,
    state: &OptimizerState,
    ustar: &DualVector,
    beta: f64,
    lambda: f64,
) -> Result<OptimizerState, AlgorithmError> {
    positive("lambda", lambda)?;
    let norm_sq = dot(ustar, ustar);
    let pairing = dot(&state.iterate, ustar);
    let nonzero = norm_sq > 0.0;
    let u = if nonzero && pairing > beta { (pairing - beta) / norm_sq } else { 0.0 };
    let record = StepRecord { eta: u, lambda, grad_norm: norm_sq.sqrt(), descent_term: u * norm_sq, clamped: false };
    if u == 0.0 {
        return Ok(state.advance(state.iterate.clone(), state.dual_cache.clone(), record));
    }
    let dual = DualVector(state.dual_cache.iter().zip(ustar.iter()).map(|(y, us)| y - lambda * u * us).collect());
    let x = mirror.potential.gradient_inverse(&dual)?;
    let (x, dual, clamped) = mirror.settle(x, Some(dual))?;
    Ok(state.advance(x, dual, StepRecord { clamped, ..record }))
}

/// Which iteration rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Smd,
    OrSmd(Variant),
    AdaGrad,
    RmsProp,
    /// Over-relaxed AdaGrad or RMSProp, selected by the adaptive rule's ρ.
    AdaptiveOr(Variant),
    NatGrad { damping: f64 },
    NatGradOr { damping: f64, variant: Variant },
    MirrorProx,
    MirrorProxOr(Variant),
    ProxSgd(ProxVariant),
    HalfSpace,
}

impl Method {
    pub fn uses_lambda(&self) -> bool {
        !matches!(
            self,
            Method::Smd | Method::AdaGrad | Method::RmsProp | Method::NatGrad { .. } | Method::MirrorProx
        ) && !matches!(self, Method::ProxSgd(ProxVariant::Standard))
    }

    fn is_adaptive(&self) -> bool {
        matches!(self, Method::AdaGrad | Method::RmsProp | Method::AdaptiveOr(_))
    }
}

/// Everything needed to execute one seeded run.
pub struct RunSpec<'a> {
    pub problem: &'a dyn Problem,
    pub mirror: Mirror,
    pub method: Method,
    pub step: StepSizeRule,
    pub schedule: RelaxationSchedule,
    pub mode: ScheduleMode,
    pub noise_sigma: f64,
    pub n_iters: u64,
    pub run_seed: u64,
    /// z* for the Bregman-distance column.
    pub reference: Option<&'a PrimalPoint>,
}

impl RunSpec<'_> {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        self.schedule.validate(self.mode)?;
        self.step.validate()?;
        if !(self.noise_sigma >= 0.0) {
            return Err(AlgorithmError::InvalidParameter { name: "noise_sigma", value: self.noise_sigma });
        }
        let dim = self.problem.dim();
        if self.mirror.potential.dim() != dim {
            return Err(AlgorithmError::Incompatible(format!(
                "geometry dimension {} differs from problem dimension {dim}",
                self.mirror.potential.dim()
            )));
        }
        if self.mirror.simplex != self.problem.simplex_constrained() {
            return Err(AlgorithmError::Incompatible(
                "simplex projection must be on exactly for simplex-constrained problems".into(),
            ));
        }
        let adaptive_rule = matches!(self.step, StepSizeRule::Adaptive(_));
        if self.method.is_adaptive() != adaptive_rule && self.method != Method::HalfSpace {
            return Err(AlgorithmError::Incompatible(
                "adaptive methods need an adaptive step rule and vice versa".into(),
            ));
        }
        match (self.method, self.step) {
            (Method::AdaGrad, StepSizeRule::Adaptive(r)) if r.rho.is_some() => {
                return Err(AlgorithmError::Incompatible("adagrad takes no rho".into()))
            }
            (Method::RmsProp, StepSizeRule::Adaptive(r)) if r.rho.is_none() => {
                return Err(AlgorithmError::Incompatible("rmsprop needs rho".into()))
            }
            _ => {}
        }
        if matches!(self.method, Method::ProxSgd(_)) && !self.mirror.is_euclidean() {
            return Err(AlgorithmError::Incompatible("prox_sgd runs in euclidean geometry only".into()));
        }
        if self.method == Method::HalfSpace && self.problem.half_spaces().is_none() {
            return Err(AlgorithmError::Incompatible(format!(
                "half_space needs a feasibility problem, got {}",
                self.problem.name()
            )));
        }
        if matches!(self.method, Method::MirrorProx | Method::MirrorProxOr(_)) != self.problem.is_operator()
            && self.problem.is_operator()
        {
            return Err(AlgorithmError::Incompatible(
                "operator problems are solved with mirror_prox methods".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub state: OptimizerState,
}

fn observe(spec: &RunSpec<'_>, x: &PrimalPoint) -> Result<(f64, Option<f64>), AlgorithmError> {
    let loss = spec.problem.value(x)?;
    let bregman = match spec.reference {
        Some(z) => Some(spec.mirror.potential.bregman_divergence(z, x)?),
        None => None,
    };
    Ok((loss, bregman))
}

fn single_step(
    spec: &RunSpec<'_>,
    state: &OptimizerState,
    oracle: &mut StochasticOracle<'_>,
    n: u64,
    lambda: f64,
) -> Result<OptimizerState, AlgorithmError> {
    let m = &spec.mirror;
    let eta = spec.step.eta_at(n);
    let fixed_eta = || eta.ok_or_else(|| AlgorithmError::Incompatible("method needs a non-adaptive step rule".into()));
    let adaptive = || match spec.step {
        StepSizeRule::Adaptive(rule) => Ok(rule),
        _ => Err(AlgorithmError::Incompatible("method needs an adaptive step rule".into())),
    };
    match spec.method {
        Method::MirrorProx => mirror_prox_step(m, state, oracle, fixed_eta()?),
        Method::MirrorProxOr(v) => mirror_prox_or_step(m, state, oracle, fixed_eta()?, lambda, v),
        Method::HalfSpace => {
            let spaces = spec.problem.half_spaces().expect("validated");
            let h = &spaces[oracle.sample_index(spaces.len())];
            half_space_step(m, state, &DualVector(h.normal.clone()), h.offset, lambda)
        }
        method => {
            let g = oracle.query(&state.iterate)?;
            match method {
                Method::Smd => smd_step(m, state, &g, fixed_eta()?),
                Method::OrSmd(Variant::A) => or_smd_step_a(m, state, &g, fixed_eta()?, lambda),
                Method::OrSmd(Variant::B) => or_smd_step_b(m, state, &g, fixed_eta()?, lambda),
                Method::AdaGrad | Method::RmsProp => adaptive_step(m, state, &g, adaptive()?),
                Method::AdaptiveOr(v) => or_adaptive_step(m, state, &g, adaptive()?, lambda, v),
                Method::NatGrad { damping } => natgrad_step(m, state, &g, fixed_eta()?, damping),
                Method::NatGradOr { damping, variant } => {
                    natgrad_or_step(m, state, &g, fixed_eta()?, damping, lambda, variant)
                }
                Method::ProxSgd(v) => prox_sgd_step(state, &g, fixed_eta()?, lambda, spec.problem.l1_weight(), v),
                Method::MirrorProx | Method::MirrorProxOr(_) | Method::HalfSpace => unreachable!(),
            }
        }
    }
}

/// Runs `n_iters` steps and records one trace row per iterate (row 0 is the
/// start). Deterministic in `run_seed`: λ draws come from substream 0 and
/// gradient noise / half-space picks from substream 1.
pub fn run_iteration(spec: &RunSpec<'_>) -> Result<RunOutcome, AlgorithmError> {
    spec.validate()?;
    let RunStreams { lambda: mut lambda_rng, noise } = RunStreams::new(spec.run_seed);
    let mut oracle = StochasticOracle::new(spec.problem, spec.noise_sigma, noise);
    let mut state = OptimizerState::new(&spec.mirror, spec.problem.initial_point())?;
    let (loss, bregman) = observe(spec, &state.iterate)?;
    let mut rows = Vec::with_capacity(spec.n_iters as usize + 1);
    rows.push(TraceRow::initial(loss, bregman));
    let uses_lambda = spec.method.uses_lambda();
    for n in 0..spec.n_iters {
        let at = |e: AlgorithmError| AlgorithmError::AtIteration { iteration: n, source: Box::new(e) };
        let lambda = if uses_lambda { spec.schedule.sample(&mut lambda_rng, n) } else { 1.0 };
        let next = single_step(spec, &state, &mut oracle, n, lambda).map_err(at)?;
        debug_assert!(next.sync_error(&spec.mirror).map_or(true, |e| e <= 1e-10));
        let (loss, bregman) = observe(spec, &next.iterate).map_err(at)?;
        rows.push(TraceRow {
            n: n + 1,
            loss,
            bregman_to_ref: bregman,
            grad_norm: next.last.grad_norm,
            eta_used: next.last.eta,
            lambda_used: next.last.lambda,
            step_norm: distance(&next.iterate, &state.iterate),
            descent_term: next.last.descent_term,
            domain_clamp_flag: next.last.clamped,
        });
        state = next;
    }
    Ok(RunOutcome { trace: RunTrace { rows }, state })
}

//! TOML run configuration.
//!
//! ```toml
//! schema_version = 1
//! n_iters = 200
//! seeds = [0, 1, 2, 3, 4]
//!
//! [problem]
//! kind = "logistic"
//! seed = 0
//!
//! [method]
//! kind = "or_smd_b"
//!
//! [geometry]
//! kind = "euclidean"
//!
//! [step]
//! rule = "constant"
//! eta = 0.1
//!
//! [relaxation]
//! schedule = "constant"
//! lambda = 1.0
//! mode = "bounded"
//! ```

use std::path::{Path, PathBuf};

use bregman_core::algorithms::{AdaptiveRule, Method, Mirror, ProxVariant, StepSizeRule, Variant, DEFAULT_NATGRAD_DAMPING};
use bregman_core::geometry::{LegendrePotential, PotentialKind};
use bregman_core::problems::{
    BilinearSaddleProblem, FeasibilityProblem, LogisticParams, LogisticRegressionProblem, Problem, ProblemError,
    QuadraticProblem, SimplexEstimationProblem, SparseParams, SparseRegressionProblem,
};
use bregman_core::relaxation::{RelaxationSchedule, ScheduleMode};
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: ProblemConfig,
    pub method: MethodConfig,
    pub geometry: GeometryConfig,
    pub step: StepConfig,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    pub n_iters: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    /// Standard deviation of the Gaussian gradient noise.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Loss threshold for steps-to-target in `run` summaries.
    #[serde(default)]
    pub target_loss: Option<f64>,
    /// Compute z* and log Bregman distances to it.
    #[serde(default = "yes")]
    pub reference: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Logistic {
        seed: u64,
        #[serde(default = "d_logistic_n")]
        n: usize,
        #[serde(default = "d_twenty")]
        d: usize,
        #[serde(default = "d_split")]
        split: f64,
        #[serde(default = "d_weight_decay")]
        weight_decay: f64,
        #[serde(default = "d_label_flip")]
        label_flip: f64,
    },
    BilinearSaddle {
        seed: u64,
        #[serde(default = "d_twenty")]
        d: usize,
        #[serde(default = "d_mu")]
        mu: f64,
    },
    SparseRegression {
        seed: u64,
        #[serde(default = "d_sparse_n")]
        n: usize,
        #[serde(default = "d_sparse_d")]
        d: usize,
        #[serde(default = "d_sparse_k")]
        k: usize,
        #[serde(default = "d_sparse_noise")]
        noise_sigma: f64,
        #[serde(default)]
        l1_weight: f64,
    },
    SimplexEstimation {
        seed: u64,
        #[serde(default = "d_twenty")]
        d: usize,
    },
    Quadratic {
        seed: u64,
        #[serde(default = "d_twenty")]
        d: usize,
        #[serde(default = "d_strong")]
        strong_convexity: f64,
        #[serde(default = "d_smooth")]
        smoothness: f64,
    },
    Feasibility {
        seed: u64,
        #[serde(default = "d_feas_d")]
        d: usize,
        #[serde(default = "d_feas_m")]
        m: usize,
    },
}

fn d_logistic_n() -> usize {
    2000
}
fn d_twenty() -> usize {
    20
}
fn d_split() -> f64 {
    0.8
}
fn d_weight_decay() -> f64 {
    1e-2
}
fn d_label_flip() -> f64 {
    0.05
}
fn d_mu() -> f64 {
    0.1
}
fn d_sparse_n() -> usize {
    200
}
fn d_sparse_d() -> usize {
    50
}
fn d_sparse_k() -> usize {
    5
}
fn d_sparse_noise() -> f64 {
    0.01
}
fn d_strong() -> f64 {
    0.5
}
fn d_smooth() -> f64 {
    2.0
}
fn d_feas_d() -> usize {
    5
}
fn d_feas_m() -> usize {
    40
}

impl ProblemConfig {
    pub fn data_seed(&self) -> u64 {
        match *self {
            Self::Logistic { seed, .. }
            | Self::BilinearSaddle { seed, .. }
            | Self::SparseRegression { seed, .. }
            | Self::SimplexEstimation { seed, .. }
            | Self::Quadratic { seed, .. }
            | Self::Feasibility { seed, .. } => seed,
        }
    }

    pub fn simplex_constrained(&self) -> bool {
        matches!(self, Self::SimplexEstimation { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Logistic { .. } => "logistic",
            Self::BilinearSaddle { .. } => "bilinear_saddle",
            Self::SparseRegression { .. } => "sparse_regression",
            Self::SimplexEstimation { .. } => "simplex_estimation",
            Self::Quadratic { .. } => "quadratic",
            Self::Feasibility { .. } => "feasibility",
        }
    }

    /// Generates the problem instance from an explicit data seed.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Problem>, ProblemError> {
        Ok(match *self {
            Self::Logistic { n, d, split, weight_decay, label_flip, .. } => Box::new(LogisticRegressionProblem::generate(
                LogisticParams { n, d, split, weight_decay, label_flip },
                seed,
            )?),
            Self::BilinearSaddle { d, mu, .. } => Box::new(BilinearSaddleProblem::generate(d, mu, seed)?),
            Self::SparseRegression { n, d, k, noise_sigma, l1_weight, .. } => Box::new(
                SparseRegressionProblem::generate(SparseParams { n, d, k, noise_sigma, l1_weight }, seed)?,
            ),
            Self::SimplexEstimation { d, .. } => Box::new(SimplexEstimationProblem::generate(d, seed)?),
            Self::Quadratic { d, strong_convexity, smoothness, .. } => {
                Box::new(QuadraticProblem::generate(d, strong_convexity, smoothness, seed)?)
            }
            Self::Feasibility { d, m, .. } => Box::new(FeasibilityProblem::generate(d, m, seed)?),
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Smd,
    OrSmdA,
    OrSmdB,
    Adagrad,
    Rmsprop,
    AdagradOr,
    RmspropOr,
    Natgrad,
    NatgradOr,
    MirrorProx,
    MirrorProxOrA,
    MirrorProxOrB,
    ProxSgd,
    HalfSpace,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VariantConfig {
    A,
    B,
    Standard,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    /// Over-relaxation flavor for adaptive, natgrad and prox methods.
    #[serde(default)]
    pub variant: Option<VariantConfig>,
    #[serde(default = "d_damping")]
    pub damping: f64,
}

fn d_damping() -> f64 {
    DEFAULT_NATGRAD_DAMPING
}

impl MethodConfig {
    pub fn resolve(&self) -> Result<Method, ConfigError> {
        let or_variant = |default: Variant| match self.variant {
            None => Ok(default),
            Some(VariantConfig::A) => Ok(Variant::A),
            Some(VariantConfig::B) => Ok(Variant::B),
            Some(VariantConfig::Standard) => Err(invalid("method.variant", "`standard` applies to prox_sgd only")),
        };
        let no_variant = || match self.variant {
            None => Ok(()),
            Some(_) => Err(invalid("method.variant", format!("{:?} takes no variant", self.kind))),
        };
        Ok(match self.kind {
            MethodKind::Smd => no_variant().map(|_| Method::Smd)?,
            MethodKind::OrSmdA => no_variant().map(|_| Method::OrSmd(Variant::A))?,
            MethodKind::OrSmdB => no_variant().map(|_| Method::OrSmd(Variant::B))?,
            MethodKind::Adagrad => no_variant().map(|_| Method::AdaGrad)?,
            MethodKind::Rmsprop => no_variant().map(|_| Method::RmsProp)?,
            MethodKind::AdagradOr | MethodKind::RmspropOr => Method::AdaptiveOr(or_variant(Variant::B)?),
            MethodKind::Natgrad => no_variant().map(|_| Method::NatGrad { damping: self.damping })?,
            MethodKind::NatgradOr => Method::NatGradOr { damping: self.damping, variant: or_variant(Variant::B)? },
            MethodKind::MirrorProx => no_variant().map(|_| Method::MirrorProx)?,
            MethodKind::MirrorProxOrA => no_variant().map(|_| Method::MirrorProxOr(Variant::A))?,
            MethodKind::MirrorProxOrB => no_variant().map(|_| Method::MirrorProxOr(Variant::B))?,
            MethodKind::ProxSgd => Method::ProxSgd(match self.variant {
                None | Some(VariantConfig::Standard) => ProxVariant::Standard,
                Some(VariantConfig::A) => ProxVariant::A,
                Some(VariantConfig::B) => ProxVariant::B,
            }),
            MethodKind::HalfSpace => no_variant().map(|_| Method::HalfSpace)?,
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepConfig {
    Constant { eta: f64 },
    Polynomial { eta0: f64, power: f64 },
    Adaptive {
        eta_base: f64,
        #[serde(default = "d_epsilon")]
        epsilon: f64,
        #[serde(default)]
        rho: Option<f64>,
    },
}

fn d_epsilon() -> f64 {
    1e-8
}

impl StepConfig {
    pub fn resolve(&self) -> StepSizeRule {
        match *self {
            Self::Constant { eta } => StepSizeRule::Constant { eta },
            Self::Polynomial { eta0, power } => StepSizeRule::Polynomial { eta0, power },
            Self::Adaptive { eta_base, epsilon, rho } => StepSizeRule::Adaptive(AdaptiveRule { eta_base, epsilon, rho }),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    #[default]
    Bounded,
    Super,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "schedule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { lambda: f64 },
    TwoPoint { lambda_lo: f64, lambda_hi: f64, p_lo: f64 },
    Warmup { start: f64, end: f64, ramp_steps: u64 },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct RelaxationConfig {
    #[serde(flatten)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub mode: ModeConfig,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { schedule: ScheduleConfig::Constant { lambda: 1.0 }, mode: ModeConfig::Bounded }
    }
}

impl RelaxationConfig {
    pub fn schedule(&self) -> RelaxationSchedule {
        match self.schedule {
            ScheduleConfig::Constant { lambda } => RelaxationSchedule::constant(lambda),
            ScheduleConfig::TwoPoint { lambda_lo, lambda_hi, p_lo } => {
                RelaxationSchedule::two_point(lambda_lo, lambda_hi, p_lo)
            }
            ScheduleConfig::Warmup { start, end, ramp_steps } => RelaxationSchedule::warmup(start, end, ramp_steps),
        }
    }

    pub fn mode(&self) -> ScheduleMode {
        match self.mode {
            ModeConfig::Bounded => ScheduleMode::Bounded,
            ModeConfig::Super => ScheduleMode::Super,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.into(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::from("<config>"), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn mirror(&self, dim: usize) -> Mirror {
        let kind = match self.geometry.kind {
            GeometryKind::Euclidean => PotentialKind::SquaredEuclidean,
            GeometryKind::Entropy => PotentialKind::NegativeEntropy,
        };
        Mirror::new(LegendrePotential::new(kind, dim), self.problem.simplex_constrained())
    }

    /// Checks everything that can be checked without generating data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(invalid("seeds", "seed indices must be distinct"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", "must be a nonnegative number"));
        }
        let method = self.method.resolve()?;
        self.step.resolve().validate().map_err(|e| invalid("step", e.to_string()))?;
        self.relaxation
            .schedule()
            .validate(self.relaxation.mode())
            .map_err(|e| invalid("relaxation", e.to_string()))?;
        let adaptive = matches!(self.step, StepConfig::Adaptive { .. });
        let wants_adaptive = matches!(
            self.method.kind,
            MethodKind::Adagrad | MethodKind::Rmsprop | MethodKind::AdagradOr | MethodKind::RmspropOr
        );
        if wants_adaptive != adaptive && method != Method::HalfSpace {
            return Err(invalid("step.rule", "adaptive methods take rule = \"adaptive\" and only they do"));
        }
        if let StepConfig::Adaptive { rho, .. } = self.step {
            let needs_rho = matches!(self.method.kind, MethodKind::Rmsprop | MethodKind::RmspropOr);
            if needs_rho != rho.is_some() {
                return Err(invalid("step.rho", "rmsprop methods need rho; adagrad methods take none"));
            }
        }
        if self.method.kind == MethodKind::ProxSgd && self.geometry.kind != GeometryKind::Euclidean {
            return Err(invalid("geometry.kind", "prox_sgd runs in euclidean geometry only"));
        }
        if self.method.kind == MethodKind::HalfSpace && !matches!(self.problem, ProblemConfig::Feasibility { .. }) {
            return Err(invalid("method.kind", "half_space needs a feasibility problem"));
        }
        let prox_family = matches!(
            self.method.kind,
            MethodKind::MirrorProx | MethodKind::MirrorProxOrA | MethodKind::MirrorProxOrB
        );
        if matches!(self.problem, ProblemConfig::BilinearSaddle { .. }) && !prox_family {
            return Err(invalid("method.kind", "bilinear_saddle is solved with mirror_prox methods"));
        }
        if self.geometry.kind == GeometryKind::Entropy && !self.problem.simplex_constrained() {
            return Err(invalid("geometry.kind", "entropy geometry is available for simplex_estimation only"));
        }
        Ok(())
    }

    /// Super mode outside the regimes covered by theory.
    pub fn experimental_super(&self) -> bool {
        self.relaxation.mode == ModeConfig::Super
            && !matches!(self.method.kind, MethodKind::HalfSpace)
            && !matches!(self.problem, ProblemConfig::Quadratic { .. })
    }
}

//! Synthetic problems and their loss / operator oracles.
//!
//! Every problem is rebuilt from `(parameters, seed)` alone; nothing is read
//! from disk.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::geometry::{dot, DualVector, GeometryError, PrimalPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
}

/// A loss (or monotone operator) that an iteration can query.
///
/// `value` is the quantity logged as `loss` in traces; `gradient` is the
/// mean (noiseless) gradient of the smooth part, or the operator field for
/// variational problems.
pub trait Problem: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn value(&self, x: &PrimalPoint) -> Result<f64, GeometryError>;
    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError>;
    fn initial_point(&self) -> PrimalPoint;

    fn simplex_constrained(&self) -> bool {
        false
    }

    /// Weight of the ℓ1 term handled by proximal steps; 0 when absent.
    fn l1_weight(&self) -> f64 {
        0.0
    }

    /// Exact solution when known in closed form.
    fn closed_form_solution(&self) -> Option<PrimalPoint> {
        None
    }

    /// Half-space description {z : ⟨z, u⟩ ≤ β} for feasibility problems.
    fn half_spaces(&self) -> Option<&[HalfSpace]> {
        None
    }

    /// Whether `gradient` is a general monotone field rather than the
    /// gradient of `value`.
    fn is_operator(&self) -> bool {
        false
    }
}

fn data_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

fn check_len(x: &[f64], dim: usize) -> Result<(), GeometryError> {
    if x.len() != dim {
        return Err(GeometryError::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    Ok(())
}

/// log(1 + exp(t)) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// 1 / (1 + exp(−t)).
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// logistic regression

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub n: usize,
    pub d: usize,
    pub split: f64,
    pub weight_decay: f64,
    pub label_flip: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 20,
            split: 0.8,
            weight_decay: 1e-2,
            label_flip: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Batch<'a> {
    All,
    Train,
    Validation,
    Indices(&'a [usize]),
}

/// ℓ2-regularized binary logistic regression on planted Gaussian data.
#[derive(Debug, Clone)]
pub struct LogisticRegressionProblem {
    pub features: Array2<f64>,
    pub labels: Vec<f64>,
    pub weight_decay: f64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub planted_weights: Vec<f64>,
}

impl LogisticRegressionProblem {
    /// Standard normal features, a standard normal hidden weight vector,
    /// labels sign(x·w° + 0.1·ε) with a fraction `label_flip` of them flipped.
    /// The first ⌊split·n⌋ rows train, the rest validate.
    pub fn generate(params: LogisticParams, seed: u64) -> Result<Self, ProblemError> {
        let LogisticParams { n, d, split, weight_decay, label_flip } = params;
        if n == 0 || d == 0 {
            return Err(ProblemError::InvalidParameter("logistic n and d must be positive".into()));
        }
        if !(0.0..=1.0).contains(&split) || !(0.0..=1.0).contains(&label_flip) {
            return Err(ProblemError::InvalidParameter(
                "logistic split and label_flip must lie in [0, 1]".into(),
            ));
        }
        if !(weight_decay >= 0.0) {
            return Err(ProblemError::InvalidParameter("weight_decay must be >= 0".into()));
        }
        let mut rng = data_rng(seed);
        let planted = standard_normal_vec(&mut rng, d);
        let features = Array2::from_shape_vec((n, d), standard_normal_vec(&mut rng, n * d))
            .expect("shape matches buffer length");
        let w = ArrayView1::from(&planted[..]);
        let labels = features
            .rows()
            .into_iter()
            .map(|row| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let mut y = if row.dot(&w) + 0.1 * noise >= 0.0 { 1.0 } else { -1.0 };
                if rng.random::<f64>() < label_flip {
                    y = -y;
                }
                y
            })
            .collect();
        let n_train = ((n as f64) * split).round() as usize;
        Ok(Self {
            features,
            labels,
            weight_decay,
            train: (0..n_train).collect(),
            validation: (n_train..n).collect(),
            planted_weights: planted,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Mean logistic loss over the batch plus (weight_decay/2)‖w‖², and its
    /// exact gradient.
    pub fn value_grad(&self, w: &[f64], batch: Batch<'_>) -> Result<(f64, DualVector), GeometryError> {
        check_len(w, self.dim())?;
        let all: Vec<usize>;
        let rows: &[usize] = match batch {
            Batch::All => {
                all = (0..self.labels.len()).collect();
                &all
            }
            Batch::Train => &self.train,
            Batch::Validation => &self.validation,
            Batch::Indices(idx) => idx,
        };
        let wv = ArrayView1::from(w);
        let mut grad = Array1::<f64>::zeros(self.dim());
        let mut loss = 0.0;
        for &i in rows {
            let x = self.features.row(i);
            let y = self.labels[i];
            let margin = y * x.dot(&wv);
            loss += softplus(-margin);
            grad.scaled_add(-y * sigmoid(-margin), &x);
        }
        let m = rows.len().max(1) as f64;
        loss /= m;
        grad /= m;
        loss += 0.5 * self.weight_decay * dot(w, w);
        grad.scaled_add(self.weight_decay, &wv);
        Ok((loss, DualVector(grad.to_vec())))
    }
}

impl Problem for LogisticRegressionProblem {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        LogisticRegressionProblem::dim(self)
    }

    fn value(&self, x: &PrimalPoint) -> Result<f64, GeometryError> {
        Ok(self.value_grad(x, Batch::Train)?.0)
    }

    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        Ok(self.value_grad(x, Batch::Train)?.1)
    }

    fn initial_point(&self) -> PrimalPoint {
        PrimalPoint::zeros(self.dim())
    }
}

// ---------------------------------------------------------------------------
// bilinear saddle point

/// min_x max_y xᵀAy + μ/2‖x‖² − μ/2‖y‖², as a monotone operator on z = (x, y).
#[derive(Debug, Clone)]
pub struct BilinearSaddleProblem {
    pub a: Array2<f64>,
    pub mu: f64,
    start: Vec<f64>,
}

impl BilinearSaddleProblem {
    /// A with i.i.d. N(0, 1/d) entries; the start point z₀ is standard normal.
    pub fn generate(d: usize, mu: f64, seed: u64) -> Result<Self, ProblemError> {
        if d == 0 {
            return Err(ProblemError::InvalidParameter("saddle d must be positive".into()));
        }
        if !(mu > 0.0) {
            return Err(ProblemError::InvalidParameter("saddle mu must be > 0".into()));
        }
        let mut rng = data_rng(seed);
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("positive std");
        let a = Array2::from_shape_simple_fn((d, d), || normal.sample(&mut rng));
        let start = standard_normal_vec(&mut rng, 2 * d);
        Ok(Self { a, mu, start })
    }

    pub fn from_matrix(a: Array2<f64>, mu: f64) -> Self {
        assert!(a.is_square(), "saddle matrix must be square");
        let start = vec![1.0; 2 * a.nrows()];
        Self { a, mu, start }
    }

    pub fn half_dim(&self) -> usize {
        self.a.nrows()
    }

    /// (A·y + μx, −Aᵀ·x + μy).
    pub fn operator(&self, x: &[f64], y: &[f64]) -> Result<(DualVector, DualVector), GeometryError> {
        check_len(x, self.half_dim())?;
        check_len(y, self.half_dim())?;
        let (xv, yv) = (ArrayView1::from(x), ArrayView1::from(y));
        let mut fx = self.a.dot(&yv);
        fx.scaled_add(self.mu, &xv);
        let mut fy = -self.a.t().dot(&xv);
        fy.scaled_add(self.mu, &yv);
        Ok((DualVector(fx.to_vec()), DualVector(fy.to_vec())))
    }

    /// max_{y'} L(x, y') − min_{x'} L(x', y) in closed form.
    pub fn primal_dual_gap(&self, x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        check_len(x, self.half_dim())?;
        check_len(y, self.half_dim())?;
        let (xv, yv) = (ArrayView1::from(x), ArrayView1::from(y));
        let atx = self.a.t().dot(&xv);
        let ay = self.a.dot(&yv);
        let mu = self.mu;
        Ok(0.5 * mu * xv.dot(&xv) + atx.dot(&atx) / (2.0 * mu) + 0.5 * mu * yv.dot(&yv) + ay.dot(&ay) / (2.0 * mu))
    }

    pub fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.half_dim())
    }
}

impl Problem for BilinearSaddleProblem {
    fn name(&self) -> &'static str {
        "bilinear_saddle"
    }

    fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    fn value(&self, z: &PrimalPoint) -> Result<f64, GeometryError> {
        check_len(z, self.dim())?;
        let (x, y) = self.split(z);
        self.primal_dual_gap(x, y)
    }

    fn gradient(&self, z: &PrimalPoint) -> Result<DualVector, GeometryError> {
        check_len(z, self.dim())?;
        let (x, y) = self.split(z);
        let (fx, fy) = self.operator(x, y)?;
        let mut out = fx.into_inner();
        out.extend(fy.into_inner());
        Ok(DualVector(out))
    }

    fn initial_point(&self) -> PrimalPoint {
        PrimalPoint(self.start.clone())
    }

    fn closed_form_solution(&self) -> Option<PrimalPoint> {
        Some(PrimalPoint::zeros(self.dim()))
    }

    fn is_operator(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// sparse regression

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub noise_sigma: f64,
    pub l1_weight: f64,
}

impl Default for SparseParams {
    fn default() -> Self {
        Self {
            n: 200,
            d: 50,
            k: 5,
            noise_sigma: 0.01,
            l1_weight: 0.0,
        }
    }
}

/// Least squares (1/2n)‖Xw − y‖² + l1_weight·‖w‖₁ with a planted sparse truth.
#[derive(Debug, Clone)]
pub struct SparseRegressionProblem {
    pub design: Array2<f64>,
    pub targets: Vec<f64>,
    pub l1_weight: f64,
    pub planted_support: Vec<usize>,
    pub planted_weights: Vec<f64>,
}

impl SparseRegressionProblem {
    /// Gaussian design; `k` planted coordinates with weights ±U(1, 2).
    pub fn generate(params: SparseParams, seed: u64) -> Result<Self, ProblemError> {
        let SparseParams { n, d, k, noise_sigma, l1_weight } = params;
        if n == 0 || d == 0 || k >= d {
            return Err(ProblemError::InvalidParameter("sparse regression needs n, d > 0 and k < d".into()));
        }
        if !(noise_sigma >= 0.0) || !(l1_weight >= 0.0) {
            return Err(ProblemError::InvalidParameter(
                "sparse noise_sigma and l1_weight must be >= 0".into(),
            ));
        }
        let mut rng = data_rng(seed);
        let mut support = sample(&mut rng, d, k).into_vec();
        support.sort_unstable();
        let mut planted = vec![0.0; d];
        for &j in &support {
            let magnitude = rng.random_range(1.0..2.0);
            planted[j] = if rng.random::<bool>() { magnitude } else { -magnitude };
        }
        let design = Array2::from_shape_vec((n, d), standard_normal_vec(&mut rng, n * d))
            .expect("shape matches buffer length");
        let clean = design.dot(&ArrayView1::from(&planted[..]));
        let targets = clean
            .iter()
            .map(|v| v + noise_sigma * normal(&mut rng))
            .collect();
        Ok(Self {
            design,
            targets,
            l1_weight,
            planted_support: support,
            planted_weights: planted,
        })
    }

    pub fn with_l1_weight(&self, l1_weight: f64) -> Self {
        Self { l1_weight, ..self.clone() }
    }

    pub fn smooth_value_grad(&self, w: &[f64]) -> Result<(f64, DualVector), GeometryError> {
        check_len(w, self.design.ncols())?;
        let mut residual = self.design.dot(&ArrayView1::from(w));
        residual -= &ArrayView1::from(&self.targets[..]);
        let n = self.targets.len() as f64;
        let value = 0.5 * residual.dot(&residual) / n;
        let grad = self.design.t().dot(&residual) / n;
        Ok((value, DualVector(grad.to_vec())))
    }
}

impl Problem for SparseRegressionProblem {
    fn name(&self) -> &'static str {
        "sparse_regression"
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, w: &PrimalPoint) -> Result<f64, GeometryError> {
        let (f, _) = self.smooth_value_grad(w)?;
        Ok(f + self.l1_weight * w.iter().map(|v| v.abs()).sum::<f64>())
    }

    fn gradient(&self, w: &PrimalPoint) -> Result<DualVector, GeometryError> {
        Ok(self.smooth_value_grad(w)?.1)
    }

    fn initial_point(&self) -> PrimalPoint {
        PrimalPoint::zeros(self.dim())
    }

    fn l1_weight(&self) -> f64 {
        self.l1_weight
    }
}

/// Sparsity of `w`: the count of |wᵢ| > `threshold`, and that count divided
/// by ‖w‖₁ (reported as 0 when ‖w‖₁ = 0).
pub fn sparsity_metrics(w: &[f64], threshold: f64) -> (usize, f64) {
    let nnz = w.iter().filter(|v| v.abs() > threshold).count();
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let ratio = if l1 == 0.0 { 0.0 } else { nnz as f64 / l1 };
    (nnz, ratio)
}

// ---------------------------------------------------------------------------
// simplex estimation

/// Cross-entropy f(p) = −Σ qᵢ log pᵢ over the simplex; minimized at p = q.
#[derive(Debug, Clone)]
pub struct SimplexEstimationProblem {
    pub target_q: Vec<f64>,
}

impl SimplexEstimationProblem {
    pub fn new(target_q: Vec<f64>) -> Result<Self, ProblemError> {
        if target_q.is_empty() || target_q.iter().any(|&v| !(v > 0.0)) {
            return Err(ProblemError::InvalidParameter("target_q must be positive".into()));
        }
        if (target_q.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(ProblemError::InvalidParameter("target_q must sum to one".into()));
        }
        Ok(Self { target_q })
    }

    /// qᵢ ∝ U(0.2, 1).
    pub fn generate(d: usize, seed: u64) -> Result<Self, ProblemError> {
        if d == 0 {
            return Err(ProblemError::InvalidParameter("simplex d must be positive".into()));
        }
        let mut rng = data_rng(seed);
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.iter().map(|v| v / total).collect())
    }

    pub fn value_grad(&self, p: &[f64]) -> Result<(f64, DualVector), GeometryError> {
        check_len(p, self.target_q.len())?;
        if let Some((index, &value)) = p.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(GeometryError::Domain { index, value, floor: 0.0 });
        }
        let value = -self.target_q.iter().zip(p).map(|(q, p)| q * p.ln()).sum::<f64>();
        let grad = self.target_q.iter().zip(p).map(|(q, p)| -q / p).collect();
        Ok((value, DualVector(grad)))
    }
}

impl Problem for SimplexEstimationProblem {
    fn name(&self) -> &'static str {
        "simplex_estimation"
    }

    fn dim(&self) -> usize {
        self.target_q.len()
    }

    fn value(&self, p: &PrimalPoint) -> Result<f64, GeometryError> {
        Ok(self.value_grad(p)?.0)
    }

    fn gradient(&self, p: &PrimalPoint) -> Result<DualVector, GeometryError> {
        Ok(self.value_grad(p)?.1)
    }

    fn initial_point(&self) -> PrimalPoint {
        let d = self.dim();
        PrimalPoint(vec![1.0 / d as f64; d])
    }

    fn simplex_constrained(&self) -> bool {
        true
    }

    fn closed_form_solution(&self) -> Option<PrimalPoint> {
        Some(PrimalPoint(self.target_q.clone()))
    }
}

// ---------------------------------------------------------------------------
// diagonal quadratic

/// f(x) = ½ Σ aᵢ (xᵢ − cᵢ)² with curvatures aᵢ spread linearly over
/// [strong_convexity, smoothness].
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub curvature: Vec<f64>,
    pub center: Vec<f64>,
    start: Vec<f64>,
}

impl QuadraticProblem {
    pub fn generate(d: usize, strong_convexity: f64, smoothness: f64, seed: u64) -> Result<Self, ProblemError> {
        if d == 0 || !(strong_convexity > 0.0) || !(smoothness >= strong_convexity) {
            return Err(ProblemError::InvalidParameter(
                "quadratic needs d > 0 and 0 < strong_convexity <= smoothness".into(),
            ));
        }
        let curvature = (0..d)
            .map(|i| {
                if d == 1 {
                    strong_convexity
                } else {
                    strong_convexity + (smoothness - strong_convexity) * i as f64 / (d - 1) as f64
                }
            })
            .collect();
        let mut rng = data_rng(seed);
        let center = standard_normal_vec(&mut rng, d);
        let start = center
            .iter()
            .map(|c| c + 1.0 + normal(&mut rng) * 0.1)
            .collect();
        Ok(Self { curvature, center, start })
    }

    pub fn strong_convexity(&self) -> f64 {
        self.curvature.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn value(&self, x: &PrimalPoint) -> Result<f64, GeometryError> {
        check_len(x, self.dim())?;
        Ok(0.5
            * x.iter()
                .zip(&self.center)
                .zip(&self.curvature)
                .map(|((x, c), a)| a * (x - c) * (x - c))
                .sum::<f64>())
    }

    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        check_len(x, self.dim())?;
        Ok(DualVector(
            x.iter()
                .zip(&self.center)
                .zip(&self.curvature)
                .map(|((x, c), a)| a * (x - c))
                .collect(),
        ))
    }

    fn initial_point(&self) -> PrimalPoint {
        PrimalPoint(self.start.clone())
    }

    fn closed_form_solution(&self) -> Option<PrimalPoint> {
        Some(PrimalPoint(self.center.clone()))
    }
}

// ---------------------------------------------------------------------------
// half-space feasibility

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Find z with ⟨z, uᵢ⟩ ≤ 0 for m random Gaussian normals uᵢ. For m well
/// above d the normals positively span ℝ^d with overwhelming probability, so
/// the feasible set is the origin alone.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub constraints: Vec<HalfSpace>,
    start: Vec<f64>,
}

impl FeasibilityProblem {
    pub fn generate(d: usize, m: usize, seed: u64) -> Result<Self, ProblemError> {
        if d == 0 || m == 0 {
            return Err(ProblemError::InvalidParameter("feasibility needs d, m > 0".into()));
        }
        let mut rng = data_rng(seed);
        let constraints = (0..m)
            .map(|_| HalfSpace {
                normal: standard_normal_vec(&mut rng, d),
                offset: 0.0,
            })
            .collect();
        let start = standard_normal_vec(&mut rng, d);
        Ok(Self { constraints, start })
    }

    fn violations<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (f64, &'a HalfSpace)> + 'a {
        self.constraints
            .iter()
            .map(move |h| ((dot(x, &h.normal) - h.offset).max(0.0), h))
    }
}

impl Problem for FeasibilityProblem {
    fn name(&self) -> &'static str {
        "feasibility"
    }

    fn dim(&self) -> usize {
        self.start.len()
    }

    /// ½ · mean of squared constraint violations.
    fn value(&self, x: &PrimalPoint) -> Result<f64, GeometryError> {
        check_len(x, self.dim())?;
        let m = self.constraints.len() as f64;
        Ok(0.5 * self.violations(x).map(|(v, _)| v * v).sum::<f64>() / m)
    }

    fn gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        check_len(x, self.dim())?;
        let m = self.constraints.len() as f64;
        let mut g = vec![0.0; self.dim()];
        for (v, h) in self.violations(x) {
            for (gi, ui) in g.iter_mut().zip(&h.normal) {
                *gi += v * ui / m;
            }
        }
        Ok(DualVector(g))
    }

    fn initial_point(&self) -> PrimalPoint {
        PrimalPoint(self.start.clone())
    }

    fn closed_form_solution(&self) -> Option<PrimalPoint> {
        Some(PrimalPoint::zeros(self.dim()))
    }

    fn half_spaces(&self) -> Option<&[HalfSpace]> {
        Some(&self.constraints)
    }
}

//! Legendre potentials, Bregman divergences, mirror maps and Bregman
//! projections onto the probability simplex.
//!
//! Everything lives on ℝ^d with the dot-product pairing between primal
//! points and dual vectors, and the Euclidean norm as the dual norm.
//!
//! Two potentials are provided:
//! - squared Euclidean, φ(x) = ½‖x‖², whose mirror map is the identity;
//! - negative entropy, φ(x) = Σ xᵢ log xᵢ, whose mirror map is
//!   ∇φ(x) = 1 + log x and inverse (∇φ)⁻¹(y) = exp(y − 1).

use std::ops::{Deref, DerefMut};

use thiserror::Error;

/// Largest argument accepted by `exp` in the entropy inverse mirror map.
pub const MAX_EXP_ARG: f64 = 700.0;

/// Default lower bound for entropy coordinates.
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coordinate {index} = {value:e} lies below the domain floor {floor:e}")]
    Domain { index: usize, value: f64, floor: f64 },
    #[error("exp argument {arg:e} at coordinate {index} exceeds {MAX_EXP_ARG}; reduce the step size")]
    Overflow { index: usize, arg: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

macro_rules! vector_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                norm(&self.0)
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

vector_newtype!(
    /// A point in the primal space (model parameters, simplex weights).
    PrimalPoint
);
vector_newtype!(
    /// An element of the dual space: gradients, mirror images ∇φ(x).
    DualVector
);

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    SquaredEuclidean,
    NegativeEntropy,
}

/// The mirror map φ on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendrePotential {
    kind: PotentialKind,
    dim: usize,
    domain_floor: f64,
}

impl LegendrePotential {
    pub fn squared_euclidean(dim: usize) -> Self {
        Self {
            kind: PotentialKind::SquaredEuclidean,
            dim,
            domain_floor: DEFAULT_DOMAIN_FLOOR,
        }
    }

    pub fn negative_entropy(dim: usize) -> Self {
        Self::negative_entropy_with_floor(dim, DEFAULT_DOMAIN_FLOOR)
    }

    pub fn negative_entropy_with_floor(dim: usize, domain_floor: f64) -> Self {
        assert!(domain_floor > 0.0, "entropy domain floor must be positive");
        Self {
            kind: PotentialKind::NegativeEntropy,
            dim,
            domain_floor,
        }
    }

    pub fn new(kind: PotentialKind, dim: usize) -> Self {
        match kind {
            PotentialKind::SquaredEuclidean => Self::squared_euclidean(dim),
            PotentialKind::NegativeEntropy => Self::negative_entropy(dim),
        }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), GeometryError> {
        if v.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Dimension check plus, for entropy, the interior-of-domain check.
    pub fn check_domain(&self, x: &[f64]) -> Result<(), GeometryError> {
        self.check_dim(x)?;
        if self.kind == PotentialKind::NegativeEntropy {
            // `!(v >= floor)` also rejects NaN
            if let Some((index, &value)) = x
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v >= self.domain_floor))
            {
                return Err(GeometryError::Domain {
                    index,
                    value,
                    floor: self.domain_floor,
                });
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &PrimalPoint) -> Result<f64, GeometryError> {
        self.check_domain(x)?;
        Ok(match self.kind {
            PotentialKind::SquaredEuclidean => 0.5 * dot(x, x),
            PotentialKind::NegativeEntropy => x.iter().map(|&v| v * v.ln()).sum(),
        })
    }

    pub fn gradient(&self, x: &PrimalPoint) -> Result<DualVector, GeometryError> {
        self.check_domain(x)?;
        Ok(match self.kind {
            PotentialKind::SquaredEuclidean => DualVector(x.0.clone()),
            PotentialKind::NegativeEntropy => DualVector(x.iter().map(|&v| 1.0 + v.ln()).collect()),
        })
    }

    /// (∇φ)⁻¹. For entropy this is the unconstrained map exp(y − 1) followed
    /// by clamping at the domain floor; simplex feasibility is restored
    /// separately by [`LegendrePotential::project_simplex`].
    pub fn gradient_inverse(&self, ystar: &DualVector) -> Result<PrimalPoint, GeometryError> {
        self.check_dim(ystar)?;
        match self.kind {
            PotentialKind::SquaredEuclidean => Ok(PrimalPoint(ystar.0.clone())),
            PotentialKind::NegativeEntropy => ystar
                .iter()
                .enumerate()
                .map(|(index, &y)| {
                    let arg = y - 1.0;
                    if !(arg <= MAX_EXP_ARG) {
                        return Err(GeometryError::Overflow { index, arg });
                    }
                    Ok(arg.exp().max(self.domain_floor))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(PrimalPoint),
        }
    }

    /// D_φ(y, x) = φ(y) − φ(x) − ⟨∇φ(x), y − x⟩.
    pub fn bregman_divergence(&self, y: &PrimalPoint, x: &PrimalPoint) -> Result<f64, GeometryError> {
        self.check_domain(y)?;
        self.check_domain(x)?;
        let d = match self.kind {
            PotentialKind::SquaredEuclidean => {
                0.5 * y.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            // generalized KL: Σ yᵢ log(yᵢ/xᵢ) − yᵢ + xᵢ
            PotentialKind::NegativeEntropy => y
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| a * (a / b).ln() - a + b)
                .sum::<f64>(),
        };
        Ok(d.max(0.0))
    }

    /// Residual of the three-point identity
    /// D(y,x) − D(y,x⁺) − D(x⁺,x) − ⟨∇φ(x⁺) − ∇φ(x), y − x⁺⟩,
    /// which vanishes exactly; the return value is pure rounding error.
    pub fn three_point_gap(
        &self,
        y: &PrimalPoint,
        x: &PrimalPoint,
        xplus: &PrimalPoint,
    ) -> Result<f64, GeometryError> {
        let d_yx = self.bregman_divergence(y, x)?;
        let d_yxp = self.bregman_divergence(y, xplus)?;
        let d_xpx = self.bregman_divergence(xplus, x)?;
        let gx = self.gradient(x)?;
        let gxp = self.gradient(xplus)?;
        let cross: f64 = gxp
            .iter()
            .zip(gx.iter())
            .zip(y.iter().zip(xplus.iter()))
            .map(|((a, b), (c, d))| (a - b) * (c - d))
            .sum();
        Ok(d_yx - d_yxp - d_xpx - cross)
    }

    /// Bregman projection of `x` onto the probability simplex.
    ///
    /// Entropy: multiplicative normalization x / Σx (requires positive
    /// coordinates), clamped at the domain floor. Euclidean: the
    /// sort-and-threshold projection.
    pub fn project_simplex(&self, x: &PrimalPoint) -> Result<PrimalPoint, GeometryError> {
        self.check_dim(x)?;
        match self.kind {
            PotentialKind::SquaredEuclidean => Ok(PrimalPoint(euclidean_simplex_projection(x))),
            PotentialKind::NegativeEntropy => {
                if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                    return Err(GeometryError::Domain {
                        index,
                        value,
                        floor: 0.0,
                    });
                }
                let total: f64 = x.iter().sum();
                let mut p: Vec<f64> = x.iter().map(|v| (v / total).max(self.domain_floor)).collect();
                // the floor can push the sum above one; renormalize only when it did
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-15 {
                    // keep floored coordinates at the floor; the sum stays within ~floor² of one
                    let floor = self.domain_floor;
                    p.iter_mut().for_each(|v| *v = (*v / s).max(floor));
                }
                Ok(PrimalPoint(p))
            }
        }
    }

    /// (∇²φ(x) + damping·I)⁻¹ g, the natural-gradient direction.
    pub fn hessian_inverse_apply(
        &self,
        x: &PrimalPoint,
        g: &DualVector,
        damping: f64,
    ) -> Result<PrimalPoint, GeometryError> {
        self.check_domain(x)?;
        self.check_dim(g)?;
        Ok(PrimalPoint(match self.kind {
            PotentialKind::SquaredEuclidean => g.iter().map(|v| v / (1.0 + damping)).collect(),
            PotentialKind::NegativeEntropy => x
                .iter()
                .zip(g.iter())
                .map(|(&xi, &gi)| {
                    if damping == 0.0 {
                        xi * gi
                    } else {
                        xi * gi / (1.0 + damping * xi)
                    }
                })
                .collect(),
        }))
    }

    /// Clamp entropy coordinates to the domain floor; no-op for Euclidean.
    /// Returns whether any coordinate moved.
    pub fn clamp_to_domain(&self, x: &mut PrimalPoint) -> bool {
        if self.kind != PotentialKind::NegativeEntropy {
            return false;
        }
        let mut moved = false;
        for v in x.iter_mut() {
            if !(*v >= self.domain_floor) {
                *v = self.domain_floor;
                moved = true;
            }
        }
        moved
    }
}

/// Euclidean projection onto {p : p ≥ 0, Σp = 1} by sorting and
/// thresholding. Ties are broken by coordinate index (stable sort).
pub fn euclidean_simplex_projection(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cumulative += x[i];
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if x[i] - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Whether `x` lies on the simplex: every coordinate ≥ `floor` and the sum is
/// one within 1e-12.
pub fn on_simplex(x: &[f64], floor: f64) -> bool {
    x.iter().all(|&v| v >= floor) && (x.iter().sum::<f64>() - 1.0).abs() <= 1e-12
}

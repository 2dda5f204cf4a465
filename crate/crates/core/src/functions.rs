//! Smooth and nonsmooth pieces of `f = f1 + f2` and `g = g1 + g2`.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::linalg::Vector;

/// Slack for indicator membership tests.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Nonsmooth terms with closed-form proxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonsmoothTerm {
    Zero,
    L1 {
        lambda: f64,
    },
    /// Indicator of the probability simplex.
    Simplex,
    /// Indicator of the box `[lower, upper]^n`.
    Box {
        lower: f64,
        upper: f64,
    },
    /// `(weight / 2) ‖x‖²`.
    Quadratic {
        weight: f64,
    },
}

impl NonsmoothTerm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::L1 { .. } => "l1",
            Self::Simplex => "simplex",
            Self::Box { .. } => "box",
            Self::Quadratic { .. } => "quadratic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::L1 { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidParameter(format!("l1 lambda must be >= 0, got {lambda}")))
            }
            Self::Box { lower, upper } if !(lower <= upper) => {
                Err(Error::InvalidParameter(format!("box bounds reversed: [{lower}, {upper}]")))
            }
            Self::Quadratic { weight } if !(weight >= 0.0 && weight.is_finite()) => {
                Err(Error::InvalidParameter(format!("quadratic weight must be >= 0, got {weight}")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        match *self {
            Self::Simplex => {
                x.iter().all(|&v| v >= -DOMAIN_TOL) && (x.sum() - 1.0).abs() <= DOMAIN_TOL * (1.0 + x.len() as f64)
            }
            Self::Box { lower, upper } => x.iter().all(|&v| v >= lower - DOMAIN_TOL && v <= upper + DOMAIN_TOL),
            _ => true,
        }
    }

    /// Value of the term; `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &Vector) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::Simplex | Self::Box { .. } => {
                if self.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Quadratic { weight } => 0.5 * weight * x.dot(x),
        }
    }

    /// `argmin_v term(v) + Σ wᵢ/2 (vᵢ − zᵢ)²` for positive per-coordinate weights.
    pub fn prox_weighted(&self, weights: &[f64], z: &Vector) -> Vector {
        debug_assert_eq!(weights.len(), z.len());
        match *self {
            Self::Zero => z.clone(),
            Self::L1 { lambda } => Vector::from_fn(z.len(), |i, _| soft_threshold(z[i], lambda / weights[i])),
            Self::Box { lower, upper } => z.map(|v| v.clamp(lower, upper)),
            Self::Quadratic { weight } => Vector::from_fn(z.len(), |i, _| weights[i] * z[i] / (weights[i] + weight)),
            Self::Simplex => project_simplex_weighted(weights, z),
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Weighted projection onto the simplex: `argmin Σ wᵢ/2 (vᵢ − zᵢ)²` over the simplex.
///
/// Optimality gives `vᵢ = max(0, zᵢ − λ/wᵢ)` for a scalar `λ`; the sum is
/// piecewise linear in `λ` with breakpoints `wᵢ zᵢ`, so sorting them pins `λ`.
pub fn project_simplex_weighted(weights: &[f64], z: &Vector) -> Vector {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| weights[i] * z[i];
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));

    // Active set = first j entries in descending breakpoint order.
    let mut sum_z = 0.0;
    let mut sum_inv_w = 0.0;
    let mut lambda = key(order[0]) - 1.0 / weights[order[0]];
    for (j, &i) in order.iter().enumerate() {
        sum_z += z[i];
        sum_inv_w += 1.0 / weights[i];
        let candidate = (sum_z - 1.0) / sum_inv_w;
        let next_break = order.get(j + 1).map(|&k| key(k)).unwrap_or(f64::NEG_INFINITY);
        if candidate >= next_break {
            lambda = candidate;
            break;
        }
    }
    Vector::from_fn(n, |i, _| (z[i] - lambda / weights[i]).max(0.0))
}

/// Gradient oracle for a smooth part that is not a plain quadratic.
pub trait SmoothOracle: Debug + Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn lipschitz(&self) -> f64;
}

/// `(curvature / 2) ‖x − center‖² + ⟨linear, x⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticTerm {
    pub curvature: f64,
    pub center: Vector,
    pub linear: Vector,
}

impl QuadraticTerm {
    pub fn isotropic(curvature: f64, dim: usize) -> Self {
        Self { curvature, center: Vector::zeros(dim), linear: Vector::zeros(dim) }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        0.5 * self.curvature * d.dot(&d) + self.linear.dot(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (x - &self.center) * self.curvature + &self.linear
    }
}

#[derive(Clone, Debug)]
pub enum SmoothTerm {
    Zero,
    Quadratic(QuadraticTerm),
    Oracle(Arc<dyn SmoothOracle>),
}

impl SmoothTerm {
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Quadratic(q) => q.value(x),
            Self::Oracle(o) => o.value(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            Self::Zero => Vector::zeros(x.len()),
            Self::Quadratic(q) => q.gradient(x),
            Self::Oracle(o) => o.gradient(x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Quadratic(q) => q.curvature,
            Self::Oracle(o) => o.lipschitz(),
        }
    }
}

/// One side of the saddle problem: `h = h1 + h2` together with its geometry.
#[derive(Clone, Debug)]
pub struct ConvexPart {
    pub smooth: SmoothTerm,
    pub nonsmooth: NonsmoothTerm,
    /// Strong-convexity modulus relative to the geometry's prox-function.
    pub mu: f64,
    pub geometry: Geometry,
}

impl ConvexPart {
    pub fn new(smooth: SmoothTerm, nonsmooth: NonsmoothTerm, mu: f64, geometry: Geometry) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be finite and >= 0, got {mu}")));
        }
        let lip = smooth.lipschitz();
        if !(lip >= 0.0 && lip.is_finite()) {
            return Err(Error::InvalidParameter(format!("lipschitz constant must be >= 0, got {lip}")));
        }
        nonsmooth.validate()?;
        geometry.validate()?;
        geometry.check_prox_support(&nonsmooth)?;
        Ok(Self { smooth, nonsmooth, mu, geometry })
    }

    /// Zero function on the Euclidean geometry.
    pub fn zero() -> Self {
        Self { smooth: SmoothTerm::Zero, nonsmooth: NonsmoothTerm::Zero, mu: 0.0, geometry: Geometry::Euclidean }
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let h2 = self.nonsmooth.value(x);
        if h2.is_infinite() {
            return h2;
        }
        self.smooth.value(x) + h2
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        self.nonsmooth.contains(x)
    }

    pub fn smooth_gradient(&self, x: &Vector) -> Vector {
        self.smooth.gradient(x)
    }

    /// Full gradient when the nonsmooth part is differentiable.
    pub fn full_gradient(&self, x: &Vector) -> Result<Vector> {
        let g = self.smooth.gradient(x);
        match self.nonsmooth {
            NonsmoothTerm::Zero => Ok(g),
            NonsmoothTerm::Quadratic { weight } => Ok(g + x * weight),
            _ => Err(Error::Config(format!("gradient requested for nonsmooth term `{}`", self.nonsmooth.name()))),
        }
    }

    /// `argmin_u h1(u) + h2(u) + ⟨c, u⟩ + (ρ/2) Σ rᵢ (uᵢ − zᵢ)²` for a
    /// quadratic `h1` and metric weights `r`.
    pub fn prox_full(&self, rho: f64, metric: &[f64], center: &Vector, linear: &Vector) -> Result<Vector> {
        let n = center.len();
        let (curv, anchor_term) = match &self.smooth {
            SmoothTerm::Zero => (0.0, Vector::zeros(n)),
            SmoothTerm::Quadratic(q) => (q.curvature, &q.center * q.curvature - &q.linear),
            SmoothTerm::Oracle(_) => {
                return Err(Error::Config(
                    "closed-form prox of the full objective needs a quadratic smooth part".into(),
                ))
            }
        };
        let weights: Vec<f64> = metric.iter().map(|r| rho * r + curv).collect();
        let z = Vector::from_fn(n, |i, _| (rho * metric[i] * center[i] + anchor_term[i] - linear[i]) / weights[i]);
        Ok(self.nonsmooth.prox_weighted(&weights, &z))
    }
}

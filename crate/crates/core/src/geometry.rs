//! Prox-functions, Bregman divergences and Bregman proxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::NonsmoothTerm;
use crate::linalg::Vector;

/// Floor applied before taking logarithms in the entropy geometry.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// `φ = ½‖x‖²`.
    Euclidean,
    /// `φ = ½ Σ rᵢ xᵢ²` with positive weights.
    Weighted { weights: Vec<f64> },
    /// `φ = Σ xᵢ ln xᵢ` on the positive orthant.
    Entropy,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Weighted { .. } => "weighted",
            Self::Entropy => "entropy",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Weighted { weights } = self {
            if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidParameter("weighted geometry needs positive finite weights".into()));
            }
        }
        Ok(())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Self::Weighted { weights } if weights.len() != dim => {
                Err(Error::Dimension(format!("geometry has {} weights for a {dim}-dimensional space", weights.len())))
            }
            _ => Ok(()),
        }
    }

    /// Whether a closed-form Bregman prox is registered for `term`.
    pub fn supports(&self, term: &NonsmoothTerm) -> bool {
        match self {
            Self::Euclidean | Self::Weighted { .. } => true,
            Self::Entropy => matches!(term, NonsmoothTerm::Zero | NonsmoothTerm::L1 { .. } | NonsmoothTerm::Simplex),
        }
    }

    pub fn check_prox_support(&self, term: &NonsmoothTerm) -> Result<()> {
        if self.supports(term) {
            Ok(())
        } else {
            Err(Error::UnsupportedProx { geometry: self.name().into(), term: term.name().into() })
        }
    }

    /// Per-coordinate metric for quadratic geometries, `None` for entropy.
    pub fn metric(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            Self::Euclidean => Some(vec![1.0; dim]),
            Self::Weighted { weights } => Some(weights.clone()),
            Self::Entropy => None,
        }
    }

    /// Strong-convexity modulus of `φ` with respect to `½‖·‖²`.
    ///
    /// Entropy is 1-strongly convex on the simplex only, which is where it is used.
    pub fn modulus(&self) -> f64 {
        match self {
            Self::Weighted { weights } => weights.iter().copied().fold(f64::INFINITY, f64::min),
            _ => 1.0,
        }
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        match self {
            Self::Entropy => x.iter().all(|&v| v >= 0.0 && v.is_finite()),
            _ => x.iter().all(|v| v.is_finite()),
        }
    }

    fn in_interior(&self, x: &Vector) -> bool {
        match self {
            Self::Entropy => x.iter().all(|&v| v > 0.0 && v.is_finite()),
            _ => self.in_domain(x),
        }
    }

    pub fn phi(&self, x: &Vector) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("{} prox-function", self.name())));
        }
        Ok(match self {
            Self::Euclidean => 0.5 * x.dot(x),
            Self::Weighted { weights } => 0.5 * x.iter().zip(weights).map(|(v, r)| r * v * v).sum::<f64>(),
            Self::Entropy => x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum(),
        })
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("{} prox-function", self.name())));
        }
        Ok(match self {
            Self::Euclidean => x.clone(),
            Self::Weighted { weights } => Vector::from_fn(x.len(), |i, _| weights[i] * x[i]),
            Self::Entropy => x.map(|v| 1.0 + v.max(ENTROPY_FLOOR).ln()),
        })
    }

    /// `D(x, v) = φ(x) − φ(v) − ⟨∇φ(v), x − v⟩`.
    pub fn bregman(&self, x: &Vector, v: &Vector) -> Result<f64> {
        if x.len() != v.len() {
            return Err(Error::Dimension(format!("bregman arguments of length {} and {}", x.len(), v.len())));
        }
        if !self.in_domain(x) || !self.in_interior(v) {
            return Err(Error::Domain(format!("{} bregman divergence", self.name())));
        }
        Ok(match self {
            Self::Euclidean => 0.5 * crate::linalg::dist_sq(x, v),
            Self::Weighted { weights } => 0.5 * (0..x.len()).map(|i| weights[i] * (x[i] - v[i]).powi(2)).sum::<f64>(),
            Self::Entropy => (0..x.len())
                .map(|i| {
                    let (a, b) = (x[i], v[i]);
                    if a > 0.0 {
                        a * (a / b).ln() - a + b
                    } else {
                        b
                    }
                })
                .sum(),
        })
    }

    /// `argmin_v term(v) + ⟨c, v⟩ + θ D(v, v̄)`.
    pub fn bregman_prox(&self, term: &NonsmoothTerm, c: &Vector, theta: f64, anchor: &Vector) -> Result<Vector> {
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("prox weight must be positive, got {theta}")));
        }
        if c.len() != anchor.len() {
            return Err(Error::Dimension("prox linear term and anchor differ in length".into()));
        }
        let out = match self {
            Self::Euclidean | Self::Weighted { .. } => {
                let metric = self.metric(c.len()).unwrap_or_default();
                let weights: Vec<f64> = metric.iter().map(|r| theta * r).collect();
                let z = Vector::from_fn(c.len(), |i, _| anchor[i] - c[i] / weights[i]);
                term.prox_weighted(&weights, &z)
            }
            Self::Entropy => entropy_prox(term, c, theta, anchor)?,
        };
        crate::linalg::ensure_finite(&out, "bregman prox")?;
        Ok(out)
    }
}

fn entropy_prox(term: &NonsmoothTerm, c: &Vector, theta: f64, anchor: &Vector) -> Result<Vector> {
    let logits =
        |shift: f64| Vector::from_fn(c.len(), |i, _| anchor[i].max(ENTROPY_FLOOR).ln() - (c[i] + shift) / theta);
    match term {
        NonsmoothTerm::Zero => Ok(logits(0.0).map(f64::exp)),
        NonsmoothTerm::L1 { lambda } => Ok(logits(*lambda).map(f64::exp)),
        NonsmoothTerm::Simplex => Ok(entropy_simplex_prox(c, theta, anchor)),
        other => Err(Error::UnsupportedProx { geometry: "entropy".into(), term: other.name().into() }),
    }
}

/// Multiplicative update `vᵢ ∝ v̄ᵢ exp(−cᵢ/θ)`, normalised in shifted log space.
pub fn entropy_simplex_prox(c: &Vector, theta: f64, anchor: &Vector) -> Vector {
    let logits = Vector::from_fn(c.len(), |i, _| anchor[i].max(ENTROPY_FLOOR).ln() - c[i] / theta);
    let top = logits.max();
    let weights = logits.map(|l| (l - top).exp().max(ENTROPY_FLOOR));
    let total = weights.sum();
    weights / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(Geometry::Euclidean.bregman(&v(&[3.0]), &v(&[1.0])).unwrap(), 2.0);
        let kl = Geometry::Entropy.bregman(&v(&[0.5, 0.5]), &v(&[0.25, 0.75])).unwrap();
        assert_relative_eq!(kl, 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln(), epsilon = 1e-15);
        assert_relative_eq!(kl, 0.143841, epsilon = 1e-6);
        for g in [Geometry::Euclidean, Geometry::Weighted { weights: vec![2.0, 3.0] }, Geometry::Entropy] {
            assert_eq!(g.bregman(&v(&[0.3, 0.7]), &v(&[0.3, 0.7])).unwrap(), 0.0);
        }
    }

    #[test]
    fn entropy_rejects_boundary_anchor() {
        assert!(Geometry::Entropy.bregman(&v(&[0.5, 0.5]), &v(&[0.0, 1.0])).is_err());
        assert!(Geometry::Entropy.bregman(&v(&[0.0, 1.0]), &v(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn entropy_simplex_prox_examples() {
        let u = v(&[0.5, 0.5]);
        assert_relative_eq!(entropy_simplex_prox(&v(&[0.0, 0.0]), 1.0, &u), u, epsilon = 1e-15);
        let theta = 3.0;
        let p = entropy_simplex_prox(&v(&[2f64.ln() * theta, 0.0]), theta, &u);
        assert_relative_eq!(p, v(&[1.0 / 3.0, 2.0 / 3.0]), epsilon = 1e-15);
        let p = entropy_simplex_prox(&v(&[5.0, -5.0]), 1e12, &u);
        assert_relative_eq!(p, u, epsilon = 1e-9);
    }

    #[test]
    fn entropy_prox_survives_huge_linear_terms() {
        let p = entropy_simplex_prox(&v(&[-1e6, 1e6, 0.0]), 1e-3, &v(&[0.2, 0.3, 0.5]));
        assert!(p.iter().all(|x| x.is_finite() && *x > 0.0));
        assert_relative_eq!(p.sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unsupported_entropy_terms() {
        let g = Geometry::Entropy;
        assert!(g.check_prox_support(&NonsmoothTerm::Box { lower: 0.0, upper: 1.0 }).is_err());
        assert!(g.check_prox_support(&NonsmoothTerm::Quadratic { weight: 1.0 }).is_err());
        assert!(g.check_prox_support(&NonsmoothTerm::Simplex).is_ok());
    }

    #[test]
    fn weighted_modulus_is_smallest_weight() {
        assert_eq!(Geometry::Weighted { weights: vec![3.0, 0.5, 2.0] }.modulus(), 0.5);
        assert!(Geometry::Weighted { weights: vec![1.0, 0.0] }.validate().is_err());
    }
}

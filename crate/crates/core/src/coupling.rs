//! The bilinear coupling operator `A`.

use std::fmt::Debug;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{seeded_rng, Matrix, Vector};

/// Tolerance used for the operator-norm estimate stored on every coupling.
pub const OPNORM_TOL: f64 = 1e-6;

pub trait LinearCoupling: Debug + Send + Sync {
    /// `(m, n)`: `A` maps `R^n` into `R^m`.
    fn dims(&self) -> (usize, usize);
    fn apply(&self, x: &Vector) -> Vector;
    fn adjoint(&self, y: &Vector) -> Vector;
    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;
    /// Dense copy, when one is available.
    fn to_dense(&self) -> Option<Matrix> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct DenseCoupling {
    matrix: Matrix,
    norm_bound: f64,
}

impl DenseCoupling {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite { term: "coupling matrix".into() });
        }
        let norm_bound = operator_norm_estimate(&matrix, OPNORM_TOL)?;
        Ok(Self { matrix, norm_bound })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl LinearCoupling for DenseCoupling {
    fn dims(&self) -> (usize, usize) {
        (self.matrix.nrows(), self.matrix.ncols())
    }

    fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    fn adjoint(&self, y: &Vector) -> Vector {
        self.matrix.tr_mul(y)
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn to_dense(&self) -> Option<Matrix> {
        Some(self.matrix.clone())
    }
}

/// Power iteration on `AᵀA` from a fixed seeded start.
///
/// The returned value is the converged estimate inflated by `1 + tol`.
/// The iteration itself stops when successive estimates agree to `tol / 10`
/// relative, or after a generous sweep cap.
pub fn operator_norm_estimate(a: &Matrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 || a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut rng = seeded_rng(0x0005_eed0_fa11);
    let mut x = Vector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    x /= x.norm();

    let inner_tol = tol / 10.0;
    let mut estimate = 0.0_f64;
    let max_sweeps = 20_000 + 50 * n;
    for _ in 0..max_sweeps {
        let ax = a * &x;
        let ata_x = a.tr_mul(&ax);
        let next = ax.norm();
        let len = ata_x.norm();
        if len == 0.0 {
            // Start happened to lie in the kernel; fall back to a coordinate sweep.
            break;
        }
        x = ata_x / len;
        let converged = (next - estimate).abs() <= inner_tol * next;
        estimate = next;
        if converged {
            break;
        }
    }
    // The Rayleigh quotient only approaches the top singular value from below;
    // the Frobenius norm caps any overshoot from the inflation.
    let sigma = estimate.max(column_norm_floor(a));
    let inflated = sigma * (1.0 + tol);
    Ok(inflated.min(a.norm()))
}

/// Largest column norm, a cheap lower bound on `‖A‖`.
fn column_norm_floor(a: &Matrix) -> f64 {
    a.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

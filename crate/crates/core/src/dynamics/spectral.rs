//! Block matrices of the lifted linear flow for the quadratic game
//! `f = g = μ/2‖·‖²` and their discretizations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{eigenvalues, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticGame {
    pub mu: f64,
    /// m×n coupling; the joint variable is `z = (x, y)` with `x ∈ ℝⁿ`.
    pub a: Matrix,
}

impl QuadraticGame {
    pub fn new(mu: f64, a: Matrix) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("quadratic game needs mu > 0, got {mu}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { term: "quadratic game coupling".into() });
        }
        Ok(Self { mu, a })
    }

    /// Dimension of `z = (x, y)`.
    pub fn dim(&self) -> usize {
        self.a.nrows() + self.a.ncols()
    }

    /// Largest singular value from a full SVD (no inflation).
    pub fn opnorm(&self) -> f64 {
        if self.a.is_empty() {
            return 0.0;
        }
        self.a.clone().singular_values().max()
    }

    /// Step at which Gauss-Seidel stability is guaranteed to hold with equality.
    pub fn max_stable_alpha(&self) -> f64 {
        2.0 * self.mu / self.opnorm()
    }
}

pub fn build_q(game: &QuadraticGame) -> Matrix {
    let (m, n) = game.a.shape();
    let mut q = Matrix::identity(n + m, n + m) * game.mu;
    q.view_mut((0, n), (n, m)).copy_from(&game.a.transpose());
    q.view_mut((n, 0), (m, n)).copy_from(&(-&game.a));
    q
}

fn lifted(game: &QuadraticGame, lower_left: Matrix, lower_right: Matrix) -> Matrix {
    let d = game.dim();
    let mut g = Matrix::zeros(2 * d, 2 * d);
    g.view_mut((0, 0), (d, d)).copy_from(&(-Matrix::identity(d, d)));
    g.view_mut((0, d), (d, d)).copy_from(&Matrix::identity(d, d));
    g.view_mut((d, 0), (d, d)).copy_from(&lower_left);
    g.view_mut((d, d), (d, d)).copy_from(&lower_right);
    g
}

/// `[[−I, I], [I − Q/μ, −I]]`
pub fn build_g_nag(game: &QuadraticGame) -> Matrix {
    let d = game.dim();
    let q = build_q(game) / game.mu;
    lifted(game, Matrix::identity(d, d) - q, -Matrix::identity(d, d))
}

/// `[[−I, I], [0, −Q/μ]]`
pub fn build_g_new(game: &QuadraticGame) -> Matrix {
    let d = game.dim();
    lifted(game, Matrix::zeros(d, d), -build_q(game) / game.mu)
}

/// `[(1+α)I − αL]⁻¹ (I + αU)` with `L`, `U` the strict lower and upper
/// parts of `G_new + I`.
pub fn gs_iteration_matrix(game: &QuadraticGame, alpha: f64) -> Result<Matrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let b = build_g_new(game) + Matrix::identity(2 * game.dim(), 2 * game.dim());
    let size = b.nrows();
    let rhs = Matrix::from_fn(size, size, |i, j| {
        let diag = if i == j { 1.0 } else { 0.0 };
        if j > i {
            diag + alpha * b[(i, j)]
        } else {
            diag
        }
    });
    let diag = 1.0 + alpha;
    let mut out = Matrix::zeros(size, size);
    for col in 0..size {
        for i in 0..size {
            let mut acc = rhs[(i, col)];
            for k in 0..i {
                acc += alpha * b[(i, k)] * out[(k, col)];
            }
            out[(i, col)] = acc / diag;
        }
    }
    Ok(out)
}

/// Eigenvalue of `G_nag` with the largest real part.
pub fn instability_witness(game: &QuadraticGame) -> Result<Option<Complex64>> {
    Ok(eigenvalues(&build_g_nag(game), 1e-8)?.rightmost())
}

/// Real part of the rightmost eigenvalue of `G_nag` predicted from `‖A‖`.
pub fn predicted_instability(mu: f64, opnorm: f64) -> f64 {
    -1.0 + (opnorm / (2.0 * mu)).sqrt()
}

/// Spectral radius of `I − αQ` in closed form.
pub fn explicit_euler_radius(mu: f64, opnorm: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(((mu * mu + opnorm * opnorm) * alpha * alpha - 2.0 * mu * alpha + 1.0).sqrt())
}

pub fn explicit_euler_matrix(game: &QuadraticGame, alpha: f64) -> Matrix {
    let d = game.dim();
    Matrix::identity(d, d) - build_q(game) * alpha
}

pub fn spectrum(m: &Matrix) -> Result<Spectrum> {
    eigenvalues(m, 1e-8)
}

//! Lyapunov functions and the descent/gap certificates built from them.

use crate::error::Result;
use crate::linalg::{norm_sq, Vector};
use crate::problem::{gap, SaddleProblem};
use crate::solvers::IterateState;

/// Scaling pair `Θ = (γ, β)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub gamma: f64,
    pub beta: f64,
}

/// `gap + γ/2‖v − x̂‖² + β/2‖w − ŷ‖²`.
pub fn lyapunov_e(
    theta: Scaling,
    z: &IterateState,
    saddle: (&Vector, &Vector),
    problem: &SaddleProblem,
) -> Result<f64> {
    let g = gap(problem, &z.x, &z.y, saddle)?;
    Ok(g + 0.5 * theta.gamma * norm_sq(&(&z.v - saddle.0)) + 0.5 * theta.beta * norm_sq(&(&z.w - saddle.1)))
}

/// `gap + γ D_φ(x̂, v) + β D_ψ(ŷ, w)` in the problem's own geometries.
pub fn lyapunov_ed(
    theta: Scaling,
    z: &IterateState,
    saddle: (&Vector, &Vector),
    problem: &SaddleProblem,
) -> Result<f64> {
    let g = gap(problem, &z.x, &z.y, saddle)?;
    let dv = if theta.gamma == 0.0 { 0.0 } else { theta.gamma * problem.f.geometry.bregman(saddle.0, &z.v)? };
    let dw = if theta.beta == 0.0 { 0.0 } else { theta.beta * problem.g.geometry.bregman(saddle.1, &z.w)? };
    Ok(g + dv + dw)
}

/// `α ⟨A(v − x̂), w − ŷ⟩`.
pub fn cross_term(alpha: f64, z: &IterateState, saddle: (&Vector, &Vector), problem: &SaddleProblem) -> f64 {
    alpha * problem.coupling.apply(&(&z.v - saddle.0)).dot(&(&z.w - saddle.1))
}

/// `𝓔_D − α⟨A(v − x̂), w − ŷ⟩`.
pub fn lyapunov_h(
    alpha: f64,
    theta: Scaling,
    z: &IterateState,
    saddle: (&Vector, &Vector),
    problem: &SaddleProblem,
) -> Result<f64> {
    Ok(lyapunov_ed(theta, z, saddle, problem)? - cross_term(alpha, z, saddle, problem))
}

/// Whether `‖A‖²α² ≤ γβ`, under which `H ≥ gap` is guaranteed.
pub fn cross_term_controlled(alpha: f64, theta: Scaling, opnorm: f64) -> bool {
    (opnorm * alpha).powi(2) <= theta.gamma * theta.beta * (1.0 + 1e-12)
}

/// `H_{k+1} − H_k + α_k H_{k+1} + Ω_k`; nonpositive when the descent inequality holds.
pub fn descent_residual(h_k: f64, h_next: f64, alpha_k: f64, omega_k: f64) -> f64 {
    h_next - h_k + alpha_k * h_next + omega_k
}

pub fn gap_from_certificate(theta_k: f64, h0: f64) -> f64 {
    2.0 * theta_k * h0
}

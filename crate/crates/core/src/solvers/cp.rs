use crate::error::Result;
use crate::linalg::Vector;
use crate::problem::SaddleProblem;

/// Baseline state `(x, y, x̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpState {
    pub x: Vector,
    pub y: Vector,
    pub x_bar: Vector,
}

impl CpState {
    pub fn new(x: Vector, y: Vector) -> Self {
        Self { x_bar: x.clone(), x, y }
    }
}

/// One relaxed primal-dual step; `theta_relax = 0` gives plain PDHG.
pub fn cp_step(problem: &SaddleProblem, state: &CpState, tau: f64, sigma: f64, theta_relax: f64) -> Result<CpState> {
    let (m, n) = problem.dims();
    let a = &problem.coupling;
    let x_plus =
        problem.f.prox_full(1.0 / tau, &vec![1.0; n], &(&state.x - a.adjoint(&state.y) * tau), &Vector::zeros(n))?;
    let x_bar = &x_plus + (&x_plus - &state.x) * theta_relax;
    let y_plus =
        problem.g.prox_full(1.0 / sigma, &vec![1.0; m], &(&state.y + a.apply(&x_bar) * sigma), &Vector::zeros(m))?;
    Ok(CpState { x: x_plus, y: y_plus, x_bar })
}

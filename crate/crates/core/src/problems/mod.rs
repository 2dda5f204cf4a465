//! Seeded problem families with independently computed saddle points.

mod lp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{ConvexPart, NonsmoothTerm, QuadraticTerm, SmoothTerm};
use crate::geometry::Geometry;
use crate::linalg::{Matrix, Vector};
use crate::problem::{generate_matrix, sample_matrix, SaddleProblem};
use crate::solvers::{cp_step, CpState};

pub use lp::{solve_matrix_game, MatrixGameSolution};

/// Saddle points handed out by the zoo satisfy this prox fixed-point residual.
pub const SADDLE_KKT_TOL: f64 = 1e-8;
pub const LASSO_ORACLE_TOL: f64 = 1e-9;
pub const LASSO_ORACLE_MAX_ITERS: usize = 1_000_000;
pub const QP_RANK_FLOOR: f64 = 1e-3;
pub const QP_MAX_RESAMPLES: usize = 10;

fn default_entropy() -> Geometry {
    Geometry::Entropy
}

/// Everything needed to regenerate a zoo instance bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZooSpec {
    QuadraticGame {
        n: usize,
        m: usize,
        mu: f64,
        seed: u64,
    },
    Lasso {
        n: usize,
        m: usize,
        lambda_reg: f64,
        mu_f: f64,
        seed: u64,
    },
    MatrixGame {
        n: usize,
        m: usize,
        seed: u64,
        #[serde(default = "default_entropy")]
        primal_geometry: Geometry,
        #[serde(default = "default_entropy")]
        dual_geometry: Geometry,
    },
    ConstrainedQp {
        n: usize,
        m: usize,
        mu_f: f64,
        seed: u64,
    },
}

impl ZooSpec {
    pub fn family(&self) -> &'static str {
        match self {
            Self::QuadraticGame { .. } => "quadratic_game",
            Self::Lasso { .. } => "lasso",
            Self::MatrixGame { .. } => "matrix_game",
            Self::ConstrainedQp { .. } => "constrained_qp",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::QuadraticGame { seed, .. }
            | Self::Lasso { seed, .. }
            | Self::MatrixGame { seed, .. }
            | Self::ConstrainedQp { seed, .. } => *seed,
        }
    }

    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::QuadraticGame { seed, .. }
            | Self::Lasso { seed, .. }
            | Self::MatrixGame { seed, .. }
            | Self::ConstrainedQp { seed, .. } => *seed = new_seed,
        }
        out
    }

    pub fn build(&self) -> Result<SaddleProblem> {
        match self.clone() {
            Self::QuadraticGame { n, m, mu, seed } => make_quadratic_game(n, m, mu, seed),
            Self::Lasso { n, m, lambda_reg, mu_f, seed } => make_lasso_saddle(n, m, lambda_reg, mu_f, seed),
            Self::MatrixGame { n, m, seed, primal_geometry, dual_geometry } => {
                make_matrix_game_with(n, m, seed, primal_geometry, dual_geometry)
            }
            Self::ConstrainedQp { n, m, mu_f, seed } => make_constrained_qp(n, m, mu_f, seed),
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

fn quadratic_part(term: QuadraticTerm, nonsmooth: NonsmoothTerm, mu: f64, geometry: Geometry) -> Result<ConvexPart> {
    ConvexPart::new(SmoothTerm::Quadratic(term), nonsmooth, mu, geometry)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `f = g = μ/2‖·‖²` with a Gaussian `A`; the saddle is the origin.
pub fn make_quadratic_game(n: usize, m: usize, mu: f64, seed: u64) -> Result<SaddleProblem> {
    positive("mu", mu)?;
    let a = generate_matrix("gaussian", m, n, seed)?;
    quadratic_game_from_matrix(mu, a)
}

pub fn quadratic_game_from_matrix(mu: f64, a: Matrix) -> Result<SaddleProblem> {
    positive("mu", mu)?;
    let (m, n) = a.shape();
    let f = quadratic_part(QuadraticTerm::isotropic(mu, n), NonsmoothTerm::Zero, mu, Geometry::Euclidean)?;
    let g = quadratic_part(QuadraticTerm::isotropic(mu, m), NonsmoothTerm::Zero, mu, Geometry::Euclidean)?;
    SaddleProblem::dense(f, g, a)?.with_saddle(Vector::zeros(n), Vector::zeros(m))
}

/// `f = μf/2‖x‖² + λ‖x‖₁`, `g = ½‖y‖² + ⟨b, y⟩`, so the primal objective is
/// `f(x) + ½‖Ax − b‖²`.
pub fn make_lasso_saddle(n: usize, m: usize, lambda_reg: f64, mu_f: f64, seed: u64) -> Result<SaddleProblem> {
    let a = generate_matrix("gaussian", m, n, seed)?;
    let b = gaussian_vector(&mut stream(seed, 1), m);
    lasso_from_data(a, b, lambda_reg, mu_f)
}

pub fn lasso_from_data(a: Matrix, b: Vector, lambda_reg: f64, mu_f: f64) -> Result<SaddleProblem> {
    positive("lambda_reg", lambda_reg)?;
    if !(mu_f >= 0.0 && mu_f.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu_f must be >= 0, got {mu_f}")));
    }
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension(format!("b must have length {m}")));
    }
    let f = quadratic_part(
        QuadraticTerm::isotropic(mu_f, n),
        NonsmoothTerm::L1 { lambda: lambda_reg },
        mu_f,
        Geometry::Euclidean,
    )?;
    let g_term = QuadraticTerm { curvature: 1.0, center: Vector::zeros(m), linear: b };
    let g = quadratic_part(g_term, NonsmoothTerm::Zero, 1.0, Geometry::Euclidean)?;
    let problem = SaddleProblem::dense(f, g, a)?;
    let (x, y) = lasso_oracle(&problem)?;
    problem.with_saddle(x, y)
}

fn lasso_data(problem: &SaddleProblem) -> Result<(Matrix, Vector, f64, f64)> {
    let a = problem.coupling.to_dense().ok_or_else(|| Error::Oracle("lasso oracle needs a dense coupling".into()))?;
    let b = match &problem.g.smooth {
        SmoothTerm::Quadratic(q) => q.linear.clone(),
        _ => return Err(Error::Oracle("lasso oracle expects a quadratic dual term".into())),
    };
    let lambda = match problem.f.nonsmooth {
        NonsmoothTerm::L1 { lambda } => lambda,
        _ => return Err(Error::Oracle("lasso oracle expects an l1 primal term".into())),
    };
    Ok((a, b, lambda, problem.f.lipschitz()))
}

/// Solves the reduced normal equations on the support of `x` with its signs
/// fixed; returns `None` when the system is singular.
fn polish_on_support(a: &Matrix, b: &Vector, lambda: f64, mu_f: f64, x: &Vector) -> Option<(Vector, Vector)> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > 1e-10).collect();
    let mut out = Vector::zeros(x.len());
    if !support.is_empty() {
        let a_s = a.select_columns(&support);
        let signs = Vector::from_iterator(support.len(), support.iter().map(|&i| x[i].signum()));
        let lhs = a_s.transpose() * &a_s + Matrix::identity(support.len(), support.len()) * mu_f;
        let rhs = a_s.transpose() * b - signs * lambda;
        let sol = lhs.lu().solve(&rhs)?;
        for (k, &i) in support.iter().enumerate() {
            out[i] = sol[k];
        }
    }
    let y = a * &out - b;
    Some((out, y))
}

/// Saddle of the lasso reformulation from a long conservative CP run,
/// finished by a support-restricted linear solve and accepted only if the
/// prox fixed-point residual is at most [`LASSO_ORACLE_TOL`].
pub fn lasso_oracle(problem: &SaddleProblem) -> Result<(Vector, Vector)> {
    let (a, b, lambda, mu_f) = lasso_data(problem)?;
    let (m, n) = problem.dims();
    let norm = problem.opnorm().max(1e-12);
    let (tau, sigma) = (0.9 / norm, 0.9 / norm);
    let mut state = CpState::new(Vector::zeros(n), Vector::zeros(m));
    let mut best = f64::INFINITY;
    let mut best_point = (state.x.clone(), state.y.clone());
    for k in 1..=LASSO_ORACLE_MAX_ITERS {
        state = cp_step(problem, &state, tau, sigma, 1.0)?;
        if k % 500 != 0 {
            continue;
        }
        let mut candidates = vec![(state.x.clone(), state.y.clone())];
        if let Some(p) = polish_on_support(&a, &b, lambda, mu_f, &state.x) {
            candidates.push(p);
        }
        for (x, y) in candidates {
            let r = problem.kkt_residual(&x, &y)?;
            if r < best {
                best = r;
                best_point = (x, y);
            }
        }
        if best <= 1e-13 {
            break;
        }
    }
    if best <= LASSO_ORACLE_TOL {
        Ok(best_point)
    } else {
        Err(Error::Oracle(format!("lasso oracle stalled at KKT residual {best:e}")))
    }
}

pub fn make_matrix_game(n: usize, m: usize, seed: u64) -> Result<SaddleProblem> {
    make_matrix_game_with(n, m, seed, Geometry::Entropy, Geometry::Entropy)
}

/// Payoff `A ∈ [−1, 1]^{m×n}`, both players on simplices; `x` minimizes `⟨Ax, y⟩`.
pub fn make_matrix_game_with(n: usize, m: usize, seed: u64, primal: Geometry, dual: Geometry) -> Result<SaddleProblem> {
    matrix_game_from_payoff(generate_matrix("uniform", m, n, seed)?, primal, dual)
}

pub fn matrix_game_from_payoff(a: Matrix, primal: Geometry, dual: Geometry) -> Result<SaddleProblem> {
    let f = ConvexPart::new(SmoothTerm::Zero, NonsmoothTerm::Simplex, 0.0, primal)?;
    let g = ConvexPart::new(SmoothTerm::Zero, NonsmoothTerm::Simplex, 0.0, dual)?;
    let sol = solve_matrix_game(&a)?;
    SaddleProblem::dense(f, g, a)?.with_saddle(sol.x, sol.y)
}

/// `min ½μf‖x − a‖² s.t. Ax = b`, written with `g(y) = ⟨b, y⟩`.
pub fn make_constrained_qp(n: usize, m: usize, mu_f: f64, seed: u64) -> Result<SaddleProblem> {
    positive("mu_f", mu_f)?;
    if m > n {
        return Err(Error::Dimension(format!("constrained QP needs m <= n, got m={m}, n={n}")));
    }
    let mut rng = stream(seed, 0);
    for _ in 0..QP_MAX_RESAMPLES {
        let a = sample_matrix("gaussian", m, n, &mut rng)?;
        if m == 0 || a.clone().singular_values().min() > QP_RANK_FLOOR {
            let mut vec_rng = stream(seed, 1);
            let center = gaussian_vector(&mut vec_rng, n);
            let b = gaussian_vector(&mut vec_rng, m);
            return constrained_qp_from_data(mu_f, a, center, b);
        }
    }
    Err(Error::Oracle(format!("no full-row-rank coupling after {QP_MAX_RESAMPLES} draws")))
}

pub fn constrained_qp_from_data(mu_f: f64, a: Matrix, center: Vector, b: Vector) -> Result<SaddleProblem> {
    positive("mu_f", mu_f)?;
    let (m, n) = a.shape();
    if center.len() != n || b.len() != m {
        return Err(Error::Dimension("constrained QP data has inconsistent lengths".into()));
    }
    let (x, y) = qp_kkt_solve(mu_f, &a, &center, &b)?;
    let f_term = QuadraticTerm { curvature: mu_f, center, linear: Vector::zeros(n) };
    let f = quadratic_part(f_term, NonsmoothTerm::Zero, mu_f, Geometry::Euclidean)?;
    let g_term = QuadraticTerm { curvature: 0.0, center: Vector::zeros(m), linear: b };
    let g = quadratic_part(g_term, NonsmoothTerm::Zero, 0.0, Geometry::Euclidean)?;
    SaddleProblem::dense(f, g, a)?.with_saddle(x, y)
}

/// `[[μf I, Aᵀ], [A, 0]] [x; y] = [μf a; b]`.
fn qp_kkt_solve(mu_f: f64, a: &Matrix, center: &Vector, b: &Vector) -> Result<(Vector, Vector)> {
    let (m, n) = a.shape();
    let mut k = Matrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).fill_with_identity();
    k.view_mut((0, 0), (n, n)).scale_mut(mu_f);
    k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    k.view_mut((n, 0), (m, n)).copy_from(a);
    let mut rhs = Vector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(center * mu_f));
    rhs.rows_mut(n, m).copy_from(b);
    let sol = k.lu().solve(&rhs).ok_or_else(|| Error::Oracle("singular KKT system".into()))?;
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, m).into_owned()))
}

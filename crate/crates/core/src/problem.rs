//! Saddle problems `min_x max_y f(x) + ⟨Ax, y⟩ − g(y)`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coupling::{DenseCoupling, LinearCoupling};
use crate::error::{Error, Result};
use crate::functions::{ConvexPart, NonsmoothTerm, QuadraticTerm, SmoothTerm};
use crate::geometry::Geometry;
use crate::linalg::{from_row_major, seeded_rng, to_row_major, Matrix, Vector};

/// Inputs of the composed prox used by the momentum-form updates:
///
/// `argmin_u h(u) + ⟨c, u⟩ + a·D(u + (u − u_prev)/s, anchor) − b·D(u, anchor)`.
#[derive(Debug)]
pub struct ComposedProxRequest<'a> {
    pub part: &'a ConvexPart,
    pub linear: &'a Vector,
    pub weight: f64,
    pub scale: f64,
    pub prev: &'a Vector,
    pub anchor: &'a Vector,
    pub modulus: f64,
}

/// User-supplied solver for the composed prox in a non-quadratic geometry.
pub trait ComposedProxOracle: Debug + Send + Sync {
    fn solve(&self, req: &ComposedProxRequest<'_>) -> Result<Vector>;
}

#[derive(Clone, Debug)]
pub struct SaddleProblem {
    pub f: ConvexPart,
    pub g: ConvexPart,
    pub coupling: Arc<dyn LinearCoupling>,
    pub known_saddle: Option<(Vector, Vector)>,
    pub primal_prox: Option<Arc<dyn ComposedProxOracle>>,
    pub dual_prox: Option<Arc<dyn ComposedProxOracle>>,
}

impl SaddleProblem {
    pub fn new(f: ConvexPart, g: ConvexPart, coupling: Arc<dyn LinearCoupling>) -> Result<Self> {
        let (m, n) = coupling.dims();
        f.geometry.check_dim(n)?;
        g.geometry.check_dim(m)?;
        Ok(Self { f, g, coupling, known_saddle: None, primal_prox: None, dual_prox: None })
    }

    pub fn dense(f: ConvexPart, g: ConvexPart, a: Matrix) -> Result<Self> {
        Self::new(f, g, Arc::new(DenseCoupling::new(a)?))
    }

    pub fn with_saddle(mut self, x: Vector, y: Vector) -> Result<Self> {
        let (m, n) = self.dims();
        if x.len() != n || y.len() != m {
            return Err(Error::Dimension("known saddle does not match problem dimensions".into()));
        }
        self.known_saddle = Some((x, y));
        Ok(self)
    }

    pub fn with_composed_prox(
        mut self,
        primal: Option<Arc<dyn ComposedProxOracle>>,
        dual: Option<Arc<dyn ComposedProxOracle>>,
    ) -> Self {
        self.primal_prox = primal;
        self.dual_prox = dual;
        self
    }

    /// `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        self.coupling.dims()
    }

    pub fn opnorm(&self) -> f64 {
        self.coupling.norm_bound()
    }

    /// A deterministic feasible starting point for each side.
    pub fn default_start(&self) -> (Vector, Vector) {
        let (m, n) = self.dims();
        (start_for(&self.f, n), start_for(&self.g, m))
    }

    /// Largest prox fixed-point residual of a candidate saddle.
    ///
    /// Uses `x = prox_f(x − Aᵀy)` and `y = prox_g(y + Ax)` with unit steps.
    pub fn kkt_residual(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let (m, n) = self.dims();
        let rx = self.f.prox_full(1.0, &vec![1.0; n], &(x - self.coupling.adjoint(y)), &Vector::zeros(n))?;
        let ry = self.g.prox_full(1.0, &vec![1.0; m], &(y + self.coupling.apply(x)), &Vector::zeros(m))?;
        Ok((rx - x).amax().max((ry - y).amax()))
    }
}

fn start_for(part: &ConvexPart, dim: usize) -> Vector {
    match part.nonsmooth {
        NonsmoothTerm::Simplex => Vector::from_element(dim, 1.0 / dim as f64),
        NonsmoothTerm::Box { lower, upper } => Vector::from_element(dim, 1.0f64.clamp(lower, upper)),
        _ => Vector::from_element(dim, 1.0),
    }
}

fn finite(term: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { term: term.into() })
    }
}

/// `L(x, y)`; `+∞` when `x` leaves `dom f`, `−∞` when `y` leaves `dom g`.
pub fn lagrangian_value(problem: &SaddleProblem, x: &Vector, y: &Vector) -> Result<f64> {
    let (m, n) = problem.dims();
    if x.len() != n || y.len() != m {
        return Err(Error::Dimension(format!("expected x in R^{n} and y in R^{m}")));
    }
    let fx = problem.f.value(x);
    if fx == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let gy = problem.g.value(y);
    if gy == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let fx = finite("f", fx)?;
    let gy = finite("g", gy)?;
    let bilinear = finite("coupling", problem.coupling.apply(x).dot(y))?;
    Ok(fx + bilinear - gy)
}

/// `L(x, ŷ) − L(x̂, y)`.
pub fn gap(problem: &SaddleProblem, x: &Vector, y: &Vector, saddle: (&Vector, &Vector)) -> Result<f64> {
    let (xh, yh) = saddle;
    for (name, ok) in [
        ("x", problem.f.in_domain(x)),
        ("x̂", problem.f.in_domain(xh)),
        ("y", problem.g.in_domain(y)),
        ("ŷ", problem.g.in_domain(yh)),
    ] {
        if !ok {
            return Err(Error::Domain(format!("gap argument {name}")));
        }
    }
    Ok(lagrangian_value(problem, x, yh)? - lagrangian_value(problem, xh, y)?)
}

// ---------------------------------------------------------------------------
// JSON document format

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingDoc {
    /// Row-major entries.
    Dense { data: Vec<f64> },
    /// Entries drawn from a named distribution.
    Generator { name: String, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothDoc {
    Zero,
    Quadratic {
        curvature: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartDoc {
    pub smooth: SmoothDoc,
    pub nonsmooth: NonsmoothTerm,
    pub mu: f64,
    /// Informational; the value is recomputed from `smooth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub geometry: Geometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleDoc {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDoc {
    #[serde(default)]
    pub name: String,
    pub dims: Dims,
    pub coupling: CouplingDoc,
    pub f: PartDoc,
    pub g: PartDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_saddle: Option<SaddleDoc>,
}

/// Dense matrix from a named generator: `gaussian` or `uniform` on `[−1, 1]`.
pub fn generate_matrix(name: &str, m: usize, n: usize, seed: u64) -> Result<Matrix> {
    sample_matrix(name, m, n, &mut seeded_rng(seed))
}

/// Like [`generate_matrix`] but drawing from a caller-owned generator.
pub fn sample_matrix<R: Rng>(name: &str, m: usize, n: usize, rng: &mut R) -> Result<Matrix> {
    let mut a = Matrix::zeros(m, n);
    // Fill row by row so the draw order matches the row-major file layout.
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = match name {
                "gaussian" => StandardNormal.sample(rng),
                "uniform" => rng.random_range(-1.0..=1.0),
                other => return Err(Error::Config(format!("unknown matrix generator `{other}`"))),
            };
        }
    }
    Ok(a)
}

fn vec_of_len(data: &Option<Vec<f64>>, len: usize, what: &str) -> Result<Vector> {
    match data {
        None => Ok(Vector::zeros(len)),
        Some(v) if v.len() == len => Ok(Vector::from_vec(v.clone())),
        Some(v) => Err(Error::Dimension(format!("{what} has length {} but {len} was expected", v.len()))),
    }
}

impl PartDoc {
    fn build(&self, dim: usize, side: &str) -> Result<ConvexPart> {
        let smooth = match &self.smooth {
            SmoothDoc::Zero => SmoothTerm::Zero,
            SmoothDoc::Quadratic { curvature, center, linear } => SmoothTerm::Quadratic(QuadraticTerm {
                curvature: *curvature,
                center: vec_of_len(center, dim, &format!("{side}.smooth.center"))?,
                linear: vec_of_len(linear, dim, &format!("{side}.smooth.linear"))?,
            }),
        };
        self.geometry.check_dim(dim)?;
        ConvexPart::new(smooth, self.nonsmooth.clone(), self.mu, self.geometry.clone())
    }

    fn from_part(part: &ConvexPart) -> Result<Self> {
        let smooth = match &part.smooth {
            SmoothTerm::Zero => SmoothDoc::Zero,
            SmoothTerm::Quadratic(q) => SmoothDoc::Quadratic {
                curvature: q.curvature,
                center: (q.center.iter().any(|&v| v != 0.0)).then(|| q.center.iter().copied().collect()),
                linear: (q.linear.iter().any(|&v| v != 0.0)).then(|| q.linear.iter().copied().collect()),
            },
            SmoothTerm::Oracle(_) => return Err(Error::Config("oracle smooth terms cannot be serialized".into())),
        };
        Ok(Self {
            smooth,
            nonsmooth: part.nonsmooth.clone(),
            mu: part.mu,
            lipschitz: Some(part.lipschitz()),
            geometry: part.geometry.clone(),
        })
    }
}

impl ProblemDoc {
    pub fn build(&self) -> Result<SaddleProblem> {
        let Dims { m, n } = self.dims;
        let a = match &self.coupling {
            CouplingDoc::Dense { data } => from_row_major(m, n, data)?,
            CouplingDoc::Generator { name, seed } => generate_matrix(name, m, n, *seed)?,
        };
        let f = self.f.build(n, "f")?;
        let g = self.g.build(m, "g")?;
        let problem = SaddleProblem::dense(f, g, a)?;
        match &self.known_saddle {
            None => Ok(problem),
            Some(s) => problem.with_saddle(Vector::from_vec(s.x.clone()), Vector::from_vec(s.y.clone())),
        }
    }

    /// Serializes a problem with its matrix entries written out explicitly.
    pub fn from_problem(name: &str, problem: &SaddleProblem) -> Result<Self> {
        let (m, n) = problem.dims();
        let a = problem
            .coupling
            .to_dense()
            .ok_or_else(|| Error::Config("only dense couplings can be serialized".into()))?;
        Ok(Self {
            name: name.to_string(),
            dims: Dims { m, n },
            coupling: CouplingDoc::Dense { data: to_row_major(&a) },
            f: PartDoc::from_part(&problem.f)?,
            g: PartDoc::from_part(&problem.g)?,
            known_saddle: problem
                .known_saddle
                .as_ref()
                .map(|(x, y)| SaddleDoc { x: x.iter().copied().collect(), y: y.iter().copied().collect() }),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

//! Accelerated Bregman primal-dual splitting for bilinear saddle problems
//! `min_x max_y f(x) + ⟨Ax, y⟩ − g(y)`, with Lyapunov certificates checked
//! online, plus spectral and continuous-time tooling for the quadratic game.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod linalg;
pub mod lyapunov;
pub mod params;
pub mod problem;
pub mod problems;
pub mod solvers;

pub use analysis::{fit_rate, FitOutcome, RateFit, RateMode};
pub use coupling::{operator_norm_estimate, DenseCoupling, LinearCoupling};
pub use error::{Error, Result};
pub use functions::{ConvexPart, NonsmoothTerm, QuadraticTerm, SmoothOracle, SmoothTerm};
pub use geometry::Geometry;
pub use linalg::{Matrix, Vector};
pub use lyapunov::Scaling;
pub use params::{ParamConfig, ParamState, StepRule};
pub use problem::{gap, lagrangian_value, ProblemDoc, SaddleProblem};
pub use problems::ZooSpec;
pub use solvers::{solve, solve_from, Algorithm, IterateState, SolverConfig, StartPoint, Trace};

//! One-step maps and the driver loop.

mod abpd;
mod cp;
mod driver;
mod trace;

use serde::{Deserialize, Serialize};

use crate::linalg::Vector;

pub use abpd::{abpd_pgs_step, abpd_ps_step, effective_params, sym_abpd_pgs_step, AbpdStepper};
pub use cp::{cp_step, CpState};
pub use driver::{solve, solve_from, CertificateSummary, Termination, Trace};
pub use trace::{format_float, write_trace_csv, TraceRecord, TRACE_COLUMNS};

/// `Z = (x, v, y, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Vector,
    pub v: Vector,
    pub y: Vector,
    pub w: Vector,
}

impl IterateState {
    /// `v = x` and `w = y`.
    pub fn from_point(x: Vector, y: Vector) -> Self {
        Self { v: x.clone(), w: y.clone(), x, y }
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.v, &self.y, &self.w].iter().all(|u| crate::linalg::all_finite(u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    AbpdPs,
    AbpdPgs,
    SymAbpdPgs,
    #[serde(rename = "cp")]
    ChambollePock,
    Pdhg,
}

impl Algorithm {
    pub fn step_rule(self) -> Option<crate::params::StepRule> {
        use crate::params::StepRule;
        match self {
            Self::AbpdPs => Some(StepRule::Ps),
            Self::AbpdPgs => Some(StepRule::Pgs),
            Self::SymAbpdPgs => Some(StepRule::Sym),
            Self::ChambollePock | Self::Pdhg => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AbpdPs => "abpd-ps",
            Self::AbpdPgs => "abpd-pgs",
            Self::SymAbpdPgs => "sym-abpd-pgs",
            Self::ChambollePock => "cp",
            Self::Pdhg => "pdhg",
        }
    }
}

/// Explicit starting point; `v`/`w` default to `x`/`y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub gamma0: f64,
    #[serde(default = "one")]
    pub beta0: f64,
    #[serde(default)]
    pub chi: f64,
    pub max_iters: usize,
    /// Stop once the gap against the known saddle drops to this value.
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default = "every")]
    pub certificate_every: usize,
    /// Baseline primal step; defaults to `0.99/‖A‖`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "one")]
    pub theta_relax: f64,
    #[serde(default)]
    pub start: Option<StartPoint>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, max_iters: usize) -> Self {
        Self {
            algorithm,
            gamma0: 1.0,
            beta0: 1.0,
            chi: 0.0,
            max_iters,
            gap_tol: None,
            certificate_every: 1,
            tau: None,
            sigma: None,
            theta_relax: 1.0,
            start: None,
        }
    }
}

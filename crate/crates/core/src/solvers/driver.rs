use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, Vector};
use crate::lyapunov::{descent_residual, gap_from_certificate, lyapunov_h, Scaling};
use crate::params::{theta_bound, Hypotheses, ParamState, StepRule};
use crate::problem::{gap, SaddleProblem};

use super::abpd::{effective_params, AbpdStepper};
use super::cp::{cp_step, CpState};
use super::trace::TraceRecord;
use super::{Algorithm, IterateState, SolverConfig};

/// Relative floating-point slack used by every certificate check.
pub const CERT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    IterationCap,
    GapTolerance,
    NonFinite { k: usize, detail: String },
}

/// Running tallies of every online certificate.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CertificateSummary {
    /// False when the problem has no known saddle or the method has no certificate.
    pub certified: bool,
    pub h0: Option<f64>,
    pub descent_checks: usize,
    pub descent_violations: usize,
    /// Largest `residual / (1 + |H_k|)` seen.
    pub max_descent_excess: f64,
    pub gap_violations: usize,
    /// Largest `(gap + strong-convexity terms) / (2θ_k H_0)`.
    pub max_gap_ratio: f64,
    pub summability_sum: f64,
    pub summability_violation: bool,
    pub telescoping_violations: usize,
    pub nonnegativity_violations: usize,
    pub hypotheses: Option<Hypotheses>,
    pub theta_bound_violations: usize,
    /// Largest `θ_k / bound_k` over `k ≥ 1` when the hypotheses hold.
    pub theta_bound_max_ratio: f64,
}

impl CertificateSummary {
    pub fn violated(&self) -> bool {
        self.descent_violations > 0
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub records: Vec<TraceRecord>,
    pub final_state: IterateState,
    pub final_params: Option<ParamState>,
    pub iterations: usize,
    pub termination: Termination,
    pub certificate: CertificateSummary,
    pub warnings: Vec<String>,
}

/// Runs from `config.start`, or the problem's default start.
pub fn solve(problem: &SaddleProblem, config: &SolverConfig) -> Result<Trace> {
    let z0 = start_state(problem, config)?;
    solve_from(problem, config, z0)
}

fn start_state(problem: &SaddleProblem, config: &SolverConfig) -> Result<IterateState> {
    let (m, n) = problem.dims();
    let Some(s) = &config.start else {
        let (x, y) = problem.default_start();
        return Ok(IterateState::from_point(x, y));
    };
    let vec = |data: &[f64], len: usize, name: &str| -> Result<Vector> {
        if data.len() != len {
            return Err(Error::Config(format!("start.{name} has length {}, expected {len}", data.len())));
        }
        Ok(Vector::from_column_slice(data))
    };
    let x = vec(&s.x, n, "x")?;
    let y = vec(&s.y, m, "y")?;
    let v = s.v.as_deref().map(|d| vec(d, n, "v")).transpose()?.unwrap_or_else(|| x.clone());
    let w = s.w.as_deref().map(|d| vec(d, m, "w")).transpose()?.unwrap_or_else(|| y.clone());
    Ok(IterateState { x, v, y, w })
}

pub fn solve_from(problem: &SaddleProblem, config: &SolverConfig, z0: IterateState) -> Result<Trace> {
    if config.certificate_every == 0 {
        return Err(Error::Config("certificate_every must be at least 1".into()));
    }
    if config.gap_tol.is_some() && problem.known_saddle.is_none() {
        return Err(Error::Config("gap_tol needs a problem with a known saddle".into()));
    }
    let (m, n) = problem.dims();
    if z0.x.len() != n || z0.v.len() != n || z0.y.len() != m || z0.w.len() != m {
        return Err(Error::Dimension("starting point does not match problem dimensions".into()));
    }
    match config.algorithm.step_rule() {
        Some(rule) => run_abpd(problem, config, rule, z0),
        None => run_baseline(problem, config, z0),
    }
}

struct Point {
    gap: Option<f64>,
    h: Option<f64>,
    dist_x: Option<f64>,
    dist_y: Option<f64>,
}

fn check_start(problem: &SaddleProblem, z: &IterateState) -> Result<()> {
    let (f, g) = (&problem.f, &problem.g);
    let ok = f.in_domain(&z.x)
        && g.in_domain(&z.y)
        && f.geometry.in_domain(&z.x)
        && g.geometry.in_domain(&z.y)
        && f.geometry.bregman(&z.v, &z.v).is_ok()
        && g.geometry.bregman(&z.w, &z.w).is_ok();
    if ok {
        Ok(())
    } else {
        Err(Error::Config("starting point lies outside the problem or geometry domain".into()))
    }
}

fn is_numeric_failure(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. } | Error::Domain(_))
}

fn run_abpd(problem: &SaddleProblem, config: &SolverConfig, rule: StepRule, z0: IterateState) -> Result<Trace> {
    check_start(problem, &z0)?;
    let cfg = effective_params(problem, config.gamma0, config.beta0, config.chi);
    let stepper = AbpdStepper::new(problem, rule, cfg)?;
    let mut p = stepper.initial_params()?;
    let mut z = z0;
    let mut warnings = Vec::new();
    let saddle = problem.known_saddle.as_ref().map(|(x, y)| (x, y));
    if saddle.is_none() {
        warnings.push("no known saddle; certificates disabled".to_string());
    }
    let hyps = cfg.hypotheses(rule);
    if rule == StepRule::Pgs && !hyps.beta0_ge_mu_g {
        warnings.push("beta0 < mu_g: the PGS descent inequality is not covered".into());
    }
    if rule == StepRule::Sym && !(hyps.gamma0_ge_mu_f && hyps.beta0_ge_mu_g) {
        warnings.push("gamma0 < mu_f or beta0 < mu_g: the symmetric descent inequality is not covered".into());
    }
    let mut cert = CertificateSummary { certified: saddle.is_some(), hypotheses: Some(hyps), ..Default::default() };

    let evaluate = |z: &IterateState, p: &ParamState| -> Result<Point> {
        let Some(s) = saddle else {
            return Ok(Point { gap: None, h: None, dist_x: None, dist_y: None });
        };
        let g = gap(problem, &z.x, &z.y, s)?;
        let h = lyapunov_h(p.alpha, Scaling { gamma: p.gamma, beta: p.beta }, z, s, problem)?;
        Ok(Point { gap: Some(g), h: Some(h), dist_x: Some(dist_sq(&z.x, s.0)), dist_y: Some(dist_sq(&z.y, s.1)) })
    };
    // gap + μf D_φ(x, x̂) + μg D_ψ(y, ŷ), which is the certified quantity.
    let certified_lhs = |z: &IterateState, g: f64| -> Result<f64> {
        let (xh, yh) = saddle.expect("certified run");
        let mut lhs = g;
        if problem.f.mu > 0.0 {
            lhs += problem.f.mu * problem.f.geometry.bregman(&z.x, xh)?;
        }
        if problem.g.mu > 0.0 {
            lhs += problem.g.mu * problem.g.geometry.bregman(&z.y, yh)?;
        }
        Ok(lhs)
    };

    let mut cur = evaluate(&z, &p)?;
    let h0 = cur.h;
    cert.h0 = h0;
    let mut omega_over_theta = 0.0;
    let mut records = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut k = 0;

    let check_point =
        |cert: &mut CertificateSummary, z: &IterateState, p: &ParamState, pt: &Point, omega_sum: f64| -> Result<()> {
            let (Some(g), Some(h), Some(h0)) = (pt.gap, pt.h, h0) else {
                return Ok(());
            };
            let rhs = gap_from_certificate(p.theta, h0);
            let lhs = certified_lhs(z, g)?;
            if lhs > rhs * (1.0 + CERT_SLACK) {
                cert.gap_violations += 1;
            }
            if rhs > 0.0 {
                cert.max_gap_ratio = cert.max_gap_ratio.max(lhs / rhs);
            }
            let tele = h + p.theta * omega_sum;
            if tele > p.theta * h0 * (1.0 + CERT_SLACK) + CERT_SLACK * h.abs() {
                cert.telescoping_violations += 1;
            }
            if h < g - CERT_SLACK * (1.0 + h.abs()) {
                cert.nonnegativity_violations += 1;
            }
            if p.k >= 1 && hyps.all() {
                let b = theta_bound(rule, p.k, &cfg).value;
                if p.theta > b * (1.0 + 1e-12) {
                    cert.theta_bound_violations += 1;
                }
                cert.theta_bound_max_ratio = cert.theta_bound_max_ratio.max(p.theta / b);
            }
            Ok(())
        };
    check_point(&mut cert, &z, &p, &cur, 0.0)?;

    while k < config.max_iters {
        let stepped = stepper.step(&z, &p);
        let (z1, p1) = match stepped {
            Ok(pair) if pair.0.is_finite() => pair,
            Ok(_) => {
                termination = Termination::NonFinite { k: k + 1, detail: "iterate became non-finite".into() };
                break;
            }
            Err(e) if is_numeric_failure(&e) => {
                termination = Termination::NonFinite { k: k + 1, detail: e.to_string() };
                break;
            }
            Err(e) => return Err(e),
        };
        let next = match evaluate(&z1, &p1) {
            Ok(pt) => pt,
            Err(e) if is_numeric_failure(&e) => {
                termination = Termination::NonFinite { k: k + 1, detail: e.to_string() };
                break;
            }
            Err(e) => return Err(e),
        };
        let dv2 = dist_sq(&z1.v, &z.v);
        let dw2 = dist_sq(&z1.w, &z.w);
        let omega = match rule {
            StepRule::Sym => 0.0,
            _ => config.chi * (0.5 * p.gamma * dv2 + 0.5 * p.beta * dw2),
        };
        let residual = match (cur.h, next.h) {
            (Some(hk), Some(h1)) => {
                let r = descent_residual(hk, h1, p.alpha, omega);
                cert.descent_checks += 1;
                let excess = r / (1.0 + hk.abs());
                cert.max_descent_excess =
                    if cert.descent_checks == 1 { excess } else { cert.max_descent_excess.max(excess) };
                if r > CERT_SLACK * (1.0 + hk.abs()) {
                    cert.descent_violations += 1;
                }
                Some(r)
            }
            _ => None,
        };
        if k % config.certificate_every == 0 {
            records.push(TraceRecord {
                k,
                params: Some(p),
                gap: cur.gap,
                h: cur.h,
                bound: h0.map(|h0| gap_from_certificate(p.theta, h0)),
                dist_x: cur.dist_x,
                dist_y: cur.dist_y,
                dv2: Some(dv2),
                dw2: Some(dw2),
                descent_residual: residual,
            });
        }
        omega_over_theta += omega / p.theta;
        cert.summability_sum += config.chi / p.theta * (p.gamma * dv2 + p.beta * dw2);
        z = z1;
        p = p1;
        cur = next;
        k += 1;
        check_point(&mut cert, &z, &p, &cur, omega_over_theta)?;
        if let (Some(tol), Some(g)) = (config.gap_tol, cur.gap) {
            if g <= tol {
                termination = Termination::GapTolerance;
                break;
            }
        }
    }
    if let Some(h0) = h0 {
        cert.summability_violation = cert.summability_sum > 4.0 * h0 * (1.0 + CERT_SLACK) + CERT_SLACK;
    }
    records.push(TraceRecord {
        k,
        params: Some(p),
        gap: cur.gap,
        h: cur.h,
        bound: h0.map(|h0| gap_from_certificate(p.theta, h0)),
        dist_x: cur.dist_x,
        dist_y: cur.dist_y,
        dv2: None,
        dw2: None,
        descent_residual: None,
    });
    Ok(Trace {
        algorithm: config.algorithm,
        records,
        final_state: z,
        final_params: Some(p),
        iterations: k,
        termination,
        certificate: cert,
        warnings,
    })
}

fn run_baseline(problem: &SaddleProblem, config: &SolverConfig, z0: IterateState) -> Result<Trace> {
    let opnorm = problem.opnorm();
    let default_step = if opnorm > 0.0 { 0.99 / opnorm } else { 1.0 };
    let tau = config.tau.unwrap_or(default_step);
    let sigma = config.sigma.unwrap_or(default_step);
    if !(tau > 0.0 && sigma > 0.0) {
        return Err(Error::Config("tau and sigma must be positive".into()));
    }
    let theta_relax = match config.algorithm {
        Algorithm::Pdhg => 0.0,
        _ => config.theta_relax,
    };
    if config.algorithm == Algorithm::ChambollePock && !(theta_relax > 0.0 && theta_relax <= 1.0) {
        return Err(Error::Config(format!("theta_relax must lie in (0, 1], got {theta_relax}")));
    }
    let mut warnings = Vec::new();
    if tau * sigma * opnorm * opnorm > 1.0 {
        warnings.push(format!("tau*sigma*‖A‖² = {} exceeds 1", tau * sigma * opnorm * opnorm));
    }
    let saddle = problem.known_saddle.as_ref();
    let record = |k: usize, s: &CpState| -> Result<TraceRecord> {
        let (g, dx, dy) = match saddle {
            Some((xh, yh)) => {
                (Some(gap(problem, &s.x, &s.y, (xh, yh))?), Some(dist_sq(&s.x, xh)), Some(dist_sq(&s.y, yh)))
            }
            None => (None, None, None),
        };
        Ok(TraceRecord {
            k,
            params: None,
            gap: g,
            h: None,
            bound: None,
            dist_x: dx,
            dist_y: dy,
            dv2: None,
            dw2: None,
            descent_residual: None,
        })
    };
    let mut s = CpState::new(z0.x, z0.y);
    let mut records = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut k = 0;
    while k < config.max_iters {
        if k % config.certificate_every == 0 {
            records.push(record(k, &s)?);
        }
        let next = cp_step(problem, &s, tau, sigma, theta_relax)?;
        if !(crate::linalg::all_finite(&next.x) && crate::linalg::all_finite(&next.y)) {
            termination = Termination::NonFinite { k: k + 1, detail: "iterate became non-finite".into() };
            break;
        }
        s = next;
        k += 1;
        if let (Some(tol), Some((xh, yh))) = (config.gap_tol, saddle) {
            if gap(problem, &s.x, &s.y, (xh, yh))? <= tol {
                termination = Termination::GapTolerance;
                break;
            }
        }
    }
    records.push(record(k, &s)?);
    Ok(Trace {
        algorithm: config.algorithm,
        records,
        final_state: IterateState { v: s.x.clone(), w: s.y.clone(), x: s.x, y: s.y },
        final_params: None,
        iterations: k,
        termination,
        certificate: CertificateSummary::default(),
        warnings,
    })
}

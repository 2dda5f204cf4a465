//! Fixed-step RK4 integration of the continuous-time primal-dual flow on
//! `(Z, Θ) = (x, v, y, w, γ, β)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{all_finite, Vector};
use crate::lyapunov::{lyapunov_e, Scaling};
use crate::problem::SaddleProblem;
use crate::solvers::format_float;
use crate::solvers::IterateState;

pub const MAX_STEP: f64 = 1e-2;
pub const MAX_HORIZON: f64 = 50.0;
pub const BLOWUP_NORM: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub z: IterateState,
    pub scaling: Scaling,
}

impl FlowState {
    pub fn new(x: Vector, v: Vector, y: Vector, w: Vector, gamma: f64, beta: f64) -> Self {
        Self { z: IterateState { x, v, y, w }, scaling: Scaling { gamma, beta } }
    }

    fn pack(&self) -> Vector {
        let z = &self.z;
        let mut out = Vec::with_capacity(2 * z.x.len() + 2 * z.y.len() + 2);
        for part in [&z.x, &z.v, &z.y, &z.w] {
            out.extend(part.iter());
        }
        out.push(self.scaling.gamma);
        out.push(self.scaling.beta);
        Vector::from_vec(out)
    }

    fn unpack(flat: &Vector, n: usize, m: usize) -> Self {
        let seg = |start: usize, len: usize| flat.rows(start, len).into_owned();
        Self::new(seg(0, n), seg(n, n), seg(2 * n, m), seg(2 * n + m, m), flat[2 * n + 2 * m], flat[2 * n + 2 * m + 1])
    }

    fn z_norm(&self) -> f64 {
        let z = &self.z;
        (z.x.norm_squared() + z.v.norm_squared() + z.y.norm_squared() + z.w.norm_squared()).sqrt()
    }
}

fn check_smooth(problem: &SaddleProblem) -> Result<()> {
    for (part, side) in [(&problem.f, "f"), (&problem.g, "g")] {
        if part.geometry != Geometry::Euclidean {
            return Err(Error::Config(format!("flow integration needs Euclidean geometry on {side}")));
        }
    }
    Ok(())
}

/// Time derivative of `(Z, Θ)`.
pub fn apdg_flow_rhs(problem: &SaddleProblem, state: &FlowState) -> Result<FlowState> {
    let Scaling { gamma, beta } = state.scaling;
    if !(gamma > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "flow scaling must stay positive, got gamma={gamma}, beta={beta}"
        )));
    }
    let IterateState { x, v, y, w } = &state.z;
    let (mu_f, mu_g) = (problem.f.mu, problem.g.mu);
    let dv = ((x - v) * mu_f - problem.f.full_gradient(x)? - problem.coupling.adjoint(w)) / gamma;
    let dw = ((y - w) * mu_g + problem.coupling.apply(v) - problem.g.full_gradient(y)?) / beta;
    Ok(FlowState::new(v - x, dv, w - y, dw, mu_f - gamma, mu_g - beta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub state: FlowState,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory {
    pub h: f64,
    pub samples: Vec<FlowSample>,
}

impl FlowTrajectory {
    pub fn final_energy(&self) -> f64 {
        self.samples.last().map(|s| s.energy).unwrap_or(f64::NAN)
    }

    /// `max_t E(t) / (e^{−t} E(0)) − 1`; nonpositive when decay holds exactly.
    pub fn decay_excess(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().skip(1).map(|s| s.energy / (e0 * (-s.t).exp()) - 1.0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Columns `t, x_*, y_*, E`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        if let Some(first) = self.samples.first() {
            let mut header = vec!["t".to_string()];
            header.extend((0..first.state.z.x.len()).map(|i| format!("x{i}")));
            header.extend((0..first.state.z.y.len()).map(|i| format!("y{i}")));
            header.push("E".into());
            out.write_record(&header)?;
        }
        for s in &self.samples {
            let mut row = vec![format_float(s.t)];
            row.extend(s.state.z.x.iter().chain(s.state.z.y.iter()).map(|&v| format_float(v)));
            row.push(format_float(s.energy));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Classical RK4 with step `h` up to time `t_end`, sampling every `sample_every` steps
/// (the final state is always sampled).
pub fn integrate_flow(
    problem: &SaddleProblem,
    start: &FlowState,
    t_end: f64,
    h: f64,
    sample_every: usize,
) -> Result<FlowTrajectory> {
    check_smooth(problem)?;
    if !(h > 0.0 && h <= MAX_STEP) {
        return Err(Error::InvalidParameter(format!("step h must lie in (0, {MAX_STEP}], got {h}")));
    }
    if !(0.0..=MAX_HORIZON).contains(&t_end) {
        return Err(Error::InvalidParameter(format!("horizon T must lie in [0, {MAX_HORIZON}], got {t_end}")));
    }
    let steps_f = t_end / h;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidParameter(format!("T/h must be an integer, got {steps_f}")));
    }
    let saddle =
        problem.known_saddle.as_ref().ok_or_else(|| Error::Config("flow energy needs a known saddle".into()))?;
    let saddle = (&saddle.0, &saddle.1);
    let (m, n) = problem.dims();
    if start.z.x.len() != n || start.z.v.len() != n || start.z.y.len() != m || start.z.w.len() != m {
        return Err(Error::Dimension(format!("flow start must have x, v in R^{n} and y, w in R^{m}")));
    }
    let every = sample_every.max(1);
    let energy = |s: &FlowState| lyapunov_e(s.scaling, &s.z, saddle, problem);
    let rhs = |flat: &Vector| -> Result<Vector> { Ok(apdg_flow_rhs(problem, &FlowState::unpack(flat, n, m))?.pack()) };

    let mut flat = start.pack();
    let mut samples = vec![FlowSample { t: 0.0, state: start.clone(), energy: energy(start)? }];
    for step in 1..=steps {
        let k1 = rhs(&flat)?;
        let k2 = rhs(&(&flat + &k1 * (h / 2.0)))?;
        let k3 = rhs(&(&flat + &k2 * (h / 2.0)))?;
        let k4 = rhs(&(&flat + &k3 * h))?;
        flat += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t = step as f64 * h;
        let state = FlowState::unpack(&flat, n, m);
        if !all_finite(&flat) || state.z_norm() > BLOWUP_NORM {
            return Err(Error::BlowUp { t });
        }
        if step % every == 0 || step == steps {
            let e = energy(&state)?;
            samples.push(FlowSample { t, state, energy: e });
        }
    }
    Ok(FlowTrajectory { h, samples })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RichardsonCheck {
    pub defect_h: f64,
    pub defect_half: f64,
    /// `defect_h / defect_half`; close to 17 for a fourth-order method.
    pub ratio: f64,
}

/// Compares runs at `h` and `h/2` against a reference at `h/4`; each defect is
/// the largest energy discrepancy over the common sample times.
pub fn richardson_check(
    problem: &SaddleProblem,
    start: &FlowState,
    t_end: f64,
    h: f64,
    sample_every: usize,
) -> Result<RichardsonCheck> {
    let coarse = integrate_flow(problem, start, t_end, h, sample_every)?;
    let half = integrate_flow(problem, start, t_end, h / 2.0, 2 * sample_every)?;
    let fine = integrate_flow(problem, start, t_end, h / 4.0, 4 * sample_every)?;
    let defect = |traj: &FlowTrajectory| {
        traj.samples.iter().zip(&fine.samples).map(|(a, b)| (a.energy - b.energy).abs()).fold(0.0, f64::max)
    };
    let (defect_h, defect_half) = (defect(&coarse), defect(&half));
    Ok(RichardsonCheck { defect_h, defect_half, ratio: defect_h / defect_half })
}

//! Step maps of the three accelerated Bregman primal-dual methods.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::{ConvexPart, SmoothTerm};
use crate::linalg::Vector;
use crate::params::{ParamConfig, ParamState, StepRule};
use crate::problem::{ComposedProxOracle, ComposedProxRequest, SaddleProblem};

use super::IterateState;

/// Parameters with geometry moduli folded in.
///
/// Weighted geometries are only `σ`-strongly convex (`σ` the smallest weight),
/// so `‖A‖`, `L_f` and `L_g` are measured in the geometry-induced norms.
pub fn effective_params(problem: &SaddleProblem, gamma0: f64, beta0: f64, chi: f64) -> ParamConfig {
    let sf = problem.f.geometry.modulus();
    let sg = problem.g.geometry.modulus();
    ParamConfig {
        mu_f: problem.f.mu,
        mu_g: problem.g.mu,
        l_f: problem.f.lipschitz() / sf,
        l_g: problem.g.lipschitz() / sg,
        opnorm: problem.opnorm() / (sf * sg).sqrt(),
        gamma0,
        beta0,
        chi,
    }
}

#[derive(Clone, Debug)]
enum Composed {
    /// Quadratic geometry with the given metric weights.
    ClosedForm(Vec<f64>),
    Oracle(Arc<dyn ComposedProxOracle>),
}

fn composed_mode(
    part: &ConvexPart,
    dim: usize,
    oracle: &Option<Arc<dyn ComposedProxOracle>>,
    side: &str,
) -> Result<Composed> {
    if let Some(o) = oracle {
        return Ok(Composed::Oracle(o.clone()));
    }
    match (part.geometry.metric(dim), &part.smooth) {
        (Some(_), SmoothTerm::Oracle(_)) => Err(Error::Config(format!(
            "{side}: composed prox needs a quadratic smooth part or a registered composed-prox oracle"
        ))),
        (Some(metric), _) => Ok(Composed::ClosedForm(metric)),
        (None, _) => Err(Error::Config(format!(
            "{side}: {} geometry needs a registered composed-prox oracle",
            part.geometry.name()
        ))),
    }
}

/// Validated step map for one of the three methods.
#[derive(Clone, Debug)]
pub struct AbpdStepper<'a> {
    problem: &'a SaddleProblem,
    rule: StepRule,
    cfg: ParamConfig,
    primal: Option<Composed>,
    dual: Option<Composed>,
}

impl<'a> AbpdStepper<'a> {
    pub fn new(problem: &'a SaddleProblem, rule: StepRule, cfg: ParamConfig) -> Result<Self> {
        cfg.validate()?;
        if rule == StepRule::Sym && cfg.chi != 0.0 {
            return Err(Error::Config("chi is not defined for the symmetric method; set it to 0".into()));
        }
        if rule == StepRule::Ps && !(cfg.opnorm > 0.0) {
            return Err(Error::Config("coupling operator is zero; the PS method needs ‖A‖ > 0".into()));
        }
        cfg.alpha(rule, cfg.gamma0, cfg.beta0).map_err(|e| Error::Config(format!("degenerate step size: {e}")))?;
        let (m, n) = problem.dims();
        let primal = match rule {
            StepRule::Ps => Some(composed_mode(&problem.f, n, &problem.primal_prox, "f")?),
            _ => None,
        };
        let dual = match rule {
            StepRule::Ps | StepRule::Pgs => Some(composed_mode(&problem.g, m, &problem.dual_prox, "g")?),
            StepRule::Sym => None,
        };
        Ok(Self { problem, rule, cfg, primal, dual })
    }

    pub fn config(&self) -> &ParamConfig {
        &self.cfg
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn initial_params(&self) -> Result<ParamState> {
        ParamState::initial(&self.cfg, self.rule)
    }

    pub fn step(&self, z: &IterateState, p: &ParamState) -> Result<(IterateState, ParamState)> {
        let next = p.next(&self.cfg, self.rule)?;
        let (x1, v1) = match &self.primal {
            Some(mode) => self.composed_primal(mode, z, p, next.gamma)?,
            None => self.gradient_primal(z, p)?,
        };
        let v_bar = &v1 + (&v1 - &z.v) / p.eta;
        let (y1, w1) = match &self.dual {
            Some(mode) => self.composed_dual(mode, z, p, next.beta, &v_bar)?,
            None => self.gradient_dual(z, p, &v_bar)?,
        };
        Ok((IterateState { x: x1, v: v1, y: y1, w: w1 }, next))
    }

    fn composed_primal(
        &self,
        mode: &Composed,
        z: &IterateState,
        p: &ParamState,
        gamma1: f64,
    ) -> Result<(Vector, Vector)> {
        let f = &self.problem.f;
        let alpha = p.alpha;
        let linear = self.problem.coupling.adjoint(&z.w);
        let x1 = match mode {
            Composed::ClosedForm(metric) => {
                let mu = f.mu;
                let delta = mu * alpha + p.gamma * (1.0 + alpha);
                let x_tilde = (&z.x * (mu * alpha + p.gamma) + &z.v * (p.gamma * alpha)) / delta;
                f.prox_full(delta / (alpha * alpha), metric, &x_tilde, &linear)?
            }
            Composed::Oracle(o) => o.solve(&ComposedProxRequest {
                part: f,
                linear: &linear,
                weight: gamma1,
                scale: alpha,
                prev: &z.x,
                anchor: &z.v,
                modulus: f.mu,
            })?,
        };
        let v1 = &x1 + (&x1 - &z.x) / alpha;
        Ok((x1, v1))
    }

    fn composed_dual(
        &self,
        mode: &Composed,
        z: &IterateState,
        p: &ParamState,
        beta1: f64,
        v_bar: &Vector,
    ) -> Result<(Vector, Vector)> {
        let g = &self.problem.g;
        let (alpha, eta) = (p.alpha, p.eta);
        let linear = -self.problem.coupling.apply(v_bar);
        let y1 = match mode {
            Composed::ClosedForm(metric) => {
                let mu = g.mu;
                let tau = mu * alpha + p.beta * (1.0 + eta * alpha);
                let y_tilde = (&z.y * (mu * alpha + p.beta) + &z.w * (eta * p.beta * alpha)) / tau;
                g.prox_full(tau / (eta * eta * alpha * alpha), metric, &y_tilde, &linear)?
            }
            Composed::Oracle(o) => o.solve(&ComposedProxRequest {
                part: g,
                linear: &linear,
                weight: (1.0 + alpha) * beta1 / (1.0 + alpha * eta),
                scale: alpha * eta,
                prev: &z.y,
                anchor: &z.w,
                modulus: g.mu / eta,
            })?,
        };
        let w1 = &y1 + (&y1 - &z.y) / (alpha * eta);
        Ok((y1, w1))
    }

    fn gradient_primal(&self, z: &IterateState, p: &ParamState) -> Result<(Vector, Vector)> {
        let f = &self.problem.f;
        let phi = &f.geometry;
        let alpha = p.alpha;
        let x_bar = (&z.x + &z.v * alpha) / (1.0 + alpha);
        let mut v_tilde = f.smooth_gradient(&x_bar) + self.problem.coupling.adjoint(&z.w);
        if f.mu > 0.0 {
            v_tilde -= (phi.grad(&x_bar)? - phi.grad(&z.v)?) * f.mu;
        }
        let v1 = phi.bregman_prox(&f.nonsmooth, &v_tilde, (p.gamma + f.mu * alpha) / alpha, &z.v)?;
        let x1 = (&z.x + &v1 * alpha) / (1.0 + alpha);
        Ok((x1, v1))
    }

    fn gradient_dual(&self, z: &IterateState, p: &ParamState, v_bar: &Vector) -> Result<(Vector, Vector)> {
        let g = &self.problem.g;
        let psi = &g.geometry;
        let (alpha, eta) = (p.alpha, p.eta);
        let y_bar = (&z.y + &z.w * (eta * alpha)) / (1.0 + eta * alpha);
        let mut w_tilde = g.smooth_gradient(&y_bar) - self.problem.coupling.apply(v_bar);
        if g.mu > 0.0 {
            w_tilde -= (psi.grad(&y_bar)? - psi.grad(&z.w)?) * (g.mu / eta);
        }
        let w1 = psi.bregman_prox(&g.nonsmooth, &w_tilde, (p.beta + g.mu * alpha) / (eta * alpha), &z.w)?;
        let y1 = (&z.y + &w1 * (alpha * eta)) / (1.0 + alpha * eta);
        Ok((y1, w1))
    }
}

pub fn abpd_ps_step(
    problem: &SaddleProblem,
    state: &IterateState,
    params: &ParamState,
    cfg: &ParamConfig,
) -> Result<(IterateState, ParamState)> {
    AbpdStepper::new(problem, StepRule::Ps, *cfg)?.step(state, params)
}

pub fn abpd_pgs_step(
    problem: &SaddleProblem,
    state: &IterateState,
    params: &ParamState,
    cfg: &ParamConfig,
) -> Result<(IterateState, ParamState)> {
    AbpdStepper::new(problem, StepRule::Pgs, *cfg)?.step(state, params)
}

pub fn sym_abpd_pgs_step(
    problem: &SaddleProblem,
    state: &IterateState,
    params: &ParamState,
    cfg: &ParamConfig,
) -> Result<(IterateState, ParamState)> {
    AbpdStepper::new(problem, StepRule::Sym, *cfg)?.step(state, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{NonsmoothTerm, QuadraticTerm};
    use crate::geometry::Geometry;
    use crate::linalg::Matrix;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    fn scalar() -> SaddleProblem {
        SaddleProblem::dense(ConvexPart::zero(), ConvexPart::zero(), Matrix::from_element(1, 1, 1.0)).unwrap()
    }

    fn quad_part(mu: f64, dim: usize) -> ConvexPart {
        ConvexPart::new(
            SmoothTerm::Quadratic(QuadraticTerm::isotropic(mu, dim)),
            NonsmoothTerm::Zero,
            mu,
            Geometry::Euclidean,
        )
        .unwrap()
    }

    fn exact_cfg(problem: &SaddleProblem) -> ParamConfig {
        // Hand examples assume ‖A‖ exactly, not the inflated estimate.
        let mut c = effective_params(problem, 1.0, 1.0, 0.0);
        c.opnorm = problem.coupling.to_dense().unwrap().singular_values().max();
        c
    }

    #[test]
    fn scalar_hand_example_all_methods() {
        let p = scalar();
        let cfg = exact_cfg(&p);
        let z0 = IterateState { x: v(&[1.0]), v: v(&[1.0]), y: v(&[0.0]), w: v(&[0.0]) };
        let expected = IterateState { x: v(&[1.0]), v: v(&[1.0]), y: v(&[0.5]), w: v(&[1.0]) };
        for rule in [StepRule::Ps, StepRule::Pgs, StepRule::Sym] {
            let stepper = AbpdStepper::new(&p, rule, cfg).unwrap();
            let p0 = stepper.initial_params().unwrap();
            assert_eq!((p0.alpha, p0.eta), (1.0, 1.0));
            let (z1, p1) = stepper.step(&z0, &p0).unwrap();
            assert_eq!((p1.gamma, p1.beta, p1.alpha), (0.5, 0.5, 0.5));
            for (a, b) in [(&z1.x, &expected.x), (&z1.v, &expected.v), (&z1.y, &expected.y), (&z1.w, &expected.w)] {
                assert!((a - b).amax() <= 1e-14, "{rule:?}: {z1:?}");
            }
        }
    }

    #[test]
    fn saddle_is_a_fixed_point() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.3, 0.0, 1.5]);
        let p = SaddleProblem::dense(ConvexPart::zero(), ConvexPart::zero(), a).unwrap();
        let cfg = effective_params(&p, 1.0, 1.0, 0.0);
        let z = IterateState::from_point(Vector::zeros(3), Vector::zeros(2));
        for rule in [StepRule::Ps, StepRule::Pgs, StepRule::Sym] {
            let s = AbpdStepper::new(&p, rule, cfg).unwrap();
            let (z1, _) = s.step(&z, &s.initial_params().unwrap()).unwrap();
            assert_eq!(z1, z);
        }
    }

    /// The PS step written out for `f = g = μ/2‖·‖²` with no shared helpers.
    fn straight_line_ps(mu: f64, a: &Matrix, norm: f64, z: &IterateState) -> IterateState {
        let (gamma, beta) = (1.0f64, 1.0f64);
        let alpha = (gamma * beta).sqrt() / norm;
        let gamma1 = (mu * alpha + gamma) / (1.0 + alpha);
        let beta1 = (mu * alpha + beta) / (1.0 + alpha);
        let alpha1 = (gamma1 * beta1).sqrt() / norm;
        let eta = alpha1 * (1.0 + alpha) / alpha;
        // Primal: minimise μ/2‖x‖² + ⟨Aᵀw, x⟩ + δ/(2α²)‖x − x̃‖².
        let delta = mu * alpha + gamma * (1.0 + alpha);
        let rho = delta / (alpha * alpha);
        let mut x1 = Vector::zeros(z.x.len());
        let atw = a.transpose() * &z.w;
        for i in 0..x1.len() {
            let xt = ((mu * alpha + gamma) * z.x[i] + gamma * alpha * z.v[i]) / delta;
            x1[i] = (rho * xt - atw[i]) / (mu + rho);
        }
        let v1 = Vector::from_fn(x1.len(), |i, _| x1[i] + (x1[i] - z.x[i]) / alpha);
        let vb = Vector::from_fn(x1.len(), |i, _| v1[i] + (v1[i] - z.v[i]) / eta);
        let avb = a * &vb;
        let tau = mu * alpha + beta * (1.0 + eta * alpha);
        let rho_y = tau / (eta * eta * alpha * alpha);
        let mut y1 = Vector::zeros(z.y.len());
        for i in 0..y1.len() {
            let yt = ((mu * alpha + beta) * z.y[i] + eta * beta * alpha * z.w[i]) / tau;
            y1[i] = (rho_y * yt + avb[i]) / (mu + rho_y);
        }
        let w1 = Vector::from_fn(y1.len(), |i, _| y1[i] + (y1[i] - z.y[i]) / (alpha * eta));
        IterateState { x: x1, v: v1, y: y1, w: w1 }
    }

    #[test]
    fn ps_matches_straight_line_transcription() {
        let a = Matrix::identity(2, 2);
        let p = SaddleProblem::dense(quad_part(1.0, 2), quad_part(1.0, 2), a.clone()).unwrap();
        let cfg = exact_cfg(&p);
        let z = IterateState { x: v(&[1.0, 0.0]), v: v(&[1.0, 0.0]), y: v(&[0.0, 0.0]), w: v(&[0.0, 0.0]) };
        let s = AbpdStepper::new(&p, StepRule::Ps, cfg).unwrap();
        let (z1, _) = s.step(&z, &s.initial_params().unwrap()).unwrap();
        let reference = straight_line_ps(1.0, &a, 1.0, &z);
        for (a, b) in [(&z1.x, &reference.x), (&z1.v, &reference.v), (&z1.y, &reference.y), (&z1.w, &reference.w)] {
            assert!((a - b).amax() <= 1e-14, "{a} vs {b}");
        }
    }

    /// Composed prox in the Euclidean geometry solved from its generic form.
    #[derive(Debug)]
    struct GenericEuclidean;

    impl ComposedProxOracle for GenericEuclidean {
        fn solve(&self, r: &ComposedProxRequest<'_>) -> Result<Vector> {
            // a/2‖u(1+1/s) − prev/s − anchor‖² − b/2‖u − anchor‖² collapses to
            // ρ/2‖u − c‖² with the coefficients below.
            let t = 1.0 + 1.0 / r.scale;
            let rho = r.weight * t * t - r.modulus;
            let center = ((r.prev / r.scale + r.anchor) * (r.weight * t) - r.anchor * r.modulus) / rho;
            let n = center.len();
            r.part.prox_full(rho, &vec![1.0; n], &center, r.linear)
        }
    }

    #[test]
    fn oracle_path_agrees_with_closed_form() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.3, 0.7, 1.5]);
        let f = ConvexPart::new(
            SmoothTerm::Quadratic(QuadraticTerm::isotropic(0.4, 3)),
            NonsmoothTerm::L1 { lambda: 0.2 },
            0.4,
            Geometry::Euclidean,
        )
        .unwrap();
        let g = quad_part(0.7, 2);
        let closed = SaddleProblem::dense(f.clone(), g.clone(), a.clone()).unwrap();
        let oracle = SaddleProblem::dense(f, g, a)
            .unwrap()
            .with_composed_prox(Some(Arc::new(GenericEuclidean)), Some(Arc::new(GenericEuclidean)));
        let cfg = effective_params(&closed, 0.8, 1.3, 0.05);
        for rule in [StepRule::Ps, StepRule::Pgs] {
            let s1 = AbpdStepper::new(&closed, rule, cfg).unwrap();
            let s2 = AbpdStepper::new(&oracle, rule, cfg).unwrap();
            let mut z1 = IterateState::from_point(v(&[1.0, -0.5, 2.0]), v(&[0.3, -1.0]));
            let mut z2 = z1.clone();
            let mut p = s1.initial_params().unwrap();
            for _ in 0..25 {
                let (a1, p1) = s1.step(&z1, &p).unwrap();
                let (a2, _) = s2.step(&z2, &p).unwrap();
                z1 = a1;
                z2 = a2;
                p = p1;
            }
            assert!((&z1.x - &z2.x).amax() < 1e-11 && (&z1.w - &z2.w).amax() < 1e-11, "{rule:?}");
        }
    }

    #[test]
    fn entropy_requires_composed_oracle_for_ps() {
        let simplex = ConvexPart::new(SmoothTerm::Zero, NonsmoothTerm::Simplex, 0.0, Geometry::Entropy).unwrap();
        let p = SaddleProblem::dense(simplex.clone(), simplex, Matrix::identity(2, 2)).unwrap();
        let cfg = effective_params(&p, 1.0, 1.0, 0.0);
        assert!(matches!(AbpdStepper::new(&p, StepRule::Ps, cfg), Err(Error::Config(_))));
        assert!(matches!(AbpdStepper::new(&p, StepRule::Pgs, cfg), Err(Error::Config(_))));
        assert!(AbpdStepper::new(&p, StepRule::Sym, cfg).is_ok());
    }

    #[test]
    fn pgs_entropy_step_ignores_constant_shift() {
        let make = |shift: f64| {
            let f = ConvexPart::new(
                SmoothTerm::Quadratic(QuadraticTerm {
                    curvature: 0.0,
                    center: Vector::zeros(3),
                    linear: Vector::from_element(3, shift),
                }),
                NonsmoothTerm::Simplex,
                0.0,
                Geometry::Entropy,
            )
            .unwrap();
            let g = ConvexPart::new(SmoothTerm::Zero, NonsmoothTerm::Simplex, 0.0, Geometry::Euclidean).unwrap();
            SaddleProblem::dense(f, g, Matrix::from_row_slice(2, 3, &[0.2, -0.4, 0.9, 0.5, 0.1, -0.3])).unwrap()
        };
        let z = IterateState::from_point(v(&[0.2, 0.3, 0.5]), v(&[0.5, 0.5]));
        let base = make(0.0);
        let shifted = make(7.5);
        let cfg = effective_params(&base, 1.0, 1.0, 0.0);
        let s0 = AbpdStepper::new(&base, StepRule::Pgs, cfg).unwrap();
        let s1 = AbpdStepper::new(&shifted, StepRule::Pgs, cfg).unwrap();
        let p0 = s0.initial_params().unwrap();
        let (a, _) = s0.step(&z, &p0).unwrap();
        let (b, _) = s1.step(&z, &p0).unwrap();
        assert!((&a.v - &b.v).amax() < 1e-15);
    }

    #[test]
    fn degenerate_coupling() {
        let zero = Matrix::zeros(1, 1);
        let p = SaddleProblem::dense(ConvexPart::zero(), ConvexPart::zero(), zero.clone()).unwrap();
        let cfg = effective_params(&p, 1.0, 1.0, 0.0);
        assert!(AbpdStepper::new(&p, StepRule::Ps, cfg).is_err());
        assert!(AbpdStepper::new(&p, StepRule::Pgs, cfg).is_err());
        let smooth = SaddleProblem::dense(quad_part(1.0, 1), quad_part(1.0, 1), zero).unwrap();
        let cfg = effective_params(&smooth, 1.0, 1.0, 0.0);
        assert!(AbpdStepper::new(&smooth, StepRule::Ps, cfg).is_err());
        assert!(AbpdStepper::new(&smooth, StepRule::Pgs, cfg).is_ok());
        assert!(AbpdStepper::new(&smooth, StepRule::Sym, cfg).is_ok());
    }

    #[test]
    fn sym_rejects_chi() {
        let p = scalar();
        let cfg = effective_params(&p, 1.0, 1.0, 0.1);
        assert!(AbpdStepper::new(&p, StepRule::Sym, cfg).is_err());
    }
}

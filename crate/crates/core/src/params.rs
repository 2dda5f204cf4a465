//! Scalar recursions for `(α, γ, β, η, θ)` and closed-form bounds on `θ_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moduli below this are treated as zero when selecting bound branches.
pub const MODULUS_EPS: f64 = 1e-15;

/// Which step-size rule drives the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Ps,
    Pgs,
    Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    pub mu_f: f64,
    pub mu_g: f64,
    pub l_f: f64,
    pub l_g: f64,
    pub opnorm: f64,
    pub gamma0: f64,
    pub beta0: f64,
    pub chi: f64,
}

/// Hypotheses shared by the rate theorems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub gamma0_ge_mu_f: bool,
    pub beta0_ge_mu_g: bool,
    pub product: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.gamma0_ge_mu_f && self.beta0_ge_mu_g && self.product
    }
}

impl ParamConfig {
    pub fn validate(&self) -> Result<()> {
        let named =
            [("mu_f", self.mu_f), ("mu_g", self.mu_g), ("l_f", self.l_f), ("l_g", self.l_g), ("opnorm", self.opnorm)];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("gamma0", self.gamma0), ("beta0", self.beta0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.chi) {
            return Err(Error::InvalidParameter(format!("chi must lie in [0, 1), got {}", self.chi)));
        }
        Ok(())
    }

    pub fn alpha(&self, rule: StepRule, gamma: f64, beta: f64) -> Result<f64> {
        match rule {
            StepRule::Ps => step_size_ps(gamma, beta, self.opnorm, self.chi),
            StepRule::Pgs => step_size_pgs(gamma, beta, self.l_f, self.opnorm, self.chi),
            StepRule::Sym => step_size_sym(gamma, beta, self.l_f, self.l_g, self.opnorm),
        }
    }

    pub fn hypotheses(&self, rule: StepRule) -> Hypotheses {
        let prod = self.gamma0 * self.beta0;
        let a2 = self.opnorm * self.opnorm;
        let cap = match rule {
            StepRule::Ps => a2,
            StepRule::Pgs => self.l_f * self.beta0 + a2,
            StepRule::Sym => self.l_f * self.beta0 + self.l_g * self.gamma0 + a2,
        };
        Hypotheses {
            gamma0_ge_mu_f: self.gamma0 >= self.mu_f,
            beta0_ge_mu_g: self.beta0 >= self.mu_g,
            product: prod <= cap * (1.0 + 1e-12),
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

pub fn step_size_ps(gamma: f64, beta: f64, opnorm: f64, chi: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_positive("beta", beta)?;
    if !(opnorm > 0.0) {
        return Err(Error::InvalidParameter("coupling norm is zero; the PS step size is undefined".into()));
    }
    Ok(((1.0 - chi) * gamma * beta).sqrt() / opnorm)
}

pub fn step_size_pgs(gamma: f64, beta: f64, l_f: f64, opnorm: f64, chi: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_positive("beta", beta)?;
    let denom = l_f * beta + opnorm * opnorm;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("L_f·beta + ‖A‖² is zero; the PGS step size is undefined".into()));
    }
    Ok((1.0 - chi) * (gamma * beta / denom).sqrt())
}

pub fn step_size_sym(gamma: f64, beta: f64, l_f: f64, l_g: f64, opnorm: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_positive("beta", beta)?;
    let denom = l_f * beta + l_g * gamma + opnorm * opnorm;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter(
            "L_f·beta + L_g·gamma + ‖A‖² is zero; the symmetric step size is undefined".into(),
        ));
    }
    Ok((gamma * beta / denom).sqrt())
}

pub fn advance_gamma_beta(gamma: f64, beta: f64, alpha: f64, mu_f: f64, mu_g: f64) -> (f64, f64) {
    ((mu_f * alpha + gamma) / (1.0 + alpha), (mu_g * alpha + beta) / (1.0 + alpha))
}

pub fn eta(alpha_k: f64, alpha_next: f64) -> f64 {
    alpha_next * (1.0 + alpha_k) / alpha_k
}

pub fn advance_theta(theta: f64, alpha: f64) -> f64 {
    theta / (1.0 + alpha)
}

/// Scalar state at iteration `k`. `eta` is `η_k`, which already needs `α_{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
    pub theta: f64,
}

impl ParamState {
    fn at(k: usize, gamma: f64, beta: f64, theta: f64, cfg: &ParamConfig, rule: StepRule) -> Result<Self> {
        let alpha = cfg.alpha(rule, gamma, beta)?;
        let (g1, b1) = advance_gamma_beta(gamma, beta, alpha, cfg.mu_f, cfg.mu_g);
        let alpha_next = cfg.alpha(rule, g1, b1)?;
        Ok(Self { k, alpha, gamma, beta, eta: eta(alpha, alpha_next), theta })
    }

    pub fn initial(cfg: &ParamConfig, rule: StepRule) -> Result<Self> {
        cfg.validate()?;
        Self::at(0, cfg.gamma0, cfg.beta0, 1.0, cfg, rule)
    }

    /// `(γ_{k+1}, β_{k+1})`.
    pub fn next_gamma_beta(&self, cfg: &ParamConfig) -> (f64, f64) {
        advance_gamma_beta(self.gamma, self.beta, self.alpha, cfg.mu_f, cfg.mu_g)
    }

    pub fn next(&self, cfg: &ParamConfig, rule: StepRule) -> Result<Self> {
        let (g1, b1) = self.next_gamma_beta(cfg);
        Self::at(self.k + 1, g1, b1, advance_theta(self.theta, self.alpha), cfg, rule)
    }
}

/// A bound on `θ_k`, or `+∞` with a reason when the theorem does not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    pub value: f64,
    pub warning: Option<String>,
}

impl ThetaBound {
    fn uncovered(h: &Hypotheses) -> Self {
        let mut failed = Vec::new();
        if !h.gamma0_ge_mu_f {
            failed.push("gamma0 >= mu_f");
        }
        if !h.beta0_ge_mu_g {
            failed.push("beta0 >= mu_g");
        }
        if !h.product {
            failed.push("product condition on gamma0*beta0");
        }
        Self { value: f64::INFINITY, warning: Some(format!("hypotheses fail: {}", failed.join(", "))) }
    }

    fn of(value: f64) -> Self {
        Self { value, warning: None }
    }
}

fn positive(mu: f64) -> bool {
    mu > MODULUS_EPS
}

fn guard(k: usize, cfg: &ParamConfig, rule: StepRule) -> Option<ThetaBound> {
    if k == 0 {
        return Some(ThetaBound::of(1.0));
    }
    let h = cfg.hypotheses(rule);
    (!h.all()).then(|| ThetaBound::uncovered(&h))
}

pub fn theta_bound_ps(k: usize, cfg: &ParamConfig) -> ThetaBound {
    if let Some(b) = guard(k, cfg, StepRule::Ps) {
        return b;
    }
    let kf = k as f64;
    let a_hat = cfg.opnorm / (1.0 - cfg.chi);
    let mut best = a_hat / ((cfg.gamma0 * cfg.beta0).sqrt() * kf);
    if positive(cfg.mu_g) {
        best = best.min(64.0 * a_hat * a_hat / (cfg.mu_g * cfg.gamma0 * kf * kf));
    }
    if positive(cfg.mu_f) {
        best = best.min(64.0 * a_hat * a_hat / (cfg.mu_f * cfg.beta0 * kf * kf));
    }
    if positive(cfg.mu_f) && positive(cfg.mu_g) {
        let kappa_p = cfg.opnorm * cfg.opnorm / (cfg.mu_f * cfg.mu_g);
        best = best.min((1.0 + (1.0 - cfg.chi) / kappa_p.sqrt()).powf(-kf));
    }
    ThetaBound::of(best)
}

pub fn theta_bound_pgs(k: usize, cfg: &ParamConfig) -> ThetaBound {
    if let Some(b) = guard(k, cfg, StepRule::Pgs) {
        return b;
    }
    let kf = k as f64;
    let s = 1.0 - cfg.chi;
    let l_hat = cfg.l_f / (s * s);
    let a_hat = cfg.opnorm / (s * s);
    let k2 = kf * kf;
    let smooth_term = 64.0 * l_hat / (cfg.gamma0 * k2);
    let mut best = smooth_term + 4.0 * a_hat / ((cfg.gamma0 * cfg.beta0).sqrt() * kf);
    if positive(cfg.mu_f) {
        let exp_term = if cfg.l_f > 0.0 {
            let kappa_f1 = cfg.l_f / cfg.mu_f;
            (-s * kf / (4.0 * kappa_f1.sqrt())).exp()
        } else {
            0.0
        };
        best = best.min(exp_term + 64.0 * a_hat * a_hat / (cfg.mu_f * cfg.beta0 * k2));
    }
    if positive(cfg.mu_g) {
        best = best.min(smooth_term + 64.0 * a_hat * a_hat / (cfg.mu_g * cfg.gamma0 * k2));
    }
    if positive(cfg.mu_f) && positive(cfg.mu_g) {
        let kappa_p = cfg.opnorm * cfg.opnorm / (cfg.mu_f * cfg.mu_g);
        let kappa_f1 = cfg.l_f / cfg.mu_f;
        best = best.min((1.0 + s / (kappa_p + kappa_f1).sqrt()).powf(-kf));
    }
    ThetaBound::of(best)
}

pub fn theta_bound_sym(k: usize, cfg: &ParamConfig) -> ThetaBound {
    if let Some(b) = guard(k, cfg, StepRule::Sym) {
        return b;
    }
    let kf = k as f64;
    let k2 = kf * kf;
    let f_term = 64.0 * cfg.l_f / (cfg.gamma0 * k2);
    let g_term = 64.0 * cfg.l_g / (cfg.beta0 * k2);
    let a = cfg.opnorm;
    let mut best = f_term + g_term + 4.0 * a / ((cfg.gamma0 * cfg.beta0).sqrt() * kf);
    let decay = |l: f64, mu: f64| if l > 0.0 { (-kf / (4.0 * (l / mu).sqrt())).exp() } else { 0.0 };
    if positive(cfg.mu_f) {
        best = best.min(decay(cfg.l_f, cfg.mu_f) + g_term + 64.0 * a * a / (cfg.mu_f * cfg.beta0 * k2));
    }
    if positive(cfg.mu_g) {
        best = best.min(decay(cfg.l_g, cfg.mu_g) + f_term + 64.0 * a * a / (cfg.mu_g * cfg.gamma0 * k2));
    }
    if positive(cfg.mu_f) && positive(cfg.mu_g) {
        let kappa = a * a / (cfg.mu_f * cfg.mu_g) + cfg.l_f / cfg.mu_f + cfg.l_g / cfg.mu_g;
        best = best.min((1.0 + 1.0 / kappa.sqrt()).powf(-kf));
    }
    ThetaBound::of(best)
}

pub fn theta_bound(rule: StepRule, k: usize, cfg: &ParamConfig) -> ThetaBound {
    match rule {
        StepRule::Ps => theta_bound_ps(k, cfg),
        StepRule::Pgs => theta_bound_pgs(k, cfg),
        StepRule::Sym => theta_bound_sym(k, cfg),
    }
}

/// Bound on any positive sequence obeying
/// `θ_{k+1} − θ_k ≤ −θ_k^ν θ_{k+1} / √(Qθ_k + R²)` with `θ_{k+1}/θ_k ≥ δ`.
pub fn technical_bound(k: usize, q: f64, r: f64, nu: f64, delta: f64) -> Result<f64> {
    if !(q > 0.0) || !(r >= 0.0) || !(nu >= 0.5) || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "technical bound needs Q > 0, R >= 0, nu >= 1/2, delta in (0, 1]; got Q={q}, R={r}, nu={nu}, delta={delta}"
        )));
    }
    let kf = k as f64;
    let sq = q.sqrt();
    // With R = 0 the second term is the limit of its expression as R → 0⁺.
    let r_term = |num: f64, den: f64, power: f64| {
        if r == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (num / den).powf(power)
        }
    };
    if nu > 0.5 {
        let e = 2.0 * nu - 1.0;
        let first = (4.0 * sq / (4.0 * sq + delta * e * kf)).powf(2.0 / e);
        Ok(first + r_term(2.0 * r, 2.0 * r + delta * nu * kf, 1.0 / nu))
    } else {
        let first = (-delta * kf / (2.0 * sq)).exp();
        Ok(first + r_term(4.0 * r, 4.0 * r + delta * kf, 2.0))
    }
}

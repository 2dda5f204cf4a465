//! Least-squares rate fits on convergence traces.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// `log value` against `log k`.
    PowerLaw,
    /// `log value` against `k`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Per-iteration factor `exp(slope)` in linear mode.
    pub contraction: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(RateFit),
    ConvergedExactly { k: usize },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&RateFit> {
        match self {
            Self::Fit(f) => Some(f),
            Self::ConvergedExactly { .. } => None,
        }
    }
}

/// Fits samples `(k, value)` with `k_lo ≤ k ≤ k_hi`; the first nonpositive
/// value in the window ends the fit as exact convergence.
pub fn fit_rate(samples: &[(usize, f64)], window: (usize, usize), mode: RateMode) -> Result<FitOutcome> {
    let (lo, hi) = window;
    if lo < 1 || hi <= lo {
        return Err(Error::Config(format!("rate window needs 1 <= k_lo < k_hi, got [{lo}, {hi}]")));
    }
    let mut pts = Vec::new();
    for &(k, v) in samples.iter().filter(|(k, _)| (lo..=hi).contains(k)) {
        // A gap cannot go negative except through roundoff around zero.
        if v <= 0.0 {
            return Ok(FitOutcome::ConvergedExactly { k });
        }
        if !v.is_finite() {
            return Err(Error::Domain(format!("rate fit needs positive values, got {v} at k={k}")));
        }
        let t = match mode {
            RateMode::PowerLaw => (k as f64).ln(),
            RateMode::Linear => k as f64,
        };
        pts.push((t, v.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Domain(format!("rate window [{lo}, {hi}] holds {} samples", pts.len())));
    }
    let len = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stv: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let svv: f64 = pts.iter().map(|p| (p.1 - mv).powi(2)).sum();
    let slope = stv / stt;
    let intercept = mv - slope * mt;
    let r2 = if svv == 0.0 { 1.0 } else { stv * stv / (stt * svv) };
    Ok(FitOutcome::Fit(RateFit {
        slope,
        intercept,
        r2,
        contraction: (mode == RateMode::Linear).then(|| slope.exp()),
        points: pts.len(),
    }))
}

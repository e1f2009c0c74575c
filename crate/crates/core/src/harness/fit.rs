//! Decay models fitted to a measured gap trace `c_0, …, c_N`.
//!
//! The rate comes from least squares; the constant is then raised to the
//! smallest value that makes the model an envelope of every measured `c_n`,
//! so the fitted model satisfies the bound hypotheses as an inequality.

use super::config::{FitConfig, FitModel};
use crate::bounds::{DecaySpec, SequenceSpec};
use crate::error::{Error, Result};
use crate::linalg::fit_line;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// `C (n+1)^{−α}`
    Polynomial { c: f64, alpha: f64 },
    /// `C1 exp(−C2 n^{1/α})`
    Exponential { c1: f64, c2: f64, alpha: f64 },
}

impl Envelope {
    pub fn value(&self, n: usize) -> f64 {
        self.sequence().value(n as f64)
    }

    pub fn sequence(&self) -> SequenceSpec {
        match *self {
            Envelope::Polynomial { c, alpha } => SequenceSpec::PowerLaw {
                coef: c,
                offset: 1.0,
                exponent: -alpha,
            },
            Envelope::Exponential { c1, c2, alpha } => SequenceSpec::StretchedExp { c1, c2, alpha },
        }
    }

    /// The closed form this envelope feeds; fails when the rate is outside its domain.
    pub fn decay(&self) -> Result<DecaySpec> {
        match *self {
            Envelope::Polynomial { c, alpha } => DecaySpec::polynomial(c, alpha),
            Envelope::Exponential { c1, c2, alpha } => DecaySpec::exponential(c1, c2, alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceFit {
    pub envelope: Envelope,
    /// Regression slope: `−α` for the polynomial model, `−C2` for the exponential one.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub from: usize,
    pub to: usize,
}

fn abscissa(cfg: &FitConfig, n: usize) -> f64 {
    match cfg.model {
        FitModel::Polynomial => ((n + 1) as f64).ln(),
        FitModel::Exponential => (n as f64).powf(1.0 / cfg.alpha),
    }
}

/// Regression over `from ≤ n ≤ to`, envelope constant over the whole trace.
pub fn fit_trace(values: &[f64], cfg: &FitConfig) -> Result<TraceFit> {
    let to = cfg.to.unwrap_or(values.len().saturating_sub(1));
    if to >= values.len() || to <= cfg.from {
        return Err(Error::FitFailure(format!(
            "fit range [{}, {to}] outside a trace of length {}",
            cfg.from,
            values.len()
        )));
    }
    if let Some(n) = (0..values.len()).find(|&n| !(values[n] > 0.0)) {
        return Err(Error::FitFailure(format!("c_{n} = {} is not positive", values[n])));
    }
    let x: Vec<f64> = (cfg.from..=to).map(|n| abscissa(cfg, n)).collect();
    let y: Vec<f64> = (cfg.from..=to).map(|n| values[n].ln()).collect();
    let line = fit_line(&x, &y)?;
    let rate = -line.slope;
    if !(rate > 0.0) {
        return Err(Error::FitFailure(format!("trace does not decay (slope {})", line.slope)));
    }
    // C = max_n c_n / shape(n), in logs to avoid overflow
    let log_c = (0..values.len())
        .map(|n| values[n].ln() + rate * abscissa(cfg, n))
        .fold(f64::NEG_INFINITY, f64::max);
    let envelope = match cfg.model {
        FitModel::Polynomial => Envelope::Polynomial {
            c: log_c.exp(),
            alpha: rate,
        },
        FitModel::Exponential => Envelope::Exponential {
            c1: log_c.exp(),
            c2: rate,
            alpha: cfg.alpha,
        },
    };
    Ok(TraceFit {
        envelope,
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        from: cfg.from,
        to,
    })
}

impl TraceFit {
    /// The fit itself, or a fit failure when `R²` is below `min_r2`.
    pub fn accepted(self, min_r2: f64) -> Result<Self> {
        if self.r_squared < min_r2 {
            return Err(Error::FitFailure(format!(
                "R² = {:.4} below {min_r2} over n in [{}, {}]",
                self.r_squared, self.from, self.to
            )));
        }
        Ok(self)
    }
}

//! Geometric scale schedules `ε_n = ε₀ρⁿ`, `δ_n = δ₀ρ^{αn}` and log-log fits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSchedule {
    pub eps0: f64,
    pub delta0: f64,
    pub rho: f64,
    pub alpha: f64,
    /// Rows `n = 0..=n_max`; `None` means an empty schedule.
    pub n_max: Option<usize>,
}

/// One `(ε_n, δ_n)` pair with its derived ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePair {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
}

impl ScalePair {
    /// `ε/δ^{3/2}`.
    pub fn ratio_three_halves(&self) -> f64 {
        self.eps / (self.delta * math::sqrt(self.delta))
    }

    pub fn ratio(&self) -> f64 {
        self.eps / self.delta
    }
}

/// The regime boundary `α = 2/3` where `ε/δ^{3/2}` stops vanishing.
pub const CRITICAL_ALPHA: f64 = 2.0 / 3.0;

impl ScalingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.delta0 > 0.0) {
            return Err(Error::invalid("schedule", "eps0 and delta0 must be positive"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid("schedule", "rho must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("schedule", "alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `true` when `ε_n/δ_n^{3/2} → 0`.
    pub fn in_regime(&self) -> bool {
        self.alpha < CRITICAL_ALPHA
    }

    pub fn pair(&self, n: usize) -> ScalePair {
        ScalePair {
            n,
            eps: self.eps0 * math::powi(self.rho, n as i32),
            delta: self.delta0 * math::powf(self.rho, self.alpha * n as f64),
        }
    }

    pub fn pairs(&self) -> Vec<ScalePair> {
        match self.n_max {
            None => Vec::new(),
            Some(m) => (0..=m).map(|n| self.pair(n)).collect(),
        }
    }
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fit `log y = slope·log x + intercept` over the samples with `x, y > 0`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if !ys.is_empty() && ys.iter().all(|&y| y == 0.0) {
        return Err(Error::AllZero);
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (math::ln(*x), math::ln(*y)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewSamples(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit", "all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LogLogFit { slope, intercept, r2 })
}

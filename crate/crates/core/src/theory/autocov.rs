use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples required before an empirical autocovariance is trusted.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum AutocovKind {
    /// ρ(τ) = e^(−α|τ|).
    Exponential { alpha: f64 },
    /// ρ at lags 0, ts, 2ts, …; zero beyond the last lag.
    Empirical { rho: Vec<f64> },
}

/// Normalised autocovariance of a stationary process.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSpec {
    pub kind: AutocovKind,
    pub sigma2: f64,
    pub ts: f64,
}

impl AutocovSpec {
    pub fn exponential(alpha: f64, sigma2: f64, ts: f64) -> Result<Self> {
        let s = Self { kind: AutocovKind::Exponential { alpha }, sigma2, ts };
        s.validate()?;
        Ok(s)
    }

    pub fn empirical(rho: Vec<f64>, sigma2: f64, ts: f64) -> Result<Self> {
        let s = Self { kind: AutocovKind::Empirical { rho }, sigma2, ts };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let base = self.sigma2 > 0.0 && self.sigma2.is_finite() && self.ts > 0.0 && self.ts.is_finite();
        let shape = match &self.kind {
            AutocovKind::Exponential { alpha } => *alpha > 0.0 && alpha.is_finite(),
            AutocovKind::Empirical { rho } => {
                rho.first() == Some(&1.0) && rho.iter().all(|r| r.is_finite() && r.abs() <= 1.0 + 1e-12)
            }
        };
        if base && shape {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid autocovariance {:?}", self.kind)))
        }
    }

    /// ρ(k·ts).
    pub fn rho_lag(&self, k: usize) -> f64 {
        match &self.kind {
            AutocovKind::Exponential { alpha } => (-alpha * k as f64 * self.ts).exp(),
            AutocovKind::Empirical { rho } => rho.get(k).copied().unwrap_or(0.0),
        }
    }

    /// ρ at lags 0..=max_lag.
    pub fn rho_lags(&self, max_lag: usize) -> Vec<f64> {
        (0..=max_lag).map(|k| self.rho_lag(k)).collect()
    }

    /// ρ(τ) for arbitrary τ, linear between empirical lags.
    pub fn rho_at(&self, tau: f64) -> f64 {
        let tau = tau.abs();
        match &self.kind {
            AutocovKind::Exponential { alpha } => (-alpha * tau).exp(),
            AutocovKind::Empirical { .. } => {
                let x = tau / self.ts;
                let k = x.floor() as usize;
                let f = x - k as f64;
                (1.0 - f) * self.rho_lag(k) + f * self.rho_lag(k + 1)
            }
        }
    }

    /// ∫_a^b ρ(τ)^power dτ for 0 ≤ a ≤ b.
    pub fn integrate_rho(&self, a: f64, b: f64, power: i32) -> f64 {
        match &self.kind {
            AutocovKind::Exponential { alpha } => {
                let k = alpha * power as f64;
                ((-k * a).exp() - (-k * b).exp()) / k
            }
            AutocovKind::Empirical { .. } => {
                let steps = (((b - a) / self.ts).ceil() as usize * 8).max(8);
                let h = (b - a) / steps as f64;
                let f = |t: f64| self.rho_at(t).powi(power);
                let inner: f64 = (1..steps).map(|k| f(a + k as f64 * h)).sum();
                h * (0.5 * (f(a) + f(b)) + inner)
            }
        }
    }

    /// Lag at which ρ first falls to e⁻¹ (linear interpolation).
    pub fn tau_c(&self) -> Option<f64> {
        match &self.kind {
            AutocovKind::Exponential { alpha } => Some(1.0 / alpha),
            AutocovKind::Empirical { rho } => {
                let target = (-1.0f64).exp();
                rho.windows(2).enumerate().find(|(_, w)| w[1] <= target).map(|(k, w)| {
                    let f = (w[0] - target) / (w[0] - w[1]);
                    (k as f64 + f) * self.ts
                })
            }
        }
    }
}

/// Biased autocovariance at lag `k` over pairs where both ends are valid.
fn autocov_lag(x: &[f64], mean: f64, k: usize, count: usize) -> f64 {
    let s: f64 = x[..x.len() - k]
        .iter()
        .zip(&x[k..])
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    s / count as f64
}

/// Empirical normalised autocovariance of one channel.
///
/// Lags run to ten times the first e⁻¹ crossing, capped at a quarter of the
/// record.
pub fn estimate_autocov(x: &[f64], ts: f64) -> Result<AutocovSpec> {
    let valid: Vec<f64> = x.iter().copied().filter(|v| !v.is_nan()).collect();
    if valid.len() < MIN_SAMPLES {
        return Err(Error::TooShort { len: valid.len(), required: MIN_SAMPLES });
    }
    let count = valid.len();
    let mean = valid.iter().sum::<f64>() / count as f64;
    let r0 = autocov_lag(x, mean, 0, count);
    if !(r0 > 0.0) {
        return Err(Error::Data("channel has zero variance; autocovariance undefined".into()));
    }
    let max_lag = x.len() / 4;
    let target = (-1.0f64).exp();

    let mut rho = vec![1.0];
    let mut crossing = None;
    let chunk = 64;
    while crossing.is_none() && rho.len() <= max_lag {
        let lo = rho.len();
        let hi = (lo + chunk).min(max_lag + 1);
        let block: Vec<f64> = (lo..hi).into_par_iter().map(|k| autocov_lag(x, mean, k, count) / r0).collect();
        if let Some(p) = block.iter().position(|&r| r <= target) {
            crossing = Some(lo + p);
        }
        rho.extend(block);
    }
    let wanted = crossing.map_or(max_lag, |k| (10 * k).min(max_lag)).max(rho.len() - 1);
    if wanted >= rho.len() {
        let lo = rho.len();
        let block: Vec<f64> = (lo..=wanted).into_par_iter().map(|k| autocov_lag(x, mean, k, count) / r0).collect();
        rho.extend(block);
    }
    for r in rho.iter_mut() {
        *r = r.clamp(-1.0, 1.0);
    }
    AutocovSpec::empirical(rho, r0, ts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecommendation {
    pub tau_c: f64,
    /// Default window length (s).
    pub w: f64,
    pub w_min: f64,
    pub w_max: f64,
}

/// Window length of five autocovariance time constants, with the usable
/// range of five to ten.
pub fn recommend_window(spec: &AutocovSpec) -> Result<WindowRecommendation> {
    let tau_c = spec.tau_c().ok_or_else(|| Error::InvalidParameter("autocovariance never decays to 1/e".into()))?;
    Ok(WindowRecommendation { tau_c, w: 5.0 * tau_c, w_min: 5.0 * tau_c, w_max: 10.0 * tau_c })
}

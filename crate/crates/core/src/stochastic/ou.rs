use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bivariate correlated O-U load model with exponential voltage dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuLoadConfig {
    /// Mean active power (MW).
    pub p0: f64,
    /// Mean reactive power (MVar).
    pub q0: f64,
    pub alpha_p: f64,
    pub alpha_q: f64,
    /// Diffusion coefficients (MW/√s, MVar/√s).
    pub b_p: f64,
    pub b_q: f64,
    /// Correlation of the driving noises.
    pub r_pq: f64,
    pub gamma_p: f64,
    pub gamma_q: f64,
}

impl Default for OuLoadConfig {
    fn default() -> Self {
        Self {
            p0: 50.0,
            q0: 50.0,
            alpha_p: 1.0,
            alpha_q: 1.0,
            b_p: std::f64::consts::SQRT_2,
            b_q: std::f64::consts::SQRT_2,
            r_pq: 0.2,
            gamma_p: 0.0,
            gamma_q: 0.0,
        }
    }
}

impl OuLoadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_p > 0.0
            && self.alpha_q > 0.0
            && self.b_p > 0.0
            && self.b_q > 0.0
            && (0.0..=1.0).contains(&self.r_pq)
            && [self.p0, self.q0, self.gamma_p, self.gamma_q].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid O-U load config {self:?}")))
        }
    }

    /// Stationary variance b²/(2α) of the active-power fluctuation.
    pub fn var_p(&self) -> f64 {
        self.b_p * self.b_p / (2.0 * self.alpha_p)
    }

    pub fn var_q(&self) -> f64 {
        self.b_q * self.b_q / (2.0 * self.alpha_q)
    }

    /// Stationary covariance of the two fluctuations.
    pub fn cov_pq(&self) -> f64 {
        self.r_pq * self.b_p * self.b_q / (self.alpha_p + self.alpha_q)
    }
}

/// Single stationary O-U path with exact conditional updates.
pub fn gen_ou(alpha: f64, b: f64, n: usize, ts: f64, rng: &mut impl rand::Rng) -> Vec<f64> {
    let phi = (-alpha * ts).exp();
    let sigma = (b * b / (2.0 * alpha)).sqrt();
    let innov = (b * b * (1.0 - phi * phi) / (2.0 * alpha)).sqrt();
    let mut out = Vec::with_capacity(n);
    let z: f64 = StandardNormal.sample(rng);
    let mut eta = sigma * z;
    for _ in 0..n {
        out.push(eta);
        let z: f64 = StandardNormal.sample(rng);
        eta = eta * phi + innov * z;
    }
    out
}

/// Zero-mean correlated O-U pair (η_P, η_Q), started from the stationary
/// distribution.
///
/// The Q innovation reuses the P draw with weight ρ and an independent draw
/// with weight √(1 − ρ²). ρ is the exact innovation correlation, which equals
/// `r_pq` when the two decay rates match.
pub fn gen_ou_pair(cfg: &OuLoadConfig, n: usize, ts: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    if n < 2 || !(ts > 0.0) {
        return Err(Error::InvalidParameter(format!("need n >= 2 and ts > 0, got n={n}, ts={ts}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ap, aq) = (cfg.alpha_p, cfg.alpha_q);
    let phi_p = (-ap * ts).exp();
    let phi_q = (-aq * ts).exp();
    let s_p = (cfg.b_p * cfg.b_p * (1.0 - phi_p * phi_p) / (2.0 * ap)).sqrt();
    let s_q = (cfg.b_q * cfg.b_q * (1.0 - phi_q * phi_q) / (2.0 * aq)).sqrt();
    let c_pq = cfg.r_pq * cfg.b_p * cfg.b_q * (1.0 - (-(ap + aq) * ts).exp()) / (ap + aq);
    let rho_innov = (c_pq / (s_p * s_q)).clamp(-1.0, 1.0);
    let rho_perp = (1.0 - rho_innov * rho_innov).max(0.0).sqrt();

    let sd_p = cfg.var_p().sqrt();
    let sd_q = cfg.var_q().sqrt();
    let rho_stat = (cfg.cov_pq() / (sd_p * sd_q)).clamp(-1.0, 1.0);
    let z1: f64 = StandardNormal.sample(&mut rng);
    let z2: f64 = StandardNormal.sample(&mut rng);
    let mut eta_p = sd_p * z1;
    let mut eta_q = sd_q * (rho_stat * z1 + (1.0 - rho_stat * rho_stat).max(0.0).sqrt() * z2);

    let mut out_p = Vec::with_capacity(n);
    let mut out_q = Vec::with_capacity(n);
    for _ in 0..n {
        out_p.push(eta_p);
        out_q.push(eta_q);
        let xi_p: f64 = StandardNormal.sample(&mut rng);
        let xi_q: f64 = StandardNormal.sample(&mut rng);
        eta_p = eta_p * phi_p + s_p * xi_p;
        eta_q = eta_q * phi_q + s_q * (rho_innov * xi_p + rho_perp * xi_q);
    }
    Ok((out_p, out_q))
}

use super::{
    condition_number, deviation_ratio, noise_feature_var, recommend_window, signal_feature_var, theoretical_snr,
    AutocovSpec, SnrMode,
};
use crate::error::{Error, Result};
use crate::windowstats::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodScore {
    pub method: Method,
    /// Feature noise-to-signal standard deviation ratio.
    pub noise_ratio: f64,
    pub eps_r: f64,
    pub kappa: f64,
    /// Predicted relative error bound; smaller is better.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSelection {
    pub method: Method,
    pub scores: Vec<MethodScore>,
}

/// Noise variance of the variance-method feature including the
/// signal-noise cross term of a Gaussian quadratic form.
fn variance_noise_var(spec: &AutocovSpec, n: usize, noise_var: f64) -> f64 {
    let nf = n as f64;
    let total: f64 = {
        let rho = spec.rho_lags(n);
        let mut s = nf;
        for d in 1..n {
            s += 2.0 * (nf - d as f64) * rho[d];
        }
        spec.sigma2 * s
    };
    let trace_mc = nf * spec.sigma2 - total / nf;
    noise_feature_var(Method::Variance, n, noise_var) + 4.0 * noise_var * trace_mc / (nf - 1.0).powi(2)
}

/// Rank the three methods by a heuristic realisation of the Frobenius error
/// bound: 2κ × (feature perturbation from noise + from delay). The variance
/// method's score is halved because its squared coefficients halve relative
/// errors when mapped back to linear sensitivities.
pub fn select_method(spec: &AutocovSpec, snr_raw: f64, m: usize, r_pq: f64, n: usize) -> Result<MethodSelection> {
    if !snr_raw.is_finite() || !r_pq.is_finite() {
        return Err(Error::InvalidParameter("non-finite selection input".into()));
    }
    let noise_var = spec.sigma2 / 10f64.powf(snr_raw / 10.0);
    let mut scores = Vec::with_capacity(3);
    for method in Method::ALL {
        let signal = signal_feature_var(method, spec, n);
        let noise = match method {
            Method::Variance => variance_noise_var(spec, n, noise_var),
            _ => noise_feature_var(method, n, noise_var),
        };
        let noise_ratio = (noise / signal).sqrt();
        let eps_r = deviation_ratio(method, spec, n, m)?.max(0.0);
        let kappa = condition_number(method, r_pq.min(1.0 - 1e-12))?;
        let mut score = 2.0 * kappa * (2.0 * noise_ratio + eps_r.sqrt());
        if method == Method::Variance {
            score *= 0.5;
        }
        scores.push(MethodScore { method, noise_ratio, eps_r, kappa, score });
    }
    let best = scores.iter().min_by(|a, b| a.score.total_cmp(&b.score)).map(|s| s.method).unwrap_or(Method::Mean);
    Ok(MethodSelection { method: best, scores })
}

/// Everything the theory layer predicts for one operating regime.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub snr_raw: f64,
    pub snr0: f64,
    pub snr1: f64,
    pub snr2: f64,
    /// Baseline, mean, variance.
    pub eps_r: [f64; 3],
    pub kappa: [f64; 3],
    pub recommended_w: f64,
    pub recommended_method: Method,
}

pub fn theory_report(spec: &AutocovSpec, snr_raw: f64, m: usize, r_pq: f64, n: usize) -> Result<TheoryReport> {
    let noise_var = spec.sigma2 / 10f64.powf(snr_raw / 10.0);
    let snr = |method| theoretical_snr(method, spec, n, noise_var, SnrMode::Exact);
    let selection = select_method(spec, snr_raw, m, r_pq, n)?;
    let eps_r = [selection.scores[0].eps_r, selection.scores[1].eps_r, selection.scores[2].eps_r];
    let kappa = [selection.scores[0].kappa, selection.scores[1].kappa, selection.scores[2].kappa];
    Ok(TheoryReport {
        snr_raw,
        snr0: snr(Method::Baseline)?,
        snr1: snr(Method::Mean)?,
        snr2: snr(Method::Variance)?,
        eps_r,
        kappa,
        recommended_w: recommend_window(spec)?.w,
        recommended_method: selection.method,
    })
}

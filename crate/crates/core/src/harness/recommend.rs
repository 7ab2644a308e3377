use crate::error::{Error, Result};
use crate::stochastic::MeasurementSeries;
use crate::theory::{estimate_autocov, recommend_window, select_method, AutocovKind, AutocovSpec, MethodScore};
use crate::windowstats::Method;

/// Largest delay searched when aligning voltage against power (samples).
pub const MAX_DELAY_SEARCH: usize = 200;

/// Data-driven choice of window and method for a measured series.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub tau_c: f64,
    pub w: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Raw SNR of the active-power channel (dB).
    pub snr_db: f64,
    /// Estimated V/I lag behind P/Q (samples).
    pub delay_steps: usize,
    pub r_pq: f64,
    pub method: Method,
    pub scores: Vec<MethodScore>,
}

fn finite_pairs(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    a.iter().zip(b).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| (*x, *y)).unzip()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn diffs(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Split the measured autocovariance of a channel into a smooth signal part
/// and white noise: the signal autocovariance at lag 0 is extrapolated
/// linearly from lags 1 and 2, and the excess at lag 0 is noise.
fn separate_noise(measured: &AutocovSpec) -> Result<(AutocovSpec, f64)> {
    let r1 = measured.rho_lag(1);
    let r2 = measured.rho_lag(2);
    let signal_frac = (2.0 * r1 - r2).clamp(1e-6, 1.0);
    let sigma2 = measured.sigma2 * signal_frac;
    let noise = measured.sigma2 - sigma2;
    let rho: Vec<f64> = match &measured.kind {
        AutocovKind::Empirical { rho } => {
            std::iter::once(1.0).chain(rho[1..].iter().map(|r| (r / signal_frac).clamp(-1.0, 1.0))).collect()
        }
        AutocovKind::Exponential { .. } => return Ok((measured.clone(), 0.0)),
    };
    Ok((AutocovSpec::empirical(rho, sigma2, measured.ts)?, noise))
}

/// Lag (samples) maximising |corr(ΔP_k, ΔV_{k+d})| over d ∈ [0, max].
pub fn estimate_delay(series: &MeasurementSeries, max: usize) -> usize {
    let dp = diffs(&series.p);
    let dv = diffs(&series.v_mag);
    let max = max.min(dp.len() / 4);
    (0..=max)
        .map(|d| {
            let (a, b) = finite_pairs(&dp[..dp.len() - d], &dv[d..]);
            (d, pearson(&a, &b).abs())
        })
        .filter(|(_, c)| c.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0, |(d, _)| d)
}

/// Estimate the excitation autocovariance, noise level, delay and P-Q
/// correlation from `series`, then choose the window and method.
pub fn recommend(series: &MeasurementSeries) -> Result<Recommendation> {
    series.validate()?;
    let measured = estimate_autocov(&series.p, series.ts)?;
    let (signal, noise) = separate_noise(&measured)?;
    let window = recommend_window(&signal)?;
    let snr_db = if noise > 0.0 { 10.0 * (signal.sigma2 / noise).log10() } else { 60.0 }.min(60.0);
    let delay_steps = estimate_delay(series, MAX_DELAY_SEARCH);
    let (p, q) = finite_pairs(&series.p, &series.q);
    let r_pq = pearson(&p, &q).abs();
    if !r_pq.is_finite() {
        return Err(Error::Data("P and Q correlation undefined".into()));
    }
    let n = (window.w / series.ts).round() as usize;
    if n < 4 || n > series.len() {
        return Err(Error::TooShort { len: series.len(), required: n.max(4) });
    }
    let selection = select_method(&signal, snr_db, delay_steps, r_pq, n)?;
    Ok(Recommendation {
        tau_c: window.tau_c,
        w: window.w,
        w_min: window.w_min,
        w_max: window.w_max,
        snr_db,
        delay_steps,
        r_pq,
        method: selection.method,
        scores: selection.scores,
    })
}

//! Closed-form performance theory of the three identification methods for a
//! stationary Gaussian excitation: feature SNR, sensitivity to measurement
//! delay, collinearity, and the resulting error bound.

mod autocov;
mod bound;
mod select;

pub use autocov::{estimate_autocov, recommend_window, AutocovKind, AutocovSpec, WindowRecommendation};
pub use bound::{error_bound, ErrorBound};
pub use select::{select_method, theory_report, MethodScore, MethodSelection, TheoryReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::windowstats::Method;

/// Exact covariance-matrix expressions or the integral shortcuts valid for
/// W ≫ τ_c ≫ ts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrMode {
    #[default]
    Exact,
    Approx,
}

/// n×n covariance between a window and the same window shifted by `m`
/// samples: σ²·ρ(|i − j + m|·ts). Symmetric Toeplitz when `m = 0`.
pub fn build_cov_matrix(spec: &AutocovSpec, n: usize, m: usize) -> DMatrix<f64> {
    let rho = spec.rho_lags(n + m);
    DMatrix::from_fn(n, n, |i, j| spec.sigma2 * rho[(i as isize - j as isize + m as isize).unsigned_abs()])
}

/// Sums over a (possibly shifted) Toeplitz covariance, evaluated without
/// materialising the matrix.
struct CovSums {
    n: f64,
    c11: f64,
    first_row: f64,
    first_col: f64,
    total: f64,
    squares: f64,
    row_sq: f64,
    col_sq: f64,
}

fn cov_sums(spec: &AutocovSpec, n: usize, m: usize) -> CovSums {
    let rho = spec.rho_lags(n + m);
    let c = |i: usize, j: usize| spec.sigma2 * rho[(i as isize - j as isize + m as isize).unsigned_abs()];
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    let mut squares = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = c(i, j);
            rows[i] += v;
            cols[j] += v;
            squares += v * v;
        }
    }
    CovSums {
        n: n as f64,
        c11: c(0, 0),
        first_row: rows[0],
        first_col: cols[0],
        total: rows.iter().sum(),
        squares,
        row_sq: rows.iter().map(|r| r * r).sum(),
        col_sq: cols.iter().map(|r| r * r).sum(),
    }
}

/// Variance of a window's anchor sample minus the window mean.
fn mean_feature_var(s: &CovSums) -> f64 {
    s.c11 - 2.0 / s.n * s.first_row + s.total / (s.n * s.n)
}

/// Covariance between the true and the shifted mean-method feature.
fn mean_feature_cov(s: &CovSums) -> f64 {
    s.c11 - s.first_col / s.n - s.first_row / s.n + s.total / (s.n * s.n)
}

/// Variance of the window sample variance for a Gaussian process.
fn variance_feature_var(s: &CovSums) -> f64 {
    2.0 / (s.n - 1.0).powi(2) * (s.squares - 2.0 / s.n * s.row_sq + s.total * s.total / (s.n * s.n))
}

/// Covariance between the true and the shifted variance-method feature.
fn variance_feature_cov(s: &CovSums) -> f64 {
    2.0 / (s.n - 1.0).powi(2) * (s.squares + s.total * s.total / (s.n * s.n) - (s.row_sq + s.col_sq) / s.n)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Variance of the clean signal feature of `method` (window of `n`).
pub fn signal_feature_var(method: Method, spec: &AutocovSpec, n: usize) -> f64 {
    match method {
        Method::Baseline => 2.0 * spec.sigma2 * (1.0 - spec.rho_lag(1)),
        Method::Mean => mean_feature_var(&cov_sums(spec, n, 0)),
        Method::Variance => variance_feature_var(&cov_sums(spec, n, 0)),
    }
}

/// Variance of the feature built from white measurement noise alone.
pub fn noise_feature_var(method: Method, n: usize, noise_var: f64) -> f64 {
    let n = n as f64;
    match method {
        Method::Baseline => 2.0 * noise_var,
        Method::Mean => (n - 1.0) / n * noise_var,
        Method::Variance => 2.0 * noise_var * noise_var / (n - 1.0),
    }
}

/// Feature-level SNR (dB) of `method` for window length `n` samples and
/// white measurement noise of variance `noise_var`.
pub fn theoretical_snr(method: Method, spec: &AutocovSpec, n: usize, noise_var: f64, mode: SnrMode) -> Result<f64> {
    if n < 2 || !(noise_var > 0.0) {
        return Err(Error::InvalidParameter(format!("need n >= 2 and noise_var > 0, got {n}, {noise_var}")));
    }
    let snr_raw = db(spec.sigma2 / noise_var);
    let window = n as f64 * spec.ts;
    Ok(match (mode, method) {
        (_, Method::Baseline) | (SnrMode::Exact, _) => {
            db(signal_feature_var(method, spec, n) / noise_feature_var(method, n, noise_var))
        }
        (SnrMode::Approx, Method::Mean) => {
            let signal = spec.sigma2 * (1.0 - 2.0 / window * spec.integrate_rho(window / 2.0, window, 1));
            db(signal / noise_feature_var(method, n, noise_var))
        }
        (SnrMode::Approx, Method::Variance) => {
            let integral = 2.0 * spec.integrate_rho(0.0, window / 2.0, 2);
            2.0 * snr_raw + db(integral / spec.ts)
        }
    })
}

/// Variance-normalised distortion of a method's feature sequence when the
/// measurements are delayed by `m` samples: 2 − 2·cov(Y, Ỹ)/var(Y).
pub fn deviation_ratio(method: Method, spec: &AutocovSpec, n: usize, m: usize) -> Result<f64> {
    if method != Method::Baseline && n < 2 {
        return Err(Error::InvalidParameter(format!("window of {n} samples")));
    }
    if m == 0 {
        return Ok(0.0);
    }
    Ok(match method {
        Method::Baseline => {
            let r = |k: usize| spec.rho_lag(k);
            2.0 - (2.0 * r(m) - r(m - 1) - r(m + 1)) / (1.0 - r(1))
        }
        Method::Mean => {
            let var = mean_feature_var(&cov_sums(spec, n, 0));
            2.0 - 2.0 * mean_feature_cov(&cov_sums(spec, n, m)) / var
        }
        Method::Variance => {
            let var = variance_feature_var(&cov_sums(spec, n, 0));
            2.0 - 2.0 * variance_feature_cov(&cov_sums(spec, n, m)) / var
        }
    })
}

/// Correlation matrix of the power-side feature columns when P and Q share
/// one autocorrelation and have equal variance.
pub fn correlation_matrix(method: Method, r_pq: f64) -> Result<DMatrix<f64>> {
    check_r(r_pq)?;
    let r = r_pq;
    Ok(match method {
        Method::Baseline | Method::Mean => DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]),
        Method::Variance => {
            let c = (2.0 / (1.0 + r * r)).sqrt() * r;
            DMatrix::from_row_slice(3, 3, &[1.0, r * r, c, r * r, 1.0, c, c, c, 1.0])
        }
    })
}

fn check_r(r_pq: f64) -> Result<()> {
    if r_pq == 1.0 {
        return Err(Error::DegenerateCollinearity);
    }
    if !(0.0..1.0).contains(&r_pq) {
        return Err(Error::InvalidParameter(format!("correlation {r_pq} outside [0, 1)")));
    }
    Ok(())
}

/// 2-norm condition number of the centred power-feature matrix.
pub fn condition_number(method: Method, r_pq: f64) -> Result<f64> {
    check_r(r_pq)?;
    let r = r_pq;
    Ok(match method {
        Method::Baseline | Method::Mean => ((1.0 + r) / (1.0 - r)).sqrt(),
        Method::Variance => {
            let a = (r * r + 1.0).sqrt() * (r * r + 2.0);
            let b = r * (r.powi(4) + r * r + 16.0).sqrt();
            ((a + b) / (a - b)).sqrt()
        }
    })
}

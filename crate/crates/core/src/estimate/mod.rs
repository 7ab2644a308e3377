//! Regression engines, sensitivity extraction and the end-to-end
//! identification pipeline.

mod mapping;
mod regress;

pub use mapping::{msp_from_theta, theta_from_msp, MspExtraction, NEG_TOL, OVERSHOOT_TOL};
pub use regress::{regress, Fit, RegressorConfig, RegressorKind};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{solve_tep_report, Msp, PortState, TheveninParams};
use crate::stochastic::{nan_mean, MeasurementSeries};
use crate::windowstats::{build_features, clean_outliers, FeatureSet, Method, WindowConfig};

/// Feature rows below which a record-level estimate is refused.
pub const MIN_ROWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub kappa: f64,
    pub rows: usize,
    pub dropped_rows: usize,
    /// Relative regression residual ‖AΘ − B‖_F/‖B‖_F.
    pub residual: f64,
    pub lm_residual: f64,
    pub lm_iterations: usize,
    pub converged: bool,
    pub sign_ambiguous: [bool; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub method: Method,
    pub regressor: RegressorKind,
    pub theta: DMatrix<f64>,
    pub msp: Msp,
    pub tep: TheveninParams,
    pub operating_point: PortState,
    pub diagnostics: Diagnostics,
}

impl EstimationResult {
    /// `method-regressor`, e.g. `variance-ols`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.method.label(), self.regressor.label())
    }
}

/// Per-channel means with gaps ignored, as a port operating point.
pub fn mean_operating_point(series: &MeasurementSeries) -> Result<PortState> {
    let port = PortState {
        p: nan_mean(&series.p),
        q: nan_mean(&series.q),
        v_mag: nan_mean(&series.v_mag),
        i_mag: nan_mean(&series.i_mag),
    };
    if [port.p, port.q, port.v_mag, port.i_mag].iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("channel without valid samples".into()));
    }
    Ok(port)
}

/// Regress a prepared feature set and solve for the Thévenin parameters at
/// `port`.
pub fn identify_features(features: &FeatureSet, port: &PortState, rcfg: &RegressorConfig) -> Result<EstimationResult> {
    if features.rows() < MIN_ROWS {
        return Err(Error::TooShort { len: features.rows(), required: MIN_ROWS });
    }
    let fit = regress(&features.a, &features.b, rcfg)?;
    let extraction = msp_from_theta(&fit.theta, features.method)?;
    let report = solve_tep_report(&extraction.msp, port, None, &Default::default())
        .map_err(|e| Error::EstimationInfeasible(e.to_string()))?;
    Ok(EstimationResult {
        method: features.method,
        regressor: rcfg.kind,
        theta: fit.theta,
        msp: extraction.msp,
        tep: report.tep,
        operating_point: *port,
        diagnostics: Diagnostics {
            kappa: fit.kappa,
            rows: fit.rows,
            dropped_rows: features.dropped,
            residual: fit.relative_residual,
            lm_residual: report.residual_norm,
            lm_iterations: report.iterations,
            converged: true,
            sign_ambiguous: extraction.sign_ambiguous,
        },
    })
}

/// Features → regression → sensitivities → Thévenin parameters.
pub fn identify_pipeline(
    series: &MeasurementSeries,
    method: Method,
    wcfg: &WindowConfig,
    rcfg: &RegressorConfig,
) -> Result<EstimationResult> {
    identify_with_cleaning(series, method, wcfg, rcfg, None)
}

/// As [`identify_pipeline`], with optional MAD spike removal first.
pub fn identify_with_cleaning(
    series: &MeasurementSeries,
    method: Method,
    wcfg: &WindowConfig,
    rcfg: &RegressorConfig,
    mad_factor: Option<f64>,
) -> Result<EstimationResult> {
    let cleaned;
    let series = match mad_factor {
        Some(f) => {
            cleaned = clean_outliers(series, f)?;
            &cleaned
        }
        None => series,
    };
    let features = build_features(series, method, wcfg)?;
    let port = mean_operating_point(series)?;
    identify_features(&features, &port, rcfg)
}

//! Thévenin equivalent identification from ambient (steady-state stochastic)
//! port measurements.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: forward Thévenin port model, magnitude sensitivities and the
//!   Levenberg-Marquardt inverse solve.
//! - [`stochastic`]: correlated Ornstein-Uhlenbeck load fluctuations, ambient
//!   series synthesis and measurement corruption.
//! - [`windowstats`]: sliding-window statistics and regression feature sets.
//! - [`theory`]: closed-form SNR, asynchronous deviation ratio, collinearity
//!   and error-bound calculators.
//! - [`estimate`]: OLS/ridge/TLS regression, sensitivity extraction and the
//!   end-to-end identification pipeline.
//! - [`harness`]: experiment configuration, Monte Carlo runs and CSV output.

pub mod error;
pub mod estimate;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod stochastic;
pub mod theory;
pub mod windowstats;

pub use error::{Error, Result};
pub use estimate::{EstimationResult, RegressorConfig, RegressorKind};
pub use model::{Msp, PortState, TheveninParams};
pub use stochastic::{CorruptionSpec, MeasurementSeries, NoiseDist, OuLoadConfig};
pub use windowstats::{FeatureSet, Method, WindowConfig};

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimate::{RegressorConfig, RegressorKind};
use crate::model::TheveninParams;
use crate::stochastic::{CorruptionSpec, DriftJumpSchedule, OuLoadConfig};
use crate::windowstats::{Method, WindowConfig};

/// One experiment, read from a TOML file.
///
/// Every section is optional. Keys may be written either under `[section]`
/// headers or as dotted keys (`load.r_pq = 0.2`); unknown keys are errors.
///
/// ```toml
/// tep.e_th = 270.0          # kV
/// tep.r_th = 20.0           # Ω
/// tep.x_th = 50.0           # Ω
/// load.r_pq = 0.2           # also p0 q0 alpha_p alpha_q b_p b_q gamma_p gamma_q
/// corruption.snr_db = 20.0  # also noise_dist delay_steps bias_frac outlier_frac ...
/// window.w = 5.0            # s
/// window.s_step = 0.01      # s
/// clean.mad_factor = 3.0    # omit to skip spike removal
/// run.duration = 120.0      # s
/// run.ts = 0.01             # s
/// run.trials = 50
/// run.base_seed = 1
/// run.methods = ["baseline", "mean", "variance"]
/// run.regressors = ["ols"]  # ols | ridge | tls
/// run.output_dir = "out"
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "reference_tep")]
    pub tep: TheveninParams,
    #[serde(default)]
    pub load: OuLoadConfig,
    #[serde(default)]
    pub corruption: CorruptionSpec,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub clean: CleanConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
    /// Time-varying network for the tracking experiment.
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
}

fn reference_tep() -> TheveninParams {
    TheveninParams { e_th: 270.0, r_th: 20.0, x_th: 50.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanConfig {
    pub mad_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub duration: f64,
    pub ts: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub regressors: Vec<String>,
    /// Penalty for `ridge`; automatic when absent.
    pub ridge_lambda: Option<f64>,
    pub output_dir: PathBuf,
    /// Run trials on the thread pool. Output is identical either way.
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            duration: 120.0,
            ts: 0.01,
            trials: 50,
            base_seed: 1,
            methods: Method::ALL.to_vec(),
            regressors: vec!["ols".into()],
            ridge_lambda: None,
            output_dir: PathBuf::from("out"),
            parallel: true,
        }
    }
}

/// Grids for the closed-form sweeps.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    /// Raw SNR of the noise added to the O-U excitation (dB).
    pub snr_db: f64,
    /// Window lengths (s) for the SNR sweep.
    pub w_values: Vec<f64>,
    /// Delays (samples) for the deviation sweep.
    pub m_values: Vec<usize>,
    /// Correlation coefficients for the collinearity sweep.
    pub r_values: Vec<f64>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            snr_db: 0.0,
            w_values: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            m_values: vec![1, 2, 5, 10, 20, 50, 100],
            r_values: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
        }
    }
}

/// Reactance drift, source-voltage jump and jitter, plus the rolling
/// estimation window used to follow them.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub x_th_end: f64,
    pub drift_end: f64,
    pub e_th_after: f64,
    pub jump_time: f64,
    pub jitter_frac: f64,
    pub jitter_period: f64,
    /// Length of the data window behind each tracked estimate (s).
    pub tracking_window: f64,
    /// Interval between tracked estimates (s).
    pub tracking_step: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            x_th_end: 80.0,
            drift_end: 7200.0,
            e_th_after: 290.0,
            jump_time: 3600.0,
            jitter_frac: 0.001,
            jitter_period: 60.0,
            tracking_window: 300.0,
            tracking_step: 60.0,
        }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self, base: TheveninParams, seed: u64) -> DriftJumpSchedule {
        DriftJumpSchedule {
            base,
            x_th_end: self.x_th_end,
            drift_end: self.drift_end,
            e_th_after: self.e_th_after,
            jump_time: self.jump_time,
            jitter_frac: self.jitter_frac,
            jitter_period: self.jitter_period,
            seed,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Samples per trial.
    pub fn samples(&self) -> usize {
        (self.run.duration / self.run.ts).round() as usize
    }

    pub fn regressor_configs(&self) -> Result<Vec<RegressorConfig>> {
        self.run
            .regressors
            .iter()
            .map(|name| {
                let kind = match name.parse::<RegressorKind>()? {
                    RegressorKind::Ridge(_) => RegressorKind::Ridge(self.run.ridge_lambda),
                    k => k,
                };
                Ok(RegressorConfig::new(kind))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        self.tep.validate().map_err(config)?;
        self.load.validate().map_err(config)?;
        self.corruption.validate().map_err(config)?;
        let run = &self.run;
        if !(run.ts > 0.0 && run.ts.is_finite() && run.duration > 0.0 && run.duration.is_finite()) {
            return Err(Error::Config("run.ts and run.duration must be positive".into()));
        }
        if run.trials == 0 {
            return Err(Error::Config("run.trials must be at least 1".into()));
        }
        if run.methods.is_empty() || run.regressors.is_empty() {
            return Err(Error::Config("run.methods and run.regressors must be non-empty".into()));
        }
        if run.ridge_lambda.is_some_and(|l| !(l >= 0.0)) {
            return Err(Error::Config("run.ridge_lambda must be non-negative".into()));
        }
        self.regressor_configs()?;
        let n_win = self.window.samples(run.ts).map_err(config)?;
        self.window.step_samples(run.ts).map_err(config)?;
        if self.samples() < n_win {
            return Err(Error::Config(format!(
                "duration {} s holds fewer samples than one {} s window",
                run.duration, self.window.w
            )));
        }
        if self.clean.mad_factor.is_some_and(|f| !(f > 0.0)) {
            return Err(Error::Config("clean.mad_factor must be positive".into()));
        }
        if self.theory.r_values.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::Config("theory.r_values must lie in [0, 1)".into()));
        }
        if self.theory.w_values.iter().any(|&w| (w / run.ts).round() < 4.0) {
            return Err(Error::Config("theory.w_values must span at least four samples".into()));
        }
        if let Some(s) = &self.schedule {
            s.schedule(self.tep, 0).validate().map_err(config)?;
            if !(s.tracking_window > 0.0 && s.tracking_step > 0.0) || s.tracking_window > run.duration {
                return Err(Error::Config("tracking window must be positive and fit in run.duration".into()));
            }
        }
        Ok(())
    }
}

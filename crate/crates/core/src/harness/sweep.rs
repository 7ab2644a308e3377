use std::str::FromStr;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::theory::{condition_number, deviation_ratio, theoretical_snr, AutocovSpec, SnrMode};
use crate::windowstats::Method;

/// Closed-form curve families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Feature SNR against window length.
    Snr,
    /// Deviation ratio against measurement delay.
    Deviation,
    /// Condition number against P-Q correlation.
    Kappa,
}

impl FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(Self::Snr),
            "deviation" => Ok(Self::Deviation),
            "kappa" => Ok(Self::Kappa),
            _ => Err(Error::Config(format!("unknown sweep '{s}'"))),
        }
    }
}

/// Header and numeric rows of one closed-form sweep. The excitation is the
/// configured active-power O-U process.
pub fn theory_sweep(cfg: &ExperimentConfig, sweep: Sweep) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
    let ts = cfg.run.ts;
    let spec = AutocovSpec::exponential(cfg.load.alpha_p, cfg.load.var_p(), ts)?;
    let config = |e: Error| Error::Config(e.to_string());
    match sweep {
        Sweep::Snr => {
            let noise_var = spec.sigma2 / 10f64.powf(cfg.theory.snr_db / 10.0);
            let header = vec!["w", "n", "snr_raw", "snr0", "snr1", "snr2", "snr0_approx", "snr1_approx", "snr2_approx"];
            let mut rows = Vec::new();
            for &w in &cfg.theory.w_values {
                let n = (w / ts).round() as usize;
                let mut row = vec![w, n as f64, cfg.theory.snr_db];
                for mode in [SnrMode::Exact, SnrMode::Approx] {
                    for method in Method::ALL {
                        row.push(theoretical_snr(method, &spec, n, noise_var, mode).map_err(config)?);
                    }
                }
                rows.push(row);
            }
            Ok((header, rows))
        }
        Sweep::Deviation => {
            let n = cfg.window.samples(ts)?;
            let header = vec!["m", "tau", "eps0", "eps1", "eps2"];
            let mut rows = Vec::new();
            for &m in &cfg.theory.m_values {
                let mut row = vec![m as f64, m as f64 * ts];
                for method in Method::ALL {
                    row.push(deviation_ratio(method, &spec, n, m).map_err(config)?);
                }
                rows.push(row);
            }
            Ok((header, rows))
        }
        Sweep::Kappa => {
            let header = vec!["r_pq", "kappa0", "kappa1", "kappa2"];
            let mut rows = Vec::new();
            for &r in &cfg.theory.r_values {
                let mut row = vec![r];
                for method in Method::ALL {
                    row.push(condition_number(method, r).map_err(config)?);
                }
                rows.push(row);
            }
            Ok((header, rows))
        }
    }
}

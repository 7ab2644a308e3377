use std::io::Write;

use super::config::ExperimentConfig;
use super::montecarlo::{trial_seed, CORRUPT_STREAM, SCHEDULE_STREAM, SIM_STREAM};
use crate::error::{Error, Result};
use crate::estimate::{identify_features, mean_operating_point};
use crate::model::TheveninParams;
use crate::stochastic::{blockwise_variance, corrupt_with_reference, simulate_scheduled, split_seed};
use crate::windowstats::{build_features, clean_outliers, Method};

/// One rolling-window estimate during the tracking experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    /// End of the data window (s).
    pub t: f64,
    pub label: String,
    pub estimate: Option<TheveninParams>,
    /// Jitter-free parameters at the window midpoint.
    pub truth: TheveninParams,
}

/// Simulate trial 0 under the configured drift/jump schedule and estimate
/// the Thévenin parameters on a rolling data window.
pub fn run_tracking(cfg: &ExperimentConfig) -> Result<Vec<TrackPoint>> {
    cfg.validate()?;
    let sc = cfg.schedule.ok_or_else(|| Error::Config("tracking needs a [schedule] section".into()))?;
    let seed = trial_seed(cfg.run.base_seed, 0);
    let schedule = sc.schedule(cfg.tep, split_seed(seed, SCHEDULE_STREAM));
    let ts = cfg.run.ts;
    let clean = simulate_scheduled(&schedule, &cfg.load, cfg.samples(), ts, split_seed(seed, SIM_STREAM))?;
    // Noise is referenced to the fluctuation level, not to the drift and step.
    let block = ((sc.tracking_step / ts).round() as usize).max(1);
    let reference = clean.channels().map(|c| blockwise_variance(c, block));
    let mut series =
        corrupt_with_reference(&clean, &cfg.corruption, split_seed(seed, CORRUPT_STREAM), Some(reference))?;
    if let Some(f) = cfg.clean.mad_factor {
        series = clean_outliers(&series, f)?;
    }
    let regressors = cfg.regressor_configs()?;
    let features: Vec<_> = cfg
        .run
        .methods
        .iter()
        .map(|&m| build_features(&series, m, &cfg.window).map(|f| (m, f)))
        .collect::<Result<_>>()?;

    let window_samples = (sc.tracking_window / ts).round() as usize;
    let step_samples = ((sc.tracking_step / ts).round() as usize).max(1);
    let mut points = Vec::new();
    let mut end = window_samples;
    while end <= series.len() {
        let start = end - window_samples;
        let t0 = series.time(start);
        let t_end = t0 + window_samples as f64 * ts;
        let truth = schedule.nominal_at(0.5 * (t0 + t_end));
        let port = mean_operating_point(&series.slice(start, window_samples)?);
        for (method, fs) in &features {
            // Each row must be built entirely from samples inside the window.
            let span = if *method == Method::Baseline { ts } else { cfg.window.w };
            let sub = fs.select_time(t0 - 0.5 * ts, t_end - span + 0.5 * ts);
            for rcfg in &regressors {
                let estimate = port.as_ref().ok().and_then(|p| identify_features(&sub, p, rcfg).ok()).map(|r| r.tep);
                points.push(TrackPoint {
                    t: t_end,
                    label: format!("{}-{}", method.label(), rcfg.kind.label()),
                    estimate,
                    truth,
                });
            }
        }
        end += step_samples;
    }
    Ok(points)
}

pub const TRACK_HEADER: [&str; 8] = ["t", "method", "e_th", "r_th", "x_th", "e_true", "r_true", "x_true"];

pub fn write_tracking<W: Write>(points: &[TrackPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACK_HEADER)?;
    let f = |v: f64| if v.is_nan() { "nan".to_string() } else { format!("{v}") };
    for p in points {
        let est = p.estimate.map_or([f64::NAN; 3], |e| e.as_array());
        let tru = p.truth.as_array();
        w.write_record([
            format!("{:.9e}", p.t),
            p.label.clone(),
            f(est[0]),
            f(est[1]),
            f(est[2]),
            f(tru[0]),
            f(tru[1]),
            f(tru[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

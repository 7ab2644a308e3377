use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimate::{identify_features, mean_operating_point, EstimationResult, RegressorKind};
use crate::io::{write_results, ResultRow};
use crate::model::{solve_port, theoretical_msp, TheveninParams};
use crate::stochastic::{corrupt, simulate_ambient, split_seed, MeasurementSeries};
use crate::windowstats::{build_features, clean_outliers, Method};

/// Sub-stream of a trial seed feeding the load simulation.
pub const SIM_STREAM: u64 = 0;
/// Sub-stream of a trial seed feeding measurement corruption.
pub const CORRUPT_STREAM: u64 = 1;
/// Sub-stream of a trial seed feeding topology jitter.
pub const SCHEDULE_STREAM: u64 = 2;

/// Seed of trial `index`: `mix(base_seed + φ + mix(index + c))`, where `mix`
/// is the splitmix64 finaliser, φ the 64-bit golden-ratio increment and `c`
/// a fixed odd constant. Simulation and corruption draw from further splits
/// of this value.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    split_seed(base_seed, index as u64)
}

/// Clean series of trial `index`.
pub fn simulate_trial(cfg: &ExperimentConfig, index: usize) -> Result<MeasurementSeries> {
    let seed = split_seed(trial_seed(cfg.run.base_seed, index), SIM_STREAM);
    simulate_ambient(&cfg.tep, &cfg.load, cfg.samples(), cfg.run.ts, seed)
}

/// Corruption of trial `index` applied to `series`.
pub fn corrupt_trial(cfg: &ExperimentConfig, index: usize, series: &MeasurementSeries) -> Result<MeasurementSeries> {
    let seed = split_seed(trial_seed(cfg.run.base_seed, index), CORRUPT_STREAM);
    corrupt(series, &cfg.corruption, seed)
}

/// One configured method/regressor pair of one trial.
#[derive(Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub regressor: RegressorKind,
    pub result: Result<EstimationResult>,
}

impl MethodOutcome {
    pub fn label(&self) -> String {
        format!("{}-{}", self.method.label(), self.regressor.label())
    }
}

#[derive(Debug)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    pub outcomes: Vec<MethodOutcome>,
}

/// Estimate every configured method on an already measured series.
pub fn identify_all(cfg: &ExperimentConfig, measured: &MeasurementSeries) -> Result<Vec<MethodOutcome>> {
    let regressors = cfg.regressor_configs()?;
    let cleaned;
    let series = match cfg.clean.mad_factor {
        Some(f) => {
            cleaned = clean_outliers(measured, f)?;
            &cleaned
        }
        None => measured,
    };
    let port = mean_operating_point(series);
    let mut outcomes = Vec::with_capacity(cfg.run.methods.len() * regressors.len());
    for &method in &cfg.run.methods {
        let features = build_features(series, method, &cfg.window);
        for rcfg in &regressors {
            let result = match (&features, &port) {
                (Ok(f), Ok(p)) => identify_features(f, p, rcfg),
                (Err(e), _) | (_, Err(e)) => Err(Error::Data(e.to_string())),
            };
            outcomes.push(MethodOutcome { method, regressor: rcfg.kind, result });
        }
    }
    Ok(outcomes)
}

/// Simulate, corrupt and identify one trial. Failures at any stage are
/// recorded against every affected method rather than returned.
pub fn run_trial(cfg: &ExperimentConfig, index: usize) -> TrialResult {
    let seed = trial_seed(cfg.run.base_seed, index);
    let measured = simulate_trial(cfg, index).and_then(|s| corrupt_trial(cfg, index, &s));
    let outcomes = match measured.and_then(|m| identify_all(cfg, &m)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e.to_string();
            let kinds: Vec<RegressorKind> =
                cfg.regressor_configs().map(|r| r.into_iter().map(|c| c.kind).collect()).unwrap_or_default();
            cfg.run
                .methods
                .iter()
                .flat_map(|&method| {
                    let msg = msg.clone();
                    kinds.iter().map(move |&regressor| MethodOutcome {
                        method,
                        regressor,
                        result: Err(Error::Data(msg.clone())),
                    })
                })
                .collect()
        }
    };
    TrialResult { index, seed, outcomes }
}

/// All trials in index order.
pub fn run_trials(cfg: &ExperimentConfig) -> Vec<TrialResult> {
    if cfg.run.parallel {
        (0..cfg.run.trials).into_par_iter().map(|k| run_trial(cfg, k)).collect()
    } else {
        (0..cfg.run.trials).map(|k| run_trial(cfg, k)).collect()
    }
}

/// Distribution statistics of one (method, parameter) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    /// Finite values summarised.
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub mean: f64,
    /// Non-finite inputs, i.e. failed estimates.
    pub failure_count: usize,
}

/// Quantile of sorted data by linear interpolation between closest ranks:
/// position p·(n − 1), zero-based.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot statistics. Whiskers reach the most extreme observations within
/// 1.5·IQR of the quartiles. Non-finite values count as failures.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let failure_count = values.len() - v.len();
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let hi_fence = q3 + 1.5 * iqr;
    let lo_fence = q1 - 1.5 * iqr;
    let whisker_hi = v.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(q3);
    let whisker_lo = v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(q1);
    Ok(Summary {
        n: v.len(),
        median,
        q1,
        q3,
        iqr,
        whisker_lo,
        whisker_hi,
        mean: v.iter().sum::<f64>() / v.len() as f64,
        failure_count,
    })
}

/// Per-estimate quantities summarised across trials.
pub const PARAMETERS: [&str; 5] = ["e_ratio", "r_ratio", "x_ratio", "tep_err", "msp_err"];

/// Ratios of each estimated parameter to truth, then relative Frobenius
/// errors of the parameter and sensitivity vectors. Failures give `NaN`.
pub fn trial_metrics(result: &Result<EstimationResult>, truth: &TheveninParams) -> [f64; 5] {
    let Ok(r) = result else {
        return [f64::NAN; 5];
    };
    let est = r.tep.as_array();
    let tru = truth.as_array();
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: Vec<f64> = est.iter().zip(&tru).map(|(a, b)| a - b).collect();
    let tep_err = norm(&diff) / norm(&tru);
    let msp_err = solve_port(truth, r.operating_point.p, r.operating_point.q)
        .and_then(|port| theoretical_msp(truth, &port))
        .map(|m| r.msp.relative_error(&m))
        .unwrap_or(f64::NAN);
    [est[0] / tru[0], est[1] / tru[1], est[2] / tru[2], tep_err, msp_err]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub parameter: String,
    /// `None` when every trial failed.
    pub summary: Option<Summary>,
    pub failure_count: usize,
}

pub const SUMMARY_HEADER: [&str; 11] =
    ["method", "parameter", "n", "median", "q1", "q3", "iqr", "whisker_lo", "whisker_hi", "mean", "failure_count"];

/// Fold trial results, in index order, into per-label summaries.
pub fn summarize_trials(cfg: &ExperimentConfig, trials: &[TrialResult]) -> Vec<SummaryRow> {
    let Some(first) = trials.first() else {
        return Vec::new();
    };
    let labels: Vec<String> = first.outcomes.iter().map(|o| o.label()).collect();
    let mut rows = Vec::new();
    for (slot, label) in labels.iter().enumerate() {
        let metrics: Vec<[f64; 5]> = trials.iter().map(|t| trial_metrics(&t.outcomes[slot].result, &cfg.tep)).collect();
        for (p, name) in PARAMETERS.iter().enumerate() {
            let values: Vec<f64> = metrics.iter().map(|m| m[p]).collect();
            let summary = summarize(&values).ok();
            rows.push(SummaryRow {
                method: label.clone(),
                parameter: name.to_string(),
                failure_count: summary.map_or(values.len(), |s| s.failure_count),
                summary,
            });
        }
    }
    rows
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    let f = |v: f64| if v.is_nan() { "nan".to_string() } else { format!("{v}") };
    for r in rows {
        let mut rec = vec![r.method.clone(), r.parameter.clone()];
        match &r.summary {
            Some(s) => rec.extend([
                s.n.to_string(),
                f(s.median),
                f(s.q1),
                f(s.q3),
                f(s.iqr),
                f(s.whisker_lo),
                f(s.whisker_hi),
                f(s.mean),
            ]),
            None => {
                rec.push("0".into());
                rec.extend(std::iter::repeat_n("nan".to_string(), 7));
            }
        }
        rec.push(r.failure_count.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw per-trial rows, trial-major in configuration order.
pub fn result_rows(trials: &[TrialResult]) -> Vec<ResultRow> {
    trials
        .iter()
        .flat_map(|t| {
            t.outcomes.iter().map(move |o| match &o.result {
                Ok(r) => ResultRow::from_result(r, t.seed),
                Err(_) => ResultRow::failed(o.label(), t.seed),
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct MonteCarloReport {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
    /// `(trial index, label, error)` for every failed estimate.
    pub failures: Vec<(usize, String, String)>,
}

/// Run every trial and write `trials.csv` and `summary.csv` into `out_dir`.
pub fn run_montecarlo_to(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let trials = run_trials(cfg);
    let summary = summarize_trials(cfg, &trials);
    std::fs::create_dir_all(out_dir)?;
    write_results(&result_rows(&trials), std::fs::File::create(out_dir.join("trials.csv"))?, true)?;
    write_summary(&summary, std::fs::File::create(out_dir.join("summary.csv"))?)?;
    let failures = trials
        .iter()
        .flat_map(|t| {
            t.outcomes.iter().filter_map(move |o| o.result.as_ref().err().map(|e| (t.index, o.label(), e.to_string())))
        })
        .collect();
    Ok(MonteCarloReport { trials, summary, failures })
}

/// [`run_montecarlo_to`] into the configured output directory.
pub fn run_montecarlo(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_montecarlo_to(cfg, &cfg.run.output_dir)
}

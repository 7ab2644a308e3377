//! Sliding-window statistics and the regression feature sets of the three
//! identification methods.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::MeasurementSeries;

/// Minimum number of valid samples a window needs for second moments.
pub const MIN_VALID: usize = 4;

/// MAD to standard deviation factor for Gaussian data.
const MAD_SCALE: f64 = 1.4826;

/// Identification method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Temporal increments between consecutive samples.
    Baseline,
    /// Window-anchor sample minus window mean.
    Mean,
    /// Window variances and the P-Q covariance.
    Variance,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::Mean, Method::Variance];

    pub fn label(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Mean => "mean",
            Method::Variance => "variance",
        }
    }

    /// Columns of the power-side feature matrix.
    pub fn a_cols(self) -> usize {
        match self {
            Method::Variance => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "mean" => Ok(Method::Mean),
            "variance" => Ok(Method::Variance),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// Window length and slide step, both in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub w: f64,
    pub s_step: f64,
}

/// Five-second windows sliding by 10 ms.
impl Default for WindowConfig {
    fn default() -> Self {
        Self { w: 5.0, s_step: 0.01 }
    }
}

impl WindowConfig {
    pub fn new(w: f64, s_step: f64) -> Self {
        Self { w, s_step }
    }

    /// Samples per window at sampling period `ts`.
    pub fn samples(&self, ts: f64) -> Result<usize> {
        if !(self.w > 0.0 && ts > 0.0) {
            return Err(Error::InvalidParameter(format!("window {} s at ts {ts} s", self.w)));
        }
        let n = (self.w / ts).round() as usize;
        if n < MIN_VALID {
            return Err(Error::WindowTooShort { valid: n, required: MIN_VALID });
        }
        Ok(n)
    }

    /// Slide step in samples; must be a whole multiple of `ts`.
    pub fn step_samples(&self, ts: f64) -> Result<usize> {
        let k = self.s_step / ts;
        let kr = k.round();
        if !(self.s_step > 0.0) || kr < 1.0 || (k - kr).abs() > 1e-6 * kr {
            return Err(Error::InvalidParameter(format!(
                "slide step {} s is not a positive multiple of ts {ts} s",
                self.s_step
            )));
        }
        Ok(kr as usize)
    }
}

/// Statistics of one window. Channel order is P, Q, V, I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub start: usize,
    pub time: f64,
    pub valid: [usize; 4],
    pub mean: [f64; 4],
    pub var: [f64; 4],
    pub cov_pq: f64,
}

fn window_record(series: &MeasurementSeries, start: usize, n: usize) -> Option<WindowRecord> {
    let chans = series.channels();
    let mut valid = [0usize; 4];
    let mut mean = [0.0; 4];
    let mut var = [0.0; 4];
    for c in 0..4 {
        let xs = &chans[c][start..start + n];
        let (sum, cnt) = xs.iter().filter(|x| !x.is_nan()).fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
        if cnt < MIN_VALID {
            return None;
        }
        let m = sum / cnt as f64;
        valid[c] = cnt;
        mean[c] = m;
        var[c] = centred_cross(xs, xs, m, m).0;
    }
    let (cov_pq, pairs) = centred_cross(&series.p[start..start + n], &series.q[start..start + n], mean[0], mean[1]);
    if pairs < MIN_VALID {
        return None;
    }
    Some(WindowRecord { start, time: series.time(start), valid, mean, var, cov_pq })
}

/// Sum of centred products over pairwise-valid samples, over (count − 1).
fn centred_cross(x: &[f64], y: &[f64], mx: f64, my: f64) -> (f64, usize) {
    let (s, k) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .fold((0.0, 0usize), |(s, k), (a, b)| (s + (a - mx) * (b - my), k + 1));
    (s / (k as f64 - 1.0), k)
}

fn window_starts(len: usize, n: usize, step: usize) -> Vec<usize> {
    if len < n {
        return Vec::new();
    }
    (0..=len - n).step_by(step).collect()
}

/// Per-window mean, variance and P-Q covariance (n − 1 denominators, gaps
/// ignored).
pub fn window_stats(series: &MeasurementSeries, cfg: &WindowConfig) -> Result<Vec<WindowRecord>> {
    series.validate()?;
    let n = cfg.samples(series.ts)?;
    let step = cfg.step_samples(series.ts)?;
    if series.len() < n {
        return Err(Error::TooShort { len: series.len(), required: n });
    }
    window_starts(series.len(), n, step)
        .into_par_iter()
        .map(|start| {
            window_record(series, start, n).ok_or_else(|| {
                let valid = series
                    .channels()
                    .iter()
                    .map(|c| c[start..start + n].iter().filter(|x| !x.is_nan()).count())
                    .min()
                    .unwrap_or(0);
                Error::WindowTooShort { valid, required: MIN_VALID }
            })
        })
        .collect()
}

pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Replace isolated spikes with gaps. A sample is flagged when its first
/// differences to the valid neighbours on both sides exceed
/// `mad_factor × 1.4826 × MAD(d)`; end samples have only one neighbour.
pub fn clean_outliers(series: &MeasurementSeries, mad_factor: f64) -> Result<MeasurementSeries> {
    series.validate()?;
    if series.len() < 3 {
        return Err(Error::TooShort { len: series.len(), required: 3 });
    }
    let mut out = series.clone();
    for channel in out.channels_mut() {
        let flags = spike_flags(channel, mad_factor);
        for (x, f) in channel.iter_mut().zip(flags) {
            if f {
                *x = f64::NAN;
            }
        }
    }
    Ok(out)
}

fn spike_flags(x: &[f64], mad_factor: f64) -> Vec<bool> {
    let n = x.len();
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut valid: Vec<f64> = diffs.iter().copied().filter(|d| !d.is_nan()).collect();
    if valid.is_empty() {
        return vec![false; n];
    }
    let med = median_in_place(&mut valid);
    let mut dev: Vec<f64> = valid.iter().map(|d| (d - med).abs()).collect();
    let threshold = mad_factor * MAD_SCALE * median_in_place(&mut dev);
    let exceeds = |k: usize| -> Option<bool> {
        let d = diffs[k];
        if d.is_nan() {
            None
        } else {
            Some(d.abs() > threshold)
        }
    };
    (0..n)
        .map(|k| {
            let left = if k > 0 { exceeds(k - 1) } else { None };
            let right = if k + 1 < n { exceeds(k) } else { None };
            match (left, right) {
                (Some(l), Some(r)) => l && r,
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => false,
            }
        })
        .collect()
}

/// Regression pair (A, B) with one row per step or window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub method: Method,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub row_times: Vec<f64>,
    /// Rows discarded because of gaps.
    pub dropped: usize,
}

impl FeatureSet {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Rows whose anchor time lies in `[t0, t1)`.
    pub fn select_time(&self, t0: f64, t1: f64) -> FeatureSet {
        let idx: Vec<usize> =
            self.row_times.iter().enumerate().filter(|(_, &t)| t >= t0 && t < t1).map(|(k, _)| k).collect();
        FeatureSet {
            method: self.method,
            a: self.a.select_rows(idx.iter()),
            b: self.b.select_rows(idx.iter()),
            row_times: idx.iter().map(|&k| self.row_times[k]).collect(),
            dropped: 0,
        }
    }
}

fn assemble(method: Method, rows: Vec<(f64, Vec<f64>, [f64; 2])>, dropped: usize) -> Result<FeatureSet> {
    if rows.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let cols = method.a_cols();
    let a = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r].1[c]);
    let b = DMatrix::from_fn(rows.len(), 2, |r, c| rows[r].2[c]);
    Ok(FeatureSet { method, a, b, row_times: rows.iter().map(|r| r.0).collect(), dropped })
}

/// Build the feature pair for `method`.
///
/// Baseline rows are first differences of consecutive samples (rows touching
/// a gap are dropped). Window rows are dropped when a window has fewer than
/// four valid samples in any channel, or (mean method) when the anchor
/// sample itself is a gap.
pub fn build_features(series: &MeasurementSeries, method: Method, cfg: &WindowConfig) -> Result<FeatureSet> {
    series.validate()?;
    if method == Method::Baseline {
        let mut rows = Vec::with_capacity(series.len() - 1);
        let mut dropped = 0;
        for k in 0..series.len() - 1 {
            let d = |x: &[f64]| x[k + 1] - x[k];
            let row = (series.time(k), vec![d(&series.p), d(&series.q)], [d(&series.v_mag), d(&series.i_mag)]);
            if row.1.iter().chain(row.2.iter()).any(|v| v.is_nan()) {
                dropped += 1;
            } else {
                rows.push(row);
            }
        }
        return assemble(method, rows, dropped);
    }

    let n = cfg.samples(series.ts)?;
    let step = cfg.step_samples(series.ts)?;
    if series.len() < n {
        return Err(Error::TooShort { len: series.len(), required: n });
    }
    let starts = window_starts(series.len(), n, step);
    let total = starts.len();
    let rows: Vec<_> = starts
        .into_par_iter()
        .filter_map(|start| {
            let rec = window_record(series, start, n)?;
            match method {
                Method::Mean => {
                    let anchor = |c: usize| series.channels()[c][start] - rec.mean[c];
                    let row = (rec.time, vec![anchor(0), anchor(1)], [anchor(2), anchor(3)]);
                    if row.1.iter().chain(row.2.iter()).any(|v| v.is_nan()) {
                        None
                    } else {
                        Some(row)
                    }
                }
                Method::Variance => {
                    Some((rec.time, vec![rec.var[0], rec.var[1], rec.cov_pq], [rec.var[2], rec.var[3]]))
                }
                Method::Baseline => unreachable!(),
            }
        })
        .collect();
    let dropped = total - rows.len();
    assemble(method, rows, dropped)
}

//! Synthetic ambient data: correlated O-U load fluctuations, the two-bus
//! Thévenin circuit they drive, and the measurement corruptions applied on
//! top.

mod ambient;
mod corrupt;
mod ou;

pub use ambient::{simulate_ambient, simulate_scheduled, ConstantTep, DriftJumpSchedule, TepSchedule};
pub use corrupt::{corrupt, corrupt_with_reference, CorruptionSpec, NoiseDist};
pub use ou::{gen_ou, gen_ou_pair, OuLoadConfig};

use crate::error::{Error, Result};

/// Derive an independent 64-bit stream seed from `seed` and a stream index
/// (splitmix64 finaliser over the pair).
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix(stream.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Uniformly sampled port measurements. Gaps are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub ts: f64,
    pub start_time: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub v_mag: Vec<f64>,
    pub i_mag: Vec<f64>,
}

impl MeasurementSeries {
    pub fn new(ts: f64, start_time: f64, p: Vec<f64>, q: Vec<f64>, v_mag: Vec<f64>, i_mag: Vec<f64>) -> Result<Self> {
        let s = Self { ts, start_time, p, q, v_mag, i_mag };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::Data(format!("sampling period must be positive, got {}", self.ts)));
        }
        let n = self.p.len();
        if self.q.len() != n || self.v_mag.len() != n || self.i_mag.len() != n {
            return Err(Error::Data("channel lengths differ".into()));
        }
        if n < 2 {
            return Err(Error::TooShort { len: n, required: 2 });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 * self.ts
    }

    pub fn channels(&self) -> [&[f64]; 4] {
        [&self.p, &self.q, &self.v_mag, &self.i_mag]
    }

    pub(crate) fn channels_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.p, &mut self.q, &mut self.v_mag, &mut self.i_mag]
    }

    /// Contiguous sub-series `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::Data(format!("slice {start}..{} out of range for {} samples", start + len, self.len())));
        }
        Self::new(
            self.ts,
            self.time(start),
            self.p[start..start + len].to_vec(),
            self.q[start..start + len].to_vec(),
            self.v_mag[start..start + len].to_vec(),
            self.i_mag[start..start + len].to_vec(),
        )
    }
}

/// Mean of the finite entries; `NaN` when there are none.
pub fn nan_mean(x: &[f64]) -> f64 {
    let (sum, count) = x.iter().filter(|v| !v.is_nan()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Sample variance (n − 1) of the finite entries.
pub fn nan_var(x: &[f64]) -> f64 {
    let m = nan_mean(x);
    let (ss, count) = x.iter().filter(|v| !v.is_nan()).fold((0.0, 0usize), |(s, c), v| (s + (v - m) * (v - m), c + 1));
    if count < 2 {
        f64::NAN
    } else {
        ss / (count - 1) as f64
    }
}

const MIN_BLOCK: usize = 4;

/// Median over consecutive blocks of `block` samples of the per-block
/// variance. Insensitive to slow drift and to isolated level steps.
pub fn blockwise_variance(x: &[f64], block: usize) -> f64 {
    let block = block.max(MIN_BLOCK);
    let mut vars: Vec<f64> =
        x.chunks(block).filter(|c| c.len() >= MIN_BLOCK).map(nan_var).filter(|v| v.is_finite()).collect();
    if vars.is_empty() {
        return nan_var(x);
    }
    vars.sort_by(f64::total_cmp);
    let mid = vars.len() / 2;
    if vars.len() % 2 == 1 {
        vars[mid]
    } else {
        0.5 * (vars[mid - 1] + vars[mid])
    }
}

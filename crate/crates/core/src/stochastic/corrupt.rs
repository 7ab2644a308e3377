use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::{nan_mean, nan_var, split_seed, MeasurementSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    #[default]
    Gaussian,
    Laplace,
    Logistic,
    StudentT,
}

impl NoiseDist {
    /// One zero-mean, unit-variance draw.
    fn sample(self, dof: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseDist::Gaussian => StandardNormal.sample(rng),
            NoiseDist::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
            NoiseDist::Logistic => {
                let u: f64 = rng.random::<f64>().clamp(f64::EPSILON, 1.0 - f64::EPSILON);
                let scale = 3f64.sqrt() / std::f64::consts::PI;
                scale * (u / (1.0 - u)).ln()
            }
            NoiseDist::StudentT => {
                let t: f64 = StudentT::new(dof).expect("dof validated").sample(rng);
                t * ((dof - 2.0) / dof).sqrt()
            }
        }
    }
}

impl std::str::FromStr for NoiseDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "laplace" => Ok(Self::Laplace),
            "logistic" => Ok(Self::Logistic),
            "student_t" => Ok(Self::StudentT),
            _ => Err(Error::Config(format!("unknown noise distribution '{s}'"))),
        }
    }
}

/// Measurement corruption applied to a clean series. Every field defaults to
/// "disabled".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionSpec {
    pub noise_dist: NoiseDist,
    /// Target per-channel SNR (dB); `None` adds no noise.
    pub snr_db: Option<f64>,
    pub student_t_dof: f64,
    /// V and I lag P and Q by this many samples.
    pub delay_steps: usize,
    /// Constant offset as a signed fraction of each channel mean.
    pub bias_frac: f64,
    pub outlier_frac: f64,
    pub outlier_gain: f64,
    /// Fluctuation scaling about the channel mean.
    pub amp_scale: f64,
    pub missing_frac: f64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            noise_dist: NoiseDist::Gaussian,
            snr_db: None,
            student_t_dof: 5.0,
            delay_steps: 0,
            bias_frac: 0.0,
            outlier_frac: 0.0,
            outlier_gain: 5.0,
            amp_scale: 1.0,
            missing_frac: 0.0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        let snr_ok = self.snr_db.is_none_or(|s| s.is_finite());
        let ok = snr_ok
            && self.student_t_dof > 2.0
            && self.bias_frac.is_finite()
            && (0.0..=1.0).contains(&self.outlier_frac)
            && self.outlier_gain.is_finite()
            && self.amp_scale > 0.0
            && self.amp_scale.is_finite()
            && (0.0..=1.0).contains(&self.missing_frac);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid corruption spec {self:?}")))
        }
    }
}

/// Apply delay, additive noise, then bad-data transforms, in that order.
/// Noise power is set relative to each channel's own variance.
pub fn corrupt(series: &MeasurementSeries, spec: &CorruptionSpec, seed: u64) -> Result<MeasurementSeries> {
    corrupt_with_reference(series, spec, seed, None)
}

/// As [`corrupt`], with the signal variance behind the SNR supplied per
/// channel (P, Q, V, I). Records whose level drifts or steps need this, since
/// their total variance is dominated by the trend.
pub fn corrupt_with_reference(
    series: &MeasurementSeries,
    spec: &CorruptionSpec,
    seed: u64,
    reference_var: Option<[f64; 4]>,
) -> Result<MeasurementSeries> {
    series.validate()?;
    if reference_var.is_some_and(|r| r.iter().any(|v| !(*v >= 0.0 && v.is_finite()))) {
        return Err(Error::InvalidParameter("reference variances must be finite and non-negative".into()));
    }
    spec.validate()?;
    let mut out = series.clone();

    let m = spec.delay_steps;
    if m > 0 {
        let n = series.len();
        if m + 2 > n {
            return Err(Error::TooShort { len: n, required: m + 2 });
        }
        out.start_time = series.time(m);
        out.p = series.p[m..].to_vec();
        out.q = series.q[m..].to_vec();
        out.v_mag = series.v_mag[..n - m].to_vec();
        out.i_mag = series.i_mag[..n - m].to_vec();
    }

    for (c, channel) in out.channels_mut().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, c as u64));
        if let Some(snr) = spec.snr_db {
            let var = reference_var.map_or_else(|| nan_var(channel), |r| r[c]);
            let sd = (var / 10f64.powf(snr / 10.0)).sqrt();
            for x in channel.iter_mut() {
                *x += sd * spec.noise_dist.sample(spec.student_t_dof, &mut rng);
            }
        }
        if spec.bias_frac != 0.0 {
            let offset = spec.bias_frac * nan_mean(channel);
            channel.iter_mut().for_each(|x| *x += offset);
        }
        if spec.outlier_frac > 0.0 {
            let mu = nan_mean(channel);
            let count = (spec.outlier_frac * channel.len() as f64).round() as usize;
            for k in index::sample(&mut rng, channel.len(), count) {
                channel[k] = mu + spec.outlier_gain * (channel[k] - mu);
            }
        }
        if spec.amp_scale != 1.0 {
            let mu = nan_mean(channel);
            channel.iter_mut().for_each(|x| *x = mu + spec.amp_scale * (*x - mu));
        }
        if spec.missing_frac > 0.0 {
            let count = (spec.missing_frac * channel.len() as f64).round() as usize;
            for k in index::sample(&mut rng, channel.len(), count) {
                channel[k] = f64::NAN;
            }
        }
    }
    Ok(out)
}

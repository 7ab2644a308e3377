use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centre_columns, cond2, numerical_rank, singular_values, standardise_columns};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Ols,
    /// Penalty λ; `None` picks 10⁻⁴·tr(AᵀA)/cols on the (centred) input.
    Ridge(Option<f64>),
    Tls,
}

impl RegressorKind {
    pub fn label(&self) -> &'static str {
        match self {
            RegressorKind::Ols => "ols",
            RegressorKind::Ridge(_) => "ridge",
            RegressorKind::Tls => "tls",
        }
    }
}

impl std::str::FromStr for RegressorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Self::Ols),
            "ridge" => Ok(Self::Ridge(None)),
            "tls" => Ok(Self::Tls),
            _ => Err(Error::Config(format!("unknown regressor '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorConfig {
    pub kind: RegressorKind,
    /// Remove column means of A and B before solving.
    pub center: bool,
}

impl RegressorConfig {
    pub fn new(kind: RegressorKind) -> Self {
        Self { kind, center: true }
    }
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self::new(RegressorKind::Ols)
    }
}

/// Fitted coefficients with fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// One row per A column, one column per B column.
    pub theta: DMatrix<f64>,
    /// Condition number of the centred, column-standardised A.
    pub kappa: f64,
    /// ‖AΘ − B‖_F / ‖B‖_F on the solved (possibly centred) data.
    pub relative_residual: f64,
    pub rows: usize,
}

/// Solve AΘ ≈ B.
pub fn regress(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: &RegressorConfig) -> Result<Fit> {
    let (rows, cols) = a.shape();
    if b.nrows() != rows {
        return Err(Error::InvalidParameter(format!("A has {rows} rows, B has {}", b.nrows())));
    }
    if rows < cols + 2 {
        return Err(Error::TooShort { len: rows, required: cols + 2 });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite entry in regression input".into()));
    }
    let (a, b) = if cfg.center { (centre_columns(a).0, centre_columns(b).0) } else { (a.clone(), b.clone()) };
    let kappa = cond2(&standardise_columns(&a));

    let theta = match cfg.kind {
        RegressorKind::Ols => {
            if numerical_rank(&a) < cols {
                return Err(Error::RankDeficient { kappa });
            }
            let svd = a.clone().svd(true, true);
            svd.solve(&b, 0.0).map_err(|e| Error::Data(e.to_string()))?
        }
        RegressorKind::Ridge(lambda) => {
            let ata = a.transpose() * &a;
            let lambda = lambda.unwrap_or(1e-4 * ata.trace() / cols as f64);
            if lambda < 0.0 {
                return Err(Error::InvalidParameter(format!("ridge penalty {lambda} < 0")));
            }
            let lhs = ata + DMatrix::identity(cols, cols) * lambda;
            let rhs = a.transpose() * &b;
            match lhs.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => lhs.lu().solve(&rhs).ok_or(Error::RankDeficient { kappa })?,
            }
        }
        RegressorKind::Tls => tls(&a, &b, kappa)?,
    };
    let resid = (&a * &theta - &b).norm();
    let bn = b.norm();
    Ok(Fit { theta, kappa, relative_residual: if bn > 0.0 { resid / bn } else { resid }, rows })
}

/// Total least squares from the right singular vectors of [A B].
fn tls(a: &DMatrix<f64>, b: &DMatrix<f64>, kappa: f64) -> Result<DMatrix<f64>> {
    let (rows, p) = a.shape();
    let q = b.ncols();
    let mut c = DMatrix::zeros(rows, p + q);
    c.columns_mut(0, p).copy_from(a);
    c.columns_mut(p, q).copy_from(b);

    let svd = c.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::RankDeficient { kappa })?;
    let mut order: Vec<usize> = (0..p + q).collect();
    order.sort_unstable_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let v = DMatrix::from_fn(p + q, p + q, |r, k| v_t[(order[k], r)]);

    let v12 = v.view((0, p), (p, q)).clone_owned();
    let v22 = v.view((p, p), (q, q)).clone_owned();
    let s22 = singular_values(&v22);
    if s22.last().copied().unwrap_or(0.0) < 1e-12 {
        return Err(Error::RankDeficient { kappa });
    }
    let inv = v22.try_inverse().ok_or(Error::RankDeficient { kappa })?;
    Ok(-v12 * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn exact_system_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = randn(200, 3, &mut rng);
        let theta = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 3.0, -1.5, 0.25]);
        let b = &a * &theta;
        for center in [false, true] {
            for kind in [RegressorKind::Ols, RegressorKind::Tls, RegressorKind::Ridge(Some(0.0))] {
                let fit = regress(&a, &b, &RegressorConfig { kind, center }).unwrap();
                assert!(rel(&fit.theta, &theta) < 1e-10, "{kind:?} {center}");
            }
        }
    }

    #[test]
    fn zero_penalty_ridge_equals_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = randn(100, 2, &mut rng);
        let b = randn(100, 2, &mut rng);
        let ols = regress(&a, &b, &RegressorConfig::new(RegressorKind::Ols)).unwrap();
        let ridge = regress(&a, &b, &RegressorConfig::new(RegressorKind::Ridge(Some(0.0)))).unwrap();
        assert!(rel(&ridge.theta, &ols.theta) < 1e-10);
    }

    #[test]
    fn centring_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = centre_columns(&randn(80, 2, &mut rng).add_scalar(4.0)).0;
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        let b = centre_columns(&(&a * theta + randn(80, 2, &mut rng) * 0.1)).0;
        for kind in [RegressorKind::Ols, RegressorKind::Tls] {
            let with = regress(&a, &b, &RegressorConfig { kind, center: true }).unwrap();
            let without = regress(&a, &b, &RegressorConfig { kind, center: false }).unwrap();
            let d = (&with.theta - &without.theta).amax();
            assert!(d < 1e-12, "{kind:?} {d}");
        }
    }

    #[test]
    fn tls_beats_ols_under_errors_in_variables() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        let (mut bias_ols, mut bias_tls) = (DMatrix::zeros(2, 2), DMatrix::zeros(2, 2));
        for _ in 0..200 {
            let a_true = randn(500, 2, &mut rng);
            let b_true = &a_true * &theta;
            let a = &a_true + randn(500, 2, &mut rng) * 0.5;
            let b = &b_true + randn(500, 2, &mut rng) * 0.5;
            bias_ols += regress(&a, &b, &RegressorConfig::new(RegressorKind::Ols)).unwrap().theta - &theta;
            bias_tls += regress(&a, &b, &RegressorConfig::new(RegressorKind::Tls)).unwrap().theta - &theta;
        }
        assert!(bias_tls.norm() < bias_ols.norm(), "tls {} ols {}", bias_tls.norm(), bias_ols.norm());
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let col = randn(50, 1, &mut rng);
        let mut a = DMatrix::zeros(50, 2);
        a.set_column(0, &col.column(0));
        a.set_column(1, &(col.column(0) * 2.0));
        let b = randn(50, 2, &mut rng);
        assert!(matches!(regress(&a, &b, &RegressorConfig::new(RegressorKind::Ols)), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_rows() {
        let a = DMatrix::zeros(3, 2);
        let b = DMatrix::zeros(3, 2);
        assert!(matches!(regress(&a, &b, &RegressorConfig::default()), Err(Error::TooShort { .. })));
    }

    #[test]
    fn column_scaling_rescales_theta_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = randn(120, 2, &mut rng);
        let b = randn(120, 2, &mut rng);
        let fit = regress(&a, &b, &RegressorConfig::default()).unwrap();
        let mut scaled = a.clone();
        scaled.column_mut(1).scale_mut(4.0);
        let fit_s = regress(&scaled, &b, &RegressorConfig::default()).unwrap();
        for c in 0..2 {
            assert!((fit_s.theta[(1, c)] * 4.0 - fit.theta[(1, c)]).abs() < 1e-12);
            assert!((fit_s.theta[(0, c)] - fit.theta[(0, c)]).abs() < 1e-12);
        }
    }
}

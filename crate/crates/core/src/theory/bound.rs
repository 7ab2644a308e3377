use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimate::msp_from_theta;
use crate::linalg::{centre_columns, cond2, cond_frobenius, numerical_rank, singular_values};
use crate::windowstats::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    /// Frobenius condition number of the centred true A.
    pub kappa_f: f64,
    /// 2-norm condition number of the centred true A.
    pub kappa: f64,
    /// First-order bound on ‖Θ̂ − Θ‖_F/‖Θ‖_F in the regression's own
    /// coefficients.
    pub bound: f64,
    /// For three-column (variance) systems: the bound carried back to the
    /// linear sensitivities through the inverse of the quadratic map.
    pub mapped_bound: Option<f64>,
}

/// Perturbation bound on the least-squares coefficients given measured and
/// true feature matrices. All matrices are centred internally.
pub fn error_bound(
    a_meas: &DMatrix<f64>,
    a_true: &DMatrix<f64>,
    b_meas: &DMatrix<f64>,
    b_true: &DMatrix<f64>,
    theta_true: &DMatrix<f64>,
) -> Result<ErrorBound> {
    if a_meas.shape() != a_true.shape() || b_meas.shape() != b_true.shape() || a_true.nrows() != b_true.nrows() {
        return Err(Error::InvalidParameter("feature matrices are not conformable".into()));
    }
    if theta_true.shape() != (a_true.ncols(), b_true.ncols()) {
        return Err(Error::InvalidParameter("coefficient matrix shape mismatch".into()));
    }
    let a = centre_columns(a_true).0;
    let b = centre_columns(b_true).0;
    let da = centre_columns(a_meas).0 - &a;
    let db = centre_columns(b_meas).0 - &b;
    let kappa = cond2(&a);
    if numerical_rank(&a) < a.ncols() {
        return Err(Error::RankDeficient { kappa });
    }
    let kappa_f = cond_frobenius(&a);
    let bound = kappa_f * (da.norm() / a.norm() + db.norm() / b.norm());

    let mapped_bound = if a.ncols() == 3 {
        let linear = msp_from_theta(theta_true, Method::Variance)?.msp;
        let cols = [[linear.b_vp, linear.b_vq], [linear.b_ip, linear.b_iq]];
        // Jacobian of (β₁, β₂) ↦ (β₁², β₂², 2β₁β₂), block-diagonal over the
        // two output columns.
        let sigma_min = cols
            .iter()
            .map(|&[b1, b2]| {
                let j = DMatrix::from_row_slice(3, 2, &[2.0 * b1, 0.0, 0.0, 2.0 * b2, 2.0 * b2, 2.0 * b1]);
                singular_values(&j).last().copied().unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        let theta1_norm = cols.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        Some(bound * theta_true.norm() / (sigma_min * theta1_norm))
    } else {
        None
    };
    Ok(ErrorBound { kappa_f, kappa, bound, mapped_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{regress, RegressorConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn zero_perturbation_gives_zero_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = randn(50, 2, &mut rng);
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = &a * &theta;
        let eb = error_bound(&a, &a, &b, &b, &theta).unwrap();
        assert_eq!(eb.bound, 0.0);
        assert!(eb.kappa <= eb.kappa_f && eb.kappa_f <= 2.0 * eb.kappa);
    }

    #[test]
    fn actual_error_never_exceeds_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = DMatrix::from_row_slice(2, 2, &[-0.09, 0.003, -0.2, 0.003]);
        for _ in 0..50 {
            let a = randn(200, 2, &mut rng);
            let b = &a * &theta;
            let ea = randn(200, 2, &mut rng);
            let eb = randn(200, 2, &mut rng);
            let a_meas = &a + &ea * (0.01 * a.norm() / ea.norm());
            let b_meas = &b + &eb * (0.01 * b.norm() / eb.norm());
            let fit = regress(&a_meas, &b_meas, &RegressorConfig::default()).unwrap();
            let actual = (&fit.theta - &theta).norm() / theta.norm();
            let bound = error_bound(&a_meas, &a, &b_meas, &b, &theta).unwrap();
            assert!(actual <= bound.bound, "{actual} > {}", bound.bound);
            assert!(bound.kappa <= bound.kappa_f + 1e-12 && bound.kappa_f <= 2.0 * bound.kappa);
        }
    }

    #[test]
    fn rank_deficient_truth_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = randn(30, 1, &mut rng);
        let a = DMatrix::from_fn(30, 2, |r, _| c[(r, 0)]);
        let b = randn(30, 2, &mut rng);
        let theta = DMatrix::identity(2, 2);
        assert!(matches!(error_bound(&a, &a, &b, &b, &theta), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn variance_systems_report_mapped_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = randn(100, 3, &mut rng);
        let theta = DMatrix::from_row_slice(3, 2, &[0.04, 0.04, 0.01, 0.01, 0.04, 0.04]);
        let b = &a * &theta;
        let a_meas = &a + randn(100, 3, &mut rng) * 0.01;
        let eb = error_bound(&a_meas, &a, &b, &b, &theta).unwrap();
        assert!(eb.mapped_bound.unwrap() > 0.0);
    }
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::Msp;
use crate::windowstats::Method;

/// Negative squared-sensitivity entries down to −NEG_TOL·‖column‖ are
/// clamped to zero.
pub const NEG_TOL: f64 = 1e-6;

/// Allowed excess of |θ₃| over 2√(θ₁θ₂) before a variance-method column is
/// declared inconsistent. The exact map sits on the boundary |θ₃| = 2√(θ₁θ₂),
/// so sampling noise pushes about half of all estimates past it.
pub const OVERSHOOT_TOL: f64 = 0.5;

/// Sensitivities recovered from a coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MspExtraction {
    pub msp: Msp,
    /// Per B column (V, I): the relative P/Q sign could not be read from
    /// the cross term and the operating-regime prior was used.
    pub sign_ambiguous: [bool; 2],
}

/// Coefficient matrix for `method` implied by the sensitivities.
pub fn theta_from_msp(msp: &Msp, method: Method) -> DMatrix<f64> {
    match method {
        Method::Baseline | Method::Mean => DMatrix::from_row_slice(2, 2, &[msp.b_vp, msp.b_ip, msp.b_vq, msp.b_iq]),
        Method::Variance => DMatrix::from_row_slice(
            3,
            2,
            &[
                msp.b_vp * msp.b_vp,
                msp.b_ip * msp.b_ip,
                msp.b_vq * msp.b_vq,
                msp.b_iq * msp.b_iq,
                2.0 * msp.b_vp * msp.b_vq,
                2.0 * msp.b_ip * msp.b_iq,
            ],
        ),
    }
}

/// Invert the coefficient layout of `method` back to sensitivities.
///
/// For the variance method each column holds (β_P², β_Q², 2β_Pβ_Q). The
/// magnitudes come from the first two rows, the relative sign from the
/// third, and the absolute sign from the passive-load regime: voltage falls
/// and current rises with active power.
pub fn msp_from_theta(theta: &DMatrix<f64>, method: Method) -> Result<MspExtraction> {
    let expected = (method.a_cols(), 2);
    if theta.shape() != expected {
        return Err(Error::InvalidParameter(format!(
            "theta shape {:?} does not match {method} layout {expected:?}",
            theta.shape()
        )));
    }
    match method {
        Method::Baseline | Method::Mean => Ok(MspExtraction {
            msp: Msp::from_array([theta[(0, 0)], theta[(1, 0)], theta[(0, 1)], theta[(1, 1)]]),
            sign_ambiguous: [false; 2],
        }),
        Method::Variance => {
            let (v_p, v_q, v_amb) = invert_quadratic(theta, 0, -1.0)?;
            let (i_p, i_q, i_amb) = invert_quadratic(theta, 1, 1.0)?;
            Ok(MspExtraction { msp: Msp::from_array([v_p, v_q, i_p, i_q]), sign_ambiguous: [v_amb, i_amb] })
        }
    }
}

fn invert_quadratic(theta: &DMatrix<f64>, column: usize, prior: f64) -> Result<(f64, f64, bool)> {
    let col = theta.column(column);
    let (t1, t2, t3) = (col[0], col[1], col[2]);
    let scale = col.norm();
    let tol = NEG_TOL * scale;
    if t1 < -tol || t2 < -tol || !scale.is_finite() {
        return Err(Error::InconsistentQuadratic { column });
    }
    let m1 = t1.max(0.0).sqrt();
    let m2 = t2.max(0.0).sqrt();
    if t3.abs() > 2.0 * m1 * m2 * (1.0 + OVERSHOOT_TOL) + tol {
        return Err(Error::InconsistentQuadratic { column });
    }
    // Same-sign P and Q sensitivities is the regime's own pattern.
    let ambiguous = t3.abs() <= tol;
    let relative = if ambiguous { 1.0 } else { t3.signum() };
    Ok((prior * m1, prior * relative * m2, ambiguous))
}

//! Small dense linear-algebra helpers shared by the estimators and the
//! theory calculators.

use nalgebra::{DMatrix, DVector};

/// Column means and the centred copy of `a`.
pub fn centre_columns(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let rows = a.nrows().max(1) as f64;
    let means = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / rows));
    let mut out = a.clone();
    for (mut col, m) in out.column_iter_mut().zip(means.iter()) {
        col.add_scalar_mut(-m);
    }
    (out, means)
}

/// Centre and scale every column to unit Euclidean norm. Zero columns stay
/// zero.
pub fn standardise_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (mut out, _) = centre_columns(a);
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_unstable_by(|x, y| y.total_cmp(x));
    s
}

/// 2-norm condition number σ_max/σ_min (infinite when rank deficient).
pub fn cond2(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Frobenius-norm condition number ‖A‖_F·‖A⁺‖_F.
pub fn cond_frobenius(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    if s.iter().any(|&v| v <= 0.0) || s.is_empty() {
        return f64::INFINITY;
    }
    let fro: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let inv: f64 = s.iter().map(|v| 1.0 / (v * v)).sum::<f64>().sqrt();
    fro * inv
}

/// Numerical rank with relative tolerance `max(rows, cols)·ε·σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let s = singular_values(a);
    let Some(&hi) = s.first() else { return 0 };
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * hi;
    s.iter().filter(|&&v| v > tol).count()
}

/// Sample correlation matrix of the columns of `a`.
pub fn correlation(a: &DMatrix<f64>) -> DMatrix<f64> {
    let z = standardise_columns(a);
    z.transpose() * z
}

/// Eigenvalue ratio λ_max/λ_min of a symmetric matrix.
pub fn symmetric_cond(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

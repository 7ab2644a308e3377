//! Levenberg-Marquardt inverse solve: sensitivities + operating point back to
//! Thévenin parameters.

use nalgebra::{Matrix3, Vector3};

use super::{tep_residual_jacobian, tep_residuals, Msp, PortState, TheveninParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub initial_damping: f64,
    pub damping_factor: f64,
    /// Relative step norm below which the iteration stops.
    pub step_tol: f64,
    /// Residual norm below which the iteration stops.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Halvings allowed per trial step while restoring feasibility.
    pub max_backtracks: usize,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            initial_damping: 1e-3,
            damping_factor: 10.0,
            step_tol: 1e-10,
            residual_tol: 1e-12,
            max_iterations: 200,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmReport {
    pub tep: TheveninParams,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn feasible(tep: &TheveninParams, port: &PortState) -> bool {
    tep.e_th > 0.0
        && tep.as_array().iter().all(|v| v.is_finite())
        && tep.discriminant(port.p, port.q) > 0.0
        && tep.e_th * tep.e_th - 2.0 * (tep.r_th * port.p + tep.x_th * port.q) > 0.0
}

/// Default starting point derived from the measured port. The impedance
/// guess is pulled toward zero until the starting point is feasible.
pub(crate) fn default_init(port: &PortState) -> TheveninParams {
    let z_load = port.v_mag / port.i_mag.max(f64::MIN_POSITIVE);
    let mut tep = TheveninParams { e_th: 1.05 * port.v_mag, r_th: 0.1 * z_load, x_th: 0.3 * z_load };
    for _ in 0..60 {
        if feasible(&tep, port) {
            break;
        }
        tep.r_th *= 0.5;
        tep.x_th *= 0.5;
    }
    tep
}

fn norm(r: &[f64; 6]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Identify Thévenin parameters from sensitivities and one operating point.
pub fn solve_tep(msp: &Msp, port: &PortState, init: Option<TheveninParams>) -> Result<TheveninParams> {
    solve_tep_report(msp, port, init, &LmSettings::default()).map(|r| r.tep)
}

pub fn solve_tep_report(
    msp: &Msp,
    port: &PortState,
    init: Option<TheveninParams>,
    settings: &LmSettings,
) -> Result<LmReport> {
    if !msp.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite sensitivities {msp:?}")));
    }
    if !(port.v_mag > 0.0 && port.i_mag > 0.0 && port.p.is_finite() && port.q.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid operating point {port:?}")));
    }
    let mut x = init.unwrap_or_else(|| default_init(port));
    if !feasible(&x, port) {
        return Err(Error::InfeasibleOperatingPoint { discriminant: x.discriminant(port.p, port.q) });
    }

    let mut damping = settings.initial_damping;
    let (mut r, mut jac) = tep_residual_jacobian(&x, msp, port)?;
    let mut cost = norm(&r);
    let mut converged = cost < settings.residual_tol;
    let mut iterations = 0;

    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let j = nalgebra::SMatrix::<f64, 6, 3>::from_fn(|row, col| jac[row][col]);
        let rv = nalgebra::SVector::<f64, 6>::from_column_slice(&r);
        let jtj: Matrix3<f64> = j.transpose() * j;
        let grad: Vector3<f64> = j.transpose() * rv;

        let mut lhs = jtj;
        for k in 0..3 {
            lhs[(k, k)] += damping * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = lhs.cholesky().map(|c| c.solve(&(-grad))) else {
            damping *= settings.damping_factor;
            continue;
        };

        // Backtrack toward the current point until the trial is feasible.
        let mut step = step;
        let mut trial = TheveninParams::from_array([x.e_th + step[0], x.r_th + step[1], x.x_th + step[2]]);
        let mut halvings = 0;
        while !feasible(&trial, port) && halvings < settings.max_backtracks {
            step *= 0.5;
            trial = TheveninParams::from_array([x.e_th + step[0], x.r_th + step[1], x.x_th + step[2]]);
            halvings += 1;
        }
        let x_norm = Vector3::from(x.as_array()).norm();
        let small_step = step.norm() < settings.step_tol * x_norm;

        if feasible(&trial, port) {
            let r_trial = tep_residuals(&trial, msp, port)?;
            let c_trial = norm(&r_trial);
            if c_trial < cost {
                x = trial;
                (r, jac) = tep_residual_jacobian(&x, msp, port)?;
                cost = c_trial;
                damping = (damping / settings.damping_factor).max(1e-12);
                converged = small_step || cost < settings.residual_tol;
                continue;
            }
        }
        damping *= settings.damping_factor;
        // A rejected step that is already negligible means we are at the
        // minimum to working precision.
        if small_step || damping > 1e16 {
            converged = true;
        }
    }

    if !converged {
        return Err(Error::NoConvergence { iterations, residual: cost });
    }
    if !(x.e_th > 0.0 && x.x_th > 0.0 && x.r_th >= 0.0) {
        return Err(Error::InfeasibleSolution(format!(
            "sign constraints violated at e_th={:.6}, r_th={:.6}, x_th={:.6}",
            x.e_th, x.r_th, x.x_th
        )));
    }
    if !feasible(&x, port) {
        return Err(Error::InfeasibleSolution("discriminant not positive at solution".into()));
    }
    Ok(LmReport { tep: x, iterations, residual_norm: cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_port, theoretical_msp};

    fn reference() -> (TheveninParams, PortState, Msp) {
        let tep = TheveninParams::new(270.0, 20.0, 50.0).unwrap();
        let port = solve_port(&tep, 50.0, 50.0).unwrap();
        let msp = theoretical_msp(&tep, &port).unwrap();
        (tep, port, msp)
    }

    #[test]
    fn round_trip_recovers_parameters() {
        let (tep, port, msp) = reference();
        let est = solve_tep(&msp, &port, None).unwrap();
        for (a, b) in est.as_array().iter().zip(tep.as_array()) {
            assert!(((a - b) / b).abs() < 1e-6, "{est:?}");
        }
    }

    #[test]
    fn default_init_is_feasible() {
        let (_, port, _) = reference();
        let init = default_init(&port);
        assert!(feasible(&init, &port));
    }

    #[test]
    fn perturbed_sensitivities_move_estimate_continuously() {
        let (tep, port, msp) = reference();
        let bumped = Msp::from_array(msp.as_array().map(|b| b * 1.01));
        let est = solve_tep(&bumped, &port, None).unwrap();
        for (a, b) in est.as_array().iter().zip(tep.as_array()) {
            assert!(((a - b) / b).abs() < 0.1, "{est:?}");
        }
    }

    #[test]
    fn zero_sensitivities_are_rejected() {
        let (_, port, _) = reference();
        let zero = Msp::from_array([0.0; 4]);
        match solve_tep(&zero, &port, None) {
            Err(Error::InfeasibleSolution(_)) | Err(Error::NoConvergence { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_across_operating_points() {
        for &(e, r, x, p, q) in &[
            (230.0, 5.0, 40.0, 120.0, 30.0),
            (500.7, 5.62, 20.45, 400.0, 100.0),
            (229.65, 0.78, 11.4, 200.0, 60.0),
            (110.0, 8.0, 25.0, 20.0, 10.0),
        ] {
            let tep = TheveninParams::new(e, r, x).unwrap();
            let port = solve_port(&tep, p, q).unwrap();
            let msp = theoretical_msp(&tep, &port).unwrap();
            let est = solve_tep(&msp, &port, None).unwrap();
            for (a, b) in est.as_array().iter().zip(tep.as_array()) {
                assert!(((a - b) / b).abs() < 1e-6, "{tep:?} -> {est:?}");
            }
        }
    }
}

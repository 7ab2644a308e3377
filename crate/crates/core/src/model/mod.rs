//! Thévenin port model.
//!
//! Units are held consistently as kV, kA, MW, MVar and Ω (MW = kV·kA,
//! Ω·kA = kV). Nothing in here converts to per-unit.

mod dual;
mod lm;

pub use dual::{Dual3, Scalar};
pub use lm::{solve_tep, solve_tep_report, LmReport, LmSettings};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thévenin source magnitude (kV) and series impedance (Ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheveninParams {
    pub e_th: f64,
    pub r_th: f64,
    pub x_th: f64,
}

impl TheveninParams {
    pub fn new(e_th: f64, r_th: f64, x_th: f64) -> Result<Self> {
        let tep = Self { e_th, r_th, x_th };
        tep.validate()?;
        Ok(tep)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_th.is_finite() && self.r_th.is_finite() && self.x_th.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite Thevenin parameters {self:?}")));
        }
        if self.e_th <= 0.0 || self.x_th <= 0.0 || self.r_th < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Thevenin parameters need e_th > 0, x_th > 0, r_th >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.e_th, self.r_th, self.x_th]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { e_th: a[0], r_th: a[1], x_th: a[2] }
    }

    /// Discriminant of the magnitude-domain port equations at load (p, q).
    pub fn discriminant(&self, p: f64, q: f64) -> f64 {
        discriminant(self.e_th, self.r_th, self.x_th, p, q)
    }
}

/// Port measurement: power into the load and the voltage/current magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortState {
    pub p: f64,
    pub q: f64,
    pub v_mag: f64,
    pub i_mag: f64,
}

impl PortState {
    pub fn apparent_power(&self) -> f64 {
        self.p.hypot(self.q)
    }
}

/// Magnitude sensitivities d|V|/dP, d|V|/dQ, d|I|/dP, d|I|/dQ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Msp {
    pub b_vp: f64,
    pub b_vq: f64,
    pub b_ip: f64,
    pub b_iq: f64,
}

impl Msp {
    pub fn as_array(&self) -> [f64; 4] {
        [self.b_vp, self.b_vq, self.b_ip, self.b_iq]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { b_vp: a[0], b_vq: a[1], b_ip: a[2], b_iq: a[3] }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Relative Frobenius distance to `reference`.
    pub fn relative_error(&self, reference: &Msp) -> f64 {
        let num: f64 = self.as_array().iter().zip(reference.as_array()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = reference.as_array().iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }
}

pub(crate) fn discriminant<S: Scalar>(e: S, r: S, x: S, p: f64, q: f64) -> S {
    let (p, q) = (S::constant(p), S::constant(q));
    let e2 = e * e;
    let four = S::constant(4.0);
    let cross = x * p - r * q;
    e2 * e2 - four * (r * p + x * q) * e2 - four * cross * cross
}

/// Voltage and current magnitudes at load (p, q). The caller guarantees the
/// discriminant and the voltage radicand are positive.
///
/// The current uses the rationalised form 2S²/(a + √Δ) of the lower root,
/// which is algebraically the same as (a − √Δ)/(2|Z|²) but has no
/// cancellation at light load.
pub(crate) fn port_magnitudes<S: Scalar>(e: S, r: S, x: S, p: f64, q: f64) -> (S, S) {
    let disc = discriminant(e, r, x, p, q);
    let a = e * e - S::constant(2.0) * (r * S::constant(p) + x * S::constant(q));
    let upper = a + disc.sqrt();
    let v = (upper / S::constant(2.0)).sqrt();
    let s2 = p * p + q * q;
    let i = if s2 == 0.0 { S::constant(0.0) } else { (S::constant(2.0 * s2) / upper).sqrt() };
    (v, i)
}

/// Closed-form sensitivities at a measured operating point.
pub(crate) fn sensitivities<S: Scalar>(e: S, r: S, x: S, port: &PortState) -> [S; 4] {
    let sqrt_disc = discriminant(e, r, x, port.p, port.q).sqrt();
    let z2 = r * r + x * x;
    let (p, q) = (S::constant(port.p), S::constant(port.q));
    let v = S::constant(port.v_mag);
    let i = S::constant(port.i_mag);
    let v2 = v * v;
    let i2 = i * i;
    let vden = v * sqrt_disc;
    let iden = i * sqrt_disc;
    [-(z2 * p + r * v2) / vden, -(z2 * q + x * v2) / vden, (p + r * i2) / iden, (q + x * i2) / iden]
}

fn check_feasible(tep: &TheveninParams, p: f64, q: f64) -> Result<()> {
    let disc = tep.discriminant(p, q);
    if !(disc > 0.0) {
        return Err(Error::InfeasibleOperatingPoint { discriminant: disc });
    }
    let a = tep.e_th * tep.e_th - 2.0 * (tep.r_th * p + tep.x_th * q);
    if !(a > 0.0) {
        return Err(Error::InfeasibleOperatingPoint { discriminant: disc });
    }
    Ok(())
}

/// Closed-form port voltage and current magnitudes for load (p, q).
pub fn solve_port(tep: &TheveninParams, p: f64, q: f64) -> Result<PortState> {
    check_feasible(tep, p, q)?;
    let (v_mag, i_mag) = port_magnitudes(tep.e_th, tep.r_th, tep.x_th, p, q);
    Ok(PortState { p, q, v_mag, i_mag })
}

/// Theoretical magnitude sensitivities at `port` for the circuit `tep`.
pub fn theoretical_msp(tep: &TheveninParams, port: &PortState) -> Result<Msp> {
    let disc = tep.discriminant(port.p, port.q);
    if !(disc > 0.0) {
        return Err(Error::InfeasibleOperatingPoint { discriminant: disc });
    }
    if !(port.v_mag > 0.0 && port.i_mag > 0.0) {
        return Err(Error::InvalidParameter(format!("sensitivities need positive |V| and |I|, got {port:?}")));
    }
    let b = sensitivities(tep.e_th, tep.r_th, tep.x_th, port);
    Ok(Msp::from_array(b))
}

/// Residual stack of the port equations and sensitivity equations, each
/// entry normalised by the magnitude of its measured counterpart.
pub fn tep_residuals(tep: &TheveninParams, msp: &Msp, port: &PortState) -> Result<[f64; 6]> {
    check_feasible(tep, port.p, port.q)?;
    let r = residuals_generic(tep.e_th, tep.r_th, tep.x_th, msp, port);
    Ok(r)
}

/// Jacobian of [`tep_residuals`] with respect to (e_th, r_th, x_th).
pub fn tep_residual_jacobian(tep: &TheveninParams, msp: &Msp, port: &PortState) -> Result<([f64; 6], [[f64; 3]; 6])> {
    check_feasible(tep, port.p, port.q)?;
    let r = residuals_generic(
        Dual3::variable(tep.e_th, 0),
        Dual3::variable(tep.r_th, 1),
        Dual3::variable(tep.x_th, 2),
        msp,
        port,
    );
    let mut values = [0.0; 6];
    let mut jac = [[0.0; 3]; 6];
    for (k, d) in r.iter().enumerate() {
        values[k] = d.v;
        jac[k] = d.d;
    }
    Ok((values, jac))
}

fn scale(measured: f64) -> f64 {
    let m = measured.abs();
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn residuals_generic<S: Scalar>(e: S, r: S, x: S, msp: &Msp, port: &PortState) -> [S; 6] {
    let (v, i) = port_magnitudes(e, r, x, port.p, port.q);
    let b = sensitivities(e, r, x, port);
    let measured = [port.v_mag, port.i_mag, msp.b_vp, msp.b_vq, msp.b_ip, msp.b_iq];
    let model = [v, i, b[0], b[1], b[2], b[3]];
    let mut out = [S::constant(0.0); 6];
    for k in 0..6 {
        out[k] = (S::constant(measured[k]) - model[k]) / S::constant(scale(measured[k]));
    }
    out
}

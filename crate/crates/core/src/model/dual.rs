//! Minimal forward-mode dual numbers, enough to differentiate the closed-form
//! port equations with respect to the three Thévenin parameters.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the port equations. Implemented for plain `f64` and
/// for [`Dual3`].
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn value(self) -> f64 {
        self
    }
}

/// Value plus gradient with respect to three seed variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    pub fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; 3];
        d[index] = 1.0;
        Self { v, d }
    }

    fn map_d(self, f: impl Fn(f64) -> f64) -> [f64; 3] {
        [f(self.d[0]), f(self.d[1]), f(self.d[2])]
    }
}

impl Add for Dual3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]] }
    }
}

impl Sub for Dual3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]] }
    }
}

impl Mul for Dual3 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Div for Dual3 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Self {
            v: q,
            d: [(self.d[0] - q * o.d[0]) * inv, (self.d[1] - q * o.d[1]) * inv, (self.d[2] - q * o.d[2]) * inv],
        }
    }
}

impl Neg for Dual3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: self.map_d(|x| -x) }
    }
}

impl Scalar for Dual3 {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 3] }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let k = 0.5 / s;
        Self { v: s, d: self.map_d(|x| x * k) }
    }
    fn value(self) -> f64 {
        self.v
    }
}

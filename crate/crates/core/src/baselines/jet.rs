//! Second-order forward-mode derivatives in two variables.

use core::ops::{Add, Mul, Neg, Sub};

use crate::math::{sigmoid, softplus};

/// A value with its gradient and Hessian with respect to `(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub u: f64,
    pub xx: f64,
    pub xu: f64,
    pub uu: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Self::default() }
    }

    pub fn var_x(v: f64) -> Self {
        Self { v, x: 1.0, ..Self::default() }
    }

    pub fn var_u(v: f64) -> Self {
        Self { v, u: 1.0, ..Self::default() }
    }

    /// Applies a scalar function given its value, slope and curvature at `self.v`.
    fn chain(self, f: f64, d1: f64, d2: f64) -> Self {
        Self {
            v: f,
            x: d1 * self.x,
            u: d1 * self.u,
            xx: d2 * self.x * self.x + d1 * self.xx,
            xu: d2 * self.x * self.u + d1 * self.xu,
            uu: d2 * self.u * self.u + d1 * self.uu,
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self { v: k * self.v, x: k * self.x, u: k * self.u, xx: k * self.xx, xu: k * self.xu, uu: k * self.uu }
    }

    pub fn square(self) -> Self {
        self.chain(self.v * self.v, 2.0 * self.v, 2.0)
    }

    /// `ln(1 + exp(k z)) / k`, a smooth version of `max(z, 0)` with sharpness `k`.
    pub fn soft_relu(self, k: f64) -> Self {
        let s = sigmoid(k * self.v);
        self.chain(softplus(k * self.v) / k, s, k * s * (1.0 - s))
    }

    /// Smooth `min(self, other)`.
    pub fn soft_min(self, other: Self, k: f64) -> Self {
        self - (self - other).soft_relu(k)
    }
}

impl Add for Jet {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, x: self.x + o.x, u: self.u + o.u, xx: self.xx + o.xx, xu: self.xu + o.xu, uu: self.uu + o.uu }
    }
}

impl Sub for Jet {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Mul for Jet {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            x: self.v * o.x + o.v * self.x,
            u: self.v * o.u + o.v * self.u,
            xx: self.v * o.xx + o.v * self.xx + 2.0 * self.x * o.x,
            xu: self.v * o.xu + o.v * self.xu + self.x * o.u + self.u * o.x,
            uu: self.v * o.uu + o.v * self.uu + 2.0 * self.u * o.u,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_hand_derivatives() {
        // f = x^2 u + 3u at (2, 5)
        let x = Jet::var_x(2.0);
        let u = Jet::var_u(5.0);
        let f = x.square() * u + u.scale(3.0);
        assert_eq!(f.v, 35.0);
        assert_eq!((f.x, f.u), (20.0, 7.0));
        assert_eq!((f.xx, f.xu, f.uu), (10.0, 4.0, 0.0));
    }

    #[test]
    fn soft_relu_limits() {
        let z = Jet::var_u(100.0).soft_relu(1.0);
        assert!((z.v - 100.0).abs() < 1e-12 && (z.u - 1.0).abs() < 1e-12);
        let z = Jet::var_u(-100.0).soft_relu(1.0);
        assert!(z.v.abs() < 1e-40 && z.u.abs() < 1e-40);
        let m = Jet::constant(3.0).soft_min(Jet::constant(7.0), 50.0);
        assert!((m.v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn soft_relu_second_derivative_by_differences() {
        let h = 1e-4;
        let f = |z: f64| Jet::var_x(z).soft_relu(0.3);
        let z0 = 1.7;
        let num = (f(z0 + h).x - f(z0 - h).x) / (2.0 * h);
        assert!((num - f(z0).xx).abs() < 1e-7);
    }
}

//! The scalar edge functions and their comparison ratios.
//!
//! All functions take an extended real argument: `f64::INFINITY` is a legal
//! input and maps to the finite limit. Ising and percolation functions are
//! extended to negative arguments as odd functions.

use crate::error::{Error, Result};

/// Below this the deficit `theta x - f_theta(x)` comes from its power series.
const ISING_SERIES_CUTOFF: f64 = 0.05;
const PERCOLATION_SERIES_CUTOFF: f64 = 1e-3;

/// An edge of bias `theta`, `0 <= theta < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingEdge {
    theta: f64,
}

impl IsingEdge {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0,1), got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub(crate) fn unchecked(theta: f64) -> Self {
        Self { theta }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `ln((1 + theta) / (1 - theta))`, the value at `+inf`.
    pub fn limit(&self) -> f64 {
        2.0 * self.theta.atanh()
    }

    /// `2 artanh(theta tanh(x/2))`.
    pub fn f(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let y = x.abs();
        let v = if y.is_infinite() {
            self.limit()
        } else {
            2.0 * (self.theta * (0.5 * y).tanh()).atanh()
        };
        v.copysign(x)
    }

    /// `theta / (1 + (1 - theta^2) sinh^2(x/2))`.
    pub fn deriv(&self, x: f64) -> f64 {
        let t = self.theta;
        let sh = (0.5 * x).sinh();
        t / (1.0 + (1.0 - t * t) * sh * sh)
    }

    /// `theta x - f_theta(x)` for `x >= 0`, accurate near zero.
    pub fn deficit(&self, x: f64) -> f64 {
        let t = self.theta;
        if x.is_infinite() {
            return f64::INFINITY;
        }
        if x < ISING_SERIES_CUTOFF {
            let t2 = t * t;
            let x2 = x * x;
            let poly = 1.0 / 12.0 - (2.0 - 3.0 * t2) * x2 / 240.0
                + (45.0 * t2 * t2 - 60.0 * t2 + 17.0) * x2 * x2 / 20160.0
                + (315.0 * t2 * t2 * t2 - 630.0 * t2 * t2 + 378.0 * t2 - 62.0) * x2 * x2 * x2
                    / 725760.0;
            t * (1.0 - t2) * x * x2 * poly
        } else {
            t * x - self.f(x)
        }
    }

    /// `x^-2 [(theta x / f_theta(x))^2 - 1]`, extended continuously to
    /// `x = 0` and `x = inf`.
    pub fn psi(&self, x: f64) -> f64 {
        let t = self.theta;
        if x == 0.0 {
            return (1.0 - t * t) / 6.0;
        }
        if x.is_infinite() {
            let r = t / self.limit();
            return r * r;
        }
        let f = self.f(x);
        let d = self.deficit(x);
        d * (t * x + f) / (f * f * x * x)
    }
}

pub fn f_theta(theta: f64, x: f64) -> Result<f64> {
    Ok(IsingEdge::new(theta)?.f(x))
}

pub fn f_theta_deriv(theta: f64, x: f64) -> Result<f64> {
    Ok(IsingEdge::new(theta)?.deriv(x))
}

pub fn psi(theta: f64, x: f64) -> Result<f64> {
    if theta <= 0.0 || x < 0.0 || x.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "psi needs 0 < theta < 1 and x >= 0, got theta={theta}, x={x}"
        )));
    }
    Ok(IsingEdge::new(theta)?.psi(x))
}

/// `-ln(1 - a (1 - e^-x))`, odd in `x`.
pub fn percolation_f(a: f64, x: f64) -> Result<f64> {
    check_open_unit(a, "a")?;
    Ok(percolation_unchecked(a, x))
}

pub(crate) fn percolation_unchecked(a: f64, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    let v = if y.is_infinite() {
        -(-a).ln_1p()
    } else {
        -(a * (-y).exp_m1()).ln_1p()
    };
    v.copysign(x)
}

/// `a x - f(x)` for the percolation function, `x >= 0`.
pub(crate) fn percolation_deficit(a: f64, x: f64) -> f64 {
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x < PERCOLATION_SERIES_CUTOFF {
        let b = 2.0 * a - 1.0;
        let poly = 0.5 + b * x / 6.0 + (6.0 * a * a - 6.0 * a + 1.0) * x * x / 24.0
            + b * (12.0 * a * a - 12.0 * a + 1.0) * x * x * x / 120.0;
        a * (1.0 - a) * x * x * poly
    } else {
        a * x - percolation_unchecked(a, x)
    }
}

/// `(f_theta(sqrt x))^2` for `x >= 0`; the spin-glass edge function.
pub fn sg_g(theta: f64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidParameter(format!("g needs x >= 0, got {x}")));
    }
    let f = IsingEdge::new(theta)?.f(x.sqrt());
    Ok(f * f)
}

fn check_open_unit(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in (0,1), got {v}"
        )));
    }
    Ok(())
}

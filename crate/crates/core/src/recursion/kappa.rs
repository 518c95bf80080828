//! Numeric extraction of the sandwich constants.
//!
//! For an edge function `f` with linear coefficient `a` and exponent `s`,
//!
//! ```text
//! a x / (1 + (k2 x)^s)^(1/s) <= f(x) <= a x / (1 + (k1 x)^s)^(1/s)
//! ```
//!
//! holds exactly when `k1^s <= rho(x) <= k2^s` with
//! `rho(x) = x^-s [(a x / f(x))^s - 1]`. The range of `rho` is scanned on a
//! log-spaced grid together with its analytic limits at `0` and `inf`.

use super::functions::{percolation_deficit, percolation_unchecked, IsingEdge};
use super::FamilyKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub param_points: usize,
    pub margin: f64,
    /// The verification grid is this many times finer in both directions.
    pub refine: usize,
}

impl Default for KappaGrid {
    fn default() -> Self {
        Self {
            x_min: 1e-6,
            x_max: 1e6,
            x_points: 600,
            param_points: 9,
            margin: 1e-3,
            refine: 10,
        }
    }
}

/// Constants valid for every parameter in `interval`.
///
/// `kappa1`, `kappa2` bound `rho` itself (for the Ising family these are the
/// constants multiplying `x^2`); [`KappaBounds::theorem_constants`] returns
/// their `s`-th roots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaBounds {
    pub kind: FamilyKind,
    pub s: f64,
    pub interval: (f64, f64),
    pub kappa1: f64,
    pub kappa2: f64,
}

impl KappaBounds {
    pub fn theorem_constants(&self) -> (f64, f64) {
        (self.kappa1.powf(1.0 / self.s), self.kappa2.powf(1.0 / self.s))
    }

    /// Lower and upper comparison functions at `x` for coefficient `a`.
    pub fn envelopes(&self, a: f64, x: f64) -> (f64, f64) {
        let env = |k: f64| a * x / (1.0 + k * x.powf(self.s)).powf(1.0 / self.s);
        (env(self.kappa2), env(self.kappa1))
    }
}

/// `rho(x)` for the family at parameter `param`; `x` may be `0` or `inf`.
pub fn comparison_ratio(kind: FamilyKind, param: f64, x: f64) -> f64 {
    match kind {
        FamilyKind::IsingF => IsingEdge::unchecked(param).psi(x),
        FamilyKind::SpinGlassG => IsingEdge::unchecked(param).psi(x.sqrt()),
        FamilyKind::Percolation => {
            let a = param;
            if x == 0.0 {
                return (1.0 - a) / 2.0;
            }
            if x.is_infinite() {
                return a / -(-a).ln_1p();
            }
            percolation_deficit(a, x) / (x * percolation_unchecked(a, x))
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
}

fn param_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo == hi || n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn scan(kind: FamilyKind, params: &[f64], grid: &KappaGrid, x_points: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in params {
        let ends = [0.0, f64::INFINITY];
        for x in ends
            .into_iter()
            .chain(log_grid(grid.x_min, grid.x_max, x_points))
        {
            let r = comparison_ratio(kind, t, x);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

/// Extracts `(kappa1, kappa2)` for `kind` over the parameter interval and
/// verifies them on a finer grid.
pub fn family_kappa_bounds(
    kind: FamilyKind,
    lo: f64,
    hi: f64,
    grid: &KappaGrid,
) -> Result<KappaBounds> {
    if !(lo > 0.0 && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "parameter interval must satisfy 0 < lo <= hi < 1, got [{lo}, {hi}]"
        )));
    }
    if !(grid.x_min > 0.0 && grid.x_min < grid.x_max && grid.x_points >= 2) {
        return Err(Error::InvalidParameter("bad x grid".into()));
    }
    let (rmin, rmax) = scan(kind, &param_grid(lo, hi, grid.param_points), grid, grid.x_points);
    let bounds = KappaBounds {
        kind,
        s: kind.exponent(),
        interval: (lo, hi),
        kappa1: (1.0 - grid.margin) * rmin,
        kappa2: (1.0 + grid.margin) * rmax,
    };
    let fine_params = param_grid(lo, hi, (grid.param_points - 1) * grid.refine + 1);
    let (fmin, fmax) = scan(kind, &fine_params, grid, (grid.x_points - 1) * grid.refine + 1);
    if fmin < bounds.kappa1 || fmax > bounds.kappa2 {
        return Err(Error::Verification(format!(
            "sandwich constants [{}, {}] miss the fine-grid ratio range [{fmin}, {fmax}]",
            bounds.kappa1, bounds.kappa2
        )));
    }
    Ok(bounds)
}

/// Constants for the Ising edge functions with biases in `[theta_lo, theta_hi]`.
pub fn kappa_bounds(theta_lo: f64, theta_hi: f64, grid: &KappaGrid) -> Result<KappaBounds> {
    family_kappa_bounds(FamilyKind::IsingF, theta_lo, theta_hi, grid)
}

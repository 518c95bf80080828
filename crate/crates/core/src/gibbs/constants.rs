//! Numeric comparison constants for the plus-boundary mean and the
//! spin-glass second moment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursion::IsingEdge;

const GRID_LO: f64 = 1e-6;
const GRID_HI: f64 = 1e6;
const GRID_POINTS: usize = 600;
const REFINE: usize = 10;
const MARGIN: f64 = 1e-3;
/// Slack for rounding in the verification inequalities.
const CHECK_RTOL: f64 = 1e-12;
const RANDOM_LAWS: usize = 200;

fn log_grid(points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (GRID_LO.ln(), GRID_HI.ln());
    (0..points).map(move |i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
}

fn edge(theta: f64) -> Result<IsingEdge> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0,1), got {theta}"
        )));
    }
    IsingEdge::new(theta)
}

/// `(theta x - f(x)) / (f(x) x tanh(x/2))`.
fn free_ratio(e: &IsingEdge, x: f64) -> f64 {
    e.deficit(x) / (e.f(x) * x * (0.5 * x).tanh())
}

/// A `kappa > 0` with `f_theta(x) (1 + kappa x tanh(x/2)) <= theta x` for
/// all `x > 0`, checked on a log grid over `[1e-6, 1e6]` and its two limits.
///
/// ```
/// let k = treecap::gibbs::kappa_free(0.5).unwrap();
/// assert!(k > 0.0);
/// ```
pub fn kappa_free(theta: f64) -> Result<f64> {
    let e = edge(theta)?;
    let limits = [(1.0 - theta * theta) / 6.0, theta / e.limit()];
    let min = log_grid(GRID_POINTS)
        .map(|x| free_ratio(&e, x))
        .chain(limits)
        .fold(f64::INFINITY, f64::min);
    let kappa = (1.0 - MARGIN) * min;
    for x in log_grid(GRID_POINTS * REFINE) {
        let f = e.f(x);
        if kappa * f * x * (0.5 * x).tanh() > e.deficit(x) * (1.0 + CHECK_RTOL) {
            return Err(Error::Verification(format!(
                "kappa {kappa} fails the mean comparison at x = {x} (theta {theta})"
            )));
        }
    }
    Ok(kappa)
}

/// Constants for `h_i(x) = theta^2 x / (1 + kappa_i x)` with
/// `h_2(E V) <= E g(V) <= h_1(E V)` whenever `E V^2 <= c (E V)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SgBoundConstants {
    pub theta: f64,
    pub c: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// `g(x) >= theta^2 x - lambda x^2` for all `x >= 0`.
    pub lambda: f64,
    /// `theta^2 x - c lambda x^2 >= theta^2 x / 2` on `[0, delta]`.
    pub delta: f64,
}

impl SgBoundConstants {
    pub fn upper(&self, x: f64) -> f64 {
        let t2 = self.theta * self.theta;
        t2 * x / (1.0 + self.kappa1 * x)
    }

    pub fn lower(&self, x: f64) -> f64 {
        let t2 = self.theta * self.theta;
        t2 * x / (1.0 + self.kappa2 * x)
    }
}

/// `g(x) = f(sqrt x)^2` and `theta^2 x - g(x)`, both accurate near zero.
fn g_and_gap(e: &IsingEdge, x: f64) -> (f64, f64) {
    let y = x.sqrt();
    let f = e.f(y);
    (f * f, e.deficit(y) * (e.theta() * y + f))
}

pub fn sg_bound_constants(theta: f64, c: f64) -> Result<SgBoundConstants> {
    let e = edge(theta)?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be >= 1, got {c}")));
    }
    let t2 = theta * theta;
    let psi_min = log_grid(GRID_POINTS)
        .map(|x| {
            let (g, gap) = g_and_gap(&e, x);
            gap / (g * x)
        })
        .chain([(1.0 - t2) / 6.0, t2 / (e.limit() * e.limit())])
        .fold(f64::INFINITY, f64::min);
    let kappa1 = (1.0 - MARGIN) * psi_min;

    let gap_max = log_grid(GRID_POINTS)
        .map(|x| g_and_gap(&e, x).1 / (x * x))
        .chain([t2 * (1.0 - t2) / 6.0])
        .fold(0.0, f64::max);
    let lambda = (1.0 + MARGIN) * gap_max;
    let delta = t2 / (2.0 * c * lambda);
    let g_half = g_and_gap(&e, 0.5 * delta).0;
    let kappa2 = (1.0 + MARGIN) * (2.0 * c * lambda / t2).max(4.0 * c * t2 / g_half);

    let k = SgBoundConstants {
        theta,
        c,
        kappa1,
        kappa2,
        lambda,
        delta,
    };
    verify(&e, &k)?;
    Ok(k)
}

fn verify(e: &IsingEdge, k: &SgBoundConstants) -> Result<()> {
    for x in log_grid(GRID_POINTS * REFINE) {
        let (g, gap) = g_and_gap(e, x);
        if gap > k.lambda * x * x * (1.0 + CHECK_RTOL) {
            return Err(Error::Verification(format!(
                "g(x) >= theta^2 x - lambda x^2 fails at x = {x}"
            )));
        }
        if gap < k.kappa1 * x * g * (1.0 - CHECK_RTOL) {
            return Err(Error::Verification(format!(
                "g <= h_1 fails at x = {x}"
            )));
        }
        check_law(e, k, &[(x, 1.0)])?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_6b0d);
    let mut accepted = 0;
    while accepted < RANDOM_LAWS {
        let n = rng.gen_range(1..=6);
        let centre: f64 = rng.gen_range(-8.0..8.0);
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let v = (centre + rng.gen_range(-3.0..3.0f64)).exp();
                let v = if rng.gen_bool(0.15) { 0.0 } else { v };
                (v, rng.gen_range(0.01..1.0))
            })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms: Vec<(f64, f64)> = atoms.into_iter().map(|(v, p)| (v, p / total)).collect();
        let m1: f64 = atoms.iter().map(|&(v, p)| p * v).sum();
        let m2: f64 = atoms.iter().map(|&(v, p)| p * v * v).sum();
        if m1 <= 0.0 || m2 > k.c * m1 * m1 {
            continue;
        }
        check_law(e, k, &atoms)?;
        accepted += 1;
    }
    Ok(())
}

fn check_law(e: &IsingEdge, k: &SgBoundConstants, atoms: &[(f64, f64)]) -> Result<()> {
    let mean: f64 = atoms.iter().map(|&(v, p)| p * v).sum();
    let eg: f64 = atoms.iter().map(|&(v, p)| p * g_and_gap(e, v).0).sum();
    let (lo, hi) = (k.lower(mean), k.upper(mean));
    if lo > eg * (1.0 + CHECK_RTOL) || eg > hi * (1.0 + CHECK_RTOL) {
        return Err(Error::Verification(format!(
            "second-moment sandwich fails for E V = {mean}: {lo} <= {eg} <= {hi}"
        )));
    }
    Ok(())
}

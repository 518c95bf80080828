//! Capacities of spherically symmetric trees and truncation sequences.
//!
//! On a spherically symmetric tree the equally splitting flow is optimal, so
//!
//! ```text
//! cap_p(T^(N)) = ( sum_{n <= N} prod_{i <= n} (d_i a_i)^(-s) )^(-1/s)
//! ```
//!
//! with `a_i = theta_i^q`. Everything is evaluated in log space, one level at
//! a time, so depths of millions of levels cost linear time.

use super::{capacity_profile, exponent_s, CapacityResult, Method, Resistances};
use crate::error::{Error, Result};
use crate::tree::{EdgeBiases, RootedTree, SphericalProfile};

/// Running `ln(sum exp(x_k))`.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

fn check_coefficients(degrees: &[u64], coeffs: &[f64]) -> Result<()> {
    if degrees.len() != coeffs.len() {
        return Err(Error::InvalidParameter(
            "one coefficient per level is required".into(),
        ));
    }
    if degrees.iter().any(|&d| d == 0) || coeffs.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(
            "degrees must be >= 1 and coefficients positive".into(),
        ));
    }
    Ok(())
}

/// `cap_p(T^(n))` for every `n = 1..=N`, given per-level degrees and linear
/// coefficients `a_i` (resistance steps `1/a_i`).
fn prefix_capacities(degrees: &[u64], coeffs: &[f64], s: f64) -> Vec<f64> {
    let mut log_term = 0.0;
    let mut sum = LogSum::new();
    degrees
        .iter()
        .zip(coeffs)
        .map(|(&d, &a)| {
            log_term -= s * (d as f64 * a).ln();
            sum.push(log_term);
            (-sum.value() / s).exp()
        })
        .collect()
}

/// Closed form for per-level degrees `d_i` and linear coefficients `a_i`.
pub fn spherical_capacity_with_coefficients(
    degrees: &[u64],
    coeffs: &[f64],
    p: f64,
) -> Result<CapacityResult> {
    let s = exponent_s(p)?;
    check_coefficients(degrees, coeffs)?;
    if degrees.is_empty() {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let value = *prefix_capacities(degrees, coeffs, s).last().unwrap();
    Ok(CapacityResult {
        value,
        p,
        s,
        witness: None,
        method: Method::ClosedForm,
    })
}

/// `cap_p` of the depth-`N` tree described by `profile`, with resistances
/// `R_v = prod theta^(-q)`.
pub fn spherical_capacity(profile: &SphericalProfile, q: u32, p: f64) -> Result<CapacityResult> {
    let coeffs = level_coefficients(profile, q)?;
    spherical_capacity_with_coefficients(profile.degrees(), &coeffs, p)
}

fn level_coefficients(profile: &SphericalProfile, q: u32) -> Result<Vec<f64>> {
    if !(q == 1 || q == 2) {
        return Err(Error::InvalidParameter(format!("q must be 1 or 2, got {q}")));
    }
    Ok(profile.thetas().iter().map(|t| t.powi(q as i32)).collect())
}

/// `cap_p(T^(n))` for `n = 1..=N`.
pub fn truncation_capacities(profile: &SphericalProfile, q: u32, p: f64) -> Result<Vec<f64>> {
    let s = exponent_s(p)?;
    let coeffs = level_coefficients(profile, q)?;
    Ok(prefix_capacities(profile.degrees(), &coeffs, s))
}

/// Infinite-depth capacity of the regular tree with degree `d` and bias
/// `theta`: with `r = (d theta^q)^(-s)`, the value is `(r/(1-r))^(-1/s)` when
/// `r < 1` and `0` otherwise.
pub fn regular_capacity_limit(d: u64, theta: f64, q: u32, p: f64) -> Result<f64> {
    let s = exponent_s(p)?;
    if d == 0 || !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need d >= 1 and theta in (0,1), got d={d}, theta={theta}"
        )));
    }
    if !(q == 1 || q == 2) {
        return Err(Error::InvalidParameter(format!("q must be 1 or 2, got {q}")));
    }
    let log_r = -s * (d as f64 * theta.powi(q as i32)).ln();
    if log_r >= 0.0 {
        return Ok(0.0);
    }
    // r / (1 - r) = 1 / (exp(-ln r) - 1)
    let ratio = 1.0 / (-log_r).exp_m1();
    Ok(ratio.powf(-1.0 / s))
}

/// Where the truncations `T^(1), T^(2), ..` come from.
#[derive(Clone, Copy, Debug)]
pub enum TruncationSource<'a> {
    Spherical(&'a SphericalProfile),
    Tree {
        tree: &'a RootedTree,
        biases: &'a EdgeBiases,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitStatus {
    Converged,
    Undetermined,
}

impl LimitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitStatus::Converged => "converged",
            LimitStatus::Undetermined => "undetermined",
        }
    }
}

/// `cap_p(T^(N))` for `N = 1..`, its last value, and whether it settled.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitySequence {
    pub values: Vec<f64>,
    pub limit: f64,
    pub status: LimitStatus,
}

/// Computes the truncation sequence up to `n_max` levels (fewer if the tree
/// is shallower) and estimates its decreasing limit.
pub fn capacity_limit(
    source: TruncationSource<'_>,
    p: f64,
    q: u32,
    rel_tol: f64,
    n_max: usize,
) -> Result<CapacitySequence> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 levels, got {n_max}"
        )));
    }
    let values = match source {
        TruncationSource::Spherical(profile) => {
            truncation_capacities(&profile.truncated(n_max), q, p)?
        }
        TruncationSource::Tree { tree, biases } => {
            let res = Resistances::from_biases(tree, biases, q)?;
            let depth = tree.height().min(n_max);
            let mut out = Vec::with_capacity(depth);
            for n in 1..=depth {
                let t = tree.truncate(n);
                let r = Resistances::from_edges(&t, &res.values()[..t.len()])?;
                out.push(capacity_profile(&t, &r, p)?[0]);
            }
            out
        }
    };
    for (n, w) in values.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + 1e-9) {
            return Err(Error::Internal(format!(
                "truncation capacities increase from level {} to {}: {} -> {}",
                n + 1,
                n + 2,
                w[0],
                w[1]
            )));
        }
    }
    let limit = *values.last().ok_or_else(|| {
        Error::InvalidParameter("source has no levels".into())
    })?;
    let status = match values.len() {
        0 | 1 => LimitStatus::Undetermined,
        k => {
            let (a, b) = (values[k - 2], values[k - 1]);
            if a > 0.0 && b > 0.0 && (a - b).abs() < rel_tol * a {
                LimitStatus::Converged
            } else {
                LimitStatus::Undetermined
            }
        }
    };
    Ok(CapacitySequence {
        values,
        limit,
        status,
    })
}

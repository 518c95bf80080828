//! Closed-form transition criteria on spherically symmetric trees and the
//! three boundary-condition verdicts.

mod experiments;

use serde::Serialize;

pub use experiments::{
    alpha_sweep, subdivision_experiment, AlphaSweepRow, SubdivisionRow, SubdivisionSchedule,
};

use crate::capacity::{
    capacity_limit, exponent_s, regular_capacity_limit, LimitStatus, TruncationSource,
};
use crate::error::{Error, Result};
use crate::tree::{EdgeBiases, RootedTree, SphericalProfile};

/// Largest geometric tail ratio accepted as convergent.
const GEOMETRIC_RATIO_MAX: f64 = 1.0 - 1e-6;
/// Agreement required between tail slopes fitted on consecutive quarters.
const SLOPE_CONSISTENCY: f64 = 0.05;
/// Power-law tail exponents must clear -1 by this much to decide. Integer
/// degrees make level sizes step functions, so fitted exponents carry noise
/// of this order.
const POWER_MARGIN: f64 = 0.25;
/// The power-law fit uses the levels `n/POWER_WINDOW..n`.
const POWER_WINDOW: usize = 10;
const POWER_MIN_TERMS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Undetermined,
}

impl SeriesVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesVerdict::Convergent => "convergent",
            SeriesVerdict::Divergent => "divergent",
            SeriesVerdict::Undetermined => "undetermined",
        }
    }
}

/// Partial sums of a positive series, held in log space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub log_terms: Vec<f64>,
    pub log_partial_sums: Vec<f64>,
    pub verdict: SeriesVerdict,
    /// Estimate of the full sum: the last partial sum plus a geometric tail
    /// when one was fitted.
    pub sum_estimate: f64,
}

impl SeriesReport {
    fn from_log_terms(log_terms: Vec<f64>) -> Self {
        let mut log_partial_sums = Vec::with_capacity(log_terms.len());
        let mut acc = f64::NEG_INFINITY;
        for &l in &log_terms {
            acc = if acc == f64::NEG_INFINITY {
                l
            } else {
                let (hi, lo) = if acc > l { (acc, l) } else { (l, acc) };
                hi + (lo - hi).exp().ln_1p()
            };
            log_partial_sums.push(acc);
        }
        let (verdict, tail) = classify(&log_terms);
        let last = log_partial_sums.last().copied().unwrap_or(f64::NEG_INFINITY);
        let sum_estimate = match tail {
            Some(log_ratio) => {
                let r = log_ratio.exp();
                last.exp() + log_terms.last().unwrap().exp() * r / (1.0 - r)
            }
            None => last.exp(),
        };
        Self {
            log_terms,
            log_partial_sums,
            verdict,
            sum_estimate,
        }
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        self.log_partial_sums.iter().map(|l| l.exp()).collect()
    }

    /// `S^(-1/s)`: the capacity the series describes, `0` when divergent.
    pub fn capacity(&self, s: f64) -> f64 {
        match self.verdict {
            SeriesVerdict::Divergent => 0.0,
            _ => self.sum_estimate.powf(-1.0 / s),
        }
    }
}

fn slope(ys: &[f64], xs: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Least-squares slope with weights `1/i`, so every scale of `i` counts
/// equally.
fn weighted_slope(ys: &[f64], xs: &[f64], idx: &[f64]) -> f64 {
    let w: Vec<f64> = idx.iter().map(|i| 1.0 / i).collect();
    let tw: f64 = w.iter().sum();
    let mx = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / tw;
    let my = ys.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / tw;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(ys).zip(&w) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    sxy / sxx
}

fn consistent(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLOPE_CONSISTENCY * a.abs().max(b.abs())
}

/// Geometric tail, power-law tail, or terms bounded below; otherwise
/// undetermined. Returns the fitted log ratio for geometric tails.
fn classify(log_terms: &[f64]) -> (SeriesVerdict, Option<f64>) {
    let n = log_terms.len();
    if n < 8 {
        return (SeriesVerdict::Undetermined, None);
    }
    let q = n / 4;
    let idx: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let logn: Vec<f64> = idx.iter().map(|i| i.ln()).collect();
    let (third, fourth) = (2 * q..3 * q, 3 * q..n);

    let g3 = slope(&log_terms[third.clone()], &idx[third.clone()]);
    let g4 = slope(&log_terms[fourth.clone()], &idx[fourth.clone()]);
    if g4 < GEOMETRIC_RATIO_MAX.ln() && consistent(g3, g4) {
        return (SeriesVerdict::Convergent, Some(g4));
    }
    let min_of = |r: std::ops::Range<usize>| log_terms[r].iter().copied().fold(f64::INFINITY, f64::min);
    if min_of(3 * q..n) >= min_of(q..2 * q) + (1.0 - 1e-9f64).ln() {
        return (SeriesVerdict::Divergent, None);
    }
    if n >= POWER_MIN_TERMS {
        let wide = n / POWER_WINDOW..n;
        let p = weighted_slope(&log_terms[wide.clone()], &logn[wide.clone()], &idx[wide]);
        if p < -1.0 - POWER_MARGIN {
            return (SeriesVerdict::Convergent, None);
        }
        if p > -1.0 + POWER_MARGIN {
            return (SeriesVerdict::Divergent, None);
        }
    }
    (SeriesVerdict::Undetermined, None)
}

/// `S_N = sum_{n <= N} prod_{i <= n} (d_i theta_i^q)^(-s)` over the given
/// levels.
///
/// ```
/// use treecap::criteria::{spherical_sum, SeriesVerdict};
/// let r = spherical_sum(&[3; 200], &[0.5; 200], 1, 2.0).unwrap();
/// assert_eq!(r.verdict, SeriesVerdict::Convergent);
/// assert!((r.sum_estimate - 0.8).abs() < 1e-12);
/// ```
pub fn spherical_sum(degrees: &[u64], thetas: &[f64], q: u32, s: f64) -> Result<SeriesReport> {
    if degrees.len() != thetas.len() || degrees.is_empty() {
        return Err(Error::InvalidParameter(
            "need matching, nonempty degree and bias sequences".into(),
        ));
    }
    if !(s > 0.0) || degrees.iter().any(|&d| d == 0) || thetas.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(
            "degrees, biases and s must be positive".into(),
        ));
    }
    let mut log_size = 0.0;
    let mut log_bias = 0.0;
    let log_terms = degrees
        .iter()
        .zip(thetas)
        .map(|(&d, &t)| {
            log_size += (d as f64).ln();
            log_bias += q as f64 * t.ln();
            -s * (log_size + log_bias)
        })
        .collect();
    Ok(SeriesReport::from_log_terms(log_terms))
}

/// `S_N = sum_{n <= N} theta^(-2n) |T_n|^(-2)` from level sizes `|T_1|, ..`.
pub fn level_size_sum(level_sizes: &[f64], theta: f64) -> Result<SeriesReport> {
    if level_sizes.is_empty() || level_sizes.iter().any(|&t| !(t > 0.0)) || !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(
            "need positive level sizes and theta in (0,1)".into(),
        ));
    }
    let mut log_bias = 0.0;
    let log_terms = level_sizes
        .iter()
        .map(|&size| {
            log_bias += theta.ln();
            -2.0 * (size.ln() + log_bias)
        })
        .collect();
    Ok(SeriesReport::from_log_terms(log_terms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaVerdict {
    UniqueState,
    MultipleStates,
}

/// At criticality `b theta = 1` with `|T_n| ~ b^n n^alpha`, the plus-boundary
/// sum behaves like `sum n^(-2 alpha)`: a unique state iff `alpha <= 1/2`.
pub fn alpha_classify(b: f64, theta: f64, alpha: f64) -> Result<AlphaVerdict> {
    if (b * theta - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "b theta must equal 1, got {}",
            b * theta
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    Ok(if alpha <= 0.5 {
        AlphaVerdict::UniqueState
    } else {
        AlphaVerdict::MultipleStates
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    /// Growth below `1/a`: every `cap_p` vanishes.
    CapacityZero,
    /// Growth above `1/a`: every `cap_p` is positive.
    CapacityPositive,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchingBracket {
    /// `min_{n >= N/2} |T_n|^(1/n)`; exact for constant degrees.
    pub growth: f64,
    pub verdict: Option<GrowthVerdict>,
}

/// Geometric growth of a degree sequence and, given the per-level
/// resistance factor `a`, the capacity verdict it implies.
pub fn branching_bracket(degrees: &[u64], a: Option<f64>) -> Result<BranchingBracket> {
    if degrees.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 levels, got {}",
            degrees.len()
        )));
    }
    if degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParameter("degrees must be >= 1".into()));
    }
    let growth = if degrees.iter().all(|&d| d == degrees[0]) {
        degrees[0] as f64
    } else {
        let mut log_size = 0.0;
        let mut best = f64::INFINITY;
        for (i, &d) in degrees.iter().enumerate() {
            log_size += (d as f64).ln();
            let n = i + 1;
            if 2 * n >= degrees.len() {
                best = best.min(log_size / n as f64);
            }
        }
        best.exp()
    };
    let verdict = match a {
        None => None,
        Some(a) if !(a > 0.0) => {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")))
        }
        Some(a) => {
            let threshold = 1.0 / a;
            Some(if (growth - threshold).abs() <= 1e-12 * threshold {
                GrowthVerdict::Undetermined
            } else if growth < threshold {
                GrowthVerdict::CapacityZero
            } else {
                GrowthVerdict::CapacityPositive
            })
        }
    };
    Ok(BranchingBracket { growth, verdict })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Plus,
    Free,
    SpinGlass,
}

impl BoundaryCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCondition::Plus => "plus",
            BoundaryCondition::Free => "free",
            BoundaryCondition::SpinGlass => "spin-glass",
        }
    }

    /// `(p, q)` of the capacity deciding this boundary condition.
    pub fn exponents(&self) -> (f64, u32) {
        match self {
            BoundaryCondition::Plus => (3.0, 1),
            BoundaryCondition::Free | BoundaryCondition::SpinGlass => (2.0, 2),
        }
    }

    /// Name of the criterion this verdict instantiates.
    pub fn criterion(&self) -> &'static str {
        match self {
            BoundaryCondition::Plus => "plus-state-iff-cap3-positive",
            BoundaryCondition::Free => "free-reconstruction-iff-cap2-positive",
            BoundaryCondition::SpinGlass => "spin-glass-reconstruction-iff-cap2-positive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    PhaseTransition,
    /// Unique Gibbs state (plus) or extremal free measure (free, spin-glass).
    NoTransition,
    Undetermined,
}

impl Conclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Conclusion::PhaseTransition => "phase-transition",
            Conclusion::NoTransition => "unique/extremal",
            Conclusion::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseVerdict {
    pub boundary: BoundaryCondition,
    pub p: f64,
    pub q: u32,
    /// Capacity of the infinite tree, or the best finite-depth estimate.
    pub capacity: f64,
    /// How `capacity` was obtained.
    pub evidence: String,
    pub conclusion: Conclusion,
    pub criterion: &'static str,
}

/// Input to [`phase_report`].
#[derive(Clone, Copy, Debug)]
pub enum PhaseInput<'a> {
    Spherical(&'a SphericalProfile),
    Tree {
        tree: &'a RootedTree,
        biases: &'a EdgeBiases,
    },
}

fn capacity_evidence(input: PhaseInput<'_>, p: f64, q: u32, n_max: usize) -> Result<(f64, String, Conclusion)> {
    let s = exponent_s(p)?;
    let profile = match input {
        PhaseInput::Spherical(profile) => Some(profile.truncated(n_max.min(profile.len()))),
        PhaseInput::Tree { tree, biases } => {
            if tree.is_spherically_symmetric() {
                SphericalProfile::from_tree(tree, biases).ok()
            } else {
                None
            }
        }
    };
    if let Some(profile) = profile {
        let (d, t) = (profile.degrees(), profile.thetas());
        if d.iter().all(|&x| x == d[0]) && t.iter().all(|&x| x == t[0]) {
            let cap = regular_capacity_limit(d[0], t[0], q, p)?;
            let c = if cap > 0.0 {
                Conclusion::PhaseTransition
            } else {
                Conclusion::NoTransition
            };
            return Ok((cap, "regular-closed-form".into(), c));
        }
        let series = spherical_sum(d, t, q, s)?;
        let c = match series.verdict {
            SeriesVerdict::Convergent => Conclusion::PhaseTransition,
            SeriesVerdict::Divergent => Conclusion::NoTransition,
            SeriesVerdict::Undetermined => Conclusion::Undetermined,
        };
        return Ok((series.capacity(s), format!("series-{}", series.verdict.as_str()), c));
    }
    let PhaseInput::Tree { tree, biases } = input else {
        unreachable!("spherical inputs always have a profile")
    };
    let seq = capacity_limit(TruncationSource::Tree { tree, biases }, p, q, 1e-6, n_max.max(2))?;
    let c = match seq.status {
        LimitStatus::Converged if seq.limit > 0.0 => Conclusion::PhaseTransition,
        _ => Conclusion::Undetermined,
    };
    Ok((seq.limit, format!("truncation-limit-{}", seq.status.as_str()), c))
}

/// Verdicts for plus, free and spin-glass boundary conditions. Free and
/// spin-glass share one capacity computation, so they always agree.
pub fn phase_report(input: PhaseInput<'_>, n_max: usize) -> Result<[PhaseVerdict; 3]> {
    let plus = capacity_evidence(input, 3.0, 1, n_max)?;
    let two = capacity_evidence(input, 2.0, 2, n_max)?;
    let make = |b: BoundaryCondition, (cap, ev, c): &(f64, String, Conclusion)| {
        let (p, q) = b.exponents();
        PhaseVerdict {
            boundary: b,
            p,
            q,
            capacity: *cap,
            evidence: ev.clone(),
            conclusion: *c,
            criterion: b.criterion(),
        }
    };
    Ok([
        make(BoundaryCondition::Plus, &plus),
        make(BoundaryCondition::Free, &two),
        make(BoundaryCondition::SpinGlass, &two),
    ])
}

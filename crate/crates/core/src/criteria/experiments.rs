//! Numeric experiments on critical power-law trees.

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::truncation_capacities;
use crate::error::{Error, Result};
use crate::recursion::{run_spherical, FamilyKind};
use crate::tree::{subdivision_count, SphericalConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub n: usize,
    pub cap3: f64,
    pub x_plus: f64,
}

/// `cap_3(T^(N))` and the plus-boundary root value on trees with
/// `|T_n| ~ b^n n^alpha` and constant bias `theta = 1/b`.
pub fn alpha_sweep(b: f64, theta: f64, alphas: &[f64], n_list: &[usize]) -> Result<Vec<AlphaSweepRow>> {
    if (b * theta - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "b theta must equal 1, got {}",
            b * theta
        )));
    }
    let depth = check_depths(n_list)?;
    let per_alpha: Vec<Result<Vec<AlphaSweepRow>>> = alphas
        .par_iter()
        .map(|&alpha| {
            let profile = SphericalConfig::power_law(depth, b, alpha, theta)?.profile();
            let caps = truncation_capacities(&profile, 1, 3.0)?;
            n_list
                .iter()
                .map(|&n| {
                    let x = run_spherical(
                        FamilyKind::IsingF,
                        &profile.degrees()[..n],
                        &profile.thetas()[..n],
                    )?;
                    Ok(AlphaSweepRow {
                        alpha,
                        n,
                        cap3: caps[n - 1],
                        x_plus: x[0],
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_alpha {
        rows.extend(r?);
    }
    Ok(rows)
}

fn check_depths(n_list: &[usize]) -> Result<usize> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::InvalidParameter(
            "depths must be a nonempty list of positive integers".into(),
        ));
    }
    Ok(*n_list.iter().max().unwrap())
}

/// How many series edges replace an edge of generation `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubdivisionSchedule {
    /// `n` edges of bias `theta^(1/n)` at generation `n`.
    ByGeneration,
    /// The least count making each piece's bias at least `epsilon`.
    Epsilon(f64),
}

impl SubdivisionSchedule {
    fn count(&self, generation: usize, theta: f64) -> usize {
        match *self {
            SubdivisionSchedule::ByGeneration => generation,
            SubdivisionSchedule::Epsilon(eps) => subdivision_count(theta, eps),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SubdivisionSchedule::ByGeneration => "n-per-generation".into(),
            SubdivisionSchedule::Epsilon(e) => format!("epsilon={e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubdivisionRow {
    pub schedule: String,
    pub n: usize,
    pub cap3_before: f64,
    pub cap3_after: f64,
}

/// `cap_3` (q = 1) of the depth-`N` truncations of the `b = 2`, `theta = 1/2`
/// power-law tree before and after subdividing generation-`n` edges per
/// `schedule`. Depths refer to the original tree.
pub fn subdivision_experiment(
    alpha: f64,
    schedules: &[SubdivisionSchedule],
    n_list: &[usize],
) -> Result<Vec<SubdivisionRow>> {
    for s in schedules {
        if let SubdivisionSchedule::Epsilon(e) = s {
            if !(*e > 0.0 && *e < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must lie in (0,1), got {e}"
                )));
            }
        }
    }
    let depth = check_depths(n_list)?;
    let theta = 0.5;
    let profile = SphericalConfig::power_law(depth, 2.0, alpha, theta)?.profile();
    let degrees = profile.degrees();
    let before = streamed_capacities(degrees, theta, |_| 1, n_list);
    let mut rows = Vec::new();
    for sched in schedules {
        let after = streamed_capacities(degrees, theta, |n| sched.count(n, theta), n_list);
        for ((&n, &b), &a) in n_list.iter().zip(&before).zip(&after) {
            rows.push(SubdivisionRow {
                schedule: sched.label(),
                n,
                cap3_before: b,
                cap3_after: a,
            });
        }
    }
    Ok(rows)
}

/// `cap_3` at each requested depth of the tree whose generation-`n` edges
/// are replaced by `count(n)` edges of bias `theta^(1/count(n))`.
fn streamed_capacities(
    degrees: &[u64],
    theta: f64,
    count: impl Fn(usize) -> usize,
    n_list: &[usize],
) -> Vec<f64> {
    let s = 2.0;
    let mut log_term = 0.0;
    let mut log_sum = f64::NEG_INFINITY;
    let mut at_depth = Vec::with_capacity(degrees.len());
    let push = |l: f64, log_sum: &mut f64| {
        *log_sum = if *log_sum == f64::NEG_INFINITY {
            l
        } else {
            let (hi, lo) = if *log_sum > l { (*log_sum, l) } else { (l, *log_sum) };
            hi + (lo - hi).exp().ln_1p()
        };
    };
    for (i, &d) in degrees.iter().enumerate() {
        let k = count(i + 1).max(1);
        let piece = if k == 1 { theta } else { (theta.ln() / k as f64).exp() };
        log_term -= s * (d as f64 * piece).ln();
        push(log_term, &mut log_sum);
        for _ in 1..k {
            log_term -= s * piece.ln();
            push(log_term, &mut log_sum);
        }
        at_depth.push((-log_sum / s).exp());
    }
    n_list.iter().map(|&n| at_depth[n - 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_regular_column() {
        let rows = alpha_sweep(2.0, 0.5, &[0.0], &[100, 400]).unwrap();
        assert!((rows[0].cap3 - 0.1).abs() < 1e-12);
        assert!((rows[1].cap3 - 0.05).abs() < 1e-12);
        assert!(rows[1].x_plus < rows[0].x_plus);
        assert!(alpha_sweep(3.0, 0.5, &[0.0], &[10]).is_err());
    }

    #[test]
    fn no_subdivision_changes_nothing() {
        let rows =
            subdivision_experiment(1.0, &[SubdivisionSchedule::Epsilon(0.5)], &[10, 50]).unwrap();
        for r in rows {
            assert_eq!(r.cap3_before, r.cap3_after);
        }
    }

    #[test]
    fn generation_schedule_shrinks_capacity() {
        let rows = subdivision_experiment(1.0, &[SubdivisionSchedule::ByGeneration], &[50, 400]).unwrap();
        assert!(rows[1].cap3_after < rows[0].cap3_after);
        assert!(rows[1].cap3_after < rows[1].cap3_before);
    }
}

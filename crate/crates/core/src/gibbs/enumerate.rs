//! Brute-force summation over spin configurations.
//!
//! These routines never call the recursions; they serve as the reference the
//! recursive computations are checked against. Free spins are visited in
//! Gray-code order so each step updates the energy in `O(degree)`, and the
//! weights of a block are summed pairwise after shifting by the block maximum.

use super::{Configuration, Spin};
use crate::error::{Error, Result};
use crate::tree::{EdgeBiases, RootedTree, VertexId};

/// Largest number of free spins (excluding the root) a single enumeration
/// will visit.
pub const ENUMERATION_LIMIT: usize = 24;

/// Boundary condition on the leaves.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Every leaf `+1`.
    Plus,
    /// Leaf spins in `tree.leaves()` order.
    Fixed(Vec<Spin>),
    /// Leaves summed over like every other spin.
    Free,
}

/// Exact root marginal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootMarginal {
    /// `P(eta(o) = +1)`.
    pub prob_plus: f64,
    /// `ln Z(eta(o) = +1) - ln Z(eta(o) = -1)`.
    pub log_odds: f64,
    /// `ln` of the partition function (sum over both root spins).
    pub log_partition: f64,
}

/// `ln sum exp(x)` by pairwise reduction after shifting by the maximum.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    fn pairwise(xs: &[f64], max: f64) -> f64 {
        if xs.len() <= 8 {
            return xs.iter().map(|x| (x - max).exp()).sum();
        }
        let mid = xs.len() / 2;
        pairwise(&xs[..mid], max) + pairwise(&xs[mid..], max)
    }
    max + pairwise(xs, max).ln()
}

struct Energy<'a> {
    tree: &'a RootedTree,
    coupling: &'a [f64],
}

impl Energy<'_> {
    fn total(&self, spin: &[Spin]) -> f64 {
        (1..self.tree.len())
            .map(|v| {
                let p = self.tree.parent(v).unwrap();
                self.coupling[v] * (spin[p] * spin[v]) as f64
            })
            .sum()
    }

    /// Energy change when `u` flips.
    fn flip_delta(&self, spin: &[Spin], u: VertexId) -> f64 {
        let mut local = 0.0;
        if let Some(p) = self.tree.parent(u) {
            local += self.coupling[u] * spin[p] as f64;
        }
        for &c in self.tree.children(u) {
            local += self.coupling[c] * spin[c] as f64;
        }
        -2.0 * spin[u] as f64 * local
    }

    /// Log-weights of every assignment of `free` with the rest of `spin`
    /// held fixed, in Gray-code order.
    fn block(&self, spin: &mut [Spin], free: &[VertexId], out: &mut Vec<f64>) {
        out.clear();
        for &u in free {
            spin[u] = 1;
        }
        let mut e = self.total(spin);
        out.push(e);
        for k in 1u64..(1u64 << free.len()) {
            let u = free[k.trailing_zeros() as usize];
            e += self.flip_delta(spin, u);
            spin[u] = -spin[u];
            out.push(e);
        }
    }
}

fn couplings(tree: &RootedTree, biases: &EdgeBiases) -> Vec<f64> {
    (0..tree.len())
        .map(|v| if v == 0 { 0.0 } else { biases.beta_coupling(v) })
        .collect()
}

fn check_budget(free: usize) -> Result<()> {
    if free > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBudget {
            free,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Log-weight of a configuration: `sum_{v -> w} beta J_w eta(v) eta(w)`.
pub fn log_weight(tree: &RootedTree, biases: &EdgeBiases, config: &Configuration) -> f64 {
    let c = couplings(tree, biases);
    Energy {
        tree,
        coupling: &c,
    }
    .total(config.spins())
}

/// Root marginal by summing over all free spins.
pub fn enumerate_root_marginal(
    tree: &RootedTree,
    biases: &EdgeBiases,
    boundary: &Boundary,
) -> Result<RootMarginal> {
    let leaves: Vec<VertexId> = tree.leaves().collect();
    let mut spin: Vec<Spin> = vec![1; tree.len()];
    let free: Vec<VertexId> = match boundary {
        Boundary::Free => (1..tree.len()).collect(),
        Boundary::Plus => (1..tree.len()).filter(|&v| !tree.is_leaf(v)).collect(),
        Boundary::Fixed(xi) => {
            if xi.len() != leaves.len() || xi.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::IncompleteBoundary(leaves.len()));
            }
            for (&v, &s) in leaves.iter().zip(xi) {
                spin[v] = s;
            }
            (1..tree.len()).filter(|&v| !tree.is_leaf(v)).collect()
        }
    };
    check_budget(free.len())?;
    let c = couplings(tree, biases);
    let energy = Energy {
        tree,
        coupling: &c,
    };
    let mut buf = Vec::with_capacity(1 << free.len());
    spin[0] = 1;
    energy.block(&mut spin, &free, &mut buf);
    let plus = log_sum_exp(&buf);
    spin[0] = -1;
    energy.block(&mut spin, &free, &mut buf);
    let minus = log_sum_exp(&buf);
    let log_odds = plus - minus;
    Ok(RootMarginal {
        prob_plus: 1.0 / (1.0 + (-log_odds).exp()),
        log_odds,
        log_partition: log_sum_exp(&[plus, minus]),
    })
}

/// Exact boundary law of the subtree `T(v)`.
///
/// Boundary configurations are indexed by bit masks over `leaves` (bit `i`
/// set means leaf `i` is `+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTable {
    pub vertex: VertexId,
    /// Leaves of `T(v)` as vertices of the original tree.
    pub leaves: Vec<VertexId>,
    /// `Q_v^+(xi)`: probability of `xi` given `eta(v) = +1`.
    pub q_plus: Vec<f64>,
    /// Log-likelihood ratio at `v` given `xi`.
    pub llr: Vec<f64>,
}

impl BoundaryTable {
    /// `Q_v^-(xi) = Q_v^+(-xi)`.
    pub fn q_minus(&self, mask: usize) -> f64 {
        let all = (1usize << self.leaves.len()) - 1;
        self.q_plus[all ^ mask]
    }

    /// Free boundary law: `(Q^+ + Q^-) / 2`.
    pub fn free(&self, mask: usize) -> f64 {
        0.5 * (self.q_plus[mask] + self.q_minus(mask))
    }

    pub fn len(&self) -> usize {
        self.q_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_plus.is_empty()
    }
}

/// Enumerates the joint law of boundary spins and the root spin of `T(v)`.
pub fn enumerate_boundary_law(
    tree: &RootedTree,
    biases: &EdgeBiases,
    v: VertexId,
) -> Result<BoundaryTable> {
    if v >= tree.len() {
        return Err(Error::UnknownVertex(v.to_string()));
    }
    if tree.is_leaf(v) {
        return Err(Error::InvalidParameter(format!(
            "vertex {v} is a leaf and has no boundary below it"
        )));
    }
    let members = tree.descendants(v);
    let leaves: Vec<VertexId> = members.iter().copied().filter(|&w| tree.is_leaf(w)).collect();
    let internal: Vec<VertexId> = members
        .iter()
        .copied()
        .filter(|&w| w != v && !tree.is_leaf(w))
        .collect();
    check_budget(leaves.len() + internal.len())?;

    let sub = tree.subtree(v)?;
    let local: std::collections::HashMap<VertexId, VertexId> =
        members.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let sub_biases: Vec<f64> = members
        .iter()
        .map(|&w| if w == v { 0.0 } else { biases.beta_coupling(w) })
        .collect();
    let energy = Energy {
        tree: &sub,
        coupling: &sub_biases,
    };
    let leaf_local: Vec<VertexId> = leaves.iter().map(|w| local[w]).collect();
    let internal_local: Vec<VertexId> = internal.iter().map(|w| local[w]).collect();

    let n_masks = 1usize << leaves.len();
    let mut log_plus = vec![0.0; n_masks];
    let mut log_minus = vec![0.0; n_masks];
    let mut spin: Vec<Spin> = vec![1; sub.len()];
    let mut buf = Vec::with_capacity(1 << internal.len());
    for mask in 0..n_masks {
        for (i, &u) in leaf_local.iter().enumerate() {
            spin[u] = if mask >> i & 1 == 1 { 1 } else { -1 };
        }
        spin[0] = 1;
        energy.block(&mut spin, &internal_local, &mut buf);
        log_plus[mask] = log_sum_exp(&buf);
        spin[0] = -1;
        energy.block(&mut spin, &internal_local, &mut buf);
        log_minus[mask] = log_sum_exp(&buf);
    }
    let norm = log_sum_exp(&log_plus);
    let q_plus = log_plus.iter().map(|l| (l - norm).exp()).collect();
    let llr = log_plus
        .iter()
        .zip(&log_minus)
        .map(|(p, m)| p - m)
        .collect();
    Ok(BoundaryTable {
        vertex: v,
        leaves,
        q_plus,
        llr,
    })
}

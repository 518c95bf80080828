//! Exact and sampled Ising computations on finite trees.

mod atomic;
mod constants;
mod enumerate;
mod laws;
mod sampling;
pub mod suites;

use serde::{Deserialize, Serialize};

pub use atomic::{AtomicDistribution, LawTag, ATOM_BUDGET, MERGE_REL_TOL};
pub use constants::{kappa_free, sg_bound_constants, SgBoundConstants};
pub use enumerate::{
    enumerate_boundary_law, enumerate_root_marginal, log_weight, Boundary, BoundaryTable,
    RootMarginal, ENUMERATION_LIMIT,
};
pub use laws::{boundary_law_dp, moments, BoundaryLaws, LawKind, MomentReport};
pub use sampling::{broadcast_sample, mc_free_statistics, McEstimate, McStatistics};

use crate::error::{Error, Result};
use crate::recursion::{run_recursion, RecursionFamily};
use crate::tree::{EdgeBiases, RootedTree};

pub type Spin = i8;

/// A complete spin assignment, indexed by vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    spins: Vec<Spin>,
}

impl Configuration {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "spin at {i} is {}, expected +1 or -1",
                spins[i]
            )));
        }
        Ok(Self { spins })
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// Spins at the leaves, in `tree.leaves()` order.
    pub fn boundary(&self, tree: &RootedTree) -> Vec<Spin> {
        tree.leaves().map(|v| self.spins[v]).collect()
    }
}

/// `exp` of [`log_weight`].
pub fn weight(tree: &RootedTree, biases: &EdgeBiases, config: &Configuration) -> Result<f64> {
    if config.len() != tree.len() {
        return Err(Error::InvalidParameter(format!(
            "configuration has {} spins for {} vertices",
            config.len(),
            tree.len()
        )));
    }
    Ok(log_weight(tree, biases, config).exp())
}

/// Per-vertex log-likelihood ratios given leaf spins `xi` (in
/// `tree.leaves()` order), with each leaf carrying `xi * inf`.
pub fn llr_given_boundary(tree: &RootedTree, biases: &EdgeBiases, xi: &[Spin]) -> Result<Vec<f64>> {
    let leaves: Vec<_> = tree.leaves().collect();
    if xi.len() != leaves.len() || xi.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::IncompleteBoundary(leaves.len()));
    }
    let mut values = vec![0.0; tree.len()];
    for (&v, &s) in leaves.iter().zip(xi) {
        values[v] = f64::INFINITY * s as f64;
    }
    let family = RecursionFamily::ising(biases);
    Ok(run_recursion(tree, &family, Some(&values))?.x)
}

/// Root log-likelihood ratio under the all-plus boundary.
pub fn plus_llr(tree: &RootedTree, biases: &EdgeBiases) -> Result<f64> {
    Ok(run_recursion(tree, &RecursionFamily::ising(biases), None)?.root())
}

/// `P[v <-> boundary of T(v)]` for bond percolation with retention `a`.
pub fn percolation_prob(tree: &RootedTree, a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "a must lie in (0,1), got {a}"
        )));
    }
    let mut p = vec![1.0; tree.len()];
    for v in tree.bottom_up() {
        let kids = tree.children(v);
        if !kids.is_empty() {
            let miss: f64 = kids.iter().map(|&w| 1.0 - a * p[w]).product();
            p[v] = 1.0 - miss;
        }
    }
    Ok(p)
}

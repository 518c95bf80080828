//! Flows, potentials and `L^p` capacities of finite rooted trees.
//!
//! For a flow `mu` and resistances `R`, the potential of a ray is
//! `sum_e (mu(e) R(e))^s` with `s = p - 1`; the potential of the flow is the
//! largest ray potential, and `cap_p` is the largest mass of a flow with unit
//! potential. Three routes compute it:
//!
//! * [`capacity_recursive`]: one bottom-up pass of the series/parallel rule,
//! * [`capacity_oracle`]: direct minimization of the potential over unit flows,
//! * [`spherical_capacity`]: the closed form for spherically symmetric data.

mod oracle;
mod spherical;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::tree::{EdgeBiases, RootedTree, VertexId};

pub use oracle::{capacity_oracle, DEFAULT_ORACLE_TOL};
pub use spherical::{
    capacity_limit, regular_capacity_limit, spherical_capacity,
    spherical_capacity_with_coefficients, truncation_capacities, CapacitySequence,
    LimitStatus, TruncationSource,
};

/// Values of `phi` above this are treated as `+inf` in the recursion.
pub const PHI_INFINITY: f64 = 1e100;

/// Edge resistances, stored on the child vertex.
///
/// `value(root) = 1` by convention, so `step(w) = R_w / R_parent(w)` is defined
/// for every non-root `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Resistances {
    value: Vec<f64>,
    step: Vec<f64>,
    exponent: Option<u32>,
}

impl Resistances {
    /// `R_v = prod_{o < y <= v} theta_y^(-q)`.
    pub fn from_biases(tree: &RootedTree, biases: &EdgeBiases, q: u32) -> Result<Self> {
        if !(q == 1 || q == 2) {
            return Err(Error::InvalidParameter(format!("q must be 1 or 2, got {q}")));
        }
        let coeff: Vec<f64> = (0..tree.len())
            .map(|v| if v == 0 { 1.0 } else { biases.theta(v).powi(q as i32) })
            .collect();
        let mut r = Self::from_coefficients(tree, &coeff)?;
        r.exponent = Some(q);
        Ok(r)
    }

    /// `R_v = prod_{o < y <= v} a_y^(-1)` for positive coefficients `a`.
    pub fn from_coefficients(tree: &RootedTree, a: &[f64]) -> Result<Self> {
        if a.len() != tree.len() {
            return Err(Error::InvalidParameter("one coefficient per vertex".into()));
        }
        let mut value = vec![1.0; tree.len()];
        let mut step = vec![1.0; tree.len()];
        for v in 1..tree.len() {
            if !(a[v] > 0.0 && a[v].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "coefficient at vertex {v} must be positive, got {}",
                    a[v]
                )));
            }
            step[v] = 1.0 / a[v];
            value[v] = value[tree.parent(v).unwrap()] * step[v];
        }
        Ok(Self {
            value,
            step,
            exponent: None,
        })
    }

    /// Arbitrary positive edge resistances (`r[0]` is ignored).
    pub fn from_edges(tree: &RootedTree, r: &[f64]) -> Result<Self> {
        if r.len() != tree.len() {
            return Err(Error::InvalidParameter("one resistance per vertex".into()));
        }
        let mut value = vec![1.0; tree.len()];
        let mut step = vec![1.0; tree.len()];
        for v in 1..tree.len() {
            if !(r[v] > 0.0 && r[v].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "resistance at vertex {v} must be positive, got {}",
                    r[v]
                )));
            }
            value[v] = r[v];
            step[v] = r[v] / value[tree.parent(v).unwrap()];
        }
        Ok(Self {
            value,
            step,
            exponent: None,
        })
    }

    pub fn value(&self, v: VertexId) -> f64 {
        self.value[v]
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    /// `R_w / R_parent(w)`.
    pub fn step(&self, w: VertexId) -> f64 {
        self.step[w]
    }

    pub fn exponent(&self) -> Option<u32> {
        self.exponent
    }

    /// Every edge resistance multiplied by `alpha`.
    pub fn scaled(&self, tree: &RootedTree, alpha: f64) -> Self {
        let mut value = self.value.clone();
        let mut step = self.step.clone();
        for v in 1..value.len() {
            value[v] *= alpha;
            if tree.parent(v) == Some(0) {
                step[v] *= alpha;
            }
        }
        Self {
            value,
            step,
            exponent: None,
        }
    }
}

/// Nonnegative edge function, stored on the child vertex, conserving mass at
/// internal vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    mu: Vec<f64>,
    mass: f64,
}

impl Flow {
    /// Builds the flow induced by masses on the leaves (indexed by vertex).
    pub fn from_leaf_masses(tree: &RootedTree, leaf_mass: &[f64]) -> Result<Self> {
        if leaf_mass.len() != tree.len() {
            return Err(Error::InvalidFlow("one entry per vertex".into()));
        }
        let mut mu = vec![0.0; tree.len()];
        for v in tree.bottom_up() {
            if v == 0 {
                break;
            }
            if tree.is_leaf(v) {
                if !(leaf_mass[v] >= 0.0) {
                    return Err(Error::InvalidFlow(format!("negative mass at leaf {v}")));
                }
                mu[v] = leaf_mass[v];
            } else {
                mu[v] = tree.children(v).iter().map(|&w| mu[w]).sum();
            }
        }
        let mass = tree.children(0).iter().map(|&w| mu[w]).sum();
        Ok(Self { mu, mass })
    }

    /// Accepts explicit per-edge values after checking conservation.
    pub fn from_edges(tree: &RootedTree, mu: Vec<f64>) -> Result<Self> {
        let flow = Self {
            mass: tree.children(0).iter().map(|&w| mu[w]).sum(),
            mu,
        };
        flow.validate(tree, 1e-12)?;
        Ok(flow)
    }

    pub fn zero(tree: &RootedTree) -> Self {
        Self {
            mu: vec![0.0; tree.len()],
            mass: 0.0,
        }
    }

    pub fn mu(&self, v: VertexId) -> f64 {
        self.mu[v]
    }

    pub fn edges(&self) -> &[f64] {
        &self.mu
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mu: self.mu.iter().map(|m| m * factor).collect(),
            mass: self.mass * factor,
        }
    }

    pub fn validate(&self, tree: &RootedTree, rel_tol: f64) -> Result<()> {
        if self.mu.len() != tree.len() {
            return Err(Error::InvalidFlow("one entry per vertex".into()));
        }
        for v in 1..tree.len() {
            if !(self.mu[v] >= 0.0) {
                return Err(Error::InvalidFlow(format!("negative flow into vertex {v}")));
            }
            if !tree.is_leaf(v) {
                let out: f64 = tree.children(v).iter().map(|&w| self.mu[w]).sum();
                if (out - self.mu[v]).abs() > rel_tol * self.mu[v].max(out).max(1e-300) {
                    return Err(Error::InvalidFlow(format!(
                        "conservation fails at vertex {v}: in {} out {out}",
                        self.mu[v]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `[[child-label, mu], ..]` in child-index order.
    pub fn to_json(&self, tree: &RootedTree) -> serde_json::Value {
        json!((1..tree.len())
            .map(|v| json!([tree.label(v), self.mu[v]]))
            .collect::<Vec<_>>())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Recursion,
    Oracle,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    pub p: f64,
    pub s: f64,
    pub witness: Option<Flow>,
    pub method: Method,
}

impl CapacityResult {
    pub fn to_json(&self, tree: Option<&RootedTree>) -> serde_json::Value {
        let value = if self.value.is_finite() {
            json!(self.value)
        } else {
            json!("inf")
        };
        let flow = match (&self.witness, tree) {
            (Some(f), Some(t)) => f.to_json(t),
            _ => json!([]),
        };
        json!({ "p": self.p, "value": value, "method": self.method, "flow": flow })
    }
}

pub(crate) fn exponent_s(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    Ok(p - 1.0)
}

/// `sum_{e in ray} (mu(e) R(e))^s` for the ray ending at `leaf`.
pub fn ray_potential(
    tree: &RootedTree,
    flow: &Flow,
    res: &Resistances,
    leaf: VertexId,
    s: f64,
) -> Result<f64> {
    if leaf >= tree.len() || !tree.is_leaf(leaf) {
        return Err(Error::NotALeaf(leaf));
    }
    Ok(tree
        .path_to(leaf)
        .iter()
        .map(|&v| (flow.mu(v) * res.value(v)).powf(s))
        .sum())
}

/// Largest ray potential over all leaves.
pub fn flow_potential(tree: &RootedTree, flow: &Flow, res: &Resistances, s: f64) -> f64 {
    let mut acc = vec![0.0; tree.len()];
    let mut best = 0.0f64;
    for v in 1..tree.len() {
        let p = tree.parent(v).unwrap();
        acc[v] = acc[p] + (flow.mu(v) * res.value(v)).powf(s);
        if tree.is_leaf(v) {
            best = best.max(acc[v]);
        }
    }
    best
}

/// `phi / (1 + phi^s)^(1/s)`, equal to 1 at `phi = inf`.
pub(crate) fn series_factor(phi: f64, s: f64) -> f64 {
    if phi > PHI_INFINITY {
        1.0
    } else if phi >= 1.0 {
        (1.0 + phi.powf(-s)).powf(-1.0 / s)
    } else {
        phi * (1.0 + phi.powf(s)).powf(-1.0 / s)
    }
}

/// `phi(v) = R_v cap_p(T(v))` at every vertex, with `phi(leaf) = inf` and
/// `phi(root) = cap_p(T)`.
pub fn capacity_profile(tree: &RootedTree, res: &Resistances, p: f64) -> Result<Vec<f64>> {
    let s = exponent_s(p)?;
    let mut phi = vec![f64::INFINITY; tree.len()];
    for v in tree.bottom_up() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        phi[v] = kids
            .iter()
            .map(|&w| series_factor(phi[w], s) / res.step(w))
            .sum();
    }
    Ok(phi)
}

pub fn capacity_recursive(tree: &RootedTree, res: &Resistances, p: f64) -> Result<CapacityResult> {
    let phi = capacity_profile(tree, res, p)?;
    let s = p - 1.0;
    let witness = (phi[0] > 0.0 && phi[0].is_finite()).then(|| optimal_flow(tree, res, &phi, s));
    Ok(CapacityResult {
        value: phi[0],
        p,
        s,
        witness,
        method: Method::Recursion,
    })
}

/// Every branch below a vertex sees the same potential drop, so the flow
/// splits in proportion to the branch capacities.
fn optimal_flow(tree: &RootedTree, res: &Resistances, phi: &[f64], s: f64) -> Flow {
    let mut mu = vec![0.0; tree.len()];
    for v in 0..tree.len() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        let inflow = if v == 0 { phi[0] } else { mu[v] };
        let weights: Vec<f64> = kids
            .iter()
            .map(|&w| series_factor(phi[w], s) / res.step(w))
            .collect();
        let total: f64 = weights.iter().sum();
        for (&w, c) in kids.iter().zip(weights) {
            mu[w] = inflow * c / total;
        }
    }
    Flow { mu, mass: phi[0] }
}

/// Splits the mass equally among children at every vertex. On a spherically
/// symmetric tree this is `mass / prod_{i <= n} d_i` on level `n`.
pub fn equal_split_flow(tree: &RootedTree, mass: f64, require_symmetric: bool) -> Result<Flow> {
    if require_symmetric {
        tree.level_degrees()?;
    }
    let mut mu = vec![0.0; tree.len()];
    for v in 0..tree.len() {
        let incoming = if v == 0 { mass } else { mu[v] };
        let kids = tree.children(v);
        for &w in kids {
            mu[w] = incoming / kids.len() as f64;
        }
    }
    Ok(Flow { mu, mass })
}

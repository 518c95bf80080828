//! Bottom-up recursions `x_v = sum_{v -> w} f_w(x_w)` and their comparison
//! with capacities.
//!
//! A [`RecursionFamily`] attaches one concave edge function to every edge.
//! When the family is squeezed between `a x / (1 + (k x)^s)^(1/s)` for two
//! constants `k1 <= k2`, the root value `x_o` with leaves at `+inf` is squeezed
//! between `cap_p(T)/k2` and `cap_p(T)/k1`, where `p = s + 1` and the
//! resistances are `R_v = prod a_y^-1`.

mod functions;
mod kappa;

use serde::{Deserialize, Serialize};

use crate::capacity::{
    capacity_profile, spherical_capacity_with_coefficients, Resistances,
};
use crate::error::{Error, Result};
use crate::tree::{EdgeBiases, RootedTree};

pub use functions::{f_theta, f_theta_deriv, percolation_f, psi, sg_g, IsingEdge};
pub use kappa::{comparison_ratio, family_kappa_bounds, kappa_bounds, KappaBounds, KappaGrid};

pub(crate) use functions::percolation_unchecked;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `f_theta(x) = 2 artanh(theta tanh(x/2))`, coefficient `theta`, `s = 2`.
    IsingF,
    /// `-ln(1 - a(1 - e^-x))`, coefficient `a`, `s = 1`.
    Percolation,
    /// `f_theta(sqrt x)^2`, coefficient `theta^2`, `s = 1`.
    SpinGlassG,
}

impl FamilyKind {
    pub fn exponent(&self) -> f64 {
        match self {
            FamilyKind::IsingF => 2.0,
            FamilyKind::Percolation | FamilyKind::SpinGlassG => 1.0,
        }
    }

    /// Evaluates the edge function with parameter `param` (a bias, or the
    /// percolation probability).
    pub fn eval(&self, param: f64, x: f64) -> f64 {
        match self {
            FamilyKind::IsingF => IsingEdge::unchecked(param).f(x),
            FamilyKind::Percolation => percolation_unchecked(param, x),
            FamilyKind::SpinGlassG => {
                let f = IsingEdge::unchecked(param).f(x.sqrt());
                f * f
            }
        }
    }

    /// Linear coefficient `a` with `f(x) = a x + o(x)`.
    pub fn coefficient(&self, param: f64) -> f64 {
        match self {
            FamilyKind::IsingF | FamilyKind::Percolation => param,
            FamilyKind::SpinGlassG => param * param,
        }
    }
}

/// One edge function per non-root vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionFamily {
    kind: FamilyKind,
    param: Vec<f64>,
}

impl RecursionFamily {
    pub fn new(kind: FamilyKind, param: Vec<f64>) -> Result<Self> {
        if param.iter().skip(1).any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidParameter(
                "edge parameters must lie in (0,1)".into(),
            ));
        }
        Ok(Self { kind, param })
    }

    pub fn ising(biases: &EdgeBiases) -> Self {
        Self {
            kind: FamilyKind::IsingF,
            param: biases.thetas().to_vec(),
        }
    }

    pub fn spin_glass(biases: &EdgeBiases) -> Self {
        Self {
            kind: FamilyKind::SpinGlassG,
            param: biases.thetas().to_vec(),
        }
    }

    /// Every edge open with probability `a`.
    pub fn percolation(tree: &RootedTree, a: f64) -> Result<Self> {
        let mut param = vec![a; tree.len()];
        param[0] = 0.0;
        Self::new(FamilyKind::Percolation, param)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn s(&self) -> f64 {
        self.kind.exponent()
    }

    pub fn p(&self) -> f64 {
        self.s() + 1.0
    }

    pub fn param(&self, v: usize) -> f64 {
        self.param[v]
    }

    pub fn eval(&self, v: usize, x: f64) -> f64 {
        self.kind.eval(self.param[v], x)
    }

    pub fn coefficient(&self, v: usize) -> f64 {
        self.kind.coefficient(self.param[v])
    }

    /// `R_v = prod_{o < y <= v} a_y^-1`.
    pub fn resistances(&self, tree: &RootedTree) -> Result<Resistances> {
        let a: Vec<f64> = (0..tree.len())
            .map(|v| if v == 0 { 1.0 } else { self.coefficient(v) })
            .collect();
        Resistances::from_coefficients(tree, &a)
    }

    /// Smallest and largest edge parameter.
    pub fn param_range(&self) -> (f64, f64) {
        self.param[1..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                (lo.min(t), hi.max(t))
            })
    }

    /// Sandwich constants valid for every edge of this family.
    pub fn kappa_bounds(&self, grid: &KappaGrid) -> Result<KappaBounds> {
        let (lo, hi) = self.param_range();
        family_kappa_bounds(self.kind, lo, hi, grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafRule {
    PlusInfinity,
    Given,
    ScaledCapacity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecursionSolution {
    pub x: Vec<f64>,
    pub leaf_rule: LeafRule,
}

impl RecursionSolution {
    pub fn root(&self) -> f64 {
        self.x[0]
    }
}

/// `x_v = sum_{v -> w} f_w(x_w)` with `x_leaf` from `leaf_values` (indexed by
/// vertex; only leaves are read) or `+inf` when `None`.
pub fn run_recursion(
    tree: &RootedTree,
    family: &RecursionFamily,
    leaf_values: Option<&[f64]>,
) -> Result<RecursionSolution> {
    if family.param.len() != tree.len() {
        return Err(Error::InvalidParameter(
            "family does not match the tree".into(),
        ));
    }
    let mut x = vec![f64::INFINITY; tree.len()];
    if let Some(vals) = leaf_values {
        if vals.len() != tree.len() {
            return Err(Error::InvalidParameter("one leaf value per vertex".into()));
        }
        for v in tree.leaves() {
            if vals[v].is_nan() {
                return Err(Error::InvalidParameter(format!("leaf value at {v} is NaN")));
            }
            x[v] = vals[v];
        }
    }
    for v in tree.bottom_up() {
        let kids = tree.children(v);
        if !kids.is_empty() {
            x[v] = kids.iter().map(|&w| family.eval(w, x[w])).sum();
        }
    }
    Ok(RecursionSolution {
        x,
        leaf_rule: if leaf_values.is_some() {
            LeafRule::Given
        } else {
            LeafRule::PlusInfinity
        },
    })
}

/// Level values `x_0, .., x_N` on a spherically symmetric tree with leaves at
/// `+inf`: `x_n = d_{n+1} f_{n+1}(x_{n+1})`, where `params[n]` and
/// `degrees[n]` describe the edges from level `n` to `n + 1`.
pub fn run_spherical(kind: FamilyKind, degrees: &[u64], params: &[f64]) -> Result<Vec<f64>> {
    if degrees.len() != params.len() {
        return Err(Error::InvalidParameter(
            "one parameter per level is required".into(),
        ));
    }
    if params.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InvalidParameter(
            "edge parameters must lie in (0,1)".into(),
        ));
    }
    let n = degrees.len();
    let mut x = vec![f64::INFINITY; n + 1];
    for i in (0..n).rev() {
        x[i] = degrees[i] as f64 * kind.eval(params[i], x[i + 1]);
    }
    Ok(x)
}

/// Bracket `lower <= x_o <= upper` from the capacity comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub x_o: f64,
    pub capacity: f64,
}

const SANDWICH_TOL: f64 = 1e-9;

fn check_sandwich(sw: Sandwich) -> Result<Sandwich> {
    if sw.lower > sw.x_o * (1.0 + SANDWICH_TOL) || sw.x_o > sw.upper * (1.0 + SANDWICH_TOL) {
        return Err(Error::Verification(format!(
            "capacity sandwich violated: {} <= x_o = {} <= {} fails",
            sw.lower, sw.x_o, sw.upper
        )));
    }
    Ok(sw)
}

pub fn sandwich(
    tree: &RootedTree,
    family: &RecursionFamily,
    bounds: &KappaBounds,
) -> Result<Sandwich> {
    check_bounds_cover(family, bounds)?;
    let res = family.resistances(tree)?;
    let capacity = capacity_profile(tree, &res, family.p())?[0];
    let x_o = run_recursion(tree, family, None)?.root();
    let (k1, k2) = bounds.theorem_constants();
    check_sandwich(Sandwich {
        lower: capacity / k2,
        upper: capacity / k1,
        x_o,
        capacity,
    })
}

/// The same bracket on a spherically symmetric tree, in time linear in the
/// depth.
pub fn sandwich_spherical(
    kind: FamilyKind,
    degrees: &[u64],
    params: &[f64],
    bounds: &KappaBounds,
) -> Result<Sandwich> {
    if bounds.kind != kind {
        return Err(Error::InvalidParameter("constants belong to another family".into()));
    }
    let (lo, hi) = bounds.interval;
    if params.iter().any(|&t| t < lo || t > hi) {
        return Err(Error::InvalidParameter(
            "edge parameters fall outside the constants' interval".into(),
        ));
    }
    let x_o = run_spherical(kind, degrees, params)?[0];
    let coeffs: Vec<f64> = params.iter().map(|&t| kind.coefficient(t)).collect();
    let capacity = spherical_capacity_with_coefficients(degrees, &coeffs, kind.exponent() + 1.0)?.value;
    let (k1, k2) = bounds.theorem_constants();
    check_sandwich(Sandwich {
        lower: capacity / k2,
        upper: capacity / k1,
        x_o,
        capacity,
    })
}

fn check_bounds_cover(family: &RecursionFamily, bounds: &KappaBounds) -> Result<()> {
    if bounds.kind != family.kind {
        return Err(Error::InvalidParameter("constants belong to another family".into()));
    }
    let (lo, hi) = family.param_range();
    if lo < bounds.interval.0 || hi > bounds.interval.1 {
        return Err(Error::InvalidParameter(
            "edge parameters fall outside the constants' interval".into(),
        ));
    }
    Ok(())
}

/// `x_v = R_v cap_p(T(v)) / k2` (theorem-form `k2`), checked to satisfy
/// `x_v <= sum_{v -> w} f_w(x_w)` at every internal vertex.
pub fn capacity_subsolution(
    tree: &RootedTree,
    family: &RecursionFamily,
    kappa2: f64,
) -> Result<RecursionSolution> {
    if !(kappa2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa2 must be positive, got {kappa2}"
        )));
    }
    let res = family.resistances(tree)?;
    let phi = capacity_profile(tree, &res, family.p())?;
    let x: Vec<f64> = phi.iter().map(|v| v / kappa2).collect();
    for v in 0..tree.len() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        let rhs: f64 = kids.iter().map(|&w| family.eval(w, x[w])).sum();
        if x[v] > rhs * (1.0 + SANDWICH_TOL) {
            return Err(Error::Verification(format!(
                "capacity subsolution fails at `{}`: {} > {rhs}",
                tree.label(v),
                x[v]
            )));
        }
    }
    Ok(RecursionSolution {
        x,
        leaf_rule: LeafRule::ScaledCapacity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{generate_spherical, SphericalConfig};

    fn binary(depth: usize, theta: f64) -> (RootedTree, EdgeBiases) {
        let t = generate_spherical(&SphericalConfig::regular(depth, 2, theta).unwrap()).unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        (t, b)
    }

    #[test]
    fn plus_values_on_small_binary_trees() {
        let (t, b) = binary(1, 0.5);
        let fam = RecursionFamily::ising(&b);
        let x = run_recursion(&t, &fam, None).unwrap().root();
        assert!((x - 2.0 * 3f64.ln()).abs() < 1e-14);
        let (t, b) = binary(2, 0.5);
        let x = run_recursion(&t, &RecursionFamily::ising(&b), None).unwrap().root();
        assert!((x - 2.0 * (7.0f64 / 3.0).ln()).abs() < 1e-14);
        let zeros = vec![0.0; t.len()];
        let sol = run_recursion(&t, &RecursionFamily::ising(&b), Some(&zeros)).unwrap();
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spherical_fast_path_matches_tree() {
        let c = SphericalConfig::new(
            3,
            crate::tree::DegreeRule::Explicit(vec![3, 1, 2]),
            crate::tree::EdgeRule::Bias(0.4),
        )
        .unwrap();
        let t = generate_spherical(&c).unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        for kind in [FamilyKind::IsingF, FamilyKind::SpinGlassG] {
            let fam = RecursionFamily::new(kind, b.thetas().to_vec()).unwrap();
            let sol = run_recursion(&t, &fam, None).unwrap();
            let levels = run_spherical(kind, &[3, 1, 2], &[0.4; 3]).unwrap();
            for v in 0..t.len() {
                assert_eq!(sol.x[v], levels[t.depth(v)]);
            }
        }
    }

    #[test]
    fn sandwich_on_critical_binary() {
        let bounds = kappa_bounds(0.5, 0.5, &KappaGrid::default()).unwrap();
        for n in [1usize, 4, 10, 100] {
            let sw = sandwich_spherical(FamilyKind::IsingF, &vec![2; n], &vec![0.5; n], &bounds)
                .unwrap();
            assert!((sw.capacity - (n as f64).powf(-0.5)).abs() < 1e-14);
        }
        let (t, b) = binary(6, 0.5);
        let sw = sandwich(&t, &RecursionFamily::ising(&b), &bounds).unwrap();
        assert!(sw.lower <= sw.x_o && sw.x_o <= sw.upper);
    }

    #[test]
    fn single_edge_sandwich() {
        let t = crate::tree::parse_tree("root o\nedge o a theta=0.3\n").unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let fam = RecursionFamily::ising(&b);
        let bounds = fam.kappa_bounds(&KappaGrid::default()).unwrap();
        let sw = sandwich(&t, &fam, &bounds).unwrap();
        assert!((sw.x_o - 2.0 * 0.3f64.atanh()).abs() < 1e-15);
        assert!((sw.capacity - 0.3).abs() < 1e-15);
    }

    #[test]
    fn subsolution_on_critical_binary() {
        let (t, b) = binary(4, 0.5);
        let fam = RecursionFamily::ising(&b);
        let bounds = fam.kappa_bounds(&KappaGrid::default()).unwrap();
        let (_, k2) = bounds.theorem_constants();
        let sol = capacity_subsolution(&t, &fam, k2).unwrap();
        assert_eq!(sol.x.len(), 31);
        assert!((sol.root() - 0.5 / k2).abs() < 1e-14);
    }

    #[test]
    fn percolation_and_spin_glass_sandwiches() {
        let (t, b) = binary(5, 0.8);
        let sg = RecursionFamily::spin_glass(&b);
        let kb = sg.kappa_bounds(&KappaGrid::default()).unwrap();
        sandwich(&t, &sg, &kb).unwrap();
        let perc = RecursionFamily::percolation(&t, 0.6).unwrap();
        let kb = perc.kappa_bounds(&KappaGrid::default()).unwrap();
        sandwich(&t, &perc, &kb).unwrap();
    }
}

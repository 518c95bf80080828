//! Verification suites: exact identities on enumerated trees and randomized
//! checks of the moment inequalities behind the spin-glass bound.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::atomic::{AtomicDistribution, LawTag};
use super::constants::kappa_free;
use super::enumerate::{enumerate_boundary_law, enumerate_root_marginal, Boundary, BoundaryTable};
use super::laws::{boundary_law_dp, moments, BoundaryLaws, LawKind};
use super::plus_llr;
use crate::error::Result;
use crate::recursion::IsingEdge;
use crate::tree::{EdgeBiases, RootedTree, VertexId};

/// Relative slack allowed in the randomized inequality suites.
pub const SUITE_TOL: f64 = 1e-10;
/// Value tolerance when pooling atoms for total-variation comparisons.
const ATOM_VALUE_TOL: f64 = 1e-9;

/// Outcome of a randomized inequality suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest relative excess of the left side over the right side
    /// (negative when every case holds strictly).
    pub worst: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.record_excess((lhs - rhs) / rhs.abs().max(1e-300));
    }

    fn record_excess(&mut self, excess: f64) {
        self.worst = self.worst.max(excess);
        if excess > SUITE_TOL {
            self.violations += 1;
        }
        self.cases += 1;
    }

    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }
}

/// A random smooth, increasing, concave `f` on `[0, inf)` with `f(0) = 0`.
struct ConcaveFn {
    exp_terms: Vec<(f64, f64)>,
    log_term: (f64, f64),
    linear: f64,
    power: (f64, f64),
}

impl ConcaveFn {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(0..=3);
        let mut w = || if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..2.0) };
        let weights: Vec<f64> = (0..n + 3).map(|_| w()).collect();
        let exp_terms = (0..n)
            .map(|i| (weights[i], rng.gen_range(0.05..5.0)))
            .collect();
        let mut f = Self {
            exp_terms,
            log_term: (weights[n], rng.gen_range(0.1..10.0)),
            linear: weights[n + 1],
            power: (weights[n + 2], rng.gen_range(0.2..1.0)),
        };
        if f.eval(1.0) == 0.0 {
            f.linear = 1.0;
        }
        f
    }

    fn eval(&self, x: f64) -> f64 {
        let e: f64 = self
            .exp_terms
            .iter()
            .map(|&(a, b)| -a * (-b * x).exp_m1())
            .sum();
        e + self.log_term.0 * (self.log_term.1 * x).ln_1p()
            + self.linear * x
            + self.power.0 * x.powf(self.power.1)
    }
}

/// `min(a_0 y, a_i y + b_i)` with `b_i > 0`: concave, nonnegative,
/// vanishing at zero.
fn random_piecewise_linear(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let a0 = rng.gen_range(0.1..3.0);
    let lines: Vec<(f64, f64)> = (0..rng.gen_range(1..=5))
        .map(|_| (rng.gen_range(0.0..a0), rng.gen_range(0.01..5.0)))
        .collect();
    move |y| lines.iter().fold(a0 * y, |m, &(a, b)| m.min(a * y + b))
}

/// A nonnegative discrete law with positive variance.
fn random_law(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    loop {
        let n = rng.gen_range(2..=8);
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let v = if rng.gen_bool(0.2) { 0.0 } else { scale * rng.gen_range(0.0..1.0f64) };
                (v, rng.gen_range(0.01..1.0))
            })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms: Vec<(f64, f64)> = atoms.into_iter().map(|(v, p)| (v, p / total)).collect();
        let mean: f64 = atoms.iter().map(|&(v, p)| p * v).sum();
        let var: f64 = atoms.iter().map(|&(v, p)| p * (v - mean).powi(2)).sum();
        if var > 1e-12 * mean * mean && mean > 0.0 {
            return atoms;
        }
    }
}

fn expect(atoms: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    atoms.iter().map(|&(v, p)| p * f(v)).sum()
}

/// `x -> f(sqrt x)^2` has nonpositive second differences for random concave
/// increasing `f`.
pub fn concave_square_root_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome::new("squared-root-concavity");
    for _ in 0..cases {
        let f = ConcaveFn::random(&mut rng);
        let top = 10f64.powf(rng.gen_range(-2.0..3.0));
        let h = top / 200.0;
        let g = |x: f64| f.eval(x.sqrt()).powi(2);
        let mut worst = f64::NEG_INFINITY;
        let mut scale = 0.0f64;
        for k in 1..200 {
            let x = k as f64 * h;
            let d2 = g(x + h) - 2.0 * g(x) + g(x - h);
            worst = worst.max(d2);
            scale = scale.max(g(x + h));
        }
        out.record_excess(worst / scale.max(1e-300));
    }
    out
}

/// `E[g(Y)^2] / (E g(Y))^2 <= E[Y^2] / (E Y)^2` for concave `g >= 0`, `g(0) = 0`.
pub fn second_moment_ratio_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome::new("second-moment-ratio");
    for _ in 0..cases {
        let g = random_piecewise_linear(&mut rng);
        let y = random_law(&mut rng);
        let eg = expect(&y, &g);
        let lhs = expect(&y, |v| g(v).powi(2)) / (eg * eg);
        let ey = expect(&y, |v| v);
        let rhs = expect(&y, |v| v * v) / (ey * ey);
        out.record(lhs, rhs);
    }
    out
}

/// `E f(X)^4 / (E f(X)^2)^2 <= E X^4 / (E X^2)^2` for concave increasing `f`
/// with `f(0) = 0`.
pub fn fourth_moment_ratio_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome::new("fourth-moment-ratio");
    for _ in 0..cases {
        let f = ConcaveFn::random(&mut rng);
        let x = random_law(&mut rng);
        let f2 = expect(&x, |v| f.eval(v).powi(2));
        let lhs = expect(&x, |v| f.eval(v).powi(4)) / (f2 * f2);
        let x2 = expect(&x, |v| v * v);
        let rhs = expect(&x, |v| v.powi(4)) / (x2 * x2);
        out.record(lhs, rhs);
    }
    out
}

/// Worst deviations of the exact identities on one tree.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TreeIdentityReport {
    /// Total variation between the dynamic-programming law of each child's
    /// value under the parent's plus measure and the enumerated one.
    pub projection_tv: f64,
    /// `|E_{Q+} phi(X_v) - E_P phi(|X_v|) tanh(|X_v|/2)|`, relative to
    /// `max(1, |E_{Q+} phi|)`, for `phi` in `{x, x^3, f_theta}`.
    pub odd_function_gap: f64,
    /// `|Q+(xi) - P(xi)(1 + tanh(X_v/2))|` over all boundary configurations.
    pub density_gap: f64,
    /// Vertices where `m_v <= sum theta_w^2 m_w / (1 + kappa m_w)` fails.
    pub mean_inequality_violations: usize,
    /// Vertices where `s4_v <= 3 u_v^2` fails.
    pub fourth_moment_violations: usize,
    /// Largest `s4_v / u_v^2`.
    pub fourth_moment_ratio: f64,
}

impl TreeIdentityReport {
    pub fn holds(&self, tv_tol: f64, odd_tol: f64, density_tol: f64) -> bool {
        self.projection_tv <= tv_tol
            && self.odd_function_gap <= odd_tol
            && self.density_gap <= density_tol
            && self.mean_inequality_violations == 0
            && self.fourth_moment_violations == 0
    }
}

/// Memoized [`kappa_free`], keyed by the bit pattern of `theta`.
#[derive(Default)]
pub struct KappaCache(HashMap<u64, f64>);

impl KappaCache {
    pub fn get(&mut self, theta: f64) -> Result<f64> {
        if let Some(&k) = self.0.get(&theta.to_bits()) {
            return Ok(k);
        }
        let k = kappa_free(theta)?;
        self.0.insert(theta.to_bits(), k);
        Ok(k)
    }
}

fn child_values(table: &BoundaryTable, child: &BoundaryTable) -> Vec<f64> {
    let pos: HashMap<VertexId, usize> = table.leaves.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let bits: Vec<usize> = child.leaves.iter().map(|l| pos[l]).collect();
    (0..table.len())
        .map(|mask| {
            let sub = bits
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &b)| acc | ((mask >> b & 1) << j));
            child.llr[sub]
        })
        .collect()
}

/// Checks the exact plus-measure identities at every internal vertex by
/// comparing enumeration against the boundary-law dynamic program.
pub fn tree_identities(
    tree: &RootedTree,
    biases: &EdgeBiases,
    kappas: &mut KappaCache,
) -> Result<TreeIdentityReport> {
    let laws = BoundaryLaws::compute(tree, biases, 0, false)?;
    let report_moments = moments(tree, biases)?;
    let mut tables: Vec<Option<BoundaryTable>> = vec![None; tree.len()];
    for v in tree.bottom_up() {
        if !tree.is_leaf(v) {
            tables[v] = Some(enumerate_boundary_law(tree, biases, v)?);
        }
    }
    let mut r = TreeIdentityReport::default();
    for v in 0..tree.len() {
        let Some(table) = tables[v].as_ref() else {
            continue;
        };
        let own = AtomicDistribution::new(
            table.llr.iter().copied().zip(table.q_plus.iter().copied()).collect(),
            LawTag::QPlus,
        )?;
        r.projection_tv = r
            .projection_tv
            .max(own.tv_distance(&laws.law(v, LawKind::QPlus)?, ATOM_VALUE_TOL));
        for &w in tree.children(v) {
            let values = match tables[w].as_ref() {
                Some(child) => child_values(table, child),
                None => {
                    let bit = table.leaves.iter().position(|&l| l == w).expect("leaf of T(v)");
                    (0..table.len())
                        .map(|m| if m >> bit & 1 == 1 { f64::INFINITY } else { f64::NEG_INFINITY })
                        .collect()
                }
            };
            let enumerated = AtomicDistribution::new(
                values.into_iter().zip(table.q_plus.iter().copied()).collect(),
                LawTag::QPlus,
            )?;
            let dp = laws.projected_child_law(w, biases.theta(w))?;
            r.projection_tv = r.projection_tv.max(enumerated.tv_distance(&dp, ATOM_VALUE_TOL));
        }

        let dp_law = laws.law(v, LawKind::QPlus)?;
        let e = IsingEdge::new(biases.theta(tree.children(v)[0]))?;
        let phis: [&dyn Fn(f64) -> f64; 3] = [&|x| x, &|x| x * x * x, &|x| e.f(x)];
        for phi in phis {
            let lhs = dp_law.expect(phi);
            let rhs: f64 = (0..table.len())
                .map(|m| {
                    let a = table.llr[m].abs();
                    table.free(m) * phi(a) * (0.5 * a).tanh()
                })
                .sum();
            r.odd_function_gap = r.odd_function_gap.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        for m in 0..table.len() {
            let implied = table.free(m) * (1.0 + (0.5 * table.llr[m]).tanh());
            r.density_gap = r.density_gap.max((table.q_plus[m] - implied).abs());
        }

        let kids = tree.children(v);
        let mut kappa = f64::INFINITY;
        for &w in kids {
            kappa = kappa.min(kappas.get(biases.theta(w))?);
        }
        let bound: f64 = kids
            .iter()
            .map(|&w| {
                let t2 = biases.theta(w).powi(2);
                let m = report_moments.m[w];
                if m.is_infinite() {
                    t2 / kappa
                } else {
                    t2 * m / (1.0 + kappa * m)
                }
            })
            .sum();
        if report_moments.m[v] > bound * (1.0 + 1e-12) {
            r.mean_inequality_violations += 1;
        }
        let (u, s4) = (report_moments.u[v], report_moments.s4[v]);
        r.fourth_moment_ratio = r.fourth_moment_ratio.max(s4 / (u * u));
        if s4 > 3.0 * u * u * (1.0 + SUITE_TOL) {
            r.fourth_moment_violations += 1;
        }
    }
    Ok(r)
}

/// Changes caused by subdividing weak edges: `(|delta P+(root = +1)|,
/// TV between free-boundary laws of X_o)`.
pub fn subdivision_discrepancy(tree: &RootedTree, beta: f64, epsilon: f64) -> Result<(f64, f64)> {
    let sub = tree.subdivide(beta, epsilon)?;
    let (b0, b1) = (EdgeBiases::new(tree, beta)?, EdgeBiases::new(&sub, beta)?);
    let prob = |x: f64| 1.0 / (1.0 + (-x).exp());
    let marginal = (prob(plus_llr(tree, &b0)?) - prob(plus_llr(&sub, &b1)?)).abs();
    let p0 = boundary_law_dp(tree, &b0, LawKind::Free, 0)?;
    let p1 = boundary_law_dp(&sub, &b1, LawKind::Free, 0)?;
    Ok((marginal, p0.tv_distance(&p1, ATOM_VALUE_TOL)))
}

/// Root plus-boundary marginal by enumeration, for cross-checks on small
/// trees.
pub fn enumerated_plus_marginal(tree: &RootedTree, biases: &EdgeBiases) -> Result<f64> {
    Ok(enumerate_root_marginal(tree, biases, &Boundary::Plus)?.prob_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_tree;

    #[test]
    fn randomized_suites_hold() {
        for s in [
            concave_square_root_suite(100, 1),
            second_moment_ratio_suite(300, 2),
            fourth_moment_ratio_suite(300, 3),
        ] {
            assert!(s.passed(), "{s:?}");
            assert!(s.cases > 0);
        }
    }

    #[test]
    fn identities_on_a_small_tree() {
        let t = parse_tree(
            "root o\nedge o a theta=0.3\nedge o b theta=0.6\nedge a c theta=0.7\nedge a d theta=0.2\nedge b e theta=0.5\n",
        )
        .unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let r = tree_identities(&t, &b, &mut KappaCache::default()).unwrap();
        assert!(r.holds(1e-10, 1e-10, 1e-12), "{r:?}");
    }

    #[test]
    fn subdivision_is_invisible() {
        let t = parse_tree("root o\nedge o a theta=0.2\nedge o b theta=0.6\nedge a c theta=0.1\n").unwrap();
        let (dm, tv) = subdivision_discrepancy(&t, 1.0, 0.5).unwrap();
        assert!(dm < 1e-12 && tv < 1e-12, "{dm} {tv}");
    }
}

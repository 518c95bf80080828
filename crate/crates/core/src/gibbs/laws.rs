//! Exact laws of the log-likelihood ratio `X_v` by dynamic programming.
//!
//! Under `Q_v^+` the child subtrees are independent and the boundary of
//! `T(w)` is distributed as `(1+theta_w)/2 Q_w^+ + (1-theta_w)/2 Q_w^-`;
//! under i.i.d. uniform boundary spins the child values are independent and
//! symmetric. Either way `X_v = sum_w f_w(X_w)` turns into a convolution of
//! pushed-forward child laws.

use serde::Serialize;
use serde_json::json;

use super::atomic::{AtomicDistribution, LawTag};
use crate::error::{Error, Result};
use crate::recursion::IsingEdge;
use crate::tree::{EdgeBiases, RootedTree, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    QPlus,
    QMinus,
    SpinGlass,
    Free,
}

/// Per-vertex laws of `X_v` for every vertex of a subtree.
#[derive(Clone, Debug)]
pub struct BoundaryLaws {
    /// `Q_v^+` laws (or spin-glass laws), indexed by vertex; `None` outside
    /// the computed subtree.
    laws: Vec<Option<AtomicDistribution>>,
    spin_glass: bool,
}

impl BoundaryLaws {
    /// Computes `Q^+` laws (`spin_glass = false`) or spin-glass laws on
    /// `T(root)`.
    pub fn compute(
        tree: &RootedTree,
        biases: &EdgeBiases,
        root: VertexId,
        spin_glass: bool,
    ) -> Result<Self> {
        if root >= tree.len() {
            return Err(Error::UnknownVertex(root.to_string()));
        }
        let tag = if spin_glass { LawTag::SpinGlass } else { LawTag::QPlus };
        let mut laws: Vec<Option<AtomicDistribution>> = vec![None; tree.len()];
        let order = tree.descendants(root);
        for &v in order.iter().rev() {
            let kids = tree.children(v);
            if kids.is_empty() {
                let leaf = if spin_glass {
                    AtomicDistribution::new(
                        vec![(f64::NEG_INFINITY, 0.5), (f64::INFINITY, 0.5)],
                        tag,
                    )?
                } else {
                    AtomicDistribution::point(f64::INFINITY, tag)
                };
                laws[v] = Some(leaf);
                continue;
            }
            let mut acc = AtomicDistribution::point(0.0, tag);
            for &w in kids {
                let edge = IsingEdge::new(biases.theta(w))?;
                let child = laws[w].as_ref().expect("children first");
                let source = if spin_glass {
                    child.clone()
                } else {
                    let t = edge.theta();
                    AtomicDistribution::mix(
                        child,
                        0.5 * (1.0 + t),
                        &child.reflect(),
                        0.5 * (1.0 - t),
                        tag,
                    )
                };
                let pushed = source.map(|x| edge.f(x));
                acc = acc.convolve(&pushed, v)?;
            }
            if spin_glass {
                acc = acc.symmetrize();
            }
            laws[v] = Some(acc.with_tag(tag));
        }
        Ok(Self { laws, spin_glass })
    }

    /// The law of `X_v` of the requested kind. `kind` must match how the
    /// laws were computed (`SpinGlass` for spin-glass laws, anything else
    /// for `Q^+` laws).
    pub fn law(&self, v: VertexId, kind: LawKind) -> Result<AtomicDistribution> {
        let base = self
            .laws
            .get(v)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        match (kind, self.spin_glass) {
            (LawKind::SpinGlass, true) => Ok(base.clone()),
            (LawKind::QPlus, false) => Ok(base.clone()),
            (LawKind::QMinus, false) => Ok(base.reflect()),
            (LawKind::Free, false) => Ok(AtomicDistribution::mix(
                base,
                0.5,
                &base.reflect(),
                0.5,
                LawTag::Free,
            )),
            _ => Err(Error::InvalidParameter(
                "law kind does not match the computed laws".into(),
            )),
        }
    }

    /// The law of `X_w` under the projection of `Q_parent(w)^+` onto the
    /// boundary of `T(w)`.
    pub fn projected_child_law(&self, w: VertexId, theta: f64) -> Result<AtomicDistribution> {
        let q = self.law(w, LawKind::QPlus)?;
        Ok(AtomicDistribution::mix(
            &q,
            0.5 * (1.0 + theta),
            &q.reflect(),
            0.5 * (1.0 - theta),
            LawTag::QPlus,
        ))
    }
}

/// The law of `X_at` under `kind`, computed on `T(at)` only.
pub fn boundary_law_dp(
    tree: &RootedTree,
    biases: &EdgeBiases,
    kind: LawKind,
    at: VertexId,
) -> Result<AtomicDistribution> {
    let laws = BoundaryLaws::compute(tree, biases, at, kind == LawKind::SpinGlass)?;
    laws.law(at, kind)
}

/// `m_v = E_{Q+} X_v`, `u_v = E_SG X_v^2`, `s4_v = E_SG X_v^4` at every
/// vertex; leaves carry `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub s4: Vec<f64>,
}

impl MomentReport {
    pub fn to_json(&self, tree: &RootedTree) -> serde_json::Value {
        let num = |x: f64| if x.is_finite() { json!(x) } else { json!("inf") };
        json!((0..tree.len())
            .map(|v| json!({
                "vertex": tree.label(v),
                "m": num(self.m[v]),
                "u": num(self.u[v]),
                "s4": num(self.s4[v]),
            }))
            .collect::<Vec<_>>())
    }
}

/// Tolerance for `m_v = sum_w theta_w E_{Q_w^+} f_w(X_w)`.
const MEAN_CHAIN_TOL: f64 = 1e-10;

pub fn moments(tree: &RootedTree, biases: &EdgeBiases) -> Result<MomentReport> {
    let plus = BoundaryLaws::compute(tree, biases, 0, false)?;
    let sg = BoundaryLaws::compute(tree, biases, 0, true)?;
    let n = tree.len();
    let (mut m, mut u, mut s4) = (vec![f64::INFINITY; n], vec![f64::INFINITY; n], vec![f64::INFINITY; n]);
    for v in 0..n {
        if tree.is_leaf(v) {
            continue;
        }
        m[v] = plus.law(v, LawKind::QPlus)?.expect(|x| x);
        let s = sg.law(v, LawKind::SpinGlass)?;
        u[v] = s.expect(|x| x * x);
        s4[v] = s.expect(|x| x * x * x * x);

        let chain: f64 = tree
            .children(v)
            .iter()
            .map(|&w| {
                let e = IsingEdge::unchecked(biases.theta(w));
                let q = plus.law(w, LawKind::QPlus).expect("computed");
                e.theta() * q.expect(|x| e.f(x))
            })
            .sum();
        if (chain - m[v]).abs() > MEAN_CHAIN_TOL * m[v].abs().max(1.0) {
            return Err(Error::Verification(format!(
                "mean chain identity fails at `{}`: m = {} but children give {chain}",
                tree.label(v),
                m[v]
            )));
        }
    }
    Ok(MomentReport { m, u, s4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_tree;

    fn star(d: usize, theta: f64) -> (RootedTree, EdgeBiases) {
        let mut text = String::from("root o\n");
        for i in 0..d {
            text.push_str(&format!("edge o l{i} theta={theta}\n"));
        }
        let t = parse_tree(&text).unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        (t, b)
    }

    #[test]
    fn depth_one_laws() {
        let l3 = 3f64.ln();
        let (t, b) = star(1, 0.5);
        let q = boundary_law_dp(&t, &b, LawKind::QPlus, 0).unwrap();
        assert_eq!(q.len(), 2);
        assert!((q.atoms()[0].0 + l3).abs() < 1e-15 && (q.atoms()[0].1 - 0.25).abs() < 1e-15);
        assert!((q.atoms()[1].0 - l3).abs() < 1e-15 && (q.atoms()[1].1 - 0.75).abs() < 1e-15);

        let (t, b) = star(2, 0.5);
        let sg = boundary_law_dp(&t, &b, LawKind::SpinGlass, 0).unwrap();
        let want = [(-2.0 * l3, 0.25), (0.0, 0.5), (2.0 * l3, 0.25)];
        for (a, w) in sg.atoms().iter().zip(want) {
            assert!((a.0 - w.0).abs() < 1e-14 && (a.1 - w.1).abs() < 1e-15);
        }
    }

    #[test]
    fn depth_one_moments() {
        let l3 = 3f64.ln();
        let (t, b) = star(1, 0.5);
        let r = moments(&t, &b).unwrap();
        assert!((r.m[0] - l3 / 2.0).abs() < 1e-15);
        let (t, b) = star(2, 0.5);
        let r = moments(&t, &b).unwrap();
        assert!((r.u[0] - 2.0 * l3 * l3).abs() < 1e-14);
        for d in 1..=6 {
            let (t, b) = star(d, 0.5);
            let r = moments(&t, &b).unwrap();
            let ratio = r.s4[0] / (r.u[0] * r.u[0]);
            assert!((ratio - (3.0 - 2.0 / d as f64)).abs() < 1e-13, "d={d}");
        }
    }

    #[test]
    fn free_law_is_symmetric() {
        let t = parse_tree(
            "root o\nedge o a theta=0.3\nedge o b theta=0.6\nedge a c theta=0.7\nedge a d theta=0.2\n",
        )
        .unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let p = boundary_law_dp(&t, &b, LawKind::Free, 0).unwrap();
        assert!(p.tv_distance(&p.reflect(), 1e-12) < 1e-15);
        assert!((p.total_mass() - 1.0).abs() < 1e-15);
        let sg = boundary_law_dp(&t, &b, LawKind::SpinGlass, 0).unwrap();
        let atoms = sg.atoms();
        for i in 0..atoms.len() {
            assert_eq!(atoms[i].0, -atoms[atoms.len() - 1 - i].0);
        }
    }
}

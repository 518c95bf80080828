use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Relative width within which atoms are merged.
pub const MERGE_REL_TOL: f64 = 1e-12;
/// Hard limit on atoms per law.
pub const ATOM_BUDGET: usize = 2_000_000;

/// Which measure an atomic law describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LawTag {
    /// Free boundary law (root spin uniform).
    #[serde(rename = "P")]
    Free,
    #[serde(rename = "Q+")]
    QPlus,
    #[serde(rename = "Q-")]
    QMinus,
    /// I.i.d. uniform boundary spins.
    #[serde(rename = "SG")]
    SpinGlass,
}

impl LawTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawTag::Free => "P",
            LawTag::QPlus => "Q+",
            LawTag::QMinus => "Q-",
            LawTag::SpinGlass => "SG",
        }
    }

    fn reflected(&self) -> Self {
        match self {
            LawTag::QPlus => LawTag::QMinus,
            LawTag::QMinus => LawTag::QPlus,
            t => *t,
        }
    }
}

/// A finitely supported law on the extended reals.
///
/// After [`canonicalize`](Self::canonicalize) values are strictly increasing
/// and no two atoms lie within [`MERGE_REL_TOL`] of each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicDistribution {
    atoms: Vec<(f64, f64)>,
    tag: LawTag,
}

fn close(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    scale.is_finite() && (a - b).abs() <= MERGE_REL_TOL * scale
}

impl AtomicDistribution {
    pub fn new(atoms: Vec<(f64, f64)>, tag: LawTag) -> Result<Self> {
        if atoms.iter().any(|&(v, p)| v.is_nan() || !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "atoms need non-NaN values and nonnegative probabilities".into(),
            ));
        }
        let mut d = Self { atoms, tag };
        d.canonicalize();
        Ok(d)
    }

    pub fn point(value: f64, tag: LawTag) -> Self {
        Self {
            atoms: vec![(value, 1.0)],
            tag,
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn tag(&self) -> LawTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: LawTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Sorts, merges near-equal values (probability-weighted mean value),
    /// and drops zero-probability atoms.
    pub fn canonicalize(&mut self) {
        self.atoms.retain(|a| a.1 > 0.0);
        self.atoms
            .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN values"));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.atoms.len());
        // cluster anchor, weighted value sum, probability
        let mut cur: Option<(f64, f64, f64)> = None;
        for &(v, p) in &self.atoms {
            match cur {
                Some((anchor, vs, ps)) if close(anchor, v) => {
                    let vs = if v.is_finite() { vs + v * p } else { vs };
                    cur = Some((anchor, vs, ps + p));
                }
                _ => {
                    if let Some(c) = cur.take() {
                        out.push(finish(c));
                    }
                    cur = Some((v, if v.is_finite() { v * p } else { 0.0 }, p));
                }
            }
        }
        if let Some(c) = cur {
            out.push(finish(c));
        }
        self.atoms = out;

        fn finish((anchor, vs, ps): (f64, f64, f64)) -> (f64, f64) {
            if anchor.is_finite() {
                (vs / ps, ps)
            } else {
                (anchor, ps)
            }
        }
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Self {
        Self {
            atoms: self.atoms.iter().rev().map(|&(v, p)| (-v, p)).collect(),
            tag: self.tag.reflected(),
        }
    }

    /// `wa * a + wb * b`.
    pub fn mix(a: &Self, wa: f64, b: &Self, wb: f64, tag: LawTag) -> Self {
        let atoms = a
            .atoms
            .iter()
            .map(|&(v, p)| (v, wa * p))
            .chain(b.atoms.iter().map(|&(v, p)| (v, wb * p)))
            .collect();
        let mut d = Self { atoms, tag };
        d.canonicalize();
        d
    }

    /// Law of `f(X)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut d = Self {
            atoms: self.atoms.iter().map(|&(v, p)| (f(v), p)).collect(),
            tag: self.tag,
        };
        d.canonicalize();
        d
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self, vertex: usize) -> Result<Self> {
        let raw = self.len().saturating_mul(other.len());
        if raw > 4 * ATOM_BUDGET {
            return Err(Error::AtomBudget {
                vertex,
                atoms: raw,
                limit: ATOM_BUDGET,
            });
        }
        let mut atoms = Vec::with_capacity(raw);
        for &(a, p) in &self.atoms {
            for &(b, q) in &other.atoms {
                atoms.push((a + b, p * q));
            }
        }
        let mut d = Self {
            atoms,
            tag: self.tag,
        };
        d.canonicalize();
        if d.len() > ATOM_BUDGET {
            return Err(Error::AtomBudget {
                vertex,
                atoms: d.len(),
                limit: ATOM_BUDGET,
            });
        }
        Ok(d)
    }

    /// Replaces the law by `(L + reflect(L)) / 2` with atoms paired exactly.
    pub fn symmetrize(&self) -> Self {
        let mut d = Self::mix(self, 0.5, &self.reflect(), 0.5, self.tag);
        let n = d.atoms.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let v = 0.5 * (d.atoms[j].0 - d.atoms[i].0);
            let p = 0.5 * (d.atoms[i].1 + d.atoms[j].1);
            d.atoms[i] = (-v, p);
            d.atoms[j] = (v, p);
        }
        if n % 2 == 1 {
            d.atoms[n / 2].0 = 0.0;
        }
        d
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * f(v)).sum()
    }

    /// Total-variation distance after pooling the atoms of both laws into
    /// clusters of values that agree within `value_tol` (absolute below 1,
    /// relative above).
    pub fn tv_distance(&self, other: &Self, value_tol: f64) -> f64 {
        let mut pooled: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .copied()
            .chain(other.atoms.iter().map(|&(v, p)| (v, -p)))
            .collect();
        pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN values"));
        let same = |x: f64, y: f64| x == y || (x - y).abs() <= value_tol * x.abs().max(y.abs()).max(1.0);
        let mut diff = 0.0;
        let mut i = 0;
        while i < pooled.len() {
            let mut j = i;
            let mut mass = 0.0;
            while j < pooled.len() && same(pooled[j].0, pooled[i].0) {
                mass += pooled[j].1;
                j += 1;
            }
            diff += f64::abs(mass);
            i = j;
        }
        0.5 * diff
    }

    /// `{"law": tag, "atoms": [[value, prob], ..]}` with infinities as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .map(|&(v, p)| {
                let v = if v.is_finite() {
                    json!(v)
                } else if v > 0.0 {
                    json!("inf")
                } else {
                    json!("-inf")
                };
                json!([v, p])
            })
            .collect();
        json!({ "law": self.tag.as_str(), "atoms": atoms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_merges_and_sorts() {
        let d = AtomicDistribution::new(
            vec![(1.0, 0.25), (-1.0, 0.25), (1.0 + 1e-14, 0.25), (0.0, 0.25), (5.0, 0.0)],
            LawTag::Free,
        )
        .unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.atoms()[0], (-1.0, 0.25));
        assert!((d.atoms()[2].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convolution_of_two_signed_atoms() {
        let l = 3f64.ln();
        let half = AtomicDistribution::new(vec![(l, 0.5), (-l, 0.5)], LawTag::SpinGlass).unwrap();
        let sum = half.convolve(&half, 0).unwrap();
        assert_eq!(sum.len(), 3);
        assert_eq!(sum.atoms()[1], (0.0, 0.5));
        assert!((sum.atoms()[2].0 - 2.0 * l).abs() < 1e-15);
        assert!((sum.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reflection_and_symmetry() {
        let d = AtomicDistribution::new(vec![(1.0, 0.75), (-1.0, 0.25)], LawTag::QPlus).unwrap();
        let r = d.reflect();
        assert_eq!(r.tag(), LawTag::QMinus);
        assert_eq!(r.atoms(), &[(-1.0, 0.75), (1.0, 0.25)]);
        let s = d.symmetrize();
        assert_eq!(s.atoms(), &[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(d.tv_distance(&r, 1e-12) - 0.5 < 1e-15);
    }

    #[test]
    fn infinite_atoms_survive() {
        let d = AtomicDistribution::new(
            vec![(f64::INFINITY, 0.5), (f64::INFINITY, 0.25), (f64::NEG_INFINITY, 0.25)],
            LawTag::QPlus,
        )
        .unwrap();
        assert_eq!(d.atoms(), &[(f64::NEG_INFINITY, 0.25), (f64::INFINITY, 0.75)]);
        assert_eq!(d.to_json()["atoms"][1][0], "inf");
    }
}

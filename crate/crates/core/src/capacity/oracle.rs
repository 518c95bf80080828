//! Direct minimization of the flow potential over unit-mass flows.
//!
//! Flows are parameterized by the mass `nu_i` they deliver to each leaf, so
//! unit flows form the probability simplex and every ray potential is a
//! convex function of `nu` when `s >= 1`. The minimum `t*` of the largest ray
//! potential gives `cap_p = t*^(-1/s)` by homogeneity.
//!
//! With strictly positive resistances every ray carries flow at the optimum
//! and all ray potentials coincide, so Newton's method is first run on
//! `V_y(nu) = t, sum(nu) = 1`. The point is accepted only if the KKT
//! multipliers solving the transposed system are nonnegative; otherwise a
//! log-barrier interior-point method solves the epigraph problem.

use nalgebra::{DMatrix, DVector};

use super::{exponent_s, CapacityResult, Flow, Method, Resistances};
use crate::error::{Error, Result};
use crate::tree::{RootedTree, VertexId};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-4;

struct Layout<'a> {
    tree: &'a RootedTree,
    leaves: Vec<VertexId>,
    leaf_slot: Vec<usize>,
    paths: Vec<Vec<VertexId>>,
    common: Vec<Vec<usize>>,
    rs: Vec<f64>,
    s: f64,
}

struct Eval {
    mu: Vec<f64>,
    pot: Vec<f64>,
    // grad[y][k]: sum over the first k edges of ray y of s R^s mu^(s-1)
    grad: Vec<Vec<f64>>,
}

impl<'a> Layout<'a> {
    fn new(tree: &'a RootedTree, res: &Resistances, s: f64) -> Self {
        let leaves: Vec<VertexId> = tree.leaves().collect();
        let mut leaf_slot = vec![usize::MAX; tree.len()];
        for (i, &v) in leaves.iter().enumerate() {
            leaf_slot[v] = i;
        }
        let paths: Vec<Vec<VertexId>> = leaves.iter().map(|&v| tree.path_to(v)).collect();
        let common = paths
            .iter()
            .map(|a| {
                paths
                    .iter()
                    .map(|b| a.iter().zip(b).take_while(|(x, y)| x == y).count())
                    .collect()
            })
            .collect();
        let rs = res.values().iter().map(|r| r.powf(s)).collect();
        Self {
            tree,
            leaves,
            leaf_slot,
            paths,
            common,
            rs,
            s,
        }
    }

    fn n(&self) -> usize {
        self.leaves.len()
    }

    fn eval(&self, nu: &[f64]) -> Eval {
        let tree = self.tree;
        let mut mu = vec![0.0; tree.len()];
        for v in tree.bottom_up() {
            if v == 0 {
                break;
            }
            mu[v] = if tree.is_leaf(v) {
                nu[self.leaf_slot[v]]
            } else {
                tree.children(v).iter().map(|&w| mu[w]).sum()
            };
        }
        let s = self.s;
        let mut pot = Vec::with_capacity(self.n());
        let mut grad = Vec::with_capacity(self.n());
        for path in &self.paths {
            let mut acc = 0.0;
            let mut g = Vec::with_capacity(path.len() + 1);
            g.push(0.0);
            for &v in path {
                acc += self.rs[v] * mu[v].powf(s);
                let prev = *g.last().unwrap();
                g.push(prev + s * self.rs[v] * mu[v].powf(s - 1.0));
            }
            pot.push(acc);
            grad.push(g);
        }
        Eval { mu, pot, grad }
    }

    fn hessian_prefix(&self, mu: &[f64]) -> Vec<Vec<f64>> {
        let s = self.s;
        self.paths
            .iter()
            .map(|path| {
                let mut h = vec![0.0];
                for &v in path {
                    let prev = *h.last().unwrap();
                    let term = if s == 1.0 {
                        0.0
                    } else {
                        s * (s - 1.0) * self.rs[v] * mu[v].powf(s - 2.0)
                    };
                    h.push(prev + term);
                }
                h
            })
            .collect()
    }

    fn jacobian(&self, e: &Eval, y: usize, i: usize) -> f64 {
        e.grad[y][self.common[y][i]]
    }

    fn equal_split(&self) -> Vec<f64> {
        let tree = self.tree;
        let mut share = vec![0.0; tree.len()];
        share[0] = 1.0;
        for v in 0..tree.len() {
            let kids = tree.children(v);
            for &w in kids {
                share[w] = share[v] / kids.len() as f64;
            }
        }
        self.leaves.iter().map(|&v| share[v]).collect()
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Newton on the equal-potential system; `Some((nu, t))` when the KKT
/// certificate confirms optimality.
fn equalize(layout: &Layout) -> Option<(Vec<f64>, f64)> {
    let n = layout.n();
    let mut nu = layout.equal_split();
    let mut e = layout.eval(&nu);
    let mut t = max_of(&e.pot);
    let residual = |e: &Eval, nu: &[f64], t: f64| -> (Vec<f64>, f64) {
        let mut f: Vec<f64> = e.pot.iter().map(|v| v - t).collect();
        f.push(nu.iter().sum::<f64>() - 1.0);
        let m = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (f, m)
    };
    let build = |e: &Eval| {
        let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
        for y in 0..n {
            for i in 0..n {
                m[(y, i)] = layout.jacobian(e, y, i);
            }
            m[(y, n)] = -1.0;
        }
        for i in 0..n {
            m[(n, i)] = 1.0;
        }
        m
    };

    let mut converged = false;
    for _ in 0..100 {
        let (f, merit) = residual(&e, &nu, t);
        if merit <= 1e-13 * t.abs().max(1e-300) {
            converged = true;
            break;
        }
        let m = build(&e);
        let d = m.lu().solve(&DVector::from_iterator(n + 1, f.iter().map(|x| -x)))?;
        let mut alpha = 1.0;
        while (0..n).any(|i| nu[i] + alpha * d[i] <= 0.0) {
            alpha *= 0.5;
            if alpha < 1e-12 {
                return None;
            }
        }
        loop {
            let trial: Vec<f64> = (0..n).map(|i| nu[i] + alpha * d[i]).collect();
            let t_trial = t + alpha * d[n];
            let e_trial = layout.eval(&trial);
            let (_, m_trial) = residual(&e_trial, &trial, t_trial);
            if m_trial <= (1.0 - 1e-4 * alpha) * merit || m_trial <= 1e-15 * t_trial.abs() {
                nu = trial;
                t = t_trial;
                e = e_trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return None;
            }
        }
    }
    if !converged {
        return None;
    }

    let mt = build(&e).transpose();
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = -1.0;
    let z = mt.lu().solve(&rhs)?;
    let scale = (0..n).fold(0.0f64, |a, y| a.max(z[y].abs()));
    if (0..n).any(|y| z[y] < -1e-9 * scale) {
        return None;
    }
    Some((nu, max_of(&e.pot)))
}

/// Log-barrier interior-point solve of `min t` subject to `V_y(nu) <= t`,
/// `nu >= 0`, `sum(nu) = 1`.
fn barrier(layout: &Layout, rel_gap: f64) -> Result<(Vec<f64>, f64)> {
    let n = layout.n();
    let mut nu = layout.equal_split();
    let e0 = layout.eval(&nu);
    let scale = max_of(&e0.pot);
    let mut t = scale * 1.5;
    let constraints = 2 * n;
    let mut tau = 1.0 / scale;

    let objective = |nu: &[f64], t: f64, e: &Eval, tau: f64| -> Option<f64> {
        let mut val = tau * t;
        for &v in &e.pot {
            let g = t - v;
            if !(g > 0.0) {
                return None;
            }
            val -= g.ln();
        }
        for &x in nu {
            if !(x > 0.0) {
                return None;
            }
            val -= x.ln();
        }
        Some(val)
    };

    for _outer in 0..60 {
        for _inner in 0..200 {
            let e = layout.eval(&nu);
            let hp = layout.hessian_prefix(&e.mu);
            let mut grad = DVector::<f64>::zeros(n + 1);
            let mut h = DMatrix::<f64>::zeros(n + 2, n + 2);
            grad[n] = tau;
            for y in 0..n {
                let g = t - e.pot[y];
                grad[n] -= 1.0 / g;
                let w: Vec<f64> = (0..n).map(|i| -layout.jacobian(&e, y, i)).collect();
                for i in 0..n {
                    grad[i] -= w[i] / g;
                    for j in 0..n {
                        let k = layout.common[y][i].min(layout.common[y][j]);
                        h[(i, j)] += w[i] * w[j] / (g * g) + hp[y][k] / g;
                    }
                    h[(i, n)] += w[i] / (g * g);
                    h[(n, i)] += w[i] / (g * g);
                }
                h[(n, n)] += 1.0 / (g * g);
            }
            for i in 0..n {
                grad[i] -= 1.0 / nu[i];
                h[(i, i)] += 1.0 / (nu[i] * nu[i]);
                h[(i, n + 1)] = 1.0;
                h[(n + 1, i)] = 1.0;
            }
            let mut rhs = DVector::<f64>::zeros(n + 2);
            for i in 0..=n {
                rhs[i] = -grad[i];
            }
            let sol = h
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::OracleBudget("singular barrier system".into()))?;
            let d: Vec<f64> = (0..=n).map(|i| sol[i]).collect();
            let decrement: f64 = -(0..=n).map(|i| grad[i] * d[i]).sum::<f64>();
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let current = objective(&nu, t, &e, tau).expect("iterate is feasible");
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|i| nu[i] + alpha * d[i]).collect();
                let t_trial = t + alpha * d[n];
                if trial.iter().all(|&x| x > 0.0) {
                    let et = layout.eval(&trial);
                    if let Some(val) = objective(&trial, t_trial, &et, tau) {
                        if val <= current - 1e-4 * alpha * decrement {
                            nu = trial;
                            t = t_trial;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break;
                }
            }
            if alpha < 1e-14 {
                break;
            }
        }
        if constraints as f64 / tau <= rel_gap * scale {
            let e = layout.eval(&nu);
            return Ok((nu, max_of(&e.pot)));
        }
        tau *= 8.0;
    }
    Err(Error::OracleBudget(format!(
        "barrier gap {} above target",
        constraints as f64 / tau
    )))
}

/// Maximizes `|mu|` subject to `V(mu) <= 1` directly from the definition.
///
/// Requires `p >= 2` so that ray potentials are convex in the flow. The
/// result carries the optimizing flow, scaled to unit potential.
pub fn capacity_oracle(
    tree: &RootedTree,
    res: &Resistances,
    p: f64,
    tol: f64,
) -> Result<CapacityResult> {
    let s = exponent_s(p)?;
    if s < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "the oracle needs p >= 2 for convex ray potentials, got p={p}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let layout = Layout::new(tree, res, s);
    let (nu, t) = match equalize(&layout) {
        Some(found) => found,
        None => barrier(&layout, 1e-3 * tol.min(1e-2))?,
    };
    finish(&layout, tree, &nu, t, p, s, tol)
}

fn finish(
    layout: &Layout,
    tree: &RootedTree,
    nu: &[f64],
    t: f64,
    p: f64,
    s: f64,
    tol: f64,
) -> Result<CapacityResult> {
    let value = t.powf(-1.0 / s);
    let mut leaf_mass = vec![0.0; tree.len()];
    for (i, &v) in layout.leaves.iter().enumerate() {
        leaf_mass[v] = nu[i] * value;
    }
    let witness = Flow::from_leaf_masses(tree, &leaf_mass)?;
    if (witness.mass() - value).abs() > tol {
        return Err(Error::OracleBudget(format!(
            "witness mass {} differs from value {value}",
            witness.mass()
        )));
    }
    Ok(CapacityResult {
        value,
        p,
        s,
        witness: Some(witness),
        method: Method::Oracle,
    })
}

#[cfg(test)]
pub(crate) fn capacity_oracle_barrier(
    tree: &RootedTree,
    res: &Resistances,
    p: f64,
    tol: f64,
) -> Result<CapacityResult> {
    let s = exponent_s(p)?;
    let layout = Layout::new(tree, res, s);
    let (nu, t) = barrier(&layout, 1e-3 * tol)?;
    finish(&layout, tree, &nu, t, p, s, tol)
}

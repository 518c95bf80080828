//! Finite rooted trees carrying Ising edge parameters.
//!
//! Vertices are dense indices assigned in breadth-first order, so the root is
//! always `0`, parents precede children, and the vertices of depth at most `N`
//! form a prefix of the index range. Edge data lives on the child vertex.

mod format;
mod random;
mod shapes;
mod spherical;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{parse_generator_config, parse_tree, serialize_tree};
pub use random::random_tree;
pub use shapes::{unordered_shapes, Shape};
pub use spherical::{
    generate_spherical, DegreeRule, EdgeRule, SphericalConfig, SphericalProfile,
    DEFAULT_DEGREE_BUDGET, DEFAULT_VERTEX_BUDGET,
};

pub type VertexId = usize;

/// The parameter an edge was declared with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeParam {
    /// Interaction strength `J`; the bias is `tanh(beta * J)`.
    Coupling(f64),
    /// Bias `theta` given directly.
    Bias(f64),
}

impl EdgeParam {
    fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            EdgeParam::Coupling(j) if !(j.is_finite() && j > 0.0) => {
                Err(format!("J must be positive and finite, got {j}"))
            }
            EdgeParam::Bias(t) if !(t > 0.0 && t < 1.0) => {
                Err(format!("theta must lie in (0,1), got {t}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootedTree {
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    depth: Vec<usize>,
    edge: Vec<Option<EdgeParam>>,
    labels: Vec<String>,
    synthetic: Vec<bool>,
    index: HashMap<String, VertexId>,
}

/// Incremental construction by label; `build` validates and re-indexes in
/// breadth-first order with children kept in insertion order.
#[derive(Debug)]
pub struct TreeBuilder {
    root: String,
    // (parent, child, param, synthetic, line)
    edges: Vec<(String, String, EdgeParam, bool, usize)>,
}

impl TreeBuilder {
    pub fn new(root: impl Into<String>) -> Self {
        Self {
            root: root.into(),
            edges: Vec::new(),
        }
    }

    pub fn edge(
        &mut self,
        parent: impl Into<String>,
        child: impl Into<String>,
        param: EdgeParam,
    ) -> &mut Self {
        let line = self.edges.len() + 2;
        self.edge_at(parent, child, param, false, line)
    }

    pub(crate) fn edge_at(
        &mut self,
        parent: impl Into<String>,
        child: impl Into<String>,
        param: EdgeParam,
        synthetic: bool,
        line: usize,
    ) -> &mut Self {
        self.edges
            .push((parent.into(), child.into(), param, synthetic, line));
        self
    }

    pub fn build(&self) -> Result<RootedTree> {
        let mut parent_of: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut kids: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, (p, c, param, _, line)) in self.edges.iter().enumerate() {
            if let Err(msg) = param.validate() {
                return Err(match *param {
                    EdgeParam::Coupling(value) => {
                        Error::NonPositiveCoupling { line: *line, value }
                    }
                    EdgeParam::Bias(_) => Error::Parse {
                        line: *line,
                        message: msg,
                    },
                });
            }
            if c == &self.root || p == c {
                return Err(Error::Cycle {
                    line: *line,
                    parent: p.clone(),
                    child: c.clone(),
                });
            }
            if parent_of.insert(c.as_str(), (i, *line)).is_some() {
                return Err(Error::DuplicateChild {
                    line: *line,
                    label: c.clone(),
                });
            }
            kids.entry(p.as_str()).or_default().push(i);
        }

        let mut parent = vec![None];
        let mut children: Vec<Vec<VertexId>> = vec![Vec::new()];
        let mut depth = vec![0];
        let mut edge = vec![None];
        let mut labels = vec![self.root.clone()];
        let mut synthetic = vec![false];
        let mut queue = VecDeque::from([(self.root.as_str(), 0usize)]);
        while let Some((label, id)) = queue.pop_front() {
            for &ei in kids.get(label).map(Vec::as_slice).unwrap_or(&[]) {
                let (_, c, param, synth, _) = &self.edges[ei];
                let cid = labels.len();
                parent.push(Some(id));
                children.push(Vec::new());
                depth.push(depth[id] + 1);
                edge.push(Some(*param));
                labels.push(c.clone());
                synthetic.push(*synth);
                children[id].push(cid);
                queue.push_back((c.as_str(), cid));
            }
        }

        if labels.len() != self.edges.len() + 1 {
            // Every child has exactly one parent, so anything not reached is
            // either hanging off an unreachable vertex or sits on a cycle.
            let reached: std::collections::HashSet<&str> =
                labels.iter().map(String::as_str).collect();
            let (_, c, _, _, line) = self
                .edges
                .iter()
                .find(|e| !reached.contains(e.1.as_str()))
                .expect("unreached edge exists");
            let mut seen = std::collections::HashSet::new();
            let mut cur = c.as_str();
            loop {
                if !seen.insert(cur) {
                    let (ei, line) = parent_of[cur];
                    let (p, c, ..) = &self.edges[ei];
                    return Err(Error::Cycle {
                        line,
                        parent: p.clone(),
                        child: c.clone(),
                    });
                }
                match parent_of.get(cur) {
                    Some(&(ei, _)) => cur = self.edges[ei].0.as_str(),
                    None => {
                        return Err(Error::Unreachable {
                            line: *line,
                            label: cur.to_string(),
                        })
                    }
                }
            }
        }
        if children[0].is_empty() {
            return Err(Error::DegenerateRoot);
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(RootedTree {
            parent,
            children,
            depth,
            edge,
            labels,
            synthetic,
            index,
        })
    }
}

impl RootedTree {
    pub fn root(&self) -> VertexId {
        0
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.len() - 1
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v]
    }

    /// Largest vertex depth.
    pub fn height(&self) -> usize {
        self.depth.last().copied().unwrap_or(0)
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        v != 0 && self.children[v].is_empty()
    }

    /// Leaves other than the root, in index order. These form the boundary.
    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        (1..self.len()).filter(move |&v| self.children[v].is_empty())
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn is_synthetic(&self, v: VertexId) -> bool {
        self.synthetic[v]
    }

    pub fn find(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    /// Parameter of the edge from `parent(v)` to `v`; `None` at the root.
    pub fn edge_param(&self, v: VertexId) -> Option<EdgeParam> {
        self.edge[v]
    }

    /// Vertices in an order where every child precedes its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = VertexId> {
        (0..self.len()).rev()
    }

    /// Vertices `w` with `v <= w`, in breadth-first order starting at `v`.
    pub fn descendants(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }

    /// Path from the root's first edge down to `v` (the root itself excluded).
    pub fn path_to(&self, v: VertexId) -> Vec<VertexId> {
        let mut path = Vec::with_capacity(self.depth[v]);
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(cur);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Interaction strengths outside `[j_min, j_max]`, as `(vertex, J)`.
    /// Edges declared by bias are skipped.
    pub fn coupling_bound_violations(&self, j_min: f64, j_max: f64) -> Vec<(VertexId, f64)> {
        (1..self.len())
            .filter_map(|v| match self.edge[v] {
                Some(EdgeParam::Coupling(j)) if j < j_min || j > j_max => Some((v, j)),
                _ => None,
            })
            .collect()
    }

    /// True when every vertex of a level has the same number of children and
    /// all leaves sit at the bottom level.
    pub fn is_spherically_symmetric(&self) -> bool {
        self.level_degrees().is_ok()
    }

    /// Per-level child counts `d_1, .., d_N` of a spherically symmetric tree.
    pub fn level_degrees(&self) -> Result<Vec<usize>> {
        let height = self.height();
        let mut degrees: Vec<Option<usize>> = vec![None; height];
        for v in 0..self.len() {
            let d = self.depth[v];
            if d == height {
                continue;
            }
            let k = self.children[v].len();
            match degrees[d] {
                None => degrees[d] = Some(k),
                Some(prev) if prev != k => return Err(Error::NotSpherical(d)),
                _ => {}
            }
            if k == 0 {
                return Err(Error::NotSpherical(d));
            }
        }
        Ok(degrees.into_iter().map(|d| d.unwrap_or(0)).collect())
    }

    /// The induced subtree on vertices of depth at most `n`.
    pub fn truncate(&self, n: usize) -> RootedTree {
        let keep = self.depth.partition_point(|&d| d <= n);
        if keep == self.len() {
            return self.clone();
        }
        let children = self.children[..keep]
            .iter()
            .map(|c| c.iter().copied().filter(|&w| w < keep).collect())
            .collect();
        let labels = self.labels[..keep].to_vec();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        RootedTree {
            parent: self.parent[..keep].to_vec(),
            children,
            depth: self.depth[..keep].to_vec(),
            edge: self.edge[..keep].to_vec(),
            labels,
            synthetic: self.synthetic[..keep].to_vec(),
            index,
        }
    }

    /// `T(v)`: `v` and everything below it, re-rooted at `v`.
    pub fn subtree(&self, v: VertexId) -> Result<RootedTree> {
        if v >= self.len() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        if v == 0 {
            return Ok(self.clone());
        }
        let order = self.descendants(v);
        let mut new_id = HashMap::with_capacity(order.len());
        for (i, &w) in order.iter().enumerate() {
            new_id.insert(w, i);
        }
        let base = self.depth[v];
        let parent = order
            .iter()
            .map(|&w| if w == v { None } else { self.parent[w].map(|p| new_id[&p]) })
            .collect();
        let children = order
            .iter()
            .map(|&w| self.children[w].iter().map(|c| new_id[c]).collect())
            .collect();
        let depth = order.iter().map(|&w| self.depth[w] - base).collect();
        let edge = order
            .iter()
            .map(|&w| if w == v { None } else { self.edge[w] })
            .collect();
        let labels: Vec<String> = order.iter().map(|&w| self.labels[w].clone()).collect();
        let synthetic = order.iter().map(|&w| self.synthetic[w]).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(RootedTree {
            parent,
            children,
            depth,
            edge,
            labels,
            synthetic,
            index,
        })
    }

    /// Replaces every edge with bias below `epsilon` by `n` edges in series of
    /// bias `theta^(1/n)`, `n` the least integer with `theta^(1/n) >= epsilon`.
    /// New vertices are labelled `<child>~k` and flagged synthetic.
    pub fn subdivide(&self, beta: f64, epsilon: f64) -> Result<RootedTree> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        let biases = EdgeBiases::new(self, beta)?;
        let mut builder = TreeBuilder::new(self.labels[0].clone());
        let mut line = 2;
        for w in 1..self.len() {
            let p = self.parent[w].expect("non-root");
            let theta = biases.theta(w);
            let n = subdivision_count(theta, epsilon);
            if n <= 1 {
                let param = self.edge[w].expect("non-root");
                builder.edge_at(&self.labels[p], &self.labels[w], param, self.synthetic[w], line);
                line += 1;
                continue;
            }
            let piece = (theta.ln() / n as f64).exp();
            let mut prev = self.labels[p].clone();
            for k in 1..n {
                let label = format!("{}~{}", self.labels[w], k);
                builder.edge_at(&prev, &label, EdgeParam::Bias(piece), true, line);
                line += 1;
                prev = label;
            }
            builder.edge_at(&prev, &self.labels[w], EdgeParam::Bias(piece), self.synthetic[w], line);
            line += 1;
        }
        builder.build()
    }
}

/// Number of series edges replacing an edge of bias `theta` (1 when no
/// subdivision is needed).
pub fn subdivision_count(theta: f64, epsilon: f64) -> usize {
    if theta >= epsilon {
        return 1;
    }
    let ratio = theta.ln() / epsilon.ln();
    let mut n = (ratio - 1e-12).ceil().max(1.0) as usize;
    while (theta.ln() / n as f64).exp() < epsilon * (1.0 - 1e-12) {
        n += 1;
    }
    n
}

/// Per-edge biases `theta_v = tanh(beta J_v)` at a fixed inverse temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBiases {
    beta: f64,
    theta: Vec<f64>,
    beta_j: Vec<f64>,
}

impl EdgeBiases {
    /// Edges declared by bias keep their `theta`; `beta` only affects edges
    /// declared by coupling.
    pub fn new(tree: &RootedTree, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let mut theta = vec![0.0; tree.len()];
        let mut beta_j = vec![0.0; tree.len()];
        for v in 1..tree.len() {
            let (t, bj) = match tree.edge_param(v).expect("non-root") {
                EdgeParam::Coupling(j) => ((beta * j).tanh(), beta * j),
                EdgeParam::Bias(t) => (t, t.atanh()),
            };
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "bias of edge into `{}` is {t}, outside (0,1)",
                    tree.label(v)
                )));
            }
            theta[v] = t;
            beta_j[v] = bj;
        }
        Ok(Self {
            beta,
            theta,
            beta_j,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self, v: VertexId) -> f64 {
        self.theta[v]
    }

    /// `beta * J_v` for the edge into `v`.
    pub fn beta_coupling(&self, v: VertexId) -> f64 {
        self.beta_j[v]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    /// Smallest and largest bias over all edges.
    pub fn range(&self) -> (f64, f64) {
        self.theta[1..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                (lo.min(t), hi.max(t))
            })
    }
}

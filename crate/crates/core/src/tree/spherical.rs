use super::{EdgeParam, RootedTree, TreeBuilder};
use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_BUDGET: u64 = 1 << 21;
pub const DEFAULT_DEGREE_BUDGET: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub enum DegreeRule {
    /// `d_1, .., d_N` given level by level.
    Explicit(Vec<u64>),
    /// The same degree at every level.
    Regular(u64),
    /// Degrees chosen greedily so that `|T_n|` tracks `ceil(base^n n^alpha)`.
    PowerLaw { base: f64, alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeRule {
    Bias(f64),
    Coupling { j: f64, beta: f64 },
}

impl EdgeRule {
    pub fn theta(&self) -> f64 {
        match *self {
            EdgeRule::Bias(t) => t,
            EdgeRule::Coupling { j, beta } => (beta * j).tanh(),
        }
    }

    /// Inverse temperature to pair with the generated tree.
    pub fn beta(&self) -> f64 {
        match *self {
            EdgeRule::Bias(_) => 1.0,
            EdgeRule::Coupling { beta, .. } => beta,
        }
    }

    fn param(&self) -> EdgeParam {
        match *self {
            EdgeRule::Bias(t) => EdgeParam::Bias(t),
            EdgeRule::Coupling { j, .. } => EdgeParam::Coupling(j),
        }
    }
}

/// Recipe for a spherically symmetric tree of finite depth.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalConfig {
    depth: usize,
    degrees: DegreeRule,
    edge: EdgeRule,
    degree_budget: u64,
    vertex_budget: u64,
}

impl SphericalConfig {
    pub fn new(depth: usize, degrees: DegreeRule, edge: EdgeRule) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        match &degrees {
            DegreeRule::Explicit(d) => {
                if d.len() < depth {
                    return Err(Error::InvalidParameter(format!(
                        "{} degrees given for depth {depth}",
                        d.len()
                    )));
                }
                if d.iter().any(|&k| k == 0) {
                    return Err(Error::InvalidParameter("degrees must be >= 1".into()));
                }
            }
            DegreeRule::Regular(0) => {
                return Err(Error::InvalidParameter("degrees must be >= 1".into()))
            }
            DegreeRule::PowerLaw { base, alpha } => {
                if !(*base >= 1.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power-law rule needs b >= 1 and finite alpha, got b={base}, alpha={alpha}"
                    )));
                }
            }
            _ => {}
        }
        let theta = edge.theta();
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        Ok(Self {
            depth,
            degrees,
            edge,
            degree_budget: DEFAULT_DEGREE_BUDGET,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        })
    }

    pub fn regular(depth: usize, degree: u64, theta: f64) -> Result<Self> {
        Self::new(depth, DegreeRule::Regular(degree), EdgeRule::Bias(theta))
    }

    pub fn power_law(depth: usize, base: f64, alpha: f64, theta: f64) -> Result<Self> {
        Self::new(depth, DegreeRule::PowerLaw { base, alpha }, EdgeRule::Bias(theta))
    }

    pub fn with_degree_budget(mut self, budget: u64) -> Self {
        self.degree_budget = budget.max(1);
        self
    }

    pub fn with_vertex_budget(mut self, budget: u64) -> Self {
        self.vertex_budget = budget;
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let mut c = Self::new(depth, self.degrees.clone(), self.edge)?;
        c.degree_budget = self.degree_budget;
        c.vertex_budget = self.vertex_budget;
        Ok(c)
    }

    pub fn edge_rule(&self) -> EdgeRule {
        self.edge
    }

    pub fn degree_rule(&self) -> &DegreeRule {
        &self.degrees
    }

    /// Per-level degrees and biases, without materializing the tree.
    pub fn profile(&self) -> SphericalProfile {
        let degrees = match &self.degrees {
            DegreeRule::Explicit(d) => d[..self.depth].to_vec(),
            DegreeRule::Regular(d) => vec![*d; self.depth],
            DegreeRule::PowerLaw { base, alpha } => {
                power_law_degrees(*base, *alpha, self.depth, self.degree_budget)
            }
        };
        SphericalProfile::new(degrees, vec![self.edge.theta(); self.depth])
            .expect("validated config")
    }
}

/// `d_n = clamp(round(target_n / achieved_{n-1}), 1, budget)` with
/// `target_n = ceil(base^n n^alpha)`, evaluated in log space once the target
/// leaves the exactly representable range.
fn power_law_degrees(base: f64, alpha: f64, depth: usize, budget: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(depth);
    let mut log_achieved = 0.0f64;
    for n in 1..=depth {
        let log_target = n as f64 * base.ln() + alpha * (n as f64).ln();
        let ratio = if log_target < 36.0 {
            log_target.exp().ceil() / log_achieved.exp().round()
        } else {
            (log_target - log_achieved).exp()
        };
        let d = ratio.round().clamp(1.0, budget as f64) as u64;
        log_achieved += (d as f64).ln();
        out.push(d);
    }
    out
}

/// Level data `(d_n, theta_n)` for `n = 1..=N`.
///
/// `d_n` is the number of children of each vertex at depth `n - 1`, and
/// `theta_n` the bias of every edge arriving at depth `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalProfile {
    degrees: Vec<u64>,
    theta: Vec<f64>,
}

impl SphericalProfile {
    pub fn new(degrees: Vec<u64>, theta: Vec<f64>) -> Result<Self> {
        if degrees.len() != theta.len() {
            return Err(Error::InvalidParameter(
                "degrees and biases must have the same length".into(),
            ));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter("degrees must be >= 1".into()));
        }
        if theta.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidParameter("biases must lie in (0,1)".into()));
        }
        Ok(Self { degrees, theta })
    }

    pub fn regular(degree: u64, theta: f64, depth: usize) -> Result<Self> {
        Self::new(vec![degree; depth], vec![theta; depth])
    }

    /// Reads the profile off a spherically symmetric tree whose biases are
    /// constant on each level.
    pub fn from_tree(tree: &RootedTree, biases: &super::EdgeBiases) -> Result<Self> {
        let degrees = tree.level_degrees()?;
        let mut theta = vec![f64::NAN; degrees.len()];
        for v in 1..tree.len() {
            let level = tree.depth(v) - 1;
            let t = biases.theta(v);
            if theta[level].is_nan() {
                theta[level] = t;
            } else if theta[level] != t {
                return Err(Error::NotSpherical(level + 1));
            }
        }
        Self::new(degrees.into_iter().map(|d| d as u64).collect(), theta)
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn truncated(&self, depth: usize) -> Self {
        let n = depth.min(self.len());
        Self {
            degrees: self.degrees[..n].to_vec(),
            theta: self.theta[..n].to_vec(),
        }
    }

    /// `ln |T_n|` for `n = 1..=N`.
    pub fn log_level_sizes(&self) -> Vec<f64> {
        self.degrees
            .iter()
            .scan(0.0, |acc, &d| {
                *acc += (d as f64).ln();
                Some(*acc)
            })
            .collect()
    }

    /// Total vertex count, saturating.
    pub fn vertex_count(&self) -> u128 {
        let mut level = 1u128;
        let mut total = 1u128;
        for &d in &self.degrees {
            level = level.saturating_mul(d as u128);
            total = total.saturating_add(level);
        }
        total
    }
}

/// Materializes a spherically symmetric tree. Labels are `o` for the root and
/// `v<index>` elsewhere.
pub fn generate_spherical(config: &SphericalConfig) -> Result<RootedTree> {
    let profile = config.profile();
    let requested = profile.vertex_count();
    if requested > config.vertex_budget as u128 {
        return Err(Error::VertexBudget {
            budget: config.vertex_budget,
            requested,
        });
    }
    let param = config.edge.param();
    let mut builder = TreeBuilder::new("o");
    let mut level: Vec<String> = vec!["o".into()];
    let mut next_id = 1usize;
    for &d in profile.degrees() {
        let mut next = Vec::with_capacity(level.len() * d as usize);
        for p in &level {
            for _ in 0..d {
                let label = format!("v{next_id}");
                next_id += 1;
                builder.edge_at(p.as_str(), label.as_str(), param, false, next_id);
                next.push(label);
            }
        }
        level = next;
    }
    builder.build()
}

//! Command-line flags, config files, and their validated merge.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use treecap::tree::{
    generate_spherical, parse_generator_config, parse_tree, EdgeBiases, RootedTree,
    SphericalConfig, SphericalProfile,
};

use crate::CliError;

#[derive(Args, Debug, Default, Clone)]
pub struct Params {
    /// TOML file with any of the flags below as keys; flags given on the
    /// command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tree file (`root <label>` then `edge <parent> <child> J=..|theta=..`).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Spherically symmetric generator, e.g. "d=2;theta=0.5;N=100".
    #[arg(long)]
    pub spherical: Option<String>,
    /// Inverse temperature applied to edges declared by coupling.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Bias for experiments; retention probability for `perc`.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<u32>,
    /// Depth, or a comma-separated list of depths.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Artifact path; without it the artifact goes to stdout and the summary
    /// to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
    #[default]
    None,
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
            OneOrMany::None => Vec::new(),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    tree: Option<PathBuf>,
    spherical: Option<String>,
    beta: Option<f64>,
    theta: Option<f64>,
    p: Option<f64>,
    q: Option<u32>,
    #[serde(rename = "N", default)]
    n: OneOrMany<usize>,
    #[serde(default)]
    epsilon: OneOrMany<f64>,
    #[serde(default)]
    alpha: OneOrMany<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

impl Params {
    /// Fills unset flags from `--config`, then validates ranges.
    pub fn resolve(self) -> Result<Params, CliError> {
        let mut merged = self;
        if let Some(path) = merged.config.clone() {
            let file: FileConfig = toml::from_str(&read(&path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            merged.tree = merged.tree.or(file.tree);
            merged.spherical = merged.spherical.or(file.spherical);
            merged.beta = merged.beta.or(file.beta);
            merged.theta = merged.theta.or(file.theta);
            merged.p = merged.p.or(file.p);
            merged.q = merged.q.or(file.q);
            merged.samples = merged.samples.or(file.samples);
            merged.seed = merged.seed.or(file.seed);
            merged.tol = merged.tol.or(file.tol);
            merged.out = merged.out.or(file.out);
            if merged.n.is_empty() {
                merged.n = file.n.into_vec();
            }
            if merged.epsilon.is_empty() {
                merged.epsilon = file.epsilon.into_vec();
            }
            if merged.alpha.is_empty() {
                merged.alpha = file.alpha.into_vec();
            }
        }
        merged.validate()?;
        Ok(merged)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if let Some(p) = self.p {
            if !(p > 1.0 && p.is_finite()) {
                return bad(format!("--p must exceed 1, got {p}"));
            }
        }
        if let Some(q) = self.q {
            if !(q == 1 || q == 2) {
                return bad(format!("--q must be 1 or 2, got {q}"));
            }
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("--theta must lie in (0,1), got {t}"));
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("--beta must be positive, got {b}"));
            }
        }
        if self.n.contains(&0) {
            return bad("--N must be at least 1".into());
        }
        if self.samples == Some(0) {
            return bad("--samples must be at least 1".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return bad(format!("--tol must be positive, got {t}"));
            }
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("--epsilon must lie in (0,1), got {e}"));
        }
        if self.tree.is_some() && self.spherical.is_some() {
            return bad("give either --tree or --spherical, not both".into());
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }

    /// The tree or generator, cut at the largest `--N` when given.
    pub fn input(&self) -> Result<Input, CliError> {
        if let Some(path) = &self.tree {
            let mut tree = parse_tree(&read(path)?)?;
            if let Some(&n) = self.n.iter().max() {
                tree = tree.truncate(n);
            }
            let biases = EdgeBiases::new(&tree, self.beta())?;
            return Ok(Input::Tree { tree, biases });
        }
        if let Some(text) = &self.spherical {
            let text = match self.n.iter().max() {
                Some(n) => format!("{text};N={n}"),
                None => text.clone(),
            };
            return Ok(Input::Spherical(parse_generator_config(&text)?));
        }
        Err(CliError::Input("need --tree or --spherical".into()))
    }
}

pub enum Input {
    Tree { tree: RootedTree, biases: EdgeBiases },
    Spherical(SphericalConfig),
}

impl Input {
    /// An explicit tree, generating spherical inputs within the vertex
    /// budget.
    pub fn into_tree(self) -> Result<(RootedTree, EdgeBiases), CliError> {
        match self {
            Input::Tree { tree, biases } => Ok((tree, biases)),
            Input::Spherical(config) => {
                let tree = generate_spherical(&config)?;
                let biases = EdgeBiases::new(&tree, config.edge_rule().beta())?;
                Ok((tree, biases))
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Input::Tree { tree, .. } => tree.height(),
            Input::Spherical(c) => c.depth(),
        }
    }

    pub fn profile(&self) -> Option<SphericalProfile> {
        match self {
            Input::Spherical(c) => Some(c.profile()),
            Input::Tree { .. } => None,
        }
    }
}

#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treecap::tree::{random_tree, EdgeParam, RootedTree, TreeBuilder};

/// A seeded random tree with `2..=max` vertices and biases in `[lo, hi]`.
pub fn bias_tree(seed: u64, max: usize, lo: f64, hi: f64) -> RootedTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max);
    random_tree(&mut rng, n, |r| EdgeParam::Bias(r.gen_range(lo..=hi))).unwrap()
}

pub fn coupling_tree(seed: u64, max: usize, lo: f64, hi: f64) -> RootedTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max);
    random_tree(&mut rng, n, |r| EdgeParam::Coupling(r.gen_range(lo..=hi))).unwrap()
}

/// Per-vertex values in `[lo, hi)`, index 0 unused.
pub fn values(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Copies every edge of `tree` under `attach`, prefixing labels.
pub fn graft(b: &mut TreeBuilder, tree: &RootedTree, prefix: &str, attach: &str) {
    for v in 1..tree.len() {
        let p = tree.parent(v).unwrap();
        let parent = if p == 0 {
            attach.to_string()
        } else {
            format!("{prefix}{}", tree.label(p))
        };
        b.edge(parent, format!("{prefix}{}", tree.label(v)), tree.edge_param(v).unwrap());
    }
}

pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

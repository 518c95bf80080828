use rand::Rng;

use super::{EdgeParam, RootedTree, TreeBuilder};
use crate::error::{Error, Result};

/// A random recursive tree: vertex `i` attaches to a uniformly chosen earlier
/// vertex. Labels are `"o"` for the root and `"v<i>"` otherwise.
///
/// ```
/// use rand::SeedableRng;
/// use treecap::tree::{random_tree, EdgeParam};
///
/// let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
/// let t = random_tree(&mut rng, 6, |_| EdgeParam::Bias(0.5)).unwrap();
/// assert_eq!(t.len(), 6);
/// ```
pub fn random_tree<R: Rng>(
    rng: &mut R,
    vertices: usize,
    mut param: impl FnMut(&mut R) -> EdgeParam,
) -> Result<RootedTree> {
    if vertices < 2 {
        return Err(Error::InvalidParameter(format!(
            "a random tree needs at least 2 vertices, got {vertices}"
        )));
    }
    let label = |i: usize| if i == 0 { "o".to_string() } else { format!("v{i}") };
    let mut b = TreeBuilder::new("o");
    for i in 1..vertices {
        let p = rng.gen_range(0..i);
        let e = param(rng);
        b.edge(label(p), label(i), e);
    }
    b.build()
}

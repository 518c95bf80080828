//! Exhaustive enumeration of small unlabelled rooted trees.

use super::{EdgeParam, RootedTree, TreeBuilder};
use crate::error::Result;

/// An unlabelled rooted tree; children are kept in a canonical order so each
/// isomorphism class appears once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    children: Vec<Shape>,
}

impl Shape {
    pub fn leaf() -> Self {
        Self { children: vec![] }
    }

    pub fn children(&self) -> &[Shape] {
        &self.children
    }

    pub fn leaf_count(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(Shape::leaf_count).sum()
        }
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(|c| 1 + c.edge_count()).sum()
    }

    /// Builds the tree with root `o` and child `i` of `v` labelled `v.i`;
    /// `param` is called once per edge, parents before children.
    pub fn build(&self, mut param: impl FnMut() -> EdgeParam) -> Result<RootedTree> {
        fn go(s: &Shape, label: &str, b: &mut TreeBuilder, param: &mut dyn FnMut() -> EdgeParam) {
            for (i, c) in s.children.iter().enumerate() {
                let l = format!("{label}.{i}");
                b.edge(label, l.clone(), param());
                go(c, &l, b, param);
            }
        }
        let mut b = TreeBuilder::new("o");
        go(self, "o", &mut b, &mut param);
        b.build()
    }
}

/// Every shape of height `1..=max_height` in which each vertex has at most
/// `max_children` children and there are at most `max_leaves` leaves.
///
/// ```
/// use treecap::tree::unordered_shapes;
/// // one path, and the stars with two and three leaves
/// assert_eq!(unordered_shapes(1, 3, 10).len(), 3);
/// ```
pub fn unordered_shapes(max_height: usize, max_children: usize, max_leaves: usize) -> Vec<Shape> {
    let all = up_to(max_height, max_children, max_leaves);
    all.into_iter().filter(|s| !s.children.is_empty()).collect()
}

fn up_to(height: usize, max_children: usize, max_leaves: usize) -> Vec<Shape> {
    if height == 0 {
        return vec![Shape::leaf()];
    }
    let sub = up_to(height - 1, max_children, max_leaves);
    let leaves: Vec<usize> = sub.iter().map(Shape::leaf_count).collect();
    let mut out = vec![Shape::leaf()];
    let mut picked = Vec::new();
    multisets(&sub, &leaves, 0, max_children, max_leaves, &mut picked, &mut out);
    out
}

fn multisets(
    sub: &[Shape],
    leaves: &[usize],
    start: usize,
    room: usize,
    leaf_room: usize,
    picked: &mut Vec<usize>,
    out: &mut Vec<Shape>,
) {
    if room == 0 {
        return;
    }
    for i in start..sub.len() {
        if leaves[i] > leaf_room {
            continue;
        }
        picked.push(i);
        out.push(Shape {
            children: picked.iter().map(|&j| sub[j].clone()).collect(),
        });
        multisets(sub, leaves, i, room - 1, leaf_room - leaves[i], picked, out);
        picked.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(unordered_shapes(2, 3, usize::MAX).len(), 34);
        assert_eq!(unordered_shapes(3, 3, usize::MAX).len(), 8435);
        assert_eq!(unordered_shapes(3, 8, 8).len(), 5627);
        let t = unordered_shapes(2, 2, 3)[0].build(|| EdgeParam::Coupling(1.0)).unwrap();
        assert_eq!(t.len(), 2);
    }
}

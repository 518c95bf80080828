mod common;

use proptest::prelude::*;
use treecap::tree::{
    generate_spherical, parse_tree, serialize_tree, DegreeRule, EdgeBiases, EdgeRule,
    SphericalConfig,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(seed in common::seeds()) {
        let t = common::coupling_tree(seed, 30, 0.1, 2.0);
        let text = serialize_tree(&t);
        let back = parse_tree(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(serialize_tree(&back), text);
    }

    #[test]
    fn parents_precede_children(seed in common::seeds()) {
        let t = common::bias_tree(seed, 40, 0.1, 0.9);
        prop_assert_eq!(t.parent(t.root()), None);
        for v in 1..t.len() {
            let p = t.parent(v).unwrap();
            prop_assert!(p < v);
            prop_assert!(t.children(p).contains(&v));
            prop_assert_eq!(t.depth(v), t.depth(p) + 1);
        }
    }

    #[test]
    fn subdivision_keeps_path_bias_products(seed in common::seeds(), eps in 0.05f64..0.95) {
        let t = common::coupling_tree(seed, 15, 0.05, 1.5);
        let beta = 1.0;
        let s = t.subdivide(beta, eps).unwrap();
        let (b0, b1) = (EdgeBiases::new(&t, beta).unwrap(), EdgeBiases::new(&s, beta).unwrap());
        for v in 1..t.len() {
            let w = s.find(t.label(v)).unwrap();
            let before: f64 = t.path_to(v).iter().map(|&u| b0.theta(u)).product();
            let after: f64 = s.path_to(w).iter().map(|&u| b1.theta(u)).product();
            prop_assert!(((before - after) / before).abs() <= 1e-12);
        }
        for v in 1..s.len() {
            let unchanged = !s.is_synthetic(v) && b1.theta(v) == b0.theta(t.find(s.label(v)).unwrap());
            prop_assert!(unchanged || b1.theta(v) >= eps * (1.0 - 1e-12));
        }
    }

    #[test]
    fn truncation_composes(seed in common::seeds(), n in 0usize..6, m in 0usize..6) {
        let t = common::bias_tree(seed, 40, 0.1, 0.9);
        prop_assert_eq!(t.truncate(n).truncate(m), t.truncate(n.min(m)));
    }

    #[test]
    fn generated_levels_are_uniform(
        degrees in proptest::collection::vec(1u64..4, 1..6),
        theta in 0.05f64..0.95,
    ) {
        let config = SphericalConfig::new(
            degrees.len(),
            DegreeRule::Explicit(degrees.clone()),
            EdgeRule::Bias(theta),
        ).unwrap();
        let t = generate_spherical(&config).unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let got: Vec<u64> = t.level_degrees().unwrap().into_iter().map(|d| d as u64).collect();
        prop_assert_eq!(got, degrees);
        prop_assert!((1..t.len()).all(|v| b.theta(v) == theta));
    }
}

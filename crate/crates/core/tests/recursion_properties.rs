mod common;

use proptest::prelude::*;
use treecap::recursion::{
    f_theta, kappa_bounds, percolation_f, run_recursion, sandwich, IsingEdge, KappaGrid,
    RecursionFamily,
};
use treecap::tree::{generate_spherical, DegreeRule, EdgeBiases, EdgeRule, SphericalConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn f_is_odd_increasing_and_below_its_slope(theta in 0.01f64..0.99, x in 1e-6f64..50.0) {
        let e = IsingEdge::new(theta).unwrap();
        prop_assert_eq!(e.f(-x), -e.f(x));
        prop_assert!(e.f(x) > 0.0 && e.f(x) < theta * x);
        prop_assert!(e.f(x * 1.01) >= e.f(x));
        if x < 5.0 {
            prop_assert!(e.f(x * 1.01) > e.f(x));
        }
        prop_assert_eq!(f_theta(theta, x).unwrap(), e.f(x));
    }

    #[test]
    fn f_is_concave(theta in 0.01f64..0.99, x in 1e-3f64..30.0, h in 1e-3f64..1.0) {
        let e = IsingEdge::new(theta).unwrap();
        let h = h.min(x);
        let second = e.f(x + h) - 2.0 * e.f(x) + e.f(x - h);
        prop_assert!(second <= 1e-9);
    }

    #[test]
    fn f_matches_its_cubic_expansion(theta in 0.05f64..0.95) {
        let e = IsingEdge::new(theta).unwrap();
        let err = |x: f64| (e.f(x) - (theta * x - theta * (1.0 - theta * theta) * x.powi(3) / 12.0)).abs();
        let c = 2.0 * err(0.1) / 0.1f64.powi(5);
        for i in 1..=100 {
            let x = 0.1 * i as f64 / 100.0;
            prop_assert!(err(x) <= c * x.powi(5) + 4.0 * f64::EPSILON * theta * x);
        }
    }

    #[test]
    fn percolation_function_is_concave_with_quadratic_gap(a in 0.05f64..0.95) {
        let f = |x: f64| percolation_f(a, x).unwrap();
        for i in 1..=50 {
            let x = 0.1 * i as f64 / 50.0;
            let gap = (a * x - f(x)) / (x * x);
            prop_assert!(gap > 0.0 && gap < a);
        }
        for i in 1..200 {
            let x = 0.05 * i as f64;
            prop_assert!(f(x + 0.05) - 2.0 * f(x) + f(x - 0.05) <= 1e-12);
        }
    }

    #[test]
    fn sandwich_brackets_random_trees(seed in common::seeds()) {
        let t = common::bias_tree(seed, 40, 0.2, 0.8);
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let (lo, hi) = b.range();
        let family = RecursionFamily::ising(&b);
        let bounds = kappa_bounds(lo, hi, &KappaGrid::default()).unwrap();
        let sw = sandwich(&t, &family, &bounds).unwrap();
        prop_assert!(sw.lower <= sw.x_o * (1.0 + 1e-9) && sw.x_o <= sw.upper * (1.0 + 1e-9));
    }

    #[test]
    fn spherical_trees_give_level_constant_values(
        degrees in proptest::collection::vec(1u64..4, 1..6),
        theta in 0.05f64..0.95,
    ) {
        let config = SphericalConfig::new(degrees.len(), DegreeRule::Explicit(degrees), EdgeRule::Bias(theta)).unwrap();
        let t = generate_spherical(&config).unwrap();
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        let x = run_recursion(&t, &RecursionFamily::ising(&b), None).unwrap().x;
        for v in 1..t.len() {
            let first = (0..t.len()).find(|&u| t.depth(u) == t.depth(v)).unwrap();
            prop_assert_eq!(x[v].to_bits(), x[first].to_bits());
        }
    }
}

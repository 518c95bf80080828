mod common;

use proptest::prelude::*;
use treecap::gibbs::suites::subdivision_discrepancy;
use treecap::gibbs::{
    boundary_law_dp, enumerate_root_marginal, llr_given_boundary, AtomicDistribution, Boundary,
    LawKind,
};
use treecap::tree::EdgeBiases;

fn paired(law: &AtomicDistribution) -> bool {
    let a = law.atoms();
    let n = a.len();
    (0..n).all(|i| a[i].0 == -a[n - 1 - i].0 && a[i].1 == a[n - 1 - i].1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn llr_matches_enumeration(seed in common::seeds(), beta in 0.2f64..1.5, bits in any::<u32>()) {
        let t = common::coupling_tree(seed, 12, 0.1, 2.0);
        let b = EdgeBiases::new(&t, beta).unwrap();
        let xi: Vec<i8> = t.leaves().enumerate().map(|(i, _)| if bits >> (i % 32) & 1 == 1 { 1 } else { -1 }).collect();
        let x = llr_given_boundary(&t, &b, &xi).unwrap()[0];
        let exact = enumerate_root_marginal(&t, &b, &Boundary::Fixed(xi)).unwrap().log_odds;
        prop_assert!((x - exact).abs() <= 1e-9);
    }

    #[test]
    fn spin_glass_and_free_laws_are_symmetric(seed in common::seeds()) {
        let t = common::bias_tree(seed, 10, 0.1, 0.9);
        let b = EdgeBiases::new(&t, 1.0).unwrap();
        for kind in [LawKind::SpinGlass, LawKind::Free] {
            let law = boundary_law_dp(&t, &b, kind, 0).unwrap();
            prop_assert!(paired(&law), "{:?}", law.atoms());
            prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn subdividing_weak_edges_changes_nothing(seed in common::seeds(), eps in 0.1f64..0.9) {
        let t = common::coupling_tree(seed, 10, 0.05, 1.5);
        let (dm, tv) = subdivision_discrepancy(&t, 1.0, eps).unwrap();
        prop_assert!(dm <= 1e-10 && tv <= 1e-10, "{} {}", dm, tv);
    }
}

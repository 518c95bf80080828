use proptest::prelude::*;
use treecap::capacity::regular_capacity_limit;
use treecap::criteria::{level_size_sum, phase_report, spherical_sum, PhaseInput, SeriesVerdict};
use treecap::tree::SphericalProfile;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_verdict_tracks_closed_form(d in 1u64..5, theta in 0.2f64..0.95, q in 1u32..=2) {
        let limit = regular_capacity_limit(d, theta, q, 3.0).unwrap();
        let log_r = -2.0 * (d as f64 * theta.powi(q as i32)).ln();
        prop_assume!(log_r.abs() > 1e-3);
        let r = spherical_sum(&vec![d; 400], &vec![theta; 400], q, 2.0).unwrap();
        match r.verdict {
            SeriesVerdict::Convergent => {
                prop_assert!(limit > 0.0);
                prop_assert!(((r.capacity(2.0) - limit) / limit).abs() <= 1e-9);
            }
            SeriesVerdict::Divergent => prop_assert_eq!(limit, 0.0),
            SeriesVerdict::Undetermined => prop_assert!(false, "regular tree left undetermined"),
        }
    }

    #[test]
    fn level_sizes_reproduce_the_degree_sum(
        degrees in proptest::collection::vec(1u64..5, 8..60),
        theta in 0.2f64..0.9,
    ) {
        let sizes: Vec<f64> = degrees
            .iter()
            .scan(1.0, |acc, &d| { *acc *= d as f64; Some(*acc) })
            .collect();
        let a = level_size_sum(&sizes, theta).unwrap();
        let b = spherical_sum(&degrees, &vec![theta; degrees.len()], 1, 2.0).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        for (x, y) in a.log_partial_sums.iter().zip(&b.log_partial_sums) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn free_and_spin_glass_always_agree(
        degrees in proptest::collection::vec(1u64..4, 2..80),
        theta in 0.2f64..0.9,
    ) {
        let profile = SphericalProfile::new(degrees.clone(), vec![theta; degrees.len()]).unwrap();
        let v = phase_report(PhaseInput::Spherical(&profile), degrees.len()).unwrap();
        prop_assert_eq!(v[1].conclusion, v[2].conclusion);
        prop_assert_eq!(v[1].capacity, v[2].capacity);
    }
}

//! Reduced-size versions of the library's verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treecap::capacity::{
    capacity_oracle, capacity_recursive, spherical_capacity, Resistances, DEFAULT_ORACLE_TOL,
};
use treecap::criteria::{phase_report, spherical_sum, PhaseInput, SeriesVerdict};
use treecap::gibbs::suites::{
    concave_square_root_suite, fourth_moment_ratio_suite, second_moment_ratio_suite,
    subdivision_discrepancy, tree_identities, KappaCache,
};
use treecap::gibbs::{
    enumerate_root_marginal, llr_given_boundary, moments, percolation_prob, Boundary,
};
use treecap::recursion::{
    family_kappa_bounds, run_recursion, sandwich_spherical, FamilyKind, KappaGrid,
    RecursionFamily,
};
use treecap::tree::{
    random_tree, unordered_shapes, EdgeBiases, EdgeParam, RootedTree, SphericalProfile,
};

use crate::output::num;
use crate::params::Params;
use crate::{CliError, Suite};

type Outcome = Result<String, String>;

struct Check {
    suite: Suite,
    name: &'static str,
    invariant: &'static str,
    run: fn(&Ctx) -> Outcome,
}

struct Ctx {
    seed: u64,
    tol: Option<f64>,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

fn err(e: treecap::Error) -> String {
    e.to_string()
}

fn random_bias_tree(rng: &mut ChaCha8Rng, max_vertices: usize) -> Result<RootedTree, String> {
    let n = rng.gen_range(2..=max_vertices);
    random_tree(rng, n, |r| EdgeParam::Bias(r.gen_range(0.1..0.9))).map_err(err)
}

fn oracle_equivalence(ctx: &Ctx) -> Outcome {
    let tol = ctx.tol.unwrap_or(2e-4);
    let mut rng = ctx.rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let tree = random_bias_tree(&mut rng, 8)?;
        let a: Vec<f64> = (0..tree.len()).map(|_| 1.0 / rng.gen_range(0.5..2.0)).collect();
        let res = Resistances::from_coefficients(&tree, &a).map_err(err)?;
        for p in [2.0, 3.0] {
            let rec = capacity_recursive(&tree, &res, p).map_err(err)?.value;
            let ora = capacity_oracle(&tree, &res, p, DEFAULT_ORACLE_TOL).map_err(err)?.value;
            worst = worst.max((rec - ora).abs());
        }
    }
    if worst <= tol {
        Ok(format!("worst gap {}", num(worst)))
    } else {
        Err(format!("recursion and oracle differ by {} > {}", num(worst), num(tol)))
    }
}

fn critical_closed_form(_: &Ctx) -> Outcome {
    for n in [10usize, 100, 10_000] {
        let profile = SphericalProfile::regular(2, 0.5, n).map_err(err)?;
        let cap = spherical_capacity(&profile, 1, 3.0).map_err(err)?.value;
        let exact = (n as f64).powf(-0.5);
        if ((cap - exact) / exact).abs() > 1e-12 {
            return Err(format!("N = {n}: cap_3 = {} but N^-1/2 = {}", num(cap), num(exact)));
        }
    }
    Ok("N in {10, 100, 10000}".into())
}

fn capacity_sandwich(_: &Ctx) -> Outcome {
    let bounds = family_kappa_bounds(FamilyKind::IsingF, 0.5, 0.5, &KappaGrid::default())
        .map_err(err)?;
    for n in [100usize, 1000] {
        sandwich_spherical(FamilyKind::IsingF, &vec![2; n], &vec![0.5; n], &bounds)
            .map_err(err)?;
    }
    Ok("binary tree, theta = 1/2, N in {100, 1000}".into())
}

fn llr_vs_enumeration(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let n = rng.gen_range(2..=10);
        let tree = random_tree(&mut rng, n, |r| EdgeParam::Coupling(r.gen_range(0.2..1.5)))
            .map_err(err)?;
        let beta = rng.gen_range(0.2..1.5);
        let biases = EdgeBiases::new(&tree, beta).map_err(err)?;
        let xi: Vec<i8> = tree.leaves().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let x = llr_given_boundary(&tree, &biases, &xi).map_err(err)?[0];
        let exact = enumerate_root_marginal(&tree, &biases, &Boundary::Fixed(xi))
            .map_err(err)?
            .log_odds;
        worst = worst.max((x - exact).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("worst gap {}", num(worst)))
    } else {
        Err(format!("recursive LLR misses the enumerated log-odds by {}", num(worst)))
    }
}

fn percolation_cross_check(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(3);
    for _ in 0..30 {
        let tree = random_bias_tree(&mut rng, 20)?;
        let a = rng.gen_range(0.05..0.95);
        let direct = percolation_prob(&tree, a).map_err(err)?[0];
        let family = RecursionFamily::percolation(&tree, a).map_err(err)?;
        let x = run_recursion(&tree, &family, None).map_err(err)?.root();
        let via = -(-x).exp_m1();
        if (via - direct).abs() > 1e-12 {
            return Err(format!("1 - exp(-x_o) = {} but direct = {}", num(via), num(direct)));
        }
    }
    Ok("30 random trees".into())
}

fn boundary_law_identities(_: &Ctx) -> Outcome {
    let mut kappas = KappaCache::default();
    let shapes = unordered_shapes(2, 3, 5);
    for (i, shape) in shapes.iter().enumerate() {
        let theta = 0.2 + 0.6 * (i % 7) as f64 / 6.0;
        let tree = shape.build(|| EdgeParam::Bias(theta)).map_err(err)?;
        let biases = EdgeBiases::new(&tree, 1.0).map_err(err)?;
        let r = tree_identities(&tree, &biases, &mut kappas).map_err(err)?;
        if !r.holds(1e-10, 1e-10, 1e-12) {
            return Err(format!("identity report {r:?}"));
        }
    }
    Ok(format!("{} tree shapes", shapes.len()))
}

fn moment_inequalities(ctx: &Ctx) -> Outcome {
    for s in [
        concave_square_root_suite(200, ctx.seed),
        second_moment_ratio_suite(200, ctx.seed),
        fourth_moment_ratio_suite(200, ctx.seed),
    ] {
        if !s.passed() {
            return Err(format!("{}: {} violations, worst {}", s.name, s.violations, num(s.worst)));
        }
    }
    Ok("200 cases per suite".into())
}

fn depth_one_ratio(_: &Ctx) -> Outcome {
    for d in 1..=6usize {
        let mut text = String::from("root o\n");
        for i in 0..d {
            text.push_str(&format!("edge o c{i} theta=0.5\n"));
        }
        let tree = treecap::tree::parse_tree(&text).map_err(err)?;
        let biases = EdgeBiases::new(&tree, 1.0).map_err(err)?;
        let m = moments(&tree, &biases).map_err(err)?;
        let ratio = m.s4[0] / (m.u[0] * m.u[0]);
        let exact = 3.0 - 2.0 / d as f64;
        if (ratio - exact).abs() > 1e-12 {
            return Err(format!("d = {d}: ratio {} but 3 - 2/d = {}", num(ratio), num(exact)));
        }
    }
    Ok("d = 1..6".into())
}

fn subdivision_invariance(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.gen_range(2..=8);
        let tree = random_tree(&mut rng, n, |r| EdgeParam::Coupling(r.gen_range(0.1..1.0)))
            .map_err(err)?;
        for eps in [0.3, 0.5, 0.7] {
            let (dm, tv) = subdivision_discrepancy(&tree, 1.0, eps).map_err(err)?;
            worst = worst.max(dm).max(tv);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst change {}", num(worst)))
    } else {
        Err(format!("subdividing changed the root statistics by {}", num(worst)))
    }
}

fn free_spin_glass_agreement(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(5);
    for d in [2u64, 3] {
        for theta in [0.4, 0.5, 0.7, 0.75] {
            let profile = SphericalProfile::regular(d, theta, 200).map_err(err)?;
            let v = phase_report(PhaseInput::Spherical(&profile), 200).map_err(err)?;
            if v[1].conclusion != v[2].conclusion {
                return Err(format!("d = {d}, theta = {theta}: free and spin-glass disagree"));
            }
        }
    }
    for _ in 0..5 {
        let tree = random_bias_tree(&mut rng, 30)?;
        let biases = EdgeBiases::new(&tree, 1.0).map_err(err)?;
        let v = phase_report(PhaseInput::Tree { tree: &tree, biases: &biases }, 10).map_err(err)?;
        if v[1].conclusion != v[2].conclusion {
            return Err("free and spin-glass disagree on a random tree".into());
        }
    }
    Ok("regular and random trees".into())
}

fn series_verdicts(_: &Ctx) -> Outcome {
    let cases = [(2u64, 1u32, SeriesVerdict::Divergent), (3, 1, SeriesVerdict::Convergent)];
    for (d, q, want) in cases {
        let n = 400;
        let r = spherical_sum(&vec![d; n], &vec![0.5; n], q, 2.0).map_err(err)?;
        if r.verdict != want {
            return Err(format!("d = {d}: expected {want:?}, got {:?}", r.verdict));
        }
    }
    Ok("critical and supercritical regular trees".into())
}

const CHECKS: &[Check] = &[
    Check {
        suite: Suite::Capacity,
        name: "capacity-oracle-equivalence",
        invariant: "recursive capacity equals the convex-program optimum",
        run: oracle_equivalence,
    },
    Check {
        suite: Suite::Capacity,
        name: "critical-closed-form",
        invariant: "cap_3 of the critical binary tree truncated at N is N^-1/2",
        run: critical_closed_form,
    },
    Check {
        suite: Suite::Recursion,
        name: "capacity-sandwich",
        invariant: "cap/kappa2 <= x_o <= cap/kappa1",
        run: capacity_sandwich,
    },
    Check {
        suite: Suite::Recursion,
        name: "llr-vs-enumeration",
        invariant: "recursive LLR equals enumerated conditional log-odds",
        run: llr_vs_enumeration,
    },
    Check {
        suite: Suite::Recursion,
        name: "percolation-cross-check",
        invariant: "1 - exp(-x_o) equals the product-recursion percolation probability",
        run: percolation_cross_check,
    },
    Check {
        suite: Suite::Gibbs,
        name: "boundary-law-identities",
        invariant: "projection, odd-function and density identities; mean inequality",
        run: boundary_law_identities,
    },
    Check {
        suite: Suite::Gibbs,
        name: "moment-inequalities",
        invariant: "concave square-root, second- and fourth-moment ratio inequalities",
        run: moment_inequalities,
    },
    Check {
        suite: Suite::Gibbs,
        name: "depth-one-fourth-moment-ratio",
        invariant: "s4/u^2 = 3 - 2/d on a star with d leaves",
        run: depth_one_ratio,
    },
    Check {
        suite: Suite::Gibbs,
        name: "subdivision-invariance",
        invariant: "subdividing weak edges keeps the plus marginal and free law",
        run: subdivision_invariance,
    },
    Check {
        suite: Suite::Criteria,
        name: "free-spin-glass-agreement",
        invariant: "free and spin-glass verdicts coincide",
        run: free_spin_glass_agreement,
    },
    Check {
        suite: Suite::Criteria,
        name: "series-verdicts",
        invariant: "capacity series verdicts on regular trees",
        run: series_verdicts,
    },
];

pub fn run(suite: Suite, params: Params) -> Result<(), CliError> {
    let ctx = Ctx {
        seed: params.seed.unwrap_or(0x7ee5),
        tol: params.tol,
    };
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for c in CHECKS.iter().filter(|c| suite == Suite::All || c.suite == suite) {
        match (c.run)(&ctx) {
            Ok(detail) => lines.push(format!("PASS {}: {} ({detail})", c.name, c.invariant)),
            Err(msg) => {
                lines.push(format!("FAIL {}: {} ({msg})", c.name, c.invariant));
                failed.push(c.name);
            }
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    let summary = format!("{} checks, {} failed", lines.len(), failed.len());
    crate::output::emit(params.out.as_deref(), &text, &summary)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

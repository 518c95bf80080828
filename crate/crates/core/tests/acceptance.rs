//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treecap::capacity::{
    capacity_oracle, capacity_recursive, spherical_capacity, Resistances, DEFAULT_ORACLE_TOL,
};
use treecap::criteria::{alpha_sweep, phase_report, PhaseInput};
use treecap::gibbs::suites::{
    concave_square_root_suite, fourth_moment_ratio_suite, second_moment_ratio_suite,
    subdivision_discrepancy, tree_identities, KappaCache,
};
use treecap::gibbs::{
    enumerate_root_marginal, llr_given_boundary, mc_free_statistics, moments, percolation_prob,
    plus_llr, Boundary,
};
use treecap::recursion::{
    kappa_bounds, run_recursion, sandwich_spherical, FamilyKind, KappaGrid, RecursionFamily,
};
use treecap::tree::{
    generate_spherical, parse_tree, random_tree, unordered_shapes, EdgeBiases, EdgeParam,
    RootedTree, SphericalConfig, SphericalProfile,
};

type Outcome = Result<String, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn binary(depth: usize, theta: f64) -> RootedTree {
    generate_spherical(&SphericalConfig::regular(depth, 2, theta).unwrap()).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let shapes = unordered_shapes(3, 3, usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut solves) = (0.0f64, 0);
    for shape in &shapes {
        let tree = shape.build(|| EdgeParam::Bias(0.5)).map_err(fail)?;
        for _ in 0..50 {
            let a: Vec<f64> = (0..tree.len()).map(|_| 1.0 / rng.gen_range(0.5..2.0)).collect();
            let res = Resistances::from_coefficients(&tree, &a).map_err(fail)?;
            for p in [2.0, 3.0] {
                let rec = capacity_recursive(&tree, &res, p).map_err(fail)?.value;
                let ora = capacity_oracle(&tree, &res, p, DEFAULT_ORACLE_TOL).map_err(fail)?.value;
                worst = worst.max((rec - ora).abs());
                solves += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 2e-4, || format!("worst gap {worst:e} > 2e-4"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} shapes, {solves} solves, worst gap {worst:.2e}, {:.1} s",
        shapes.len(),
        elapsed.as_secs_f64()
    ))
}

/// Series-parallel reduction: `C(v) = sum_w 1 / (r_w + 1/C(w))`, leaves
/// having infinite conductance.
fn conductance(tree: &RootedTree, r: &[f64]) -> f64 {
    let mut c = vec![f64::INFINITY; tree.len()];
    for v in (0..tree.len()).rev() {
        let kids = tree.children(v);
        if !kids.is_empty() {
            c[v] = kids.iter().map(|&w| 1.0 / (r[w] + 1.0 / c[w])).sum();
        }
    }
    c[0]
}

fn conductance_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=51);
        let tree = random_tree(&mut rng, n, |_| EdgeParam::Bias(0.5)).map_err(fail)?;
        let r: Vec<f64> = (0..tree.len()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let res = Resistances::from_edges(&tree, &r).map_err(fail)?;
        let cap = capacity_recursive(&tree, &res, 2.0).map_err(fail)?.value;
        let c = conductance(&tree, &r);
        worst = worst.max(((cap - c) / c).abs());
    }
    ensure(worst <= 1e-9, || format!("relative gap {worst:e}"))?;
    Ok(format!("100 trees, worst relative gap {worst:.2e}"))
}

fn critical_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [10usize, 100, 10_000, 1_000_000] {
        let profile = SphericalProfile::regular(2, 0.5, n).map_err(fail)?;
        let cap = spherical_capacity(&profile, 1, 3.0).map_err(fail)?.value;
        let exact = (n as f64).powf(-0.5);
        worst = worst.max(((cap - exact) / exact).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("relative gap {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("worst relative gap {worst:.2e}, {:.2} s", elapsed.as_secs_f64()))
}

fn sandwich_bracket() -> Outcome {
    let bounds = kappa_bounds(0.5, 0.5, &KappaGrid::default()).map_err(fail)?;
    let mut brackets = Vec::new();
    let mut scaled = Vec::new();
    for n in [100usize, 1000, 10_000, 100_000, 1_000_000] {
        let sw = sandwich_spherical(FamilyKind::IsingF, &vec![2; n], &vec![0.5; n], &bounds)
            .map_err(fail)?;
        let root = (n as f64).sqrt();
        let (lo, x, hi) = (sw.lower * root, sw.x_o * root, sw.upper * root);
        ensure(lo <= x && x <= hi, || format!("N = {n}: {x} outside [{lo}, {hi}]"))?;
        brackets.push((lo, hi));
        scaled.push(x);
    }
    let (lo0, hi0) = brackets[0];
    ensure(hi0.is_finite() && lo0 > 0.0, || "bracket is not finite".into())?;
    for &(lo, hi) in &brackets {
        ensure((lo - lo0).abs() <= 1e-9 * lo0 && (hi - hi0).abs() <= 1e-9 * hi0, || {
            format!("bracket moved with N: [{lo}, {hi}] vs [{lo0}, {hi0}]")
        })?;
    }
    Ok(format!(
        "x_o*sqrt(N) from {:.6} to {:.6} within [{lo0:.6}, {hi0:.6}]",
        scaled[0],
        scaled[scaled.len() - 1]
    ))
}

fn llr_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let tree = random_tree(&mut rng, n, |r| EdgeParam::Coupling(r.gen_range(0.1..2.0)))
            .map_err(fail)?;
        let beta = rng.gen_range(0.2..1.5);
        let biases = EdgeBiases::new(&tree, beta).map_err(fail)?;
        let xi: Vec<i8> = tree.leaves().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let x = llr_given_boundary(&tree, &biases, &xi).map_err(fail)?[0];
        let exact = enumerate_root_marginal(&tree, &biases, &Boundary::Fixed(xi))
            .map_err(fail)?
            .log_odds;
        worst = worst.max((x - exact).abs());
    }
    ensure(worst <= 1e-9, || format!("worst gap {worst:e}"))?;
    let tree = binary(2, 0.5);
    let x = plus_llr(&tree, &EdgeBiases::new(&tree, 1.0).map_err(fail)?).map_err(fail)?;
    let exact = 2.0 * (7.0f64 / 3.0).ln();
    ensure((x - exact).abs() <= 1e-12, || format!("depth-2 plus value {x} vs {exact}"))?;
    Ok(format!("100 cases, worst gap {worst:.2e}; depth-2 plus value matches 2 ln(7/3)"))
}

const BIAS_CHOICES: [f64; 7] = [0.15, 0.3, 0.45, 0.5, 0.6, 0.75, 0.9];

fn random_bias_shape(shape: &treecap::tree::Shape, rng: &mut ChaCha8Rng) -> (RootedTree, EdgeBiases) {
    let tree = shape
        .build(|| EdgeParam::Bias(BIAS_CHOICES[rng.gen_range(0..BIAS_CHOICES.len())]))
        .unwrap();
    let biases = EdgeBiases::new(&tree, 1.0).unwrap();
    (tree, biases)
}

fn identity_suite() -> Outcome {
    let shapes = unordered_shapes(3, 8, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut kappas = KappaCache::default();
    let (mut tv, mut odd, mut density, mut mean_violations) = (0.0f64, 0.0f64, 0.0f64, 0);
    for shape in &shapes {
        let (tree, biases) = random_bias_shape(shape, &mut rng);
        let r = tree_identities(&tree, &biases, &mut kappas).map_err(fail)?;
        tv = tv.max(r.projection_tv);
        odd = odd.max(r.odd_function_gap);
        density = density.max(r.density_gap);
        mean_violations += r.mean_inequality_violations;
    }
    ensure(tv <= 1e-10, || format!("projection TV {tv:e}"))?;
    ensure(odd <= 1e-10, || format!("odd-function gap {odd:e}"))?;
    ensure(density <= 1e-12, || format!("density gap {density:e}"))?;
    ensure(mean_violations == 0, || format!("{mean_violations} mean-inequality violations"))?;
    Ok(format!(
        "{} trees: TV {tv:.1e}, odd {odd:.1e}, density {density:.1e}, 0 mean violations",
        shapes.len()
    ))
}

fn moment_suite() -> Outcome {
    let shapes = unordered_shapes(3, 8, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut vertices, mut worst_ratio) = (0, 0.0f64);
    for shape in &shapes {
        let (tree, biases) = random_bias_shape(shape, &mut rng);
        let m = moments(&tree, &biases).map_err(fail)?;
        for v in (0..tree.len()).filter(|&v| !tree.is_leaf(v)) {
            let ratio = m.s4[v] / (m.u[v] * m.u[v]);
            ensure(ratio <= 3.0 * (1.0 + 1e-12), || format!("s4/u^2 = {ratio} at a vertex"))?;
            worst_ratio = worst_ratio.max(ratio);
            vertices += 1;
        }
    }
    for d in 1..=6usize {
        let mut text = String::from("root o\n");
        for i in 0..d {
            text.push_str(&format!("edge o c{i} theta=0.5\n"));
        }
        let tree = parse_tree(&text).map_err(fail)?;
        let m = moments(&tree, &EdgeBiases::new(&tree, 1.0).map_err(fail)?).map_err(fail)?;
        let ratio = m.s4[0] / (m.u[0] * m.u[0]);
        let exact = 3.0 - 2.0 / d as f64;
        ensure((ratio - exact).abs() <= 1e-12, || format!("d = {d}: {ratio} vs {exact}"))?;
    }
    let suites = [
        concave_square_root_suite(1000, 71),
        second_moment_ratio_suite(1000, 72),
        fourth_moment_ratio_suite(1000, 73),
    ];
    for s in &suites {
        ensure(s.passed(), || format!("{}: {} violations (worst {:e})", s.name, s.violations, s.worst))?;
    }
    Ok(format!(
        "{vertices} vertices, max s4/u^2 = {worst_ratio:.6}; star ratios exact; 3 x 1000 randomized cases clean"
    ))
}

/// Exact `1 - prod_w (1 - a p_w)` over rationals on the binary tree.
fn binary_percolation_rational(depth: usize, a: (u128, u128)) -> (u128, u128) {
    let mut p = (1u128, 1u128);
    for _ in 0..depth {
        // 1 - a p  = (a.1 p.1 - a.0 p.0) / (a.1 p.1)
        let miss = (a.1 * p.1 - a.0 * p.0, a.1 * p.1);
        let both = (miss.0 * miss.0, miss.1 * miss.1);
        p = (both.1 - both.0, both.1);
    }
    p
}

fn percolation_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=40);
        let tree = random_tree(&mut rng, n, |_| EdgeParam::Bias(0.5)).map_err(fail)?;
        let a = rng.gen_range(0.05..0.95);
        let direct = percolation_prob(&tree, a).map_err(fail)?[0];
        let family = RecursionFamily::percolation(&tree, a).map_err(fail)?;
        let x = run_recursion(&tree, &family, None).map_err(fail)?.root();
        worst = worst.max((-(-x).exp_m1() - direct).abs());
    }
    ensure(worst <= 1e-12, || format!("worst gap {worst:e}"))?;
    let (num, den) = binary_percolation_rational(2, (1, 2));
    ensure(num * 64 == 39 * den, || format!("rational value {num}/{den}"))?;
    let value = percolation_prob(&binary(2, 0.5), 0.5).map_err(fail)?[0];
    ensure(value == num as f64 / den as f64, || format!("{value} != {num}/{den}"))?;
    Ok(format!("100 trees, worst gap {worst:.2e}; binary depth 2 gives 39/64 exactly"))
}

fn subdivision_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut marg, mut tv, mut subdivided) = (0.0f64, 0.0f64, 0);
    for _ in 0..20 {
        let n = rng.gen_range(2..=10);
        let tree = random_tree(&mut rng, n, |r| EdgeParam::Coupling(r.gen_range(0.1..1.2)))
            .map_err(fail)?;
        for eps in [0.3, 0.5, 0.7] {
            if tree.subdivide(1.0, eps).map_err(fail)?.len() > tree.len() {
                subdivided += 1;
            }
            let (dm, dt) = subdivision_discrepancy(&tree, 1.0, eps).map_err(fail)?;
            marg = marg.max(dm);
            tv = tv.max(dt);
        }
    }
    ensure(subdivided > 0, || "no case triggered a subdivision".into())?;
    ensure(marg <= 1e-10 && tv <= 1e-10, || format!("marginal {marg:e}, law TV {tv:e}"))?;
    Ok(format!("60 cases ({subdivided} subdivided): marginal {marg:.1e}, law TV {tv:.1e}"))
}

fn monte_carlo() -> Outcome {
    let tree = binary(3, 0.5);
    let biases = EdgeBiases::new(&tree, 1.0).map_err(fail)?;
    let exact = moments(&tree, &biases).map_err(fail)?;
    let (m, u) = (exact.m[0], exact.u[0]);
    let run = || mc_free_statistics(&tree, &biases, 100_000, 2024).map_err(fail);
    let a = run()?;
    let zm = (a.m.mean - m) / a.m.std_err;
    let zu = (a.u.mean - u) / a.u.std_err;
    ensure(zm.abs() <= 4.0, || format!("m estimate off by {zm:.2} standard errors"))?;
    ensure(zu.abs() <= 4.0, || format!("u estimate off by {zu:.2} standard errors"))?;
    let bytes = |s| serde_json::to_vec(&s).unwrap();
    ensure(bytes(a) == bytes(run()?), || "seeded rerun differs".into())?;
    Ok(format!("z(m) = {zm:.2}, z(u) = {zu:.2}; seeded rerun byte-identical"))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn alpha_threshold() -> Outcome {
    let depths = [100usize, 200, 500, 1000, 2000, 5000, 10_000];
    let rows = alpha_sweep(2.0, 0.5, &[0.0, 1.0], &depths).map_err(fail)?;
    let col = |alpha: f64| -> Vec<f64> {
        rows.iter().filter(|r| r.alpha == alpha).map(|r| r.cap3).collect()
    };
    let logn: Vec<f64> = depths.iter().map(|&n| (n as f64).ln()).collect();
    let flat = col(0.0);
    let s = slope(&logn, &flat.iter().map(|c| c.ln()).collect::<Vec<_>>());
    ensure((s + 0.5).abs() <= 0.02, || format!("alpha = 0 slope {s}"))?;
    let one = col(1.0);
    let k = one.len();
    let last = ((one[k - 1] - one[k - 2]) / one[k - 2]).abs();
    ensure(last < 1e-3 && one[k - 1] > 0.05, || {
        format!("alpha = 1: last change {last:e}, value {}", one[k - 1])
    })?;
    let mut inputs = 0;
    for alpha in [0.0, 0.5, 1.0] {
        let profile = SphericalConfig::power_law(10_000, 2.0, alpha, 0.5).map_err(fail)?.profile();
        for &n in &depths {
            let v = phase_report(PhaseInput::Spherical(&profile.truncated(n)), n).map_err(fail)?;
            ensure(v[1].conclusion == v[2].conclusion && v[1].capacity == v[2].capacity, || {
                format!("free and spin-glass differ at alpha = {alpha}, N = {n}")
            })?;
            inputs += 1;
        }
    }
    Ok(format!(
        "alpha = 0 slope {s:.4}; alpha = 1 last change {last:.1e}, cap3 {:.4}; {inputs} verdict pairs agree",
        one[k - 1]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("capacity recursion matches convex oracle", oracle_equivalence),
        ("p = 2 capacity equals series-parallel conductance", conductance_check),
        ("critical binary cap3 equals N^-1/2", critical_closed_form),
        ("plus root value inside capacity bracket", sandwich_bracket),
        ("recursive LLR matches enumeration", llr_enumeration),
        ("plus-measure boundary-law identities", identity_suite),
        ("spin-glass moment inequalities", moment_suite),
        ("percolation recursion cross-check", percolation_check),
        ("subdivision invariance", subdivision_invariance),
        ("Monte Carlo consistency", monte_carlo),
        ("alpha threshold sweep", alpha_threshold),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

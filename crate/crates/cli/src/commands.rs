use serde_json::json;
use treecap::capacity::{capacity_recursive, spherical_capacity, Resistances};
use treecap::criteria::{
    alpha_classify, alpha_sweep, AlphaVerdict, phase_report, subdivision_experiment, PhaseInput,
    SubdivisionSchedule,
};
use treecap::gibbs::{
    boundary_law_dp, mc_free_statistics, moments, percolation_prob, LawKind, MomentReport,
};
use treecap::recursion::{
    family_kappa_bounds, run_recursion, sandwich, sandwich_spherical, FamilyKind, KappaGrid,
    RecursionFamily, Sandwich,
};
use treecap::tree::{
    generate_spherical, serialize_tree, DegreeRule, EdgeBiases, RootedTree, SphericalProfile,
};

use crate::output::{csv_string, emit, json_num, json_string, num, opt_num};
use crate::params::{Input, Params};
use crate::CliError;

/// Trees up to this size get exact boundary-law moments in `report`.
const REPORT_VERTEX_LIMIT: u128 = 1 << 14;
const PERCOLATION_TOL: f64 = 1e-12;
const FOURTH_MOMENT_TOL: f64 = 1e-12;

fn out(params: &Params) -> Option<&std::path::Path> {
    params.out.as_deref()
}

pub fn gen(params: Params) -> Result<(), CliError> {
    let Input::Spherical(config) = params.input()? else {
        return Err(CliError::Input("gen needs --spherical".into()));
    };
    let tree = generate_spherical(&config)?;
    let summary = format!(
        "generated {} vertices, depth {}",
        tree.len(),
        tree.height()
    );
    emit(out(&params), &serialize_tree(&tree), &summary)
}

pub fn cap(params: Params) -> Result<(), CliError> {
    let p = params.p.unwrap_or(3.0);
    let q = params.q.unwrap_or(1);
    let (result, json) = match params.input()? {
        Input::Tree { tree, biases } => {
            let res = Resistances::from_biases(&tree, &biases, q)?;
            let r = capacity_recursive(&tree, &res, p)?;
            let j = r.to_json(Some(&tree));
            (r, j)
        }
        Input::Spherical(config) => {
            let r = spherical_capacity(&config.profile(), q, p)?;
            let j = r.to_json(None);
            (r, j)
        }
    };
    let mut json = json;
    json["q"] = json!(q);
    let summary = format!("cap_{p} = {} (q = {q})", num(result.value));
    emit(out(&params), &json_string(&json), &summary)
}

fn plus_sandwich(input: &Input) -> Result<(Sandwich, (f64, f64)), CliError> {
    let grid = KappaGrid::default();
    match input {
        Input::Tree { tree, biases } => {
            let family = RecursionFamily::ising(biases);
            let bounds = family.kappa_bounds(&grid)?;
            Ok((sandwich(tree, &family, &bounds)?, bounds.theorem_constants()))
        }
        Input::Spherical(config) => {
            let profile = config.profile();
            profile_sandwich(&profile, &grid)
        }
    }
}

fn profile_sandwich(
    profile: &SphericalProfile,
    grid: &KappaGrid,
) -> Result<(Sandwich, (f64, f64)), CliError> {
    let t = profile.thetas();
    let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounds = family_kappa_bounds(FamilyKind::IsingF, lo, hi, grid)?;
    let sw = sandwich_spherical(FamilyKind::IsingF, profile.degrees(), t, &bounds)?;
    Ok((sw, bounds.theorem_constants()))
}

pub fn plus(params: Params) -> Result<(), CliError> {
    let input = params.input()?;
    let n = input.depth();
    let (sw, (k1, k2)) = plus_sandwich(&input)?;
    let root_n = (n as f64).sqrt();
    let json = json!({
        "N": n,
        "x_o": json_num(sw.x_o),
        "cap3": json_num(sw.capacity),
        "lower": json_num(sw.lower),
        "upper": json_num(sw.upper),
        "kappa1": k1,
        "kappa2": k2,
        "scaled": {
            "x_o": json_num(sw.x_o * root_n),
            "lower": json_num(sw.lower * root_n),
            "upper": json_num(sw.upper * root_n),
        },
    });
    let summary = format!(
        "x_o = {}; x_o*sqrt(N) = {} in [{}, {}] (N = {n})",
        num(sw.x_o),
        num(sw.x_o * root_n),
        num(sw.lower * root_n),
        num(sw.upper * root_n)
    );
    emit(out(&params), &json_string(&json), &summary)
}

pub fn free(params: Params) -> Result<(), CliError> {
    let (tree, biases) = params.input()?.into_tree()?;
    let law = boundary_law_dp(&tree, &biases, LawKind::Free, tree.root())?;
    let report = moments(&tree, &biases)?;
    let m = report.m[tree.root()];
    let mut json = json!({ "m_o": json_num(m), "law": law.to_json() });
    let mut summary = format!("m_o = {}; free law has {} atoms", num(m), law.len());
    if let Some(n) = params.samples {
        let seed = params.seed.unwrap_or(0);
        let mc = mc_free_statistics(&tree, &biases, n, seed)?;
        let z = (mc.m.mean - m) / mc.m.std_err;
        json["monte_carlo"] = json!({
            "samples": n,
            "seed": seed,
            "m": { "mean": mc.m.mean, "std_err": mc.m.std_err },
            "u": { "mean": mc.u.mean, "std_err": mc.u.std_err },
        });
        summary.push_str(&format!(
            "; Monte Carlo m = {} +/- {} ({:.2} standard errors from exact)",
            num(mc.m.mean),
            num(mc.m.std_err),
            z
        ));
    }
    emit(out(&params), &json_string(&json), &summary)
}

fn check_fourth_moments(tree: &RootedTree, report: &MomentReport) -> Result<(), CliError> {
    for v in 0..tree.len() {
        let (u, s4) = (report.u[v], report.s4[v]);
        if u.is_finite() && s4 > 3.0 * u * u * (1.0 + FOURTH_MOMENT_TOL) {
            return Err(CliError::Verification(format!(
                "fourth moment exceeds three times the squared second moment at `{}`: {} > 3 * {}^2",
                tree.label(v),
                num(s4),
                num(u)
            )));
        }
    }
    Ok(())
}

pub fn sg(params: Params) -> Result<(), CliError> {
    let (tree, biases) = params.input()?.into_tree()?;
    let law = boundary_law_dp(&tree, &biases, LawKind::SpinGlass, tree.root())?;
    let report = moments(&tree, &biases)?;
    check_fourth_moments(&tree, &report)?;
    let (u, s4) = (report.u[tree.root()], report.s4[tree.root()]);
    let family = RecursionFamily::spin_glass(&biases);
    let bounds = family.kappa_bounds(&KappaGrid::default())?;
    let sw = sandwich(&tree, &family, &bounds)?;
    let json = json!({
        "u_o": json_num(u),
        "s4_o": json_num(s4),
        "law": law.to_json(),
        "recursion": {
            "x_o": json_num(sw.x_o),
            "cap2": json_num(sw.capacity),
            "lower": json_num(sw.lower),
            "upper": json_num(sw.upper),
        },
    });
    let summary = format!(
        "u_o = {}; s4_o / u_o^2 = {}; recursion x_o = {} in [{}, {}]",
        num(u),
        num(s4 / (u * u)),
        num(sw.x_o),
        num(sw.lower),
        num(sw.upper)
    );
    emit(out(&params), &json_string(&json), &summary)
}

pub fn perc(params: Params) -> Result<(), CliError> {
    let a = params
        .theta
        .ok_or_else(|| CliError::Input("perc needs the retention probability --theta".into()))?;
    let (tree, _) = params.input()?.into_tree()?;
    let direct = percolation_prob(&tree, a)?[tree.root()];
    let family = RecursionFamily::percolation(&tree, a)?;
    let x = run_recursion(&tree, &family, None)?.root();
    let from_llr = -(-x).exp_m1();
    let tol = params.tol.unwrap_or(PERCOLATION_TOL);
    if (from_llr - direct).abs() > tol {
        return Err(CliError::Verification(format!(
            "percolation recursion disagrees with the product recursion: {} vs {}",
            num(from_llr),
            num(direct)
        )));
    }
    let bounds = family.kappa_bounds(&KappaGrid::default())?;
    let sw = sandwich(&tree, &family, &bounds)?;
    let json = json!({
        "a": a,
        "probability": direct,
        "from_recursion": from_llr,
        "x_o": json_num(x),
        "cap2": json_num(sw.capacity),
        "lower": json_num(sw.lower),
        "upper": json_num(sw.upper),
    });
    let summary = format!(
        "P(root connects to the leaves) = {}; 1 - exp(-x_o) = {}",
        num(direct),
        num(from_llr)
    );
    emit(out(&params), &json_string(&json), &summary)
}

pub fn criterion(params: Params) -> Result<(), CliError> {
    let input = params.input()?;
    let n = input.depth();
    let profile = input.profile();
    let verdicts = match (&input, &profile) {
        (_, Some(p)) => phase_report(PhaseInput::Spherical(p), n)?,
        (Input::Tree { tree, biases }, None) => {
            phase_report(PhaseInput::Tree { tree, biases }, n)?
        }
        (Input::Spherical(_), None) => unreachable!("spherical inputs have a profile"),
    };
    let rows: Vec<Vec<String>> = verdicts
        .iter()
        .map(|v| {
            vec![
                v.boundary.as_str().into(),
                v.p.to_string(),
                v.q.to_string(),
                num(v.capacity),
                v.evidence.clone(),
                v.conclusion.as_str().into(),
                v.criterion.into(),
            ]
        })
        .collect();
    let csv = csv_string(
        &["boundary", "p", "q", "capacity", "evidence", "conclusion", "criterion"],
        &rows,
    )?;
    let mut summary = verdicts
        .iter()
        .map(|v| format!("{}: {}", v.boundary.as_str(), v.conclusion.as_str()))
        .collect::<Vec<_>>()
        .join("; ");
    if let Input::Spherical(config) = &input {
        if let DegreeRule::PowerLaw { base, alpha } = *config.degree_rule() {
            let theta = config.edge_rule().theta();
            if let Ok(v) = alpha_classify(base, theta, alpha) {
                let v = match v {
                    AlphaVerdict::UniqueState => "a unique plus state",
                    AlphaVerdict::MultipleStates => "multiple plus states",
                };
                summary.push_str(&format!("; critical power law with alpha = {alpha} predicts {v}"));
            }
        }
    }
    emit(out(&params), &csv, &summary)
}

struct ReportRow {
    n: usize,
    cap2: f64,
    cap3: f64,
    sandwich: Sandwich,
    moments: Option<(f64, f64)>,
}

fn root_moments(tree: &RootedTree, biases: &EdgeBiases) -> Result<Option<(f64, f64)>, CliError> {
    match moments(tree, biases) {
        Ok(r) => Ok(Some((r.m[0], r.u[0]))),
        Err(treecap::Error::AtomBudget { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn report(params: Params) -> Result<(), CliError> {
    let depths = params.n.clone();
    let input = params.input()?;
    let depths = if depths.is_empty() {
        vec![input.depth()]
    } else {
        depths
    };
    let grid = KappaGrid::default();
    let mut rows = Vec::new();
    for &n in &depths {
        let row = match &input {
            Input::Spherical(config) => {
                let config = config.with_depth(n)?;
                let profile = config.profile();
                let cap2 = spherical_capacity(&profile, 2, 2.0)?.value;
                let cap3 = spherical_capacity(&profile, 1, 3.0)?.value;
                let (sandwich, _) = profile_sandwich(&profile, &grid)?;
                let moments = if profile.vertex_count() <= REPORT_VERTEX_LIMIT {
                    let (tree, biases) = Input::Spherical(config).into_tree()?;
                    root_moments(&tree, &biases)?
                } else {
                    None
                };
                ReportRow { n, cap2, cap3, sandwich, moments }
            }
            Input::Tree { tree, .. } => {
                if n > tree.height() {
                    return Err(CliError::Input(format!(
                        "--N {n} exceeds the tree height {}",
                        tree.height()
                    )));
                }
                let t = tree.truncate(n);
                let b = EdgeBiases::new(&t, params.beta())?;
                let cap = |q: u32, p: f64| -> Result<f64, CliError> {
                    let r = Resistances::from_biases(&t, &b, q)?;
                    Ok(capacity_recursive(&t, &r, p)?.value)
                };
                let family = RecursionFamily::ising(&b);
                let bounds = family.kappa_bounds(&grid)?;
                ReportRow {
                    n,
                    cap2: cap(2, 2.0)?,
                    cap3: cap(1, 3.0)?,
                    sandwich: sandwich(&t, &family, &bounds)?,
                    moments: root_moments(&t, &b)?,
                }
            }
        };
        rows.push(row);
    }
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.cap2),
                num(r.cap3),
                num(r.sandwich.x_o),
                opt_num(r.moments.map(|m| m.0)),
                opt_num(r.moments.map(|m| m.1)),
                num(r.sandwich.lower),
                num(r.sandwich.upper),
            ]
        })
        .collect();
    let csv = csv_string(
        &["N", "cap2", "cap3", "x_o_plus", "m_o", "u_o", "lower_bound", "upper_bound"],
        &records,
    )?;
    emit(out(&params), &csv, &format!("wrote {} rows", records.len()))
}

fn depth_list(params: &Params, default: &[usize]) -> Vec<usize> {
    if params.n.is_empty() {
        default.to_vec()
    } else {
        params.n.clone()
    }
}

pub fn sweep_alpha(params: Params) -> Result<(), CliError> {
    let theta = params.theta.unwrap_or(0.5);
    let alphas = if params.alpha.is_empty() {
        vec![0.0, 0.5, 1.0]
    } else {
        params.alpha.clone()
    };
    let depths = depth_list(&params, &[100, 1000, 10_000]);
    let rows = alpha_sweep(1.0 / theta, theta, &alphas, &depths)?;
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.alpha.to_string(), r.n.to_string(), num(r.cap3), num(r.x_plus)])
        .collect();
    let csv = csv_string(&["alpha", "N", "cap3", "x_o_plus"], &records)?;
    emit(
        out(&params),
        &csv,
        &format!("wrote {} rows for {} alpha values", records.len(), alphas.len()),
    )
}

pub fn subdivide_exp(params: Params) -> Result<(), CliError> {
    let alpha = match params.alpha.as_slice() {
        [] => 1.0,
        [a] => *a,
        _ => return Err(CliError::Input("subdivide-exp takes a single --alpha".into())),
    };
    let mut schedules = vec![SubdivisionSchedule::ByGeneration];
    schedules.extend(params.epsilon.iter().map(|&e| SubdivisionSchedule::Epsilon(e)));
    let depths = depth_list(&params, &[100, 1000, 10_000]);
    let rows = subdivision_experiment(alpha, &schedules, &depths)?;
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.schedule.clone(),
                r.n.to_string(),
                num(r.cap3_before),
                num(r.cap3_after),
            ]
        })
        .collect();
    let csv = csv_string(&["schedule", "N", "cap3_before", "cap3_after"], &records)?;
    emit(out(&params), &csv, &format!("wrote {} rows", records.len()))
}

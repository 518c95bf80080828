use std::path::Path;
use std::process::{Command, Output};

fn treecap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treecap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn single_edge(dir: &Path) {
    std::fs::write(dir.join("t.tree"), "root o\nedge o a theta=0.5\n").unwrap();
}

#[test]
fn capacity_of_single_edge_is_inverse_resistance() {
    let dir = tempfile::tempdir().unwrap();
    single_edge(dir.path());
    let o = treecap(
        &["cap", "--tree", "t.tree", "--p", "3", "--q", "1", "--beta", "1.0", "--out", "c.json"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("cap_3 = 5.00000000000e-1"));
    assert_eq!(json(&dir.path().join("c.json"))["value"], 0.5);
}

#[test]
fn plus_value_lies_in_printed_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(
        &["plus", "--spherical", "d=2;theta=0.5", "--N", "100", "--out", "p.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let j = json(&dir.path().join("p.json"));
    let s = &j["scaled"];
    let (lo, x, hi) = (
        s["lower"].as_f64().unwrap(),
        s["x_o"].as_f64().unwrap(),
        s["upper"].as_f64().unwrap(),
    );
    assert!(lo <= x && x <= hi);
    assert_eq!(j["N"], 100);
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(&["verify", "--suite", "all"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 11);
}

#[test]
fn failed_check_exits_two_and_names_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(&["verify", "--suite", "capacity", "--tol", "1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL capacity-oracle-equivalence: recursive capacity equals"));
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    single_edge(dir.path());
    for args in [
        &["cap", "--tree", "t.tree", "--p", "1"][..],
        &["cap", "--tree", "missing.tree"],
        &["plus", "--spherical", "d=2;theta=1.5;N=3"],
        &["free", "--tree", "t.tree", "--samples", "0"],
        &["perc", "--tree", "t.tree"],
    ] {
        let o = treecap(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn config_file_fills_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    single_edge(dir.path());
    std::fs::write(dir.path().join("run.toml"), "tree = \"t.tree\"\np = 2.0\nq = 2\n").unwrap();
    let o = treecap(&["cap", "--config", "run.toml", "--out", "a.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(json(&dir.path().join("a.json"))["value"], 0.25);
    let o = treecap(&["cap", "--config", "run.toml", "--q", "1", "--out", "b.json"], dir.path());
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("b.json"))["value"], 0.5);
    std::fs::write(dir.path().join("bad.toml"), "colour = 1\n").unwrap();
    let o = treecap(&["cap", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let o = treecap(
            &[
                "free", "--spherical", "d=2;theta=0.5;N=3", "--samples", "5000", "--seed", "9",
                "--out", name,
            ],
            dir.path(),
        );
        assert!(o.status.success());
        std::fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn report_csv_has_fixed_columns_and_precision() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(
        &["report", "--spherical", "d=2;theta=0.5", "--N", "1,4,100", "--out", "r.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,cap2,cap3,x_o_plus,m_o,u_o,lower_bound,upper_bound"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 8));
    assert_eq!(rows[2][2], "1.00000000000e-1");
    assert_eq!(rows[0][4], format!("{:.11e}", 3f64.ln()));
}

#[test]
fn sweep_and_subdivision_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(&["sweep-alpha", "--alpha", "0,1", "--N", "100,400"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("alpha,N,cap3,x_o_plus\n"));
    assert!(text.contains("0,400,5.00000000000e-2,"));

    let o = treecap(
        &["subdivide-exp", "--alpha", "1", "--epsilon", "0.5", "--N", "50,200"],
        dir.path(),
    );
    assert!(o.status.success());
    for line in stdout(&o).lines().filter(|l| l.starts_with("epsilon=0.5")) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2], f[3]);
    }
}

#[test]
fn percolation_rational_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(
        &["perc", "--spherical", "d=2;theta=0.5;N=2", "--theta", "0.5", "--out", "p.json"],
        dir.path(),
    );
    assert!(o.status.success());
    let p = json(&dir.path().join("p.json"))["probability"].as_f64().unwrap();
    assert!((p - 39.0 / 64.0).abs() < 1e-15);
}

#[test]
fn gen_round_trips_through_tree_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = treecap(&["gen", "--spherical", "d=3;theta=0.4;N=2", "--out", "g.tree"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("13 vertices"));
    let o = treecap(&["criterion", "--tree", "g.tree"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("boundary,p,q,capacity,evidence,conclusion,criterion\n"));
}

use std::process::{Command, Output};

fn qnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnm"))
        .args(args)
        .env_remove("QNM_WORKERS")
        .output()
        .expect("qnm runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

const SLAB: &str = "kind = \"wave\"\ndomain_left = 0.0\na = 1.0\nsegments = [[0.0, 1.0, 4.0]]\ndeltas = []\n";

#[test]
fn spectrum_of_a_slab_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slab.cfg");
    std::fs::write(&path, SLAB).unwrap();
    let o = qnm(&["spectrum", "--model", path.to_str().unwrap(), "--box", "-1,10,-3,0"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    // n = 2: Re ω = (j + ½)π/2, Im ω = −ln 3/4.
    assert_eq!(r.len(), 7);
    for (j, row) in r.iter().skip(1).enumerate() {
        assert!((row[0] - (j as f64 + 0.5) * std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert!((row[1] + 3f64.ln() / 4.0).abs() < 1e-10);
        assert_eq!(row[2], 1.0);
    }
}

#[test]
fn spectrum_of_builtin_has_one_double_entry() {
    let o = qnm(&["spectrum", "--builtin", "1", "--box", "-1,1,-3,-1"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], 2.0);
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = qnm(&["spectrum", "--builtin", "0.5", "--omega-max", "8", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(qnm(&["spectrum", "--model", "/nonexistent/model.cfg"]).status.code(), Some(2));
    assert_eq!(qnm(&["spectrum"]).status.code(), Some(2));
    assert_eq!(qnm(&["spectrum", "--builtin", "1", "--box", "1,0,-1,0"]).status.code(), Some(2));
    assert_eq!(qnm(&["bogus"]).status.code(), Some(2));
    assert_eq!(qnm(&["pt-critical", "--L", "-5"]).status.code(), Some(2));
    assert_eq!(qnm(&["construct", "--profile", "power:2.058:5"]).status.code(), Some(2));
    assert_eq!(qnm(&["spectrum", "--builtin", "1", "--tolerance", "-1"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_qnm"))
        .args(["pt-critical"])
        .env("QNM_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    // A seed far from every zero leaves the Newton basin.
    let o = qnm(&["jordan", "--builtin", "1", "--omega", "100,-50"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn worker_count_does_not_change_results() {
    let run = |n: &str| {
        Command::new(env!("CARGO_BIN_EXE_qnm"))
            .args(["spectrum", "--builtin", "2", "--omega-max", "10"])
            .env("QNM_WORKERS", n)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn jordan_block_products_are_anti_diagonal() {
    let o = qnm(&["jordan", "--builtin", "1", "--format", "structured"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("multiplicity = 2"));
    let res: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("anti_diagonal_residual = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(res < 1e-8);
}

#[test]
fn jordan_falls_back_to_a_simple_mode() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slab.cfg");
    std::fs::write(&path, SLAB).unwrap();
    let o = qnm(&["jordan", "--model", path.to_str().unwrap(), "--omega", "0.8,-0.3", "--samples", "5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "x,re_f0,im_f0,re_fhat0,im_fhat0");
    assert_eq!(s.lines().count(), 6);
}

#[test]
fn evolve_at_time_zero_reproduces_the_pulse() {
    let o = qnm(&["evolve", "--builtin", "1", "--times", "0", "--omega-max", "40", "--gamma-max", "10", "--dx", "2e-3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert!(r[0][1] < 1e-3, "{:?}", r);
}

#[test]
fn perturb_reports_alpha_and_nongeneric_shift() {
    let o = qnm(&["perturb", "--format", "structured", "--lambda", "1e-4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("alpha = [-3.0975184479"));
    assert!(s.contains("generic = true"));
    let o = qnm(&["perturb", "--perturbation", "k-shift", "--format", "structured"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("generic = false"));
}

#[test]
fn perturb_with_zero_lambda_leaves_the_pole() {
    let o = qnm(&["perturb", "--lambda", "0"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    for row in r {
        assert!(row[2].abs() < 1e-15);
        assert!((row[3] + 2.0370969464656).abs() < 1e-10);
    }
}

#[test]
fn construct_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k1.cfg");
    let o = qnm(&[
        "construct",
        "--profile",
        "sinh:1",
        "--segments",
        "8",
        "--format",
        "structured",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m = qnm_core::model::load_model(&path).unwrap();
    let expect = qnm_core::model::builtin_double_pole_model(1.0).unwrap();
    assert_eq!(m.segments().len(), 8);
    for s in m.segments() {
        assert!((s.value - expect.segments()[0].value).abs() < 1e-12);
    }
    assert!((m.deltas()[0].mu - expect.deltas()[0].mu).abs() < 1e-12);
}

#[test]
fn construct_linear_profile() {
    let o = qnm(&["construct", "--profile", "linear"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][0], 2.0);
    assert_eq!(r[0][1], 0.25);
}

#[test]
fn search3_empty_range() {
    let o = qnm(&["search3", "--n", "5", "--range", "0.5,1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "alpha,W02,mu,admissible\n");
}

#[test]
fn pt_critical_sweep() {
    let o = qnm(&["pt-critical", "--L", "3,5,8"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert!((r[1][1] - 0.252279109).abs() < 1e-6);
    // Critical values approach the untruncated merge at V₀ = ¼, ω = −i/2.
    assert!(r[0][1] > r[1][1] && r[1][1] > r[2][1] && r[2][1] > 0.25);
    assert!(r[0][3] < r[1][3] && r[1][3] < r[2][3] && r[2][3] < -0.5);
}

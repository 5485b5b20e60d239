use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rigid-dmoc");

fn maneuver(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("maneuvers").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const SPHERE: &str = r#"
inertia = { diag = [2.0, 2.0, 2.0] }
r0 = { matrix = [1, 0, 0, 0, 1, 0, 0, 0, 1] }
rN = { matrix = [1, 0, 0, 0, 1, 0, 0, 0, 1] }
omega0 = [0.0, 0.0, 0.5]
omegaNm1 = [0.0, 0.0, 0.5]
T = 1.0
N = 10
"#;

#[test]
fn solve_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("t{i}.csv"));
        let rep = dir.path().join(format!("r{i}.toml"));
        let svg = dir.path().join(format!("p{i}.svg"));
        let out = run(&["solve", maneuver("quarter_turn.toml").to_str().unwrap(), "--out", csv.to_str().unwrap(), "--report", rep.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read(&csv).unwrap());
        let text = fs::read_to_string(&rep).unwrap();
        reports.push(text.lines().filter(|l| !l.starts_with("wall_time_s")).collect::<Vec<_>>().join("\n"));
        assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0].contains("converged = true"));
}

#[test]
fn rest_solution_has_zero_cost_and_constant_attitude() {
    let out = run(&["solve", maneuver("rest.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let r = rows(&csv);
    assert_eq!(r.len(), 17);
    for row in &r {
        assert_eq!(&row[2..11], &r[0][2..11]);
        assert!(row[14..17].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn simulate_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = maneuver("quarter_turn.toml");
    let first = dir.path().join("a.csv");
    let out = run(&["solve", spec.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let second = dir.path().join("b.csv");
    let out = run(&["simulate", spec.to_str().unwrap(), "--torques", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(first).unwrap(), fs::read(second).unwrap());
}

#[test]
fn simulate_spherical_body_spins_uniformly() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", SPHERE);
    let torques = write(dir.path(), "tau.csv", &format!("tx,ty,tz\n{}", "0,0,0\n".repeat(9)));
    let out = run(&["simulate", file.to_str().unwrap(), "--torques", torques.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for (k, row) in rows(&String::from_utf8(out.stdout).unwrap()).iter().enumerate() {
        let v: Vec<f64> = row[2..11].iter().map(|s| s.parse().unwrap()).collect();
        let a = 0.05 * k as f64;
        let want = [a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0];
        for (got, w) in v.iter().zip(want) {
            assert!((got - w).abs() <= 1e-12, "k = {k}");
        }
    }
}

#[test]
fn malformed_inertia_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SPHERE.replace("{ diag = [2.0, 2.0, 2.0] }", "{ matrix = [1, 0.5, 0, 0, 1, 0, 0, 0, 1] }");
    let file = write(dir.path(), "bad.toml", &bad);
    let out = run(&["solve", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let unknown = write(dir.path(), "u.toml", &format!("{SPHERE}\nmass = 3.0\n"));
    assert_eq!(run(&["solve", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["solve", dir.path().join("missing.toml").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn non_finite_torque_is_a_simulation_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", SPHERE);
    let torques = write(dir.path(), "tau.csv", &format!("tx,ty,tz\n{}NaN,0,0\n", "0,0,0\n".repeat(8)));
    let out = run(&["simulate", file.to_str().unwrap(), "--torques", torques.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn iteration_cap_reports_nonconvergence_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(maneuver("slew_up.toml")).unwrap().replace("max_iterations = 200", "max_iterations = 1");
    assert!(text.contains("max_iterations = 1\n"));
    let file = write(dir.path(), "capped.toml", &text.replace("N = 128", "N = 32"));
    let rep = dir.path().join("r.toml");
    let out = run(&["solve", file.to_str().unwrap(), "--report", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(fs::read_to_string(rep).unwrap().contains("converged = false"));
}

#[test]
fn validate_exit_codes_follow_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("v.toml");
    let ok = run(&["validate", maneuver("rest.toml").to_str().unwrap(), "--report", rep.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(fs::read_to_string(&rep).unwrap().contains("group_drift"));
    let bad = run(&["validate", maneuver("quarter_turn.toml").to_str().unwrap(), "--checks", "refinement"]);
    assert_eq!(bad.status.code(), Some(5));
    let typo = run(&["validate", maneuver("rest.toml").to_str().unwrap(), "--checks", "equivalence"]);
    assert_eq!(typo.status.code(), Some(2));
}

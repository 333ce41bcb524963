use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn flipflop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flipflop")).args(args).output().expect("binary runs")
}

fn run_config(name: &str, args: &[&str]) -> Output {
    let cfg = config(name);
    let mut all = vec!["--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    flipflop(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn find_foldfold_reports_both_points() {
    let o = run_config("section4-reproduction.toml", &["--json", "find-foldfold"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert_eq!(v["model"]["kind"], "glacial");
    assert_eq!(v["model"]["params"]["t_bar_minus"], 0.1);
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    assert_eq!(code(&run_config("section4-reproduction.toml", &["check"])), 0);
    assert_eq!(code(&run_config("synthetic-planted.toml", &["check"])), 0);
    for bad in ["synthetic-same-sign-h.toml", "synthetic-no-gx.toml", "synthetic-flipped-slopes.toml"] {
        assert_eq!(code(&run_config(bad, &["check"])), 1, "{bad}");
    }
}

#[test]
fn tampered_point_fails_the_residual_gate() {
    let o = run_config("section4-reproduction.toml", &["--point", "5.0810511111360066,0.94879614625670361,1.0,-10.020161517411422", "check"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn polish_refines_a_rounded_point() {
    let args = ["--point", "5.08105111,0.94879615,0.91807383,-10.0202", "check"];
    assert_eq!(code(&run_config("section4-reproduction.toml", &args)), 3);
    let mut polished = vec!["--polish"];
    polished.extend_from_slice(&args);
    assert_eq!(code(&run_config("section4-reproduction.toml", &polished)), 0);
}

#[test]
fn negative_epsilon_is_a_config_error() {
    assert_eq!(code(&run_config("section4-reproduction.toml", &["simulate", "--eps", "-1e-3"])), 2);
    assert_eq!(code(&run_config("section4-reproduction.toml", &["predict", "--eps", "-1e-3"])), 2);
}

#[test]
fn predict_is_refused_for_an_inapplicable_point() {
    assert_eq!(code(&run_config("synthetic-same-sign-h.toml", &["predict"])), 1);
}

#[test]
fn empty_seed_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "[model]\nkind = \"synthetic\"\npreset = \"planted\"\n[bifurcation]\nseeds = []\n").unwrap();
    assert_eq!(code(&flipflop(&["--config", path.to_str().unwrap(), "find-foldfold"])), 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[model]\nkind = \"synthetic\"\npreset = \"planted\"\ncolour = 1\n").unwrap();
    assert_eq!(code(&flipflop(&["--config", path.to_str().unwrap(), "check"])), 2);
}

#[test]
fn predict_rows_scale_with_sqrt_epsilon() {
    let v = json(&run_config("section4-reproduction.toml", &["--json", "predict", "--eps", "1e-3,1e-5"]));
    let rows = v["rows"].as_array().unwrap();
    let t = |i: usize| rows[i]["period_predicted"].as_f64().unwrap();
    assert!((t(0) / t(1) - 10.0).abs() < 1e-12);
    assert_eq!(v["stable_branch"], "lower");
}

#[test]
fn check_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run_config("section4-reproduction.toml", &["--out", out, "check"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("check.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let p = &v["point"];
    let point = format!(
        "{},{},{},{}",
        p["x0"].as_f64().unwrap(),
        p["y0"].as_f64().unwrap(),
        p["z0"].as_f64().unwrap(),
        p["param_value"].as_f64().unwrap()
    );
    let again = json(&run_config("section4-reproduction.toml", &["--json", "--point", &point, "check"]));
    assert_eq!(again["verdict"], v["verdict"]);
    assert_eq!(again["coefficients"], v["coefficients"]);
}

#[test]
fn simulate_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run_config("section4-reproduction.toml", &["--out", out, "simulate", "--eps", "1e-3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,x,y,z,region,H");
    assert!(traj.lines().count() > 100);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cycle_report.json")).unwrap()).unwrap();
    let c = &report["cycle"];
    let sim = c["period_simulated"].as_f64().unwrap();
    let newton = c["period_newton"].as_f64().unwrap();
    assert!((sim / newton - 1.0).abs() < 1e-3, "{c}");
}

#[test]
fn verify_passes_on_planted_and_glacial() {
    assert_eq!(code(&run_config("synthetic-planted.toml", &["verify"])), 0);
    let o = run_config("section4-reproduction.toml", &["--json", "verify", "--eps", "1e-3,1e-4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o)["all_pass"], true);
}

#[test]
fn forcing_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("orbit.csv");
    std::fs::write(&series, "t,e,beta\n0,0,0\n1,0.0167,0.4091\n2,0.05,1.5707963267948966\n").unwrap();
    let out = dir.path().join("forcing.csv");
    let o = flipflop(&["forcing", series.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "Q", "s2"]);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], 343.0);
    assert!((rows[2][2] + 0.3125).abs() < 1e-12);
}

#[test]
fn malformed_series_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("orbit.csv");
    std::fs::write(&series, "t,e,beta\n0,1.5,0\n").unwrap();
    assert_eq!(code(&flipflop(&["forcing", series.to_str().unwrap(), "--output", "/dev/null"])), 2);
}

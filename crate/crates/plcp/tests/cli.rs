use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn plcp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcp")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = plcp(&["list-experiments"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "fig2_validation",
        "fig3_interference_models",
        "fig4_association_sweep",
        "fig5_rat_selection",
        "fig6_coverage_sweep",
        "fig7_mm_gain",
        "custom",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn validate_prints_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "experiment = \"fig5_rat_selection\"\n[params]\ng0_db = 25\n").unwrap();
    let out = plcp(&["validate", "c.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("g0_db = 25"), "{text}");
    assert!(text.contains("lambda_ou_per_km = 10"), "{text}");
}

#[test]
fn validate_reports_every_problem_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "experiment = \"custom\"\ntrials = -4\n[params]\nh_m = 0\n").unwrap();
    let out = plcp(&["validate", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let text = stderr(&out);
    assert!(text.contains("line 2"), "{text}");
    assert!(text.contains("line 4") && text.contains("params.h_m"), "{text}");
}

#[test]
fn missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plcp(&["run", "nope.toml"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nope.toml"));
}

#[test]
fn run_writes_artifacts_and_replays_from_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = "experiment = \"fig4_association_sweep\"\ntrials = 400\nseed = 5\n[sweep]\nparameter = \"lambda_s_per_km\"\nvalues = [1, 10]\n";
    fs::write(dir.path().join("c.toml"), config).unwrap();
    let out = plcp(&["run", "c.toml", "--out", "first"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let first = dir.path().join("first");
    for f in ["fig4_association_sweep.csv", "fig4_association_sweep.svg", "manifest.json"] {
        assert!(first.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(first.join("fig4_association_sweep.csv")).unwrap();
    assert!(csv.starts_with("lambda_r_per_km2,lambda_s_per_km,class,analytic,simulated,stderr,gap\n"), "{csv}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["trials"], 400);

    let out = plcp(&["run", "first/manifest.json", "--out", "second"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let again = fs::read_to_string(dir.path().join("second/fig4_association_sweep.csv")).unwrap();
    assert_eq!(csv, again);

    let out = plcp(&["run", "c.toml", "--seed", "6", "--out", "third"], dir.path());
    assert!(out.status.success());
    let reseeded = fs::read_to_string(dir.path().join("third/fig4_association_sweep.csv")).unwrap();
    assert_ne!(csv, reseeded);
}

#[test]
fn engine_flags_select_one_engine() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "experiment = \"fig5_rat_selection\"\n[sweep]\nparameter = \"lambda_s_per_km\"\nvalues = [2]\n",
    )
    .unwrap();
    let out = plcp(&["run", "c.toml", "--no-sim", "--out", "a"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest = fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("\"simulate\": false"), "{manifest}");
    let out = plcp(&["run", "c.toml", "--no-sim", "--no-analytic"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn seeds_beyond_the_toml_range_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "experiment = \"fig5_rat_selection\"\n").unwrap();
    let out = plcp(&["run", "c.toml", "--seed", "18446744073709551615"], dir.path());
    assert!(!out.status.success());
}

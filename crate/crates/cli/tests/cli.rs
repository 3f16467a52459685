use std::path::Path;
use std::process::{Command, Output};

fn stochdom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochdom"))
        .args(args)
        .env_remove("STOCHDOM_SEED_OFFSET")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const SMALL_PORTFOLIO: &str = r#"{
    "version": 1,
    "experiment": "portfolio",
    "methods": ["lsd", "sgd", {"mean_variance": [0.1, 0.5, 1.0]}],
    "seeds": [0, 1, 2],
    "market": {"assets": 5, "mixtures": 2, "seed": 4},
    "lsd": {"batch": 128, "tbar_max": 10},
    "baseline": {"steps": 40, "batch": 64}
}"#;

#[test]
fn portfolio_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", SMALL_PORTFOLIO);
    let out = dir.path().join("out");
    let o = stochdom(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let metrics: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.starts_with("metrics_").then_some(name)
        })
        .collect();
    assert_eq!(metrics.len(), 15, "{metrics:?}");
    for label in [
        "lsd",
        "sgd",
        "mean_variance_0.1",
        "mean_variance_0.5",
        "mean_variance_1",
    ] {
        for seed in 0..3 {
            for prefix in ["metrics", "theta"] {
                assert!(out.join(format!("{prefix}_{label}_{seed}.json")).exists());
            }
            assert!(out.join(format!("trace_{label}_{seed}.ndjson")).exists());
            assert!(out.join(format!("f2_{label}_{seed}.csv")).exists());
        }
    }
    let m = json(&out.join("metrics_lsd_0.json"));
    assert!(m["variance"].as_f64().unwrap() >= 0.0, "{m}");
    assert_eq!(m["method"], "lsd");
    assert!(m["termination"].is_string(), "{m}");
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["runs"].as_array().unwrap().len(), 15);
}

#[test]
fn seed_offset_shifts_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"version": 1, "experiment": "portfolio", "methods": ["sgd"], "seeds": [0],
            "market": {"assets": 3, "seed": 1}, "baseline": {"steps": 5, "batch": 16}}"#,
    );
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_stochdom"))
        .args(["run", &cfg, "--out", out.to_str().unwrap()])
        .env("STOCHDOM_SEED_OFFSET", "7")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("metrics_sgd_7.json").exists());
}

#[test]
fn cliffwalk_run_writes_traces_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"version": 1, "experiment": "cliffwalk",
            "methods": ["lsd", "reinforce", {"cvar_pg": [0.1]}], "seeds": [0],
            "lsd": {"batch": 64, "tbar_max": 5}, "baseline": {"steps": 20, "batch": 64}}"#,
    );
    let out = dir.path().join("out");
    let o = stochdom(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for label in ["lsd", "reinforce", "cvar_pg_0.1"] {
        assert!(out.join(format!("metrics_{label}_0.json")).exists());
        assert!(out.join(format!("f2_{label}_0.csv")).exists());
    }
    let trace = std::fs::read_to_string(out.join("trace_lsd_0.ndjson")).unwrap();
    for line in trace.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn compare_identical_files_is_indistinguishable() {
    let dir = tempfile::tempdir().unwrap();
    let samples = "0.5\n-1.25\n2\n\n0.75\n";
    let x = write(dir.path(), "x.txt", samples);
    let y = write(dir.path(), "y.txt", samples);
    let o = stochdom(&["compare", &x, &y, "--a", "-2", "--b", "3", "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["gap_xy"].as_f64(), Some(0.0));
    assert_eq!(report["gap_yx"].as_f64(), Some(0.0));
    assert_eq!(report["verdict"], "indistinguishable");

    let o = stochdom(&["compare", &x, &y, "--a", "-2", "--b", "3", "--k", "1"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("indistinguishable"));
}

#[test]
fn compare_detects_a_shift() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.txt", "1\n2\n3\n");
    let y = write(dir.path(), "y.txt", "0\n1\n2\n");
    let o = stochdom(&["compare", &x, &y, "--a", "-1", "--b", "4", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdict"], "x_dominates");
}

#[test]
fn exit_codes_separate_config_and_run_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"version": 1, "experiment": "portfolio""#,
    );
    assert_eq!(stochdom(&["run", &bad]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"version": 1, "experiment": "portfolio", "methods": ["reinforce"], "seeds": [0],
            "market": {"assets": 3}}"#,
    );
    assert_eq!(stochdom(&["run", &unknown]).status.code(), Some(2));
    let missing = dir.path().join("nope.txt");
    let o = stochdom(&[
        "compare",
        missing.to_str().unwrap(),
        missing.to_str().unwrap(),
        "--a",
        "0",
        "--b",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));

    // Output directory blocked by a regular file: accepted config, failed run.
    let cfg = write(
        dir.path(),
        "ok.json",
        r#"{"version": 1, "experiment": "portfolio", "methods": ["sgd"], "seeds": [0],
            "market": {"assets": 3}, "baseline": {"steps": 2, "batch": 8}}"#,
    );
    let blocker = write(dir.path(), "blocker", "");
    let out = format!("{blocker}/sub");
    assert_eq!(
        stochdom(&["run", &cfg, "--out", &out]).status.code(),
        Some(1)
    );
}

#[test]
fn dump_spec_resolves_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", SMALL_PORTFOLIO);
    let o = stochdom(&["dump-spec", &cfg]);
    assert!(o.status.success());
    let spec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(spec["market"]["components"].as_array().unwrap().len(), 2);
    assert_eq!(spec["lsd"]["batch"], 128);
    assert!(spec["lsd"]["epsilon"].is_number());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = stochdom(&["dump-spec", path.to_str().unwrap()]);
        assert!(
            o.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

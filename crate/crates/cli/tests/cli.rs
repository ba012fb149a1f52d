use std::path::Path;
use std::process::{Command, Output};

fn wickthermo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wickthermo"))
        .args(args)
        .env_remove("WICKTHERMO_DIMENSION_CAP")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: &str = r#"
seed = 7

[[scenario]]
id = "small-sweep"
kind = "monotonicity"
grid = { points = 4 }
field = { mass = 1.0 }
states = { beta_grid = { min = 0.5, max = 4.0, count = 5 }, limit_beta = 64.0 }

[[scenario]]
id = "small-perturbed"
kind = "perturbed_states"
grid = { points = 4 }
field = { mass = 1.0 }
checks = { states = 4 }
"#;

#[test]
fn shipped_configuration_validates() {
    let out = wickthermo(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("9 scenarios valid"));
}

#[test]
fn malformed_toml_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "[[scenario\n");
    let out = wickthermo(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("docs/config-schema.md"));
}

#[test]
fn negative_beta_is_reported_with_its_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "neg.toml",
        "[[scenario]]\nid = \"a\"\nkind = \"lapse_scaling\"\nstates = { betas = [1.0, -1.0] }\n",
    );
    let out = wickthermo(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("scenario[0].states.betas[1]"), "{}", stderr(&out));
}

#[test]
fn compact_coupling_outside_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "xi.toml",
        "[[scenario]]\nid = \"a\"\nkind = \"positive_compact\"\ngeometry = { model = \"quartic_shell\" }\nfield = { xi = [0.05, 0.2] }\n",
    );
    let out = wickthermo(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("scenario[0].field.xi[1]"), "{}", stderr(&out));
}

#[test]
fn torus_below_four_points_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "t.toml", "[[scenario]]\nid = \"a\"\nkind = \"perturbed_states\"\ngrid = { points = 3 }\n");
    let out = wickthermo(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("scenario[0].grid.points"), "{}", stderr(&out));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "unk.toml", "[[scenario]]\nid = \"a\"\nkind = \"lapse_scaling\"\nbogus = 1\n");
    let out = wickthermo(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn unknown_scenario_id_is_a_usage_error() {
    let out = wickthermo(&["run", "--scenario", "no-such-scenario"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no-such-scenario"));
}

#[test]
fn list_shows_every_kind_and_configured_ids() {
    let out = wickthermo(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for kind in [
        "monotonicity",
        "counterexample",
        "positive_noncompact",
        "positive_compact",
        "comparison",
        "reduction",
        "calibration",
        "lapse_scaling",
        "perturbed_states",
    ] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind} missing");
    }
    let out = wickthermo(&["list", "--config", "default"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("counterexample-exp"));
    assert!(text.contains("perturbed-torus"));
}

/// Report JSON with the fields that legitimately vary between runs removed.
fn stable_json(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("generated_at");
    obj.remove("runtime_seconds");
    v
}

#[test]
fn runs_write_reports_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = wickthermo(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for stem in ["small-sweep", "small-perturbed"] {
        let name = format!("{stem}.json");
        assert_eq!(stable_json(&a.join(&name)), stable_json(&b.join(&name)));
    }
    let report = stable_json(&a.join("small-sweep.json"));
    assert_eq!(report["status"], "pass");
    assert_eq!(report["provenance"]["seed"], 7);
    assert_eq!(report["provenance"]["config_hash"].as_str().unwrap().len(), 64);

    let csv = std::fs::read_to_string(a.join("small-sweep_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("beta,w,w_error,temperature,defined_flag"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|r| r[1][1] < r[0][1]));
    assert!(rows.iter().all(|r| r[4] == 1.0 && (r[3] * r[3] - 12.0 * r[1]).abs() < 1e-12 * r[3] * r[3]));
    assert_eq!(std::fs::read(a.join("small-sweep_sweep.csv")).unwrap(), std::fs::read(b.join("small-sweep_sweep.csv")).unwrap());
}

#[test]
fn seed_override_changes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = wickthermo(&[
        "run",
        "--config",
        &config,
        "--scenario",
        "small-perturbed",
        "--seed",
        "99",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stable_json(&out_dir.join("small-perturbed.json"))["provenance"]["seed"], 99);
    assert!(!out_dir.join("small-sweep.json").exists());
}

#[test]
fn dimension_cap_can_be_lowered_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_wickthermo"))
        .args(["run", "--config", &config, "--scenario", "small-sweep"])
        .env("WICKTHERMO_DIMENSION_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("resource cap 10"), "{}", stderr(&out));
}

#[test]
fn sweep_prints_csv_rows() {
    let out = wickthermo(&["sweep", "--points", "4", "--mass", "1", "--count", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,w,w_error,temperature,defined_flag"));
    assert_eq!(lines.take_while(|l| !l.starts_with("PASS")).count(), 3);
}

use std::path::Path;
use std::process::{Command, Output};

fn cellfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellfree"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lists_eight_presets() {
    let out = cellfree(&["list-presets"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names.len(), 8);
    assert!(names.iter().any(|n| n == "fig-learning"));
    assert!(names.iter().any(|n| n == "fig-ber"));
}

#[test]
fn unknown_scheme_fails_with_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("r.csv");
    let out = cellfree(&["run", "--preset", "fig-tiny-opa", "--schemes", "FOO", "--out", path(&out_csv)]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("FOO") && err.contains("MMSE") && err.contains("UPA"), "{err}");
    assert!(!out_csv.exists());
}

#[test]
fn unknown_preset_fails_with_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = cellfree(&["run", "--preset", "fig-nope", "--out", path(&dir.path().join("r.csv"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("fig-antenna-split"), "{err}");
}

#[test]
fn learning_run_writes_cost_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("sub/learning.csv");
    let out = cellfree(&["run", "--preset", "fig-learning", "--trials", "2", "--out", path(&out_csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scheme,iteration,cost_mean,cost_se,trials,seed"));
    // T updates plus the starting point.
    assert_eq!(lines.count(), 6);
    let sidecar = std::fs::read_to_string(dir.path().join("sub/learning.config.json")).unwrap();
    assert!(sidecar.contains("\"preset\": \"fig-learning\""), "{sidecar}");
}

#[test]
fn sweep_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out_csv = dir.path().join(name);
        let args = ["run", "--preset", "fig-tiny-opa", "--trials", "2", "--seed", seed, "--schemes", "MMSE+OPA+ES,ZF+UPA+LS"];
        let out = cellfree(&[&args[..], &["--out", path(&out_csv)]].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&out_csv).unwrap()
    };
    let a = run("a.csv", "7");
    assert_eq!(a, run("b.csv", "7"));
    assert_ne!(a, run("c.csv", "8"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("scheme,axis_name,axis_value,sum_rate_mean"));
    assert_eq!(text.lines().count(), 1 + 2 * 6);
}

#[test]
fn validate_accepts_config_with_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "rng_seed = 3\nshadow_sigma_db = 6.0\n").unwrap();
    assert!(cellfree(&["validate", "--config", path(&cfg)]).status.success());
    let names = String::from_utf8(cellfree(&["list-presets"]).stdout).unwrap();
    for name in names.lines() {
        let out = cellfree(&["validate", "--config", path(&cfg), "--preset", name]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn validate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "num_aps = 4\nnum_users = 2\nselected_aps = 9\n").unwrap();
    let out = cellfree(&["validate", "--config", path(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("selected_aps"));

    std::fs::write(&cfg, "num_apps = 4\n").unwrap();
    assert!(!cellfree(&["validate", "--config", path(&cfg)]).status.success());
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn piece(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piece")).args(args).env_remove("PIECE_JOBS").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn preset_config(preset: &str) -> String {
    format!(
        r#"{{"plant": "{preset}", "algorithms": ["piece", "lw", "ce"],
            "noise": {{"kind": "truncated_gaussian", "sigma": 0.6}}, "T": 300, "n_runs": 4, "master_seed": 11}}"#
    )
}

fn field(stdout: &str, label: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no {label} line"));
    line[label.len()..].trim().parse().unwrap()
}

#[test]
fn hyperparams_reports_plant_constants() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, rho, norm, tol) in
        [("example1", 0.8986, 5.1, 0.05), ("example2", 0.6782, 4.69, 0.01), ("example3", 0.8282, 3.36, 0.01)]
    {
        let cfg = write_config(dir.path(), "c.json", &preset_config(preset));
        let out = piece(&["hyperparams", &cfg]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!((field(&text, "rho (spectral radius of A)") - rho).abs() <= 5e-5, "{preset}");
        assert!((field(&text, "||lambda||_2") - norm).abs() <= tol, "{preset}");
        for label in ["C1", "M(Theta)", "delta1", "B_u", "m*", "H ", "H1"] {
            assert!(text.lines().any(|l| l.starts_with(label)), "{label} missing");
        }
    }
}

#[test]
fn presets_lists_all_plants() {
    let out = piece(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("example1  p = 4, q = 4  a = [1.18, -0.48, 0.45, -0.41]"));
    assert!(text.contains("example2  p = 2, q = 3"));
    assert!(text.contains("example3  p = 6, q = 6"));
}

#[test]
fn exit_codes_distinguish_bad_config_and_bad_plant() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();

    let typo = write_config(dir.path(), "typo.json", &preset_config("example2").replace("n_runs", "nruns"));
    let out = piece(&["run", &typo, "--out", out_dir]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nruns"));

    let missing = dir.path().join("missing.json");
    assert_eq!(piece(&["hyperparams", missing.to_str().unwrap()]).status.code(), Some(1));

    let unstable = write_config(
        dir.path(),
        "unstable.json",
        r#"{"plant": {"a": [0.5, 0.6], "b": [1.0]}, "noise": {"kind": "gaussian", "sigma": 1.0}, "T": 10}"#,
    );
    assert_eq!(piece(&["run", &unstable, "--out", out_dir]).status.code(), Some(2));
    assert_eq!(piece(&["hyperparams", &unstable]).status.code(), Some(2));
    assert!(!Path::new(out_dir).exists(), "nothing is written on failure");
}

#[test]
fn run_writes_documented_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &preset_config("example2"));
    let out_dir = dir.path().join("out");
    let out = piece(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--stride", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let fp = summary["fingerprint"].as_str().unwrap();
    assert!(stdout.contains(fp), "fingerprint is echoed");
    assert_eq!(summary["master_seed"], 11);
    let hp = &summary["hyperparameters"];
    for key in ["delta1", "b_u", "m_star", "h", "h1", "rho", "c1", "spec_radius_a", "planned_episodes"] {
        assert!(!hp[key].is_null(), "{key}");
    }
    for alg in ["piece", "lw", "ce"] {
        let r = &summary["results"][alg];
        assert!(r["mean_terminal_regret"].as_f64().unwrap() > 0.0);
        assert_eq!(r["terminal_regrets"].as_array().unwrap().len(), 4);
        assert_eq!(r["mean_regret"].as_array().unwrap().len(), 300, "summary keeps full resolution");

        let csv = std::fs::read_to_string(out_dir.join(format!("{alg}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "algorithm,run_id,t,y,u,w,r_inst,regret_cum,est_err,n_explore,lambda_min_I,mode,clipped"
        );
        let ts: Vec<usize> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(ts.len(), 4 * 7, "t = 1, 50, ..., 300 per run");
        assert_eq!(&ts[..7], &[1, 50, 100, 150, 200, 250, 300]);
    }
    // PIECE explores from the first step
    let csv = std::fs::read_to_string(out_dir.join("piece.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",explore,"));
}

#[test]
fn oracle_summary_has_zero_regret() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"plant": "example3", "algorithms": ["oracle"], "noise": {"kind": "random_walk_gaussian", "sigma": 0.5}, "T": 1000, "n_runs": 3}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let out_dir = dir.path().join("out");
    assert!(piece(&["run", &cfg, "--out", out_dir.to_str().unwrap()]).status.success());
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["results"]["oracle"]["mean_terminal_regret"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn reruns_and_job_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &preset_config("example1"));
    let run = |name: &str, jobs: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_piece"));
        cmd.args(["run", &cfg, "--out", out.to_str().unwrap()]);
        match jobs {
            Some(j) => cmd.env("PIECE_JOBS", j),
            None => cmd.env_remove("PIECE_JOBS"),
        };
        assert!(cmd.output().unwrap().status.success());
        out
    };
    let a = run("a", None);
    let b = run("b", Some("1"));
    let c = run("c", Some("2"));
    for f in ["piece.csv", "lw.csv", "ce.csv", "summary.json"] {
        let bytes = std::fs::read(a.join(f)).unwrap();
        assert!(!bytes.contains(&b'\r'));
        assert_eq!(bytes, std::fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(bytes, std::fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = piece(&["hyperparams", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_borchers-lab"))
        .args(args)
        .arg("--quiet")
        .arg("--out")
        .arg(dir)
        .env_remove("BORCHERS_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn bundle(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("bundle written")).expect("valid json")
}

#[test]
fn trivial_phi_has_zero_defects() {
    let dir = out_dir("trivial_phi");
    let out = lab(&dir, &["verify-inner", "--set", "phi.zeros=[]"]);
    assert_eq!(out.status.code(), Some(0));
    let b = bundle(&dir.join("verify-inner.json"));
    let metrics = &b["reports"][0]["metrics"];
    for k in ["max_modulus_defect", "max_reflection_defect", "uhp_bound_excess"] {
        assert_eq!(metrics[k].as_f64(), Some(0.0), "{k}");
    }
}

#[test]
fn mislocalized_generator_fails_with_exit_one() {
    let dir = out_dir("mislocalized");
    let out = lab(
        &dir,
        &[
            "check-borchers",
            "--modes",
            "6",
            "--cutoff",
            "3",
            "--set",
            r#"generators.left=[{side="left",center=2.0,width=1.0,norm=0.5}]"#,
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let b = bundle(&dir.join("check-borchers.json"));
    assert_eq!(b["reports"][0]["passed"], Value::Bool(false));
}

#[test]
fn bad_config_exits_with_two() {
    let dir = out_dir("bad_config");
    for args in [
        &["run", "--set", "bogus=1"][..],
        &["run", "--model", "s_theta"][..],
        &["scatter", "--model", "massive"][..],
        &["run", "--config", "/nonexistent/lab.toml"][..],
    ] {
        let out = lab(&dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn config_file_is_merged() {
    let dir = out_dir("config_file");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("lab.toml");
    std::fs::write(&cfg, "model = \"s_phi\"\nchecks = [\"pair_phases\"]\n[basis]\nmodes = 5\ncutoff = 2\n").unwrap();
    let out = lab(&dir, &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let b = bundle(&dir.join("run.json"));
    assert_eq!(b["model"], "s_phi");
    assert_eq!(b["reports"].as_array().unwrap().len(), 1);
    let echoed = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(echoed.contains("modes = 5"));
}

#[test]
fn massive_sweep_same_charge_phase_is_i() {
    let dir = out_dir("massive_sweep");
    let out = lab(&dir, &["massive-sweep", "--kappa", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("massive_sweep.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[2] == "1" && f[3] == "1" {
            let (re, im): (f64, f64) = (f[4].parse().unwrap(), f[5].parse().unwrap());
            assert_eq!((re, im), (0.0, 1.0), "{line}");
            rows += 1;
        }
    }
    assert_eq!(rows, 16 * 16);
}

#[test]
fn build_smatrix_writes_table() {
    let dir = out_dir("build_smatrix");
    let out = lab(&dir, &["build-smatrix", "--modes", "4", "--cutoff", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("smatrix.csv")).unwrap();
    // 15 states per factor.
    assert_eq!(csv.lines().count(), 1 + 15 * 15);
    assert!(dir.join("smatrix_basis.json").exists());
}

#[test]
fn scatter_and_report_round_trip() {
    let dir = out_dir("scatter");
    let out = lab(&dir, &["scatter", "--set", "scatter.pairs=[[1.0,2.0]]"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("scatter_convergence.csv").exists());
    let out = lab(&dir, &["report", dir.join("scatter.json").to_str().unwrap(), "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,kind,name,value"));
    assert!(text.contains("pair0.phase_re"));
}

#[test]
fn fermionic_model_runs() {
    let dir = out_dir("fermi");
    let out = lab(&dir, &["run", "--model", "s_phi_fermi", "--modes", "6", "--cutoff", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zygmund"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, out: &str) -> Value {
    let text = fs::read_to_string(dir.join(out).join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn no_subcommand_prints_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    assert!(text.contains("Usage"));
}

#[test]
fn open_polyline_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("open.poly"), "0 0\n1 0\n1 1\n").unwrap();
    let o = run(&["decompose", "--set", "domain=open.poly"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("open polyline"));
}

#[test]
fn bad_resolution_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["seminorm", "--set", "resolution=100"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decompose_square_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["decompose", "--set", "max_level=6", "--out", "d"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(tmp.path(), "d");
    assert_eq!(s["pass"], true);
    assert_eq!(s["result"]["interior"]["all_ok"], true);
    let cubes = fs::read_to_string(tmp.path().join("d/interior_cubes.csv")).unwrap();
    assert!(cubes.starts_with("level,i,j,corner_x,corner_y,side,dist"));
}

#[test]
fn seminorm_of_polynomial_vanishes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "seminorm",
        "--set",
        "growth=power s=2",
        "--set",
        "function=monomial:1,1",
        "--out",
        "s",
    ];
    assert_eq!(run(&args, tmp.path()).status.code(), Some(0));
    let s = summary(tmp.path(), "s");
    for key in ["L1", "L2", "Linf", "L1_interior"] {
        let v = s["result"]["values"][key]["value"].as_f64().unwrap();
        assert!(v.abs() < 1e-8, "{key}: {v}");
    }
}

#[test]
fn seminorm_of_abs_x1() {
    // The worst cube is centered on the kink: |x_1| minus its mean l/4
    // averages l/8 over a cube of side l, so the L^1 value is 1/8.
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["seminorm", "--out", "s"], tmp.path()).status.code(), Some(0));
    let s = summary(tmp.path(), "s");
    let v = s["result"]["values"]["L1"]["value"].as_f64().unwrap();
    assert!((v - 0.125).abs() < 1e-9, "{v}");
    let ratio = s["result"]["p_ratio"].as_f64().unwrap();
    assert!((1.0..=10.0).contains(&ratio));
    let levels = fs::read_to_string(tmp.path().join("s/levels.csv")).unwrap();
    for norm in ["L1", "L2", "Linf"] {
        assert!(levels.lines().any(|l| l.starts_with(norm)));
    }
}

#[test]
fn apply_beurling_to_one_on_disc_is_small() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "apply",
        "--set",
        "domain=disc",
        "--set",
        "function=one",
        "--set",
        "kernel=beurling_real,beurling_imag",
        "--out",
        "a",
    ];
    assert_eq!(run(&args, tmp.path()).status.code(), Some(0));
    let s = summary(tmp.path(), "a");
    for k in s["result"]["kernels"].as_array().unwrap() {
        assert!(k["max_abs"].as_f64().unwrap() < 5e-3, "{k}");
    }
}

#[test]
fn tpcheck_disc_riesz_is_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "tpcheck",
        "--set",
        "domain=disc",
        "--set",
        "growth=power s=2",
        "--set",
        "kernel=riesz2(1,1),riesz2(1,2),riesz2(2,2)",
        "--set",
        "resolution=128",
        "--out",
        "t",
    ];
    assert_eq!(run(&args, tmp.path()).status.code(), Some(0));
    let s = summary(tmp.path(), "t");
    assert_eq!(s["result"]["bounded"], true);
    assert_eq!(s["result"]["profiles"].as_array().unwrap().len(), 6);
    assert!(tmp.path().join("t/profile_rows.csv").exists());
}

#[test]
fn extend_zero_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["extend", "--set", "function=zero", "--set", "fields=true", "--out", "e"];
    assert_eq!(run(&args, tmp.path()).status.code(), Some(0));
    let s = summary(tmp.path(), "e");
    assert_eq!(s["result"]["report"]["exact_polynomial"], true);
    let field = fs::read_to_string(tmp.path().join("e/extension.txt")).unwrap();
    let data: Vec<f64> = field
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| l.split_whitespace().filter_map(|t| t.parse::<f64>().ok()))
        .collect();
    assert!(!data.is_empty());
}

#[test]
fn config_file_is_echoed_and_runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "domain = \"sawtooth\"\nresolution = 128\nmax_level = 5\ngrowth = \"power s=1.5\"\n",
    )
    .unwrap();
    let a = run(&["seminorm", "-c", "run.toml", "--seed", "7", "--out", "a"], tmp.path());
    let b = run(&["seminorm", "-c", "run.toml", "--seed", "7", "--out", "b"], tmp.path());
    let stdout = String::from_utf8_lossy(&a.stdout);
    assert!(stdout.contains("domain = \"sawtooth\""));
    assert!(stdout.contains("seed = 7"));
    assert_eq!(a.status.code(), b.status.code());
    let mut sa = summary(tmp.path(), "a");
    let mut sb = summary(tmp.path(), "b");
    sa["config"]["out"] = Value::Null;
    sb["config"]["out"] = Value::Null;
    assert_eq!(sa, sb);
}

#[test]
fn growth_info_reports_type() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["growth-info", "--set", "growth=power s=1.5", "--out", "g"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let s = summary(tmp.path(), "g");
    assert_eq!(s["result"]["type"]["n"], 1);
    let rows = fs::read_to_string(tmp.path().join("g/growth.csv")).unwrap();
    assert_eq!(rows.lines().count(), 102);
}

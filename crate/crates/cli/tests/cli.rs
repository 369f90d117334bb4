use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, toml: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("job.toml");
    fs::write(&cfg, toml).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hpsido"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn shift_classifies_at_order_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        "command = \"classify\"\n[operator]\nname = \"shift\"\n[truncation]\nrows = 96\npad = 4\n",
        &["--no-metadata"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["scalars"]["classify_pass"], Value::Bool(true));
    let table = fs::read_to_string(dir.path().join("out/classifier.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(table.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let slope = headers.iter().position(|h| h == "slope").unwrap();
    let band = headers.iter().position(|h| h == "band").unwrap();
    let alpha = headers.iter().position(|h| h == "alpha").unwrap();
    let row = rdr
        .records()
        .map(Result::unwrap)
        .find(|r| &r[alpha] == "0" && &r[band] == "-1")
        .expect("alpha 0 band -1 row");
    let v: f64 = row[slope].parse().unwrap();
    assert!(v.abs() < 0.05, "slope {v}");
    assert!(!dir.path().join("out/metadata.json").exists());
}

#[test]
fn quantized_constant_symbol_is_order_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        "command = \"report\"\n[operator]\nsymbol = \"1\"\n[truncation]\nrows = 40\npad = 3\n",
        &["--no-metadata"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["scalars"]["classify_pass"], Value::Bool(true));
    assert_eq!(s["scalars"]["nonconverged_fraction"].as_f64(), Some(0.0));
    for f in ["matrix.json", "convergence.csv", "beals.csv", "plot_series.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn demo2d_reports_the_band_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "command = \"demo2d\"\n", &[]);
    assert!(out.status.success());
    let rep: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/counterexample.json")).unwrap()).unwrap();
    let bands = rep["band_values"].as_array().unwrap();
    assert!(!bands.is_empty());
    for b in bands {
        let n1 = b["n1"].as_f64().unwrap();
        let want = 1.0 / ((n1 + 2.0).sqrt() + (n1 + 1.0).sqrt());
        assert!((b["computed"].as_f64().unwrap() - want).abs() < 1e-12);
    }
    assert!(rep["max_abs_slope_in_n2"].as_f64().unwrap() < 1e-8);
    assert!(dir.path().join("out/metadata.json").exists());
}

#[test]
fn malformed_symbol_fails_in_symbol_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "command = \"quantize\"\n[operator]\nsymbol = \"x +* 2\"\n", &[]);
    assert!(!out.status.success());
    assert_eq!(summary(&out)["stage"], "symbol");
}

#[test]
fn exhausted_pad_fails_in_beals_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        "command = \"beals\"\n[operator]\nname = \"shift\"\n[truncation]\nrows = 32\npad = 1\n[beals]\nbeta_max = 2\n",
        &[],
    );
    assert!(!out.status.success());
    assert_eq!(summary(&out)["stage"], "beals");
}

#[test]
fn unknown_config_keys_fail_in_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "command = \"classify\"\nrows = 3\n", &[]);
    assert!(!out.status.success());
    assert_eq!(summary(&out)["stage"], "config");
}

#[test]
fn runs_without_metadata_are_byte_identical() {
    let toml = "command = \"report\"\n[operator]\nsymbol = \"bracket(-1)\"\n[truncation]\nrows = 24\npad = 3\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run(a.path(), toml, &["--no-metadata", "--threads", "1"]);
    let ob = run(b.path(), toml, &["--no-metadata", "--threads", "3"]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(oa.stdout, ob.stdout);
    let mut names: Vec<_> = fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names {
        let x = fs::read(a.path().join("out").join(&name)).unwrap();
        let y = fs::read(b.path().join("out").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

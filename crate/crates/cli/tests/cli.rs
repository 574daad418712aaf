use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fkin(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fkin"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .expect("fkin runs")
}

fn out_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

const SMALL_GRID: &str = "[grid]\nr_max = 12.0\nuniform_nodes = 120\n";

#[test]
fn constants_for_unit_kernel() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "c");
    let o = fkin(
        tmp.path(),
        &["constants", "--out", out.to_str().unwrap()],
        "[kernel]\nkind = \"constant\"\nlevel = 1.0\n[constants]\nexponents = [0.0, 1.0, 2.0]\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("constants.csv"));
    assert_eq!(rows.len(), 3);
    let lambda1: f64 = rows[1][2].parse().unwrap();
    assert!((lambda1 - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12, "{lambda1}");
    // λ_2 = 0 for every kernel
    assert!(rows[2][2].parse::<f64>().unwrap().abs() < 1e-12);
    // 17 significant digits
    assert_eq!(rows[1][2].split('e').next().unwrap().len(), 18);
    let m = manifest(&out);
    assert_eq!(m["command"], "constants");
    assert!(m["kernel_constants"]["gamma2"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(m["config"]["kernel"]["kind"], "constant");
    assert!(m["seeds"]["dsmc"].is_u64());
}

#[test]
fn uncut_kernel_constants_are_infinite_gamma() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "c");
    let o = fkin(
        tmp.path(),
        &["constants", "--out", out.to_str().unwrap()],
        "[kernel]\nkind = \"power_law\"\ns = 0.25\n[constants]\nexponents = [1.0, 1.5]\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("constants.csv"));
    assert_eq!(rows[0][1], "inf");
    assert!(rows[0][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn unknown_keys_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "u");
    let o = fkin(tmp.path(), &["constants", "--out", out.to_str().unwrap()], "[solver]\nalpah = 1.2\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
    let o = fkin(
        tmp.path(),
        &["constants", "--out", out.to_str().unwrap()],
        "[initial]\nfamily = \"gaussian\"\nvarience = 1.0\n",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("varience"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn exponent_order_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "e");
    let o = fkin(tmp.path(), &["evolve", "--out", out.to_str().unwrap()], "[solver]\nalpha = 1.0\nbeta = 1.2\n");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2 > alpha > beta > max{alpha0, alpha/2}"), "{err}");
}

#[test]
fn overrides_and_bad_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "o");
    let o = fkin(
        tmp.path(),
        &["constants", "--out", out.to_str().unwrap(), "--set", "constants.exponents=[1.0]", "--set", "kernel.level=2.0"],
        "",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("constants.csv"));
    assert_eq!(rows.len(), 1);
    let lambda1: f64 = rows[0][2].parse().unwrap();
    assert!((lambda1 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    let o = fkin(tmp.path(), &["constants", "--out", out.to_str().unwrap(), "--set", "kernel.levle=2"], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_reports_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "k");
    let o = fkin(
        tmp.path(),
        &["classify", "--out", out.to_str().unwrap()],
        "[initial]\nfamily = \"stable\"\nindex = 1.0\n[classify]\nalphas = [0.5, 1.5]\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    assert_eq!(v[0]["in_K"], true);
    assert_eq!(v[0]["in_M_tilde"], true);
    assert_eq!(v[1]["in_K"], false);
    // unit Gaussian: ∫|v|(1 + |v|²) dF = E|v| + E|v|³ = 10·√(2/π)
    let o = fkin(
        tmp.path(),
        &["classify", "--out", out.to_str().unwrap()],
        "[classify]\nalphas = [1.0]\nlift = 1\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    let m = v[0]["moment_estimate"].as_f64().unwrap();
    assert!((m - 10.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9, "{m}");
}

#[test]
fn evolve_writes_trace_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "ev");
    let cfg = format!("{SMALL_GRID}[initial]\nfamily = \"stable\"\nindex = 1.0\n[solver]\nalpha = 0.9\nbeta = 0.6\nhorizon = 0.2\nsnapshots = 2\n");
    let o = fkin(tmp.path(), &["evolve", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), 3);
    assert!(out.join("snapshot_002.csv").exists() && out.join("snapshot_002.json").exists());
    let m = manifest(&out);
    assert_eq!(m["summary"]["bounds"]["growth"]["holds"], true);
    assert!(m["notes"][0].as_str().unwrap().contains("infinite energy"));
}

#[test]
fn povzner_check_passes_for_unit_kernel() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "p");
    let o = fkin(
        tmp.path(),
        &["povzner-check", "--out", out.to_str().unwrap()],
        "[povzner.suite]\nsamples = 300\nfit_samples = 200\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("povzner.csv"));
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn dsmc_is_byte_identical_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[dsmc.run]\nparticles = 2000\nhorizon = 0.1\ndt = 0.01\n[dsmc]\nrecords = 5\n[grid]\nr_max = 8.0\nuniform_nodes = 40\n";
    let a = out_dir(tmp.path(), "a");
    let b = out_dir(tmp.path(), "b");
    let oa = fkin(tmp.path(), &["dsmc", "--out", a.to_str().unwrap(), "--seed", "5", "--workers", "1"], cfg);
    let ob = fkin(tmp.path(), &["dsmc", "--out", b.to_str().unwrap(), "--seed", "5", "--workers", "3"], cfg);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    for f in ["moments.csv", "empirical.csv", "empirical.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(csv_rows(&a.join("moments.csv")).len(), 6);
    assert_eq!(manifest(&a)["seeds"]["dsmc"], 5);
    let c = out_dir(tmp.path(), "c");
    fkin(tmp.path(), &["dsmc", "--out", c.to_str().unwrap(), "--seed", "6"], cfg);
    assert_ne!(std::fs::read(a.join("moments.csv")).unwrap(), std::fs::read(c.join("moments.csv")).unwrap());
}

#[test]
fn dsmc_stable_skips_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "s");
    let cfg = "[initial]\nfamily = \"stable\"\nindex = 1.0\n[dsmc.run]\nparticles = 1000\nhorizon = 0.05\ndt = 0.01\n[grid]\nr_max = 8.0\nuniform_nodes = 40\n";
    let o = fkin(tmp.path(), &["dsmc", "--out", out.to_str().unwrap()], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert!(m["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("energy invariants are skipped")));
    assert!(csv_rows(&out.join("moments.csv")).iter().all(|r| r[4] == "nan"));
}

#[test]
fn verify_all_on_a_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "v");
    let o = fkin(tmp.path(), &["verify-all", "--out", out.to_str().unwrap()], "[verify]\ncriteria = [1, 3, 4]\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 3, "{stdout}");
    assert_eq!(csv_rows(&out.join("verify.csv")).len(), 3);
    let o = fkin(tmp.path(), &["verify-all", "--out", out.to_str().unwrap()], "[verify]\ncriteria = [15]\n");
    assert_eq!(o.status.code(), Some(2));
}

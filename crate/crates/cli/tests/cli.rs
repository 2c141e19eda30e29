//! End-to-end runs of the `ypcap` binary: fixtures parse, subcommands
//! write what they promise, exit codes follow the contract, outputs are
//! deterministic, and the manifest echo round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ypcap_cli::config::material_params;
use ypcap_cli::parse_config;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn ypcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ypcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = ypcap(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Column `idx` of the last data row of a CSV.
fn last_csv_value(path: &Path, idx: usize) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let last = text.lines().rev().find(|l| !l.trim().is_empty()).unwrap();
    last.split(',').nth(idx).unwrap().parse().unwrap()
}

fn csv_column_max(path: &Path, idx: usize) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').nth(idx).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn fixtures_parse_and_recover_known_slopes() {
    let npe = parse_config(&fixture("npe.cfg")).unwrap();
    let m0 = material_params(&npe.material).unwrap().yld.m0;
    assert!((m0 - 1.0997).abs() < 1e-3, "npe m0 = {m0}");

    let mat = parse_config(&fixture("matpoint.cfg")).unwrap();
    let yld = material_params(&mat.material).unwrap().yld;
    assert!((yld.m0 - 1.0).abs() < 1e-2, "matpoint m0 = {}", yld.m0);
    assert_eq!(yld.r_ratio, 1.0);
}

#[test]
fn surface_writes_samples_and_manifest_reparses_to_equal_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["surface", "--config", fixture("npe.cfg").to_str().unwrap(), "--out", out]);

    let csv = std::fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,q,branch"));
    let mut saw_cap = false;
    let mut saw_yp = false;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3, "{line}");
        let q: f64 = fields[1].parse().unwrap();
        assert!(q >= 0.0);
        match fields[2] {
            "cap" => saw_cap = true,
            "yp" => saw_yp = true,
            other => panic!("unexpected branch {other}"),
        }
    }
    assert!(saw_cap && saw_yp, "both branches sampled");

    // the manifest is itself a parseable config equal to the input
    let reparsed = parse_config(&dir.path().join("manifest.txt")).unwrap();
    let original = parse_config(&fixture("npe.cfg")).unwrap();
    assert_eq!(reparsed, original);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256:"));
    assert!(manifest.contains("wall_seconds:"));
}

#[test]
fn crush_on_the_matpoint_fixture_ends_fully_crushed() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "crush",
        "--config",
        fixture("matpoint.cfg").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    // header: step,e_v,p,P,rho,rho_sl,z,p_c
    let z_end = last_csv_value(&dir.path().join("crush.csv"), 6);
    assert!((z_end - 0.20).abs() < 1e-9, "z_end = {z_end}");
}

#[test]
fn x_override_out_of_range_exits_1() {
    let out = ypcap(&[
        "surface",
        "--config",
        fixture("npe.cfg").to_str().unwrap(),
        "--x-override",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[0, 1]"), "stderr: {err}");
}

#[test]
fn unknown_key_exits_1_with_line_position() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("npe.cfg")).unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, text.replace("cfl = 0.5", "cfl = 0.5\nwibble = 1")).unwrap();

    let out = ypcap(&["eos", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("wibble") && err.contains("line"), "stderr: {err}");
}

#[test]
fn missing_program_section_exits_1_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("matpoint.cfg")).unwrap();
    let cfg = dir.path().join("noshock.cfg");
    std::fs::write(&cfg, text).unwrap(); // matpoint has no [shock]

    let out = ypcap(&["shock", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[shock]"));
}

#[test]
fn unreachable_crush_target_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("npe.cfg")).unwrap();
    let cfg = dir.path().join("deep.cfg");
    std::fs::write(
        &cfg,
        text.replace(
            "target_e_v = -0.05    # past crush-out at z_max = 0.0217\nn_steps = 400",
            "target_pressure = 1e13\nn_steps = 5",
        ),
    )
    .unwrap();

    let out = ypcap(&[
        "crush",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver failure"));
}

/// A small domain for fast end-to-end shock checks.
fn small_shock_config() -> String {
    let base = std::fs::read_to_string(fixture("npe.cfg")).unwrap();
    let text = base
        .replace("cells = 500", "cells = 64")
        .replace(
            "r_outer = 400.0       # far boundary; no reflection reaches the gauges",
            "r_outer = 90.0",
        )
        .replace("t_final = 0.1", "t_final = 0.02")
        .replace("gauges = 55, 114, 191", "gauges = 30, 55")
        .replace("snapshots = 0.025, 0.05, 0.09", "snapshots = 0.015");
    for want in ["cells = 64", "r_outer = 90.0", "gauges = 30, 55"] {
        assert!(text.contains(want), "fixture text drifted, missing {want}");
    }
    text
}

#[test]
fn shock_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, small_shock_config()).unwrap();

    for sub in ["a", "b"] {
        run_ok(&[
            "shock",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ]);
    }
    for name in ["gauge_30.csv", "gauge_55.csv", "snap_0.015.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn yp_only_runs_hotter_than_the_full_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, small_shock_config()).unwrap();

    run_ok(&[
        "shock",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("full").to_str().unwrap(),
    ]);
    run_ok(&[
        "shock",
        "--config",
        cfg.to_str().unwrap(),
        "--yp-only",
        "--out",
        dir.path().join("yp").to_str().unwrap(),
    ]);

    // v_r is column 1 of t,v_r,p,q. Compare away from the cavity: the
    // crush model sheds energy along the path, so the contrast grows
    // with travel distance and is not guaranteed in the first few cells.
    let name = "gauge_55.csv";
    let full = csv_column_max(&dir.path().join("full").join(name), 1);
    let yp = csv_column_max(&dir.path().join("yp").join(name), 1);
    assert!(
        yp > full,
        "{name}: cap off should raise the peak ({yp} vs {full})"
    );
}

#[test]
fn table_eos_scan_respects_range_policy_flag() {
    let dir = tempfile::tempdir().unwrap();

    // a coarse but monotone table around the npe reference state
    let mut table = String::from("rho,t,p,e\n");
    for i in 0..12 {
        let rho = 1700.0 + 60.0 * i as f64;
        for j in 0..6 {
            let t = 250.0 + 150.0 * j as f64;
            let p = 6.62e9 * (rho / 1952.62 - 1.0) + 1952.62 * 1000.0 * (t - 298.15);
            let e = 1000.0 * t;
            table.push_str(&format!("{rho},{t},{p},{e}\n"));
        }
    }
    std::fs::write(dir.path().join("eos_table.csv"), table).unwrap();

    let base = std::fs::read_to_string(fixture("npe.cfg")).unwrap();
    let cfg_text = base.replace(
        "kind = analytic\nk0 = 6.62e9           # bulk modulus matching G0 at nu = 0.25\nrho_ref = 1952.62     # solid+liquid density, rho0 / (1 - z_max)\nt_ref = 298.15\ngamma0 = 1.0          # thermal pressure coefficient\ncv = 1000.0",
        "kind = table\npath = eos_table.csv\nrho_min = 1650\nrho_max = 2300\nn_rho = 9\nt_min = 260\nt_max = 900\nn_t = 4",
    );
    assert!(cfg_text.contains("kind = table"), "fixture text drifted");
    let cfg = dir.path().join("table.cfg");
    std::fs::write(&cfg, cfg_text).unwrap();

    // scan range pokes outside the hull: hard error without the flag
    let out = ypcap(&[
        "eos",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("strict").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    run_ok(&[
        "eos",
        "--config",
        cfg.to_str().unwrap(),
        "--clamp-eos",
        "--out",
        dir.path().join("clamped").to_str().unwrap(),
    ]);
    let k_last = last_csv_value(&dir.path().join("clamped").join("eos.csv"), 4);
    assert!(k_last > 0.0, "tangent modulus stays positive, got {k_last}");
}

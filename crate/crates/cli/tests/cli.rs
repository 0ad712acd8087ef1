use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fdsoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdsoi")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

fn write_config(dir: &TempDir, name: &str, v: &Value) -> String {
    let p = dir.path().join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn assert_manifest_matches(out: &Path) {
    let report = read_json(&out.join("report.json"));
    let files = report["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["file"].as_str().unwrap();
        let bytes = fs::read(out.join(name)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{name}");
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    // every file in the directory other than the report is listed
    for entry in fs::read_dir(out).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name != "report.json" {
            assert!(files.iter().any(|f| f["file"] == name.as_str()), "{name} missing from manifest");
        }
    }
}

/// Hand evaluation of the fully-depleted threshold for the default device.
fn vth_fdsoi_oracle(phi_m: f64) -> f64 {
    let q = 1.602176634e-19;
    let vt = 1.380649e-23 * 300.0 / q;
    let phi_f = vt * (1e17f64 / 1e10).ln();
    let eps_ox = 3.9 * 8.8541878128e-14;
    let c_ox = eps_ox / 0.6e-7;
    phi_m - (4.05 + 0.56 + phi_f) + 2.0 * phi_f + q * 1e17 * 6e-7 / c_ox
}

#[test]
fn analytic_default_grid_is_unit_slope_and_matches_hand_value() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = fdsoi(&["analytic", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("analytic.csv"));
    assert_eq!(header, "phi_m_eV,vth_classic_V,vth_fdsoi_V,ss_mV_per_dec");
    assert_eq!(rows.len(), 13);
    for w in rows.windows(2) {
        let slope = (w[1][2] - w[0][2]) / (w[1][0] - w[0][0]);
        assert!((slope - 1.0).abs() < 1e-9, "slope {slope}");
    }
    let at_450 = rows.iter().find(|r| (r[0] - 4.5).abs() < 1e-12).unwrap();
    assert!((at_450[2] - vth_fdsoi_oracle(4.5)).abs() < 1e-6);
    assert!((at_450[2] - 0.309).abs() < 2e-3);
    assert!(rows.iter().all(|r| r[3] >= 59.5));
    assert_manifest_matches(&out);
}

#[test]
fn wf_flag_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &serde_json::json!({
        "sweep": { "wf": { "start": 4.0, "stop": 4.2, "step": 0.1 } }
    }));
    let out = dir.path().join("out");
    let o = fdsoi(&["analytic", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_rows(&out.join("analytic.csv")).1.len(), 3);
    let o = fdsoi(&["analytic", "--config", &cfg, "--wf", "4.5:4.6:0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&out.join("analytic.csv")).1;
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![4.5, 4.55, 4.6]);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["config"]["sweep"]["wf"]["start"], 4.5);
}

#[test]
fn missing_device_key_exits_2_with_its_name() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &serde_json::json!({
        "device": {
            "l_gate": 25e-7, "t_ox": 0.6e-7, "t_box": 20e-7, "t_spacer": 0.7e-7, "l_sd": 20e-7,
            "na_channel": 1e17, "nd_sd": 1e19, "phi_m": 4.5, "include_spacer": false, "temp": 300.0
        }
    }));
    let o = fdsoi(&["analytic", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("t_si"), "{}", stderr(&o));
}

#[test]
fn unknown_and_invalid_keys_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(&dir, "a.json", &serde_json::json!({ "solvr": {} }));
    assert_eq!(code(&fdsoi(&["analytic", "--config", &cfg, "--out", out.to_str().unwrap()])), 2);
    let cfg = write_config(&dir, "b.json", &serde_json::json!({ "solver": { "omega": 2.5 } }));
    let o = fdsoi(&["analytic", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("omega"));
    assert_eq!(code(&fdsoi(&["analytic", "--wf", "4.4:5.0"])), 2);
    assert_eq!(code(&fdsoi(&["analytic", "--config", "/nonexistent/cfg.json"])), 2);
}

fn write_gate_csv(p: &Path, vd: f64, f: impl Fn(f64) -> f64) {
    let mut s = String::from("vg_V,vd_V,id_A_per_um\n");
    for i in 0..=60 {
        let vg = i as f64 * 0.01;
        s.push_str(&format!("{vg},{vd},{:e}\n", f(vg)));
    }
    fs::write(p, s).unwrap();
}

#[test]
fn extract_recovers_constructed_slope_and_zero_dibl() {
    let dir = TempDir::new().unwrap();
    let low = dir.path().join("low.csv");
    // exactly 70 mV per decade
    write_gate_csv(&low, 0.05, |vg| 1e-12 * 10f64.powf(vg / 0.070));
    let out = dir.path().join("out");
    let l = low.to_str().unwrap();
    let o = fdsoi(&["extract", "--low", l, "--high", l, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&out.join("extraction.json"));
    let ss = doc["metrics"]["ss"].as_f64().unwrap();
    assert!((ss - 70.0).abs() < 0.7, "ss {ss}");
    assert_eq!(doc["metrics"]["dibl"].as_f64().unwrap(), 0.0);
    // crossing of 1e-7 A/um: 0.07 * 5
    assert!((doc["metrics"]["vth_cc"].as_f64().unwrap() - 0.35).abs() < 1e-9);
    assert_eq!(doc["settings"]["i_crit"].as_f64().unwrap(), 1e-7);
    assert!(doc["settings"]["ss_window"].is_array());
    assert_manifest_matches(&out);
}

#[test]
fn extract_reports_malformed_row_with_line_number() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "vg_V,vd_V,id_A_per_um\n0,0.05,1e-12\n0.1,0.05,abc\n").unwrap();
    let o = fdsoi(&["extract", "--low", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("bad.csv"), "{err}");
}

#[test]
fn extract_rejects_drain_sweep_as_transfer_curve() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("out.csv");
    let mut s = String::from("vg_V,vd_V,id_A_per_um\n");
    for i in 0..6 {
        s.push_str(&format!("1,{},{}\n", i as f64 * 0.2, i as f64 * 1e-4));
    }
    fs::write(&p, s).unwrap();
    let o = fdsoi(&["extract", "--low", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--mesh", "coarse", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fdsoi(&args)
}

#[test]
fn simulate_gate_sweep_is_monotone_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = simulate(out, &["--vg", "0:1:0.1", "--vd", "1", "--cut-quantities", "n,v"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let (header, rows) = csv_rows(&a.join("iv_transfer.csv"));
    assert_eq!(header, "vg_V,vd_V,id_A_per_um");
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][2] > w[0][2]));
    assert!(rows.iter().all(|r| r[1] == 1.0));

    let (header, cut) = csv_rows(&a.join("cutline_n.csv"));
    assert_eq!(header, "position_nm,value");
    assert!(cut.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(cut.iter().all(|r| r[1] > 0.0));
    assert!(!a.join("cutline_p.csv").exists());

    for f in ["iv_transfer.csv", "cutline_n.csv", "cutline_v.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_manifest_matches(&a);
    let report = read_json(&a.join("report.json"));
    assert!(report["failure"].is_null());
    assert_eq!(report["config"]["mesh"], "coarse");
}

#[test]
fn simulate_report_reproduces_its_outputs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = simulate(&a, &["--vg", "0", "--vd", "0:0.5:0.1", "--cut-dir", "vertical", "--cut-quantities", "e_vertical"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = a.join("report.json");
    let o = fdsoi(&["simulate", "--config", report.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["iv_output.csv", "cutline_e_vertical.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_rejects_two_ranges_and_bad_cutlines() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&simulate(&out, &["--vg", "0:1:0.5", "--vd", "0:1:0.5"])), 2);
    assert_eq!(code(&simulate(&out, &["--vg", "0:1:0.5", "--cut-quantities", "phi"])), 2);
    assert_eq!(code(&simulate(&out, &["--vg", "1:0:0.5"])), 2);
    let o = simulate(&out, &["--vg", "0", "--cut-at", "1e6"]);
    assert_eq!(code(&o), 2);
    assert!(read_json(&out.join("report.json"))["failure"].is_string());
}

#[test]
fn simulate_convergence_failure_exits_3_and_keeps_partial_outputs() {
    let dir = TempDir::new().unwrap();
    // too few outer iterations for a full-step bias jump: equilibrium and the
    // first points converge, the later ones do not
    let cfg = write_config(&dir, "c.json", &serde_json::json!({
        "solver": { "gummel_max_iter": 8, "bias_step_max": 1.0 }
    }));
    let out = dir.path().join("o");
    let o = fdsoi(&["simulate", "--config", &cfg, "--mesh", "coarse", "--vg", "0:1:0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let rows = csv_rows(&out.join("iv_transfer.csv")).1;
    assert!(!rows.is_empty() && rows.len() < 5, "{} rows", rows.len());
    let report = read_json(&out.join("report.json"));
    assert!(report["failure"].as_str().unwrap().contains("stopped at"));
    assert_eq!(report["result"]["converged_points"].as_u64().unwrap() as usize, rows.len());
    assert_manifest_matches(&out);
}

#[test]
fn simulate_equilibrium_failure_exits_3_with_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &serde_json::json!({ "solver": { "gummel_max_iter": 1 } }));
    let out = dir.path().join("o");
    let o = fdsoi(&["simulate", "--config", &cfg, "--mesh", "coarse", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report = read_json(&out.join("report.json"));
    assert!(report["failure"].is_string());
    assert!(report["files"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_wf_writes_summary_and_trends() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let o = fdsoi(&[
        "sweep-wf", "--mesh", "coarse", "--wf", "4.4:4.8:0.2", "--vg", "-0.4:1.5:0.1", "--vd", "0:1:0.25",
        "--jobs", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("sweep_summary.csv"));
    assert_eq!(
        header,
        "wf_eV,vth_cc_V,vth_extrap_V,ss_mV_per_dec,dibl_mV_per_V,ioff_A_per_um,ion_A_per_um,ion_ioff,gm_max_S_per_um"
    );
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]), "vth_cc not increasing");
    assert!(rows.windows(2).all(|w| w[1][7] > w[0][7]), "ion/ioff not increasing");
    let report = read_json(&out.join("report.json"));
    let slope = report["result"]["vth_fit"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    assert!(report["result"]["optimum"]["wf"].is_number());
    assert_manifest_matches(&out);
}

#[test]
fn sweep_wf_all_points_failed_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &serde_json::json!({ "solver": { "gummel_max_iter": 1 } }));
    let out = dir.path().join("o");
    let o = fdsoi(&[
        "sweep-wf", "--config", &cfg, "--mesh", "coarse", "--wf", "4.5:4.5:0.1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(read_json(&out.join("report.json"))["failure"].is_string());
}

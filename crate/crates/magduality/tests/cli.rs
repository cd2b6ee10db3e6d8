//! End-to-end tests of the `magduality` binary on the bundled scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magduality"))
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("magduality_cli_tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_scenario(scenario: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(scenarios_dir().join(scenario))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

#[test]
fn paramagnet_fulltorus_is_critical_with_expected_energy() {
    let out = tmp_dir("paramagnet");
    let output = run_scenario("paramagnet_fulltorus.json", &out, &[]);
    assert!(output.status.success(), "{output:?}");
    let verdict = fs::read_to_string(out.join("verdict.json")).unwrap();
    assert!(verdict.contains("\"is_critical_state\":true"), "{verdict}");
    let json: serde_json::Value = serde_json::from_str(&verdict).unwrap();
    let e_b = json["energies"]["b"].as_f64().unwrap();
    // -0.5 * vol with the unit box
    assert!((e_b - (-0.5)).abs() <= 1e-9, "{e_b}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let out1 = tmp_dir("determinism_1");
    let out2 = tmp_dir("determinism_2");
    assert!(run_scenario("paramagnet_fulltorus.json", &out1, &[]).status.success());
    assert!(run_scenario("paramagnet_fulltorus.json", &out2, &[]).status.success());
    for artifact in ["verdict.json", "solve_b_report.json", "roundtrip_report.json", "b.csv", "m.csv"] {
        let a = fs::read(out1.join(artifact)).unwrap();
        let b = fs::read(out2.join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn malformed_scenario_exits_2() {
    let dir = tmp_dir("malformed");
    let good = fs::read_to_string(scenarios_dir().join("paramagnet_fulltorus.json")).unwrap();
    let bad = good.replace("\"mu0\": 1.0", "\"mu_nought\": 1.0");
    let path = dir.join("bad.json");
    fs::write(&path, bad).unwrap();
    let output = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line") || stderr.contains("mu0"), "{stderr}");
}

#[test]
fn hard_saturation_chain_reproduces_derived_density() {
    let out = tmp_dir("hard_chain");
    let output = run_scenario("hard_saturation_chain.json", &out, &[]);
    assert!(output.status.success(), "{output:?}");
    let table = fs::read_to_string(out.join("conjugate_table_phi_hat_sat_prime.csv")).unwrap();
    let origin = table
        .lines()
        .find(|l| l.starts_with("0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"))
        .expect("origin row");
    let f: f64 = origin.split(',').nth(3).unwrap().parse().unwrap();
    assert!((f - 0.5).abs() < 1e-15, "phi_hat_sat_prime(0) = {f}");
}

#[test]
fn conjugate_table_subcommand_writes_tables() {
    let out = tmp_dir("tables_only");
    let output = bin()
        .arg("conjugate-table")
        .arg(scenarios_dir().join("hard_saturation_chain.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    for f in [
        "conjugate_table_psi_hat.csv",
        "conjugate_table_phi_hat_sat.csv",
        "conjugate_table_phi_hat_c.csv",
        "conjugate_table_phi_hat_sat_prime.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn verify_accepts_dumped_state_and_rejects_tampering() {
    let out = tmp_dir("verify");
    assert!(run_scenario("permanent_magnet_fulltorus.json", &out, &[]).status.success());
    let verify = bin().arg("verify").arg(&out).output().unwrap();
    assert!(verify.status.success(), "{verify:?}");

    // double every b value: the induction relation breaks
    let b_csv = fs::read_to_string(out.join("b.csv")).unwrap();
    let mut tampered = String::from("x_index,y_index,z_index,vx,vy,vz\n");
    for line in b_csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let scale = |s: &str| format!("{:.16e}", s.parse::<f64>().unwrap() * 2.0);
        tampered.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cols[0], cols[1], cols[2], scale(cols[3]), scale(cols[4]), scale(cols[5])
        ));
    }
    fs::write(out.join("b.csv"), tampered).unwrap();
    let verify = bin().arg("verify").arg(&out).output().unwrap();
    assert_eq!(verify.status.code(), Some(1), "{verify:?}");
}

#[test]
fn perturbed_scenario_fails_certification_reproducibly() {
    let out = tmp_dir("perturbed");
    let output = run_scenario("paramagnet_perturbed.json", &out, &[]);
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    let verdict = fs::read_to_string(out.join("verdict.json")).unwrap();
    assert!(verdict.contains("\"is_critical_state\":false"), "{verdict}");
    // reproducible: a second run writes the identical verdict
    let out2 = tmp_dir("perturbed_again");
    run_scenario("paramagnet_perturbed.json", &out2, &[]);
    assert_eq!(
        fs::read(out.join("verdict.json")).unwrap(),
        fs::read(out2.join("verdict.json")).unwrap()
    );
}

#[test]
fn refusal_is_success_unless_strict() {
    let dir = tmp_dir("strict");
    let scenario = r#"{
        "grid": {"edge_length": 1.0, "resolution": 8, "mu0": 1.0},
        "material": {"variant": "anisotropic_mixed", "params": {
            "mu_p": 2.0, "mu_d": 0.5,
            "e1": [1.0, 0.0, 0.0], "e2": [0.0, 1.0, 0.0], "e3": [0.0, 0.0, 1.0]
        }},
        "body": {"type": "full"},
        "applied_field": {"type": "uniform", "value": [1.0, 0.0, 0.0]},
        "pipeline": ["solve-mh"]
    }"#;
    let path = dir.join("refusal.json");
    fs::write(&path, scenario).unwrap();

    let relaxed = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out1"))
        .output()
        .unwrap();
    assert!(relaxed.status.success(), "{relaxed:?}");
    let report = fs::read_to_string(dir.join("out1/solve_mh_report.json")).unwrap();
    assert!(report.contains("refused_nonconvex"), "{report}");

    let strict = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out2"))
        .arg("--strict")
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(1), "{strict:?}");
}

#[test]
fn bad_thread_cap_exits_2() {
    let output = bin()
        .arg("run")
        .arg(scenarios_dir().join("paramagnet_fulltorus.json"))
        .env("MAGDUALITY_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn remaining_bundled_scenarios_run_clean() {
    let mut aniso_out = None;
    for scenario in [
        "soft_saturation_cube.json",
        "diamagnet_cube.json",
        "anisotropic_fulltorus.json",
        "langevin_fulltorus.json",
    ] {
        let out = tmp_dir(&format!("bundle_{scenario}"));
        let output = run_scenario(scenario, &out, &[]);
        assert!(output.status.success(), "{scenario}: {output:?}");
        if scenario.starts_with("anisotropic") {
            aniso_out = Some(out);
        }
    }
    // the anisotropic pipeline includes a transfer step: its report carries
    // tiny roundtrip deviations at the critical point
    let report = fs::read_to_string(aniso_out.unwrap().join("transfer_report.json"))
        .expect("transfer report written");
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(json["b_roundtrip_deviation"].as_f64().unwrap() <= 1e-8, "{report}");
    assert!(json["m_deviation"].as_f64().unwrap() <= 1e-8, "{report}");
}

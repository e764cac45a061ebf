use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfft::formats::{to_json_bytes, DistributionJson, ProblemJson, ReportJson, ResultJson};
use qfft::tables::read_violation_curve;
use qfft_core::reconstruct::{default_inputs, random_phase_offsets, synthetic_problem, SyntheticNoise};
use qfft_core::{circuit_to_unitary, fock_distribution, synthesize_qfft, FockState};
use serde_json::Value;

fn qfft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfft"))
        .args(args)
        .env_remove("QFFT_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = qfft(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn synth_eight_modes() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    ok(&["synth", "--modes", "8", "--out", path_str(&c)]);
    let v = json(&c);
    let couplers: usize = v["layers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["couplers"].as_array().unwrap().len())
        .sum();
    assert_eq!(couplers, 12);
    assert_eq!(v["relabeling"], serde_json::json!([[2, 5], [4, 7]]));
}

#[test]
fn evolve_four_mode_fock() {
    let out = ok(&["evolve", "--modes", "4", "--input", "1,3", "--model", "fock"]);
    let d: DistributionJson = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(d.model, "fock");
    let forbidden_cf: Vec<_> = d
        .probabilities
        .iter()
        .filter(|p| {
            let s = FockState::new(p.output.clone()).unwrap();
            s.is_collision_free() && qfft_core::is_suppressed(&s, 2).unwrap()
        })
        .collect();
    assert_eq!(forbidden_cf.len(), 4);
    assert!(forbidden_cf.iter().all(|p| p.p < 1e-10));
}

#[test]
fn synth_file_then_evolve_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    let u = dir.path().join("u.json");
    ok(&["synth", "--modes", "8", "--out", path_str(&c), "--unitary-out", path_str(&u)]);
    let mem = circuit_to_unitary(&synthesize_qfft(3).unwrap()).unwrap();
    let input = FockState::from_labels(8, &[2, 6]).unwrap();
    let expect = DistributionJson::new(&fock_distribution(&mem, &input).unwrap(), None);
    for flag in ["--circuit", "--unitary"] {
        let file = if flag == "--circuit" { &c } else { &u };
        let out = ok(&["evolve", flag, path_str(file), "--input", "2,6"]);
        let got: DistributionJson = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(got, expect, "{flag}");
    }
}

#[test]
fn evolve_mean_field_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let part = dir.path().join("part.json");
    let out = ok(&[
        "evolve", "--modes", "4", "--input", "1,3", "--model", "mf", "--partition-out", path_str(&part),
    ]);
    let d: DistributionJson = serde_json::from_slice(&out.stdout).unwrap();
    let forbidden: f64 = d
        .probabilities
        .iter()
        .filter(|p| qfft_core::is_suppressed(&FockState::new(p.output.clone()).unwrap(), 2).unwrap())
        .map(|p| p.p)
        .sum();
    assert!((forbidden - 0.25).abs() < 1e-3);
    let v = json(&part);
    assert_eq!(v["forbidden"].as_array().unwrap().len(), 4);
    let out = ok(&["evolve", "--modes", "4", "--input", "1,3", "--model", "mf", "--mc-samples", "500"]);
    let d: DistributionJson = serde_json::from_slice(&out.stdout).unwrap();
    assert!(d.probabilities.iter().all(|p| p.stderr.is_some()));
}

fn simulate(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let p = dir.join(name);
    ok(&[
        "simulate", "--modes", "4", "--input", "2,4", "--alpha", "0.95", "--points", "41", "--events", "1e5",
        "--seed", seed, "--out", path_str(&p),
    ]);
    p
}

#[test]
fn simulate_then_curve_hits_closed_form_at_zero_delay() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "counts.csv", "7");
    let curve = dir.path().join("curve.csv");
    ok(&["curve", "--data", path_str(&data), "--trials", "500", "--out", path_str(&curve)]);
    let rows = read_violation_curve(&curve).unwrap();
    assert_eq!(rows.len(), 41);
    let zero = rows.iter().find(|r| r.delta_x_um == 0.0).unwrap();
    assert!((zero.d_obs - 0.025).abs() < 3.0 * zero.sigma, "{zero:?}");
    assert!((zero.d_obs - 0.025).abs() < 0.005);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = fs::read(simulate(dir.path(), "a.csv", "3")).unwrap();
    let b = fs::read(simulate(dir.path(), "b.csv", "3")).unwrap();
    let c = fs::read(simulate(dir.path(), "c.csv", "4")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn certify_rules_out_both() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "counts.csv", "11");
    let report = dir.path().join("report.json");
    ok(&[
        "certify", "--data", path_str(&data), "--modes", "4", "--input", "2,4", "--trials", "400", "--out",
        path_str(&report),
    ]);
    let r: ReportJson = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r.verdict, "rules_out_both");
    assert_eq!(r.pc_source, "model");
    assert_eq!(r.reference, "largest_delays");
    assert_eq!(r.input, [2, 4]);
    assert!(r.sigmas_vs_mean_field >= 10.0);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "counts.csv", "5");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_qfft"))
            .args(["curve", "--data", path_str(&data), "--trials", "300"])
            .env("QFFT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn reconstruct_from_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = synthesize_qfft(3).unwrap();
    let sites = t.phase_sites();
    let nominal: Vec<f64> = sites.iter().map(|&s| t.phase(s).unwrap()).collect();
    let truth = random_phase_offsets(&nominal, 0.5, 21);
    let p = synthetic_problem(&t, &sites, &truth, &default_inputs(3).unwrap(), SyntheticNoise { sigma: 0.02, seed: None })
        .unwrap();
    let prob = dir.path().join("prob.json");
    fs::write(&prob, to_json_bytes(&ProblemJson::from(&p))).unwrap();
    let res = dir.path().join("res.json");
    ok(&["reconstruct", "--problem", path_str(&prob), "--target", "qft", "--restarts", "8", "--out", path_str(&res)]);
    let r: ResultJson = serde_json::from_slice(&fs::read(&res).unwrap()).unwrap();
    assert!(r.chi2 < 1e-8);
    assert_eq!(r.fitted_phases.len(), 5);
    for (f, x) in r.fitted_phases.iter().zip(&truth) {
        assert!(qfft_core::reconstruct::phase_error(f.phase, *x) < 1e-6);
    }
    assert!(r.sensitivity_at_nominal.unwrap().condition_number.is_some());
    let again = dir.path().join("res2.json");
    ok(&["reconstruct", "--problem", path_str(&prob), "--restarts", "8", "--out", path_str(&again)]);
    assert_eq!(fs::read(&res).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = qfft(&["evolve", "--unitary", "/nonexistent/u.json", "--input", "1,2"]);
    assert_eq!(missing.status.code(), Some(4));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"rows\": 2,\n  \"cols\": 2,\n  \"entries\": [[1, 0], \n").unwrap();
    let out = qfft(&["evolve", "--unitary", path_str(&bad), "--input", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let skew = dir.path().join("skew.json");
    fs::write(&skew, r#"{"rows":2,"cols":2,"entries":[[1,0],[1,0],[0,0],[1,0]]}"#).unwrap();
    assert_eq!(qfft(&["evolve", "--unitary", path_str(&skew), "--input", "1,2"]).status.code(), Some(2));

    assert_eq!(qfft(&["synth", "--modes", "6"]).status.code(), Some(2));
    assert_eq!(qfft(&["evolve", "--modes", "4", "--input", "0,2"]).status.code(), Some(2));
    assert_eq!(
        qfft(&["synth", "--modes", "4", "--out", "/nonexistent/dir/c.json"]).status.code(),
        Some(4)
    );
}

#[test]
fn version_is_machine_readable() {
    let out = ok(&["--version"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("qfft {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn layout_command() {
    let out = ok(&["layout", "--modes", "8"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().len(), 8);
    assert_eq!(v["steps"].as_array().unwrap().len(), 3);
}

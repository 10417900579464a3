use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn omega(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omega"))
        .args(args)
        .env_remove("OMEGA_THREADS")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = omega(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sphere_levels_and_multiplicities() {
    let r = report(&["catalog", "sphere", "--dim", "2", "--radius", "1", "--top", "3"]);
    assert_eq!(r["schema"], "omega-report/1");
    let omega = r["result"]["omega"].as_array().unwrap();
    let got: Vec<(f64, u64)> = omega
        .iter()
        .map(|v| (v["value"].as_f64().unwrap(), v["multiplicity"].as_u64().unwrap()))
        .collect();
    let want = [(0.5, 3), (1.0 / 6.0, 5), (1.0 / 12.0, 7)];
    for ((v, m), (wv, wm)) in got.iter().zip(want) {
        assert!((v - wv).abs() < 1e-15);
        assert_eq!(*m, wm);
    }
    assert_eq!(got.len(), 3);
}

#[test]
fn heisenberg_supremum_in_dimension_five() {
    let r = report(&["catalog", "heisenberg", "--n", "2", "--sup"]);
    assert_eq!(r["result"]["sup_omega1"], 0.03125);
}

#[test]
fn product_and_unitary() {
    let r = report(&["catalog", "product", "--factor1", "sphere:2:1", "--factor2", "sphere:2:1", "--top", "2"]);
    let omega = &r["result"]["omega"];
    assert_eq!(omega[0]["value"], 0.5);
    assert_eq!(omega[0]["multiplicity"], 6);
    assert_eq!(omega[1]["value"], 0.25);
    assert_eq!(omega[1]["multiplicity"], 9);

    let r = report(&["catalog", "unitary", "--n", "2", "--r", "1"]);
    assert_eq!(r["result"]["omega1"], 0.25);
}

#[test]
fn product_from_spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let s2 = dir.path().join("s2.txt");
    fs::write(&s2, "# unit sphere\n0 1\n2 3\n6 5\n12 7\n").unwrap();
    let s2 = s2.to_str().unwrap();
    let r = report(&["catalog", "product", "--spectrum1", s2, "--a1", "1", "--spectrum2", s2, "--a2", "1", "--top", "1"]);
    assert_eq!(r["result"]["omega"][0]["value"], 0.5);

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = omega(&["catalog", "product", "--spectrum1", empty.to_str().unwrap(), "--a1", "1", "--factor2", "sphere:2:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_identity_and_negative_field() {
    let r = report(&["probe", "--field", "identity", "--k", "3"]);
    assert_eq!(r["result"]["probe"]["family"]["offset"], 1);
    assert!(r["result"]["probe"]["gram_min_eig"].as_f64().unwrap() > 0.0);

    let out = omega(&["probe", "--field", "neg-identity", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("S ≤ 0"));
}

#[test]
fn probe_with_fourier_consistency() {
    let r = report(&["probe", "--field", "cap", "--k", "2", "--max-freq", "4", "--top", "3"]);
    assert_eq!(r["result"]["consistent"], true);
    assert!(r["result"]["fourier"]["positive_count"].as_u64().unwrap() >= 2);
}

#[test]
fn verify_exit_codes() {
    let out = omega(&["verify", "--suite", "minmax", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["passed"], true);
    assert_eq!(omega(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn mesh_icosphere_near_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spec.csv");
    let r = report(&["mesh", "--gen", "icosphere", "--subdiv", "3", "--eigs", "60", "--top", "3", "--csv", csv.to_str().unwrap()]);
    let w = r["result"]["omega1"].as_f64().unwrap();
    assert!((0.48..0.51).contains(&w), "{w}");
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("k,value,multiplicity,witness\n"));
}

#[test]
fn mesh_from_off_file_and_bad_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let tet = dir.path().join("tet.off");
    fs::write(&tet, "OFF\n4 4 0\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n").unwrap();
    let out = omega(&["mesh", "--input", tet.to_str().unwrap(), "--eigs", "3", "--top", "1"]);
    assert_ne!(out.status.code(), Some(101), "{}", stderr(&out));

    let open = dir.path().join("open.off");
    fs::write(&open, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let out = omega(&["mesh", "--input", open.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn config_file_fills_flags_and_explicit_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sphere run\ndim = 3\ntop = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let r = report(&["catalog", "sphere", "--config", cfg]);
    assert_eq!(r["config"]["dim"], 3);
    assert_eq!(r["result"]["omega"].as_array().unwrap().len(), 2);
    let r = report(&["--config", cfg, "catalog", "sphere", "--top", "1"]);
    assert_eq!(r["config"]["top"], 1);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "bogus = 1\n").unwrap();
    let out = omega(&["catalog", "sphere", "--dim", "2", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn output_file_and_stable_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = omega(&["verify", "--suite", "decay-bound", "--cases", "10", "--seed", "3", "--output", p.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let ra: Value = serde_json::from_str(&fs::read_to_string(a).unwrap()).unwrap();
    let rb: Value = serde_json::from_str(&fs::read_to_string(b).unwrap()).unwrap();
    assert_eq!(ra["stable_hash"], rb["stable_hash"]);
    assert_eq!(ra["result"], rb["result"]);
    assert!(ra["timings"]["total_s"].is_number());
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_omega"))
            .args(["verify", "--cases", "10", "--suite", "minmax"])
            .env("OMEGA_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        let r: Value = serde_json::from_slice(&out.stdout).unwrap();
        r["stable_hash"].clone()
    };
    assert_eq!(run("1"), run("4"));
    let out = Command::new(env!("CARGO_BIN_EXE_omega"))
        .args(["catalog", "sphere", "--dim", "2"])
        .env("OMEGA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(omega(&["catalog", "sphere", "--dim", "0"]).status.code(), Some(2));
    assert_eq!(omega(&["catalog", "sphere", "--dim", "2", "--radius", "-1"]).status.code(), Some(2));
    assert_eq!(omega(&["catalog", "heisenberg", "--n", "0", "--sup"]).status.code(), Some(2));
    assert_eq!(omega(&["mesh"]).status.code(), Some(2));
}

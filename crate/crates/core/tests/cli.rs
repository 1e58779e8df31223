use std::path::Path;
use std::process::{Command, Output};

fn eoslab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eoslab")).args(args).current_dir(cwd).env_remove("EOSLAB_SEED").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_eta_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(&["run", "--two-point", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--eta"));
}

#[test]
fn exponential_run_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(
        &[
            "run",
            "--two-point",
            "0.2",
            "--loss",
            "exponential",
            "--eta",
            "4",
            "--w0",
            "0,1",
            "--steps",
            "200",
            "--mode",
            "exp-divergence",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = json(&dir.path().join("o/report_eta4.json"));
    assert_eq!(rep["overall"], true);
    assert_eq!(rep["checks"][0]["name"], "exp_divergence");
    assert!(rep["checks"][0]["detail"].as_str().unwrap().contains("overflow at step 2"));
}

#[test]
fn symmetric_start_shows_no_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(
        &["run", "--two-point", "0.2", "--eta", "0.01,10", "--steps", "20000", "--mode", "expect-eos", "--out", "o"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("first failing check `oscillation`"));
    for eta in ["0.01", "10"] {
        assert!(dir.path().join(format!("o/traj_eta{eta}.csv")).exists());
        assert_eq!(json(&dir.path().join(format!("o/report_eta{eta}.json")))["overall"], false);
    }
    assert!(dir.path().join("o/loss_vs_t.svg").exists());
    assert!(dir.path().join("o/sharpness_vs_t.svg").exists());
}

#[test]
fn offset_start_oscillates_at_large_stepsize() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(
        &[
            "run",
            "--two-point",
            "0.2",
            "--eta",
            "100",
            "--w0",
            "0,1",
            "--steps",
            "20000",
            "--mode",
            "expect-eos",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        eoslab(
            &[
                "run",
                "--gen",
                "12,3,0.3",
                "--seed",
                "4",
                "--eta",
                "1,5",
                "--steps",
                "3000",
                "--w0-offset",
                "1",
                "--jobs",
                "2",
                "--out",
                out,
            ],
            dir.path(),
        );
    }
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        let a = std::fs::read(dir.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&n)).unwrap();
        assert_eq!(a, b, "{n}");
    }
}

#[test]
fn geometry_of_two_point_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(&["geometry", "--two-point", "0.2", "--out", "g.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let g = json(&dir.path().join("g.json"));
    assert!((g["geometry"]["gamma"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((g["geometry"]["offset_b"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(g["geometry"]["support"], serde_json::json!([1, 2]));
    assert_eq!(g["assumptions"]["separable"], true);
}

#[test]
fn geometry_rejects_non_separable_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.csv"), "a,b,label\n1,1,1\n-1,-1,1\n1,-1,0\n-1,1,0\n").unwrap();
    let o = eoslab(&["geometry", "--csv", "xor.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not separable"));
}

#[test]
fn geometry_with_degenerate_offset_warns() {
    let dir = tempfile::tempdir().unwrap();
    // One support vector cannot pin down the complement direction.
    std::fs::write(dir.path().join("one.csv"), "a,b,label\n0.5,0.1,1\n0.9,0.3,1\n-0.9,0.2,0\n").unwrap();
    let o = eoslab(&["geometry", "--csv", "one.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let g: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(g["geometry"]["offset_b"].is_null());
}

#[test]
fn gen_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = eoslab(&["gen", "--n", "15", "--d", "3", "--margin", "0.25", "--seed", "3", "--out", "d.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = eoslab(&["run", "--csv", "d.csv", "--eta", "2", "--steps", "100000", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = eoslab(
        &[
            "verify",
            "--csv",
            "d.csv",
            "--traj",
            "o/traj_eta2.csv",
            "--eta",
            "2",
            "--steps",
            "100000",
            "--out",
            "v.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&dir.path().join("v.json"));
    assert_eq!(v["overall"], true);
    let skipped: Vec<String> =
        v["skipped"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect();
    assert!(skipped.iter().any(|s| s.starts_with("grad_comparison")));
    let o = eoslab(
        &["verify", "--csv", "d.csv", "--traj", "o/traj_eta2.csv", "--eta", "2", "--steps", "200000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "# sweep\ntwo-point = 0.2\neta = 1\nsteps = 100000\nout = fromcfg\n")
        .unwrap();
    let o = eoslab(&["run", "--config", "c.cfg", "--eta", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("fromcfg/traj_eta3.csv").exists());
    assert!(!dir.path().join("fromcfg/traj_eta1.csv").exists());

    let o = eoslab(&["run", "--config", "c.cfg", "--gen", "10,2,0.3", "--out", "g"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.cfg"), "eta = 1\nbogus = 2\n").unwrap();
    let o = eoslab(&["run", "--two-point", "0.2", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use eoslab_ffi::*;

fn last_error() -> String {
    let p = eoslab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn two_point_geometry_and_logistic_report() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(eoslab_dataset_two_point(0.2, &mut ds), EoslabStatus::Ok);
        assert_eq!((eoslab_dataset_n(ds), eoslab_dataset_d(ds)), (2, 2));

        let mut geo = ptr::null_mut();
        assert_eq!(eoslab_geometry_solve(ds, false, &mut geo), EoslabStatus::Ok);
        assert!((eoslab_geometry_gamma(geo) - 0.2).abs() < 1e-12);
        assert!((eoslab_geometry_offset_b(geo) - 1.0).abs() < 1e-12);
        let mut w = [0.0; 2];
        assert_eq!(eoslab_geometry_w_hat(geo, w.as_mut_ptr(), 2), EoslabStatus::Ok);
        assert!((w[0] - 5.0).abs() < 1e-9 && w[1].abs() < 1e-9);
        let mut sup = [0usize; 2];
        assert_eq!(eoslab_geometry_support_len(geo), 2);
        assert_eq!(eoslab_geometry_support(geo, sup.as_mut_ptr(), 2), EoslabStatus::Ok);
        assert_eq!(sup, [0, 1]);
        assert_eq!(eoslab_geometry_w_hat(geo, w.as_mut_ptr(), 1), EoslabStatus::OutOfRange);

        let mut traj = ptr::null_mut();
        assert_eq!(
            eoslab_gd_run(ds, geo, EoslabLoss::Logistic, 2.0, 100_000, ptr::null(), &mut traj),
            EoslabStatus::Ok
        );
        let n = eoslab_trajectory_len(traj);
        assert!(n > 1000);
        let mut rec = std::mem::zeroed::<EoslabRecord>();
        assert_eq!(eoslab_trajectory_record(traj, n - 1, &mut rec), EoslabStatus::Ok);
        assert_eq!(rec.t, 100_000);
        assert!(rec.loss > 0.0 && rec.proj_mm > 0.0);
        assert_eq!(eoslab_trajectory_record(traj, n, &mut rec), EoslabStatus::OutOfRange);

        let mut rep = ptr::null_mut();
        assert_eq!(eoslab_verify(ds, geo, traj, EoslabMode::ExpectStable, &mut rep), EoslabStatus::Ok);
        assert!(eoslab_report_passed(rep));
        assert!(eoslab_report_len(rep) >= 8);
        let json: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(eoslab_report_json(rep)).to_str().unwrap()).unwrap();
        assert_eq!(json["overall"], true);

        eoslab_report_free(rep);
        eoslab_trajectory_free(traj);
        eoslab_geometry_free(geo);
        eoslab_dataset_free(ds);
    }
}

#[test]
fn exponential_run_overflows() {
    unsafe {
        let mut ds = ptr::null_mut();
        let mut geo = ptr::null_mut();
        let mut traj = ptr::null_mut();
        assert_eq!(eoslab_dataset_two_point(0.2, &mut ds), EoslabStatus::Ok);
        assert_eq!(eoslab_geometry_solve(ds, false, &mut geo), EoslabStatus::Ok);
        let w0 = [0.0, 1.0];
        assert_eq!(eoslab_gd_run(ds, geo, EoslabLoss::Exponential, 4.0, 200, w0.as_ptr(), &mut traj), EoslabStatus::Ok);
        let (mut kind, mut step) = (EoslabTermination::Completed, 0);
        assert_eq!(eoslab_trajectory_termination(traj, &mut kind, &mut step), EoslabStatus::Ok);
        assert_eq!((kind, step), (EoslabTermination::Overflow, 2));
        let mut rec = std::mem::zeroed::<EoslabRecord>();
        assert_eq!(eoslab_trajectory_record(traj, 1, &mut rec), EoslabStatus::Ok);
        assert!((rec.proj_mm - 2.468929).abs() < 1e-6);
        assert!((rec.ns_sign + 8.401610).abs() < 1e-6);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
        assert_eq!(eoslab_trajectory_save_csv(traj, path.as_ptr()), EoslabStatus::Ok);
        assert!(dir.path().join("t.csv").exists());

        eoslab_trajectory_free(traj);
        eoslab_geometry_free(geo);
        eoslab_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(eoslab_dataset_two_point(-0.2, &mut ds), EoslabStatus::InvalidArgument);
        assert!(ds.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(eoslab_dataset_two_point(0.2, ptr::null_mut()), EoslabStatus::NullPointer);
        assert!(last_error().contains("null"));

        let rows = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        let labels = [1i8, 1, -1, -1];
        let name = CString::new("xor").unwrap();
        assert_eq!(
            eoslab_dataset_from_rows(name.as_ptr(), rows.as_ptr(), labels.as_ptr(), 4, 2, &mut ds),
            EoslabStatus::Ok
        );
        let mut geo = ptr::null_mut();
        assert_eq!(eoslab_geometry_solve(ds, true, &mut geo), EoslabStatus::NotSeparable);
        assert_eq!(last_error(), "not separable");
        eoslab_dataset_free(ds);

        let rows = [0.5, 0.1, 0.9, 0.3, -0.9, 0.2];
        let labels = [1i8, 1, -1];
        assert_eq!(
            eoslab_dataset_from_rows(ptr::null(), rows.as_ptr(), labels.as_ptr(), 3, 2, &mut ds),
            EoslabStatus::Ok
        );
        assert_eq!(eoslab_geometry_solve(ds, false, &mut geo), EoslabStatus::DegenerateOffset);
        assert_eq!(eoslab_geometry_solve(ds, true, &mut geo), EoslabStatus::Ok);
        assert!(eoslab_geometry_offset_b(geo).is_nan());
        eoslab_geometry_free(geo);
        eoslab_dataset_free(ds);

        let missing = CString::new("/nonexistent/data.csv").unwrap();
        let label = CString::new("label").unwrap();
        assert_eq!(eoslab_dataset_load_csv(missing.as_ptr(), label.as_ptr(), &mut ds), EoslabStatus::Io);
        assert_eq!(eoslab_dataset_generate(5, 2, 0.7, 0, &mut ds), EoslabStatus::Infeasible);

        assert_eq!(eoslab_dataset_n(ptr::null()), 0);
        assert!(eoslab_geometry_gamma(ptr::null()).is_nan());
        assert!(!eoslab_report_passed(ptr::null()));
        eoslab_dataset_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(eoslab_dataset_two_point(0.2, ptr::null_mut()), EoslabStatus::NullPointer);
        std::thread::spawn(|| assert!(eoslab_last_error().is_null())).join().unwrap();
        assert_eq!(eoslab_dataset_two_point(0.2, &mut ds), EoslabStatus::Ok);
        assert!(last_error().contains("null"));
        eoslab_dataset_free(ds);
    }
}

#[test]
fn header_matches_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/eoslab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exported: Vec<&str> = src.split("extern \"C\" fn ").skip(1).map(|s| s.split('(').next().unwrap()).collect();
    assert!(exported.len() >= 20);
    for f in exported {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct EoslabDataset EoslabDataset;"));
    assert!(header.contains("EOSLAB_STATUS_OK = 0"));
}

/// Compiles a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe_dir = std::env::current_exe().unwrap();
    let profile_dir = exe_dir.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libeoslab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let build = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(format!("{manifest}/include"))
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.1.0"));
}

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use netbandit_ffi::*;

fn last_error() -> String {
    let p = nb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn instance_round_trip() {
    unsafe {
        let effects = [0.5, -0.2, 0.0, 0.1, 0.0, 0.3, 0.0, 0.4, -0.9];
        let mut inst = ptr::null_mut();
        assert_eq!(nb_instance_from_effects(3, effects.as_ptr(), &mut inst), NbStatus::Ok);
        let mut d = 0;
        assert_eq!(nb_instance_dim(inst, &mut d), NbStatus::Ok);
        assert_eq!(d, 3);

        let mut theta = [0.0; 3];
        assert_eq!(nb_instance_theta(inst, theta.as_mut_ptr(), 3), NbStatus::Ok);
        for (got, want) in theta.iter().zip([0.6, 0.2, -0.6]) {
            assert!((got - want).abs() < 1e-15);
        }

        let mut a = [0i8; 3];
        assert_eq!(nb_instance_oracle_action(inst, a.as_mut_ptr(), 3), NbStatus::Ok);
        assert_eq!(a, [1, 1, -1]);

        let mut r = -1.0;
        assert_eq!(nb_instance_regret(inst, a.as_ptr(), 3, &mut r), NbStatus::Ok);
        assert_eq!(r, 0.0);
        let flipped = [-1i8, 1, -1];
        assert_eq!(nb_instance_regret(inst, flipped.as_ptr(), 3, &mut r), NbStatus::Ok);
        assert!((r - 1.2).abs() < 1e-15);

        let bad = [1i8, 0, 1];
        assert_eq!(nb_instance_regret(inst, bad.as_ptr(), 3, &mut r), NbStatus::InvalidArgument);
        assert_eq!(nb_instance_theta(inst, theta.as_mut_ptr(), 2), NbStatus::BufferTooSmall);
        nb_instance_free(inst);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut d = 0;
        assert_eq!(nb_instance_dim(ptr::null(), &mut d), NbStatus::NullPointer);
        assert!(last_error().contains("instance"));

        let mut inst = ptr::null_mut();
        assert_eq!(nb_instance_circulant(4, 9, 0.1, &mut inst), NbStatus::InvalidArgument);
        assert!(inst.is_null());

        let text = CString::new("[[experiment]]\nid = \"x\"\nruns = 1\n").unwrap();
        let mut exp = ptr::null_mut();
        assert_eq!(nb_experiment_parse(text.as_ptr(), &mut exp), NbStatus::Config);
        assert!(last_error().contains("experiment[0]"));

        let name = CString::new("no-such-preset-or-file").unwrap();
        assert_eq!(nb_experiment_load(name.as_ptr(), &mut exp), NbStatus::Config);

        nb_instance_free(ptr::null_mut());
        nb_experiment_free(ptr::null_mut());
        nb_result_free(ptr::null_mut());
    }
}

#[test]
fn experiment_run_and_csv() {
    unsafe {
        let text = CString::new(
            r#"
[[experiment]]
id = "ffi"
T = 40
runs = 3
seed = 5
policies = ["oracle", "nse"]

[experiment.instance]
kind = "circulant"
d = 6
s = 2
delta = 0.25

[experiment.nse]
c_tau = 0.2
"#,
        )
        .unwrap();
        let mut exp = ptr::null_mut();
        assert_eq!(nb_experiment_parse(text.as_ptr(), &mut exp), NbStatus::Ok);
        let mut n = 0;
        assert_eq!(nb_experiment_cell_count(exp, &mut n), NbStatus::Ok);
        assert_eq!(n, 2);
        let seed = 11u64;
        assert_eq!(nb_experiment_override(exp, 2, 30, &seed), NbStatus::Ok);

        let mut res = ptr::null_mut();
        assert_eq!(nb_experiment_run(exp, 0, &mut res), NbStatus::Ok);
        let mut t = 0;
        assert_eq!(nb_result_horizon(res, &mut t), NbStatus::Ok);
        assert_eq!(t, 30);
        let mut mean = vec![1.0; t];
        assert_eq!(nb_result_mean(res, mean.as_mut_ptr(), t), NbStatus::Ok);
        assert!(mean.iter().all(|&x| x == 0.0));
        nb_result_free(res);

        assert_eq!(nb_experiment_run(exp, 1, &mut res), NbStatus::Ok);
        let mut mean = vec![0.0; t];
        let mut per = vec![0.0; t];
        assert_eq!(nb_result_mean(res, mean.as_mut_ptr(), t), NbStatus::Ok);
        assert_eq!(nb_result_per_individual(res, per.as_mut_ptr(), t), NbStatus::Ok);
        for (m, p) in mean.iter().zip(&per) {
            assert_eq!(m / 6.0, *p);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("out.csv").to_str().unwrap()).unwrap();
        assert_eq!(nb_result_write_csv(res, path.as_ptr(), 10), NbStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        nb_result_free(res);

        assert_eq!(nb_experiment_run(exp, 7, &mut res), NbStatus::InvalidArgument);
        nb_experiment_free(exp);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(nb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "netbandit.h"

int main(void) {
    NbInstance *inst = NULL;
    if (nb_instance_circulant(5, 2, -0.5, &inst) != NB_STATUS_OK) return 1;
    size_t d = 0;
    nb_instance_dim(inst, &d);
    int8_t a[5];
    double regret = -1.0;
    nb_instance_oracle_action(inst, a, d);
    nb_instance_regret(inst, a, d, &regret);
    if (nb_instance_dim(NULL, &d) != NB_STATUS_NULL_POINTER) return 2;
    printf("%zu %d %g %s\n", d, (int)a[0], regret, nb_last_error() ? "err" : "none");
    nb_instance_free(inst);
    return 0;
}
"#;

/// Compiles a C client against the generated header and the static library.
#[test]
fn c_client_links_against_static_library() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    // Test binaries and the freshly built library both live in `deps`.
    let lib = exe.parent().unwrap().join("libnetbandit_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("running cc");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "5 -1 0 err\n");
}

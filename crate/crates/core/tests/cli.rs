use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netbandit::output::parse_csv;

fn netbandit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netbandit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawning netbandit")
}

const SMALL: &str = r#"
[[experiment]]
id = "small"
T = 120
runs = 3
seed = 7
policies = ["oracle", "netc", "nse", "nse-fs", "baseline"]
output = "out/small.csv"

[experiment.instance]
kind = "mixed-signal"
d = 10
beta = 0.2
s0 = 2

[experiment.netc]
T1 = 30

[experiment.nse]
c_tau = 0.5
"#;

#[test]
fn lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = netbandit(&["presets"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), ["ordering", "dimension", "signal", "sparsity", "village"]);

    let shown = netbandit(&["presets", "--show", "ordering"], dir.path());
    assert!(String::from_utf8(shown.stdout).unwrap().contains("[[experiment]]"));
    assert_eq!(netbandit(&["presets", "--show", "nope"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_is_reproducible_and_matches_sweep() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let csv = dir.path().join("out/small.csv");

    assert!(netbandit(&["run", "small.toml"], dir.path()).status.success());
    let first = fs::read(&csv).unwrap();
    assert!(netbandit(&["run", "small.toml"], dir.path()).status.success());
    assert_eq!(first, fs::read(&csv).unwrap());
    assert!(netbandit(&["sweep", "small.toml", "--threads", "3"], dir.path()).status.success());
    assert_eq!(first, fs::read(&csv).unwrap());

    let rows = parse_csv(std::str::from_utf8(&first).unwrap()).unwrap();
    assert_eq!(rows.len(), 5 * 2 * 120);
    assert!(rows
        .iter()
        .filter(|r| r.policy == "oracle")
        .all(|r| r.cum_regret == 0.0));

    let out = netbandit(&["run", "small.toml", "--seed", "8", "--out-dir", "other", "--stride", "40"], dir.path());
    assert!(out.status.success());
    let other = fs::read_to_string(dir.path().join("other/small.csv")).unwrap();
    assert_eq!(other.lines().count(), 1 + 5 * 2 * 3);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "[[experiment]]\nid = \"x\"\nruns = 2\npolicies = [\"nse\"]\n[experiment.instance]\nkind = \"circulant\"\nd = 4\ns = 1\ndelta = 0.2\n",
    )
    .unwrap();
    let out = netbandit(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("experiment[0].T"), "{err}");
    assert_eq!(netbandit(&["run", "missing.toml"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    assert_eq!(netbandit(&["run", "small.toml", "--runs", "0"], dir.path()).status.code(), Some(1));
}

#[test]
fn failing_cell_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("broken.csv"), "0,1\n1,0,1\n").unwrap();
    fs::write(
        dir.path().join("net.toml"),
        "[[experiment]]\nid = \"net\"\nT = 10\nruns = 1\npolicies = [\"oracle\"]\n[experiment.instance]\nkind = \"adjacency\"\npath = \"broken.csv\"\nbeta = 0.1\n",
    )
    .unwrap();
    let out = netbandit(&["run", "net.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("broken.csv"));
}

#[test]
fn stats_summarizes_networks() {
    let dir = tempfile::tempdir().unwrap();
    let nets = dir.path().join("nets");
    fs::create_dir(&nets).unwrap();
    fs::write(nets.join("a.csv"), "0,1\n1,0\n").unwrap();
    fs::write(nets.join("b.csv"), "0,1,1,0\n1,0,0,0\n1,0,0,0\n0,0,0,0\n").unwrap();
    let out = netbandit(&["stats", "nets"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("networks: 2\n"), "{text}");
    let individuals: Vec<f64> = text
        .lines()
        .find(|l| l.starts_with("individuals"))
        .unwrap()
        .split_whitespace()
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(individuals[0], 3.0);
    assert_eq!(individuals[3], 2.0);
    assert_eq!(individuals[4], 4.0);
    assert_eq!(netbandit(&["stats", "missing"], dir.path()).status.code(), Some(1));
}

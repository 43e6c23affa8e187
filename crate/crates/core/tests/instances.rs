use std::fs;

use netbandit::harness::{replicate_count, replicate_instance, ExperimentConfig, InstanceSpec, PolicySpec};
use netbandit::instances::{
    adjacency_files, generate_circulant, generate_mixed_signal, load_adjacency, overlay_signal, summary_stats,
    SignalModelParams,
};

fn within_sigmas(observed: f64, mean: f64, sd: f64, k: f64) -> bool {
    (observed - mean).abs() <= k * sd
}

#[test]
fn off_diagonal_support_is_binomial() {
    let (d, s0) = (200usize, 10.0);
    let trials = (d * (d - 1)) as f64;
    let p = s0 / d as f64;
    for seed in 0..5 {
        let inst = generate_mixed_signal(&SignalModelParams::new(d, 0.1, s0, seed)).unwrap();
        let mask = inst.support();
        let off = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && mask.get(i, j))
            .count() as f64;
        assert!(
            within_sigmas(off, trials * p, (trials * p * (1.0 - p)).sqrt(), 4.0),
            "seed {seed}: {off} off-diagonal entries"
        );
        assert!((0..d).all(|i| mask.get(i, i)));
    }
}

#[test]
fn magnitudes_split_between_strong_and_weak() {
    let (d, beta) = (150usize, 0.2);
    let params = SignalModelParams::new(d, beta, 20.0, 17);
    let inst = generate_mixed_signal(&params).unwrap();
    let x = inst.effects();
    let weak_cap = params.weak_factor * beta;
    let entries: Vec<f64> = x.iter().copied().filter(|&v| v != 0.0).collect();
    let n = entries.len() as f64;
    assert!(entries.iter().all(|v| v.abs() <= beta));

    let strong: Vec<f64> = entries.iter().copied().filter(|v| v.abs() > weak_cap).collect();
    // A strong draw lands below the weak cap with probability weak_factor.
    let p_strong = 0.5 * (1.0 - params.weak_factor);
    assert!(within_sigmas(strong.len() as f64, n * p_strong, (n * 0.25).sqrt(), 4.0));

    // |Z| is uniform on [0, 1], so strong magnitudes average beta / 2.
    let m = strong.len() as f64;
    let mean_abs = strong.iter().map(|v| v.abs()).sum::<f64>() / m;
    assert!(within_sigmas(mean_abs, 0.5 * beta, beta / (12.0 * m).sqrt(), 4.0));
    let positive = entries.iter().filter(|&&v| v > 0.0).count() as f64;
    assert!(within_sigmas(positive, n / 2.0, (n / 4.0).sqrt(), 4.0));
}

#[test]
fn mixed_signal_is_reproducible_per_seed() {
    let a = generate_mixed_signal(&SignalModelParams::new(40, 0.1, 5.0, 3)).unwrap();
    let b = generate_mixed_signal(&SignalModelParams::new(40, 0.1, 5.0, 3)).unwrap();
    let c = generate_mixed_signal(&SignalModelParams::new(40, 0.1, 5.0, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn circulant_columns() {
    for delta in [1.0 / 3.0, -1.0 / 3.0] {
        let inst = generate_circulant(30, 3, delta).unwrap();
        assert_eq!(inst.column_profile().0, vec![3; 30]);
        assert_eq!(inst.row_sparsity(), 3);
        for &t in inst.theta().as_slice() {
            assert!((t - 3.0 * delta).abs() < 1e-15);
        }
        assert!(inst.is_assumption_compliant());
    }
    assert!(generate_circulant(5, 6, 0.1).is_err());
}

#[test]
fn adjacency_directory_drives_replicates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.csv"), "0,1,0\n1,0,1\n0,1,0\n").unwrap();
    fs::write(dir.path().join("a.txt"), "0 1\n1 0\n").unwrap();
    fs::write(dir.path().join(".hidden"), "junk").unwrap();

    let files = adjacency_files(dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(names, ["a.txt", "b.csv"]);

    let path_graph = load_adjacency(&files[1]).unwrap();
    let stats = summary_stats(&path_graph);
    assert_eq!(stats.d, 3);
    assert!((stats.fractional_sparsity - 2.0 / 3.0).abs() < 1e-15);
    let inst = overlay_signal(&path_graph, &SignalModelParams::new(3, 0.1, 1.0, 9)).unwrap();
    let mask = inst.support();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(mask.get(i, j), i == j || path_graph.get(i, j), "({i}, {j})");
        }
    }

    let cfg = ExperimentConfig::new(
        "villages",
        InstanceSpec::Adjacency {
            path: dir.path().to_path_buf(),
            beta: 0.1,
            weak_factor: 0.001,
        },
        PolicySpec::Oracle,
        10,
        3,
    );
    assert_eq!(replicate_count(&cfg).unwrap(), 6);
    let dims: Vec<usize> = (0..6).map(|r| replicate_instance(&cfg, r).unwrap().dim()).collect();
    assert_eq!(dims, [2, 2, 2, 3, 3, 3]);
    assert_eq!(replicate_instance(&cfg, 3).unwrap(), replicate_instance(&cfg, 5).unwrap());
}

#[test]
fn malformed_adjacency_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "0,1\n1,2\n").unwrap();
    let err = load_adjacency(&path).unwrap_err().to_string();
    assert!(err.contains("bad.csv") && err.contains('2'), "{err}");
    fs::write(&path, "0,1,0\n1,0,1\n").unwrap();
    assert!(load_adjacency(&path).is_err());
}

//! Instance generators and adjacency ingestion.
//!
//! All random generators draw entry `(i, j)` from its own ChaCha stream with
//! index `i * d + j` (row-major), so the matrix does not depend on the order
//! in which entries are visited. Each entry consumes, in order: `Z ~ U(-1, 1)`,
//! `U ~ U(0, 1)`, `R ~ U{-1, +1}`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::model::{InterferenceInstance, ModelError};
use crate::rng;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid generator parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum AdjacencyError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row} has {got} entries, expected {expected}")]
    NonSquare {
        path: PathBuf,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: entry at row {row}, column {col} is `{token}`, expected 0 or 1")]
    NonBooleanEntry {
        path: PathBuf,
        row: usize,
        col: usize,
        token: String,
    },
}

/// Parameters of the mixed-signal effect model.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModelParams {
    pub d: usize,
    /// Signal strength.
    pub beta: f64,
    /// Expected number of off-diagonal neighbours per row.
    pub s0: f64,
    /// Attenuation applied to the weak (`R = -1`) entries.
    pub weak_factor: f64,
    pub seed: u64,
}

impl SignalModelParams {
    pub const DEFAULT_BETA: f64 = 0.1;
    pub const DEFAULT_S0: f64 = 20.0;
    pub const WEAK_FACTOR: f64 = 0.001;

    pub fn new(d: usize, beta: f64, s0: f64, seed: u64) -> Self {
        Self {
            d,
            beta,
            s0,
            weak_factor: Self::WEAK_FACTOR,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |name, reason: String| Err(InstanceError::InvalidParam { name, reason });
        if self.d == 0 {
            return bad("d", "must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta", format!("{} is not a finite non-negative number", self.beta));
        }
        if !(self.s0 > 0.0) || self.s0 > self.d as f64 {
            return bad("s0", format!("{} must lie in (0, d = {}]", self.s0, self.d));
        }
        if !(self.weak_factor > 0.0 && self.weak_factor <= 1.0) {
            return bad("weak_factor", format!("{} must lie in (0, 1]", self.weak_factor));
        }
        Ok(())
    }
}

struct EntryDraw {
    z: f64,
    u: f64,
    r_positive: bool,
}

fn draw_entry(seed: u64, index: u64) -> EntryDraw {
    let mut g = rng::stream(seed, index);
    let z = g.gen_range(-1.0..1.0);
    let u = g.gen::<f64>();
    let r_positive = g.gen::<bool>();
    EntryDraw { z, u, r_positive }
}

fn magnitude(params: &SignalModelParams, draw: &EntryDraw) -> f64 {
    if draw.r_positive {
        params.beta * draw.z
    } else {
        params.weak_factor * params.beta * draw.z
    }
}

/// Random mixed-signal instance: off-diagonal entries are in support with
/// probability `s0 / d`, the diagonal always is; in-support entries are
/// `beta * Z` or `weak_factor * beta * Z` with equal probability.
pub fn generate_mixed_signal(params: &SignalModelParams) -> Result<InterferenceInstance, InstanceError> {
    params.validate()?;
    let d = params.d;
    let p = params.s0 / d as f64;
    let mut x = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let draw = draw_entry(params.seed, (i * d + j) as u64);
            if i == j || draw.u <= p {
                x[(i, j)] = magnitude(params, &draw);
            }
        }
    }
    Ok(InterferenceInstance::from_effects(x)?)
}

/// Circulant `s`-regular instance: `S[i][j] = 1{(j - i) mod d < s}`, every
/// in-support entry equal to `delta`.
pub fn generate_circulant(d: usize, s: usize, delta: f64) -> Result<InterferenceInstance, InstanceError> {
    if d == 0 {
        return Err(InstanceError::InvalidParam {
            name: "d",
            reason: "must be at least 1".into(),
        });
    }
    if s == 0 || s > d {
        return Err(InstanceError::InvalidParam {
            name: "s",
            reason: format!("{s} must lie in [1, d = {d}]"),
        });
    }
    let x = DMatrix::from_fn(d, d, |i, j| if (j + d - i) % d < s { delta } else { 0.0 });
    Ok(InterferenceInstance::from_effects(x)?)
}

/// Square boolean adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    adj: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn new(n: usize, adj: Vec<bool>) -> Self {
        assert_eq!(adj.len(), n * n);
        Self { n, adj }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let n = rows.len();
        let adj = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), n, "adjacency rows must be length n");
                r.iter().map(|&v| v != 0)
            })
            .collect();
        Self { n, adj }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Number of neighbours of `i`, excluding a self-loop.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| j != i && self.get(i, j)).count()
    }
}

/// Parses a comma- or whitespace-separated square 0/1 matrix. Blank lines are
/// ignored.
pub fn parse_adjacency(text: &str, path: &Path) -> Result<AdjacencyMatrix, AdjacencyError> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_idx = rows.len();
        let mut row = Vec::new();
        for (col, token) in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let bit = match token.parse::<f64>() {
                Ok(0.0) => false,
                Ok(1.0) => true,
                _ => {
                    return Err(AdjacencyError::NonBooleanEntry {
                        path: path.to_path_buf(),
                        row: row_idx,
                        col,
                        token: token.to_string(),
                    })
                }
            };
            row.push(bit);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(AdjacencyError::NonSquare {
                    path: path.to_path_buf(),
                    row: row_idx,
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if let Some(first) = rows.first() {
        if first.len() != n {
            // Rows agree with each other but not with the row count.
            return Err(AdjacencyError::NonSquare {
                path: path.to_path_buf(),
                row: n,
                expected: first.len(),
                got: n,
            });
        }
    }
    Ok(AdjacencyMatrix::new(n, rows.into_iter().flatten().collect()))
}

pub fn load_adjacency(path: &Path) -> Result<AdjacencyMatrix, AdjacencyError> {
    let text = fs::read_to_string(path).map_err(|source| AdjacencyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_adjacency(&text, path)
}

/// Regular, non-hidden files of `dir`, sorted by name.
pub fn adjacency_files(dir: &Path) -> Result<Vec<PathBuf>, AdjacencyError> {
    let io = |source| AdjacencyError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let path = entry.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Places mixed-signal magnitudes on the edges of `adj` plus the full
/// diagonal. Only `beta`, `weak_factor` and `seed` of `params` are used.
pub fn overlay_signal(adj: &AdjacencyMatrix, params: &SignalModelParams) -> Result<InterferenceInstance, InstanceError> {
    if !(params.beta >= 0.0 && params.beta.is_finite()) {
        return Err(InstanceError::InvalidParam {
            name: "beta",
            reason: format!("{} is not a finite non-negative number", params.beta),
        });
    }
    if !(params.weak_factor > 0.0 && params.weak_factor <= 1.0) {
        return Err(InstanceError::InvalidParam {
            name: "weak_factor",
            reason: format!("{} must lie in (0, 1]", params.weak_factor),
        });
    }
    let n = adj.len();
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j || adj.get(i, j) {
                let draw = draw_entry(params.seed, (i * n + j) as u64);
                x[(i, j)] = magnitude(params, &draw);
            }
        }
    }
    Ok(InterferenceInstance::from_effects(x)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacencyStats {
    pub d: usize,
    /// Largest degree divided by the number of nodes.
    pub fractional_sparsity: f64,
}

pub fn summary_stats(adj: &AdjacencyMatrix) -> AdjacencyStats {
    let n = adj.len();
    let max_deg = (0..n).map(|i| adj.degree(i)).max().unwrap_or(0);
    AdjacencyStats {
        d: n,
        fractional_sparsity: if n == 0 { 0.0 } else { max_deg as f64 / n as f64 },
    }
}

/// Mean, median, sample standard deviation, min and max of a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Some(Self {
            mean,
            median,
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn zero_beta_gives_zero_matrix() {
        for seed in 0..3 {
            let inst = generate_mixed_signal(&SignalModelParams::new(12, 0.0, 4.0, seed)).unwrap();
            assert!(inst.effects().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn mixed_signal_is_deterministic_and_keeps_diagonal() {
        let params = SignalModelParams::new(30, 0.1, 5.0, 42);
        let a = generate_mixed_signal(&params).unwrap();
        let b = generate_mixed_signal(&params).unwrap();
        assert_eq!(a, b);
        for i in 0..30 {
            assert!(a.support().get(i, i));
        }
        let other = generate_mixed_signal(&SignalModelParams { seed: 43, ..params }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn mixed_signal_rejects_s0_above_d() {
        let err = generate_mixed_signal(&SignalModelParams::new(10, 0.1, 11.0, 0)).unwrap_err();
        assert!(matches!(err, InstanceError::InvalidParam { name: "s0", .. }));
    }

    #[test]
    fn circulant_pattern() {
        let inst = generate_circulant(4, 2, 0.1).unwrap();
        let rows: Vec<Vec<usize>> = (0..4).map(|i| inst.support().row(i).collect()).collect();
        assert_eq!(rows, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]]);
        assert!(generate_circulant(3, 4, 0.1).is_err());
    }

    #[test]
    fn circulant_with_unit_rows_is_compliant() {
        let inst = generate_circulant(10, 3, 1.0 / 3.0).unwrap();
        assert_eq!(inst.column_profile().0, vec![3; 10]);
        assert_eq!(inst.row_sparsity(), 3);
        assert!(inst.is_assumption_compliant());
        for t in inst.theta().as_slice() {
            assert!((t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parses_path_graph() {
        let adj = parse_adjacency("0,1,0\n1,0,1\n\n0,1,0\n", p()).unwrap();
        assert_eq!(adj, AdjacencyMatrix::from_rows(&[vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]));
        let ws = parse_adjacency("0 1 0\n1\t0 1\n0 1 0", p()).unwrap();
        assert_eq!(adj, ws);
        let st = summary_stats(&adj);
        assert_eq!(st.d, 3);
        assert!((st.fractional_sparsity - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn adjacency_errors_carry_location() {
        match parse_adjacency("0,1,0\n1,0,1\n", p()) {
            Err(AdjacencyError::NonSquare { expected: 3, got: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_adjacency("0,1\n1,0,1\n", p()) {
            Err(AdjacencyError::NonSquare { row: 1, expected: 2, got: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_adjacency("0,1,0\n1,0,2\n0,1,0\n", p()) {
            Err(AdjacencyError::NonBooleanEntry { row: 1, col: 2, token, .. }) => assert_eq!(token, "2"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_adjacency(Path::new("/nonexistent/adj.csv")),
            Err(AdjacencyError::Io { .. })
        ));
    }

    #[test]
    fn overlay_support_is_edges_plus_diagonal() {
        let empty = AdjacencyMatrix::new(4, vec![false; 16]);
        let inst = overlay_signal(&empty, &SignalModelParams::new(4, 0.1, 1.0, 9)).unwrap();
        for i in 0..4 {
            assert_eq!(inst.support().row(i).collect::<Vec<_>>(), vec![i]);
        }
        let complete = AdjacencyMatrix::new(5, vec![true; 25]);
        let inst = overlay_signal(&complete, &SignalModelParams::new(5, 0.1, 1.0, 9)).unwrap();
        assert_eq!(inst.column_profile().0, vec![5; 5]);
        let full = summary_stats(&AdjacencyMatrix::new(10, (0..100).map(|k| k / 10 != k % 10).collect()));
        assert!((full.fractional_sparsity - 0.9).abs() < 1e-15);
    }

    #[test]
    fn summary_of_column() {
        let s = Summary::of(&[1.0, 3.0, 2.0, 10.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 10.0);
        assert!((s.std - (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(Summary::of(&[]).is_none());
    }
}

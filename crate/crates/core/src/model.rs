//! Ground-truth problem representation.
//!
//! An [`InterferenceInstance`] holds the dense `d x d` effect matrix `X*`
//! (entry `(i, j)` is the effect of treating `j` on the reward of `i`), its
//! support mask, and the column sums `theta = X*^T 1` that determine the
//! optimal allocation.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("effect matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("effect matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("action entry {index} is {value}, expected -1 or +1")]
    InvalidAction { index: usize, value: i64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Row-major boolean support pattern of a square matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMask {
    d: usize,
    bits: Vec<bool>,
}

impl SupportMask {
    pub fn new(d: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), d * d, "support mask must hold d*d entries");
        Self { d, bits }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.d + j]
    }

    /// Column indices in the support of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.bits[i * self.d..(i + 1) * self.d]
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
    }

    pub fn nnz(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `rho[j]`: number of rows whose support contains `j`.
    pub fn column_profile(&self) -> ColumnProfile {
        let mut rho = vec![0usize; self.d];
        for i in 0..self.d {
            for j in self.row(i) {
                rho[j] += 1;
            }
        }
        ColumnProfile(rho)
    }

    /// Largest support size over rows.
    pub fn row_sparsity(&self) -> usize {
        (0..self.d).map(|i| self.row(i).count()).max().unwrap_or(0)
    }
}

/// Column support sizes `rho[j] = sum_i S[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnProfile(pub Vec<usize>);

impl ColumnProfile {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Column sums of the effect matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(pub Vec<f64>);

impl ThetaVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, a: &ActionVector) -> f64 {
        self.0
            .iter()
            .zip(a.as_slice())
            .map(|(t, &x)| t * f64::from(x))
            .sum()
    }
}

/// A treatment allocation in `{-1, +1}^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionVector(Vec<i8>);

impl ActionVector {
    pub fn new(entries: Vec<i8>) -> Result<Self, ModelError> {
        if let Some((index, &v)) = entries.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(ModelError::InvalidAction {
                index,
                value: i64::from(v),
            });
        }
        Ok(Self(entries))
    }

    /// Callers guarantee every entry is `+-1`.
    pub(crate) fn from_signs(entries: Vec<i8>) -> Self {
        debug_assert!(entries.iter().all(|&v| v == 1 || v == -1));
        Self(entries)
    }

    pub fn filled(d: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        Self(vec![value; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

/// Ground-truth interference instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceInstance {
    effects: DMatrix<f64>,
    support: SupportMask,
    theta: ThetaVector,
    assumption_compliant: bool,
}

impl InterferenceInstance {
    /// Builds an instance from a dense effect matrix; the support is its
    /// nonzero pattern.
    pub fn from_effects(effects: DMatrix<f64>) -> Result<Self, ModelError> {
        let (rows, cols) = effects.shape();
        if rows != cols {
            return Err(ModelError::NonSquare { rows, cols });
        }
        let d = rows;
        let mut bits = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let x = effects[(i, j)];
                if !x.is_finite() {
                    return Err(ModelError::NonFinite { row: i, col: j });
                }
                bits.push(x != 0.0);
            }
        }
        let theta = ThetaVector((0..d).map(|j| effects.column(j).sum()).collect());
        let assumption_compliant =
            (0..d).all(|i| effects.row(i).iter().map(|x| x.abs()).sum::<f64>() <= 1.0);
        Ok(Self {
            effects,
            support: SupportMask::new(d, bits),
            theta,
            assumption_compliant,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let d = rows.len();
        for r in rows {
            if r.len() != d {
                return Err(ModelError::NonSquare {
                    rows: d,
                    cols: r.len(),
                });
            }
        }
        Self::from_effects(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.effects.nrows()
    }

    pub fn effects(&self) -> &DMatrix<f64> {
        &self.effects
    }

    pub fn support(&self) -> &SupportMask {
        &self.support
    }

    pub fn theta(&self) -> &ThetaVector {
        &self.theta
    }

    /// Whether every row has L1 norm at most one.
    pub fn is_assumption_compliant(&self) -> bool {
        self.assumption_compliant
    }

    pub fn column_profile(&self) -> ColumnProfile {
        self.support.column_profile()
    }

    pub fn row_sparsity(&self) -> usize {
        self.support.row_sparsity()
    }

    /// Expected reward vector `X* a`.
    pub fn mean_rewards(&self, a: &ActionVector) -> DVector<f64> {
        &self.effects * DVector::from_vec(a.to_f64())
    }

    /// Expected total reward `1^T X* a`.
    pub fn total_reward(&self, a: &ActionVector) -> f64 {
        self.theta.dot(a)
    }
}

/// Exact column sums of the effect matrix.
pub fn theta_of(instance: &InterferenceInstance) -> ThetaVector {
    instance.theta().clone()
}

/// The reward-maximizing allocation `sign(theta)`.
pub fn oracle_action(theta: &ThetaVector) -> ActionVector {
    ActionVector::from_signs(theta.0.iter().map(|&t| sign_of(t)).collect())
}

/// `theta^T (a* - a)`, computed as `2 * sum |theta_j|` over sign mismatches,
/// which is exact and never negative.
pub fn instantaneous_regret(instance: &InterferenceInstance, a: &ActionVector) -> f64 {
    assert_eq!(a.len(), instance.dim(), "action dimension mismatch");
    instance
        .theta()
        .0
        .iter()
        .zip(a.as_slice())
        .filter(|(&t, &x)| sign_of(t) != x)
        .fold(0.0, |acc, (&t, _)| acc + 2.0 * t.abs())
}

/// Per-round and cumulative regret of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    pub per_round: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn with_capacity(horizon: usize) -> Self {
        Self {
            per_round: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, regret: f64) {
        let last = self.cumulative.last().copied().unwrap_or(0.0);
        self.per_round.push(regret);
        self.cumulative.push(last + regret);
    }

    pub fn len(&self) -> usize {
        self.per_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

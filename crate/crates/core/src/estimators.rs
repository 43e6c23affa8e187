//! Estimation primitives shared by the policies.
//!
//! - one-hot batch estimates of effect-matrix entries,
//! - support-weighted and hard-thresholded column sums,
//! - centered least squares restricted to an index set,
//! - row-wise L1-penalized regression by cyclic coordinate descent,
//! - a sampled restricted-eigenvalue probe for a design matrix.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::ActionVector;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("centered design restricted to {size} columns is singular even after ridge regularization")]
    SingularDesign { size: usize },
    #[error("batch is empty")]
    EmptyBatch,
}

/// Actions and reward vectors of one batch, stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchData {
    d: usize,
    n: usize,
    actions: Vec<f64>,
    rewards: Vec<f64>,
}

impl BatchData {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            n: 0,
            actions: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn with_capacity(d: usize, n: usize) -> Self {
        Self {
            d,
            n: 0,
            actions: Vec::with_capacity(n * d),
            rewards: Vec::with_capacity(n * d),
        }
    }

    pub fn push(&mut self, action: &ActionVector, reward: &[f64]) {
        assert_eq!(action.len(), self.d, "action dimension mismatch");
        assert_eq!(reward.len(), self.d, "reward dimension mismatch");
        self.actions.extend(action.as_slice().iter().map(|&v| f64::from(v)));
        self.rewards.extend_from_slice(reward);
        self.n += 1;
    }

    pub fn clear(&mut self) {
        self.actions.clear();
        self.rewards.clear();
        self.n = 0;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn action(&self, t: usize, j: usize) -> f64 {
        self.actions[t * self.d + j]
    }

    #[inline]
    pub fn reward(&self, t: usize, i: usize) -> f64 {
        self.rewards[t * self.d + i]
    }

    pub fn action_row(&self, t: usize) -> &[f64] {
        &self.actions[t * self.d..(t + 1) * self.d]
    }

    pub fn reward_row(&self, t: usize) -> &[f64] {
        &self.rewards[t * self.d..(t + 1) * self.d]
    }

    pub fn reward_column(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.reward(t, i)).collect()
    }

    /// `n x d` action matrix.
    pub fn action_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.actions)
    }
}

/// `Xhat[i] = (1/n) sum_t Y[t][i] a[t][j]` for every row `i`.
pub fn one_hot_estimate(batch: &BatchData, j: usize) -> Vec<f64> {
    let d = batch.dim();
    let n = batch.len();
    assert!(n >= 1, "one-hot estimate needs a non-empty batch");
    let mut col = vec![0.0; d];
    for t in 0..n {
        let a = batch.action(t, j);
        for (c, &y) in col.iter_mut().zip(batch.reward_row(t)) {
            *c += y * a;
        }
    }
    let inv = 1.0 / n as f64;
    col.iter_mut().for_each(|c| *c *= inv);
    col
}

/// Sum of `Xhat[i][j]` over rows whose support contains `j`.
pub fn theta_full_support(xhat_col: &[f64], support_col: &[bool]) -> f64 {
    xhat_col
        .iter()
        .zip(support_col)
        .filter(|(_, &s)| s)
        .map(|(x, _)| x)
        .sum()
}

/// Column sum keeping only entries with `|x| > tau / 8`.
pub fn theta_hard_threshold(xhat_col: &[f64], tau: f64) -> f64 {
    let cut = tau / 8.0;
    xhat_col.iter().filter(|x| x.abs() > cut).sum()
}

/// Centered least squares for row `i` with coefficients restricted to
/// `allowed`; the returned length-`d` vector is zero outside `allowed`.
///
/// Solves `(A~^T A~) g = A~^T (y - ybar)` with `A~` the column-centered
/// design. If the Gram matrix is not positive definite a ridge of
/// `1e-10 * trace / |allowed|` is added before giving up.
pub fn restricted_ols(batch: &BatchData, i: usize, allowed: &[usize]) -> Result<Vec<f64>, EstimatorError> {
    let d = batch.dim();
    let n = batch.len();
    if n == 0 {
        return Err(EstimatorError::EmptyBatch);
    }
    let mut coef = vec![0.0; d];
    let k = allowed.len();
    if k == 0 {
        return Ok(coef);
    }
    let nf = n as f64;
    let y_bar = (0..n).map(|t| batch.reward(t, i)).sum::<f64>() / nf;
    let a_bar: Vec<f64> = allowed
        .iter()
        .map(|&j| (0..n).map(|t| batch.action(t, j)).sum::<f64>() / nf)
        .collect();
    let centered = DMatrix::from_fn(n, k, |t, c| batch.action(t, allowed[c]) - a_bar[c]);
    let resp = DVector::from_fn(n, |t, _| batch.reward(t, i) - y_bar);
    let gram = centered.tr_mul(&centered);
    let rhs = centered.tr_mul(&resp);

    let gamma = match Cholesky::new(gram.clone()) {
        Some(ch) => ch.solve(&rhs),
        None => {
            let ridge = 1e-10 * gram.trace() / k as f64;
            if !(ridge > 0.0) {
                return Err(EstimatorError::SingularDesign { size: k });
            }
            let mut reg = gram;
            for c in 0..k {
                reg[(c, c)] += ridge;
            }
            match Cholesky::new(reg) {
                Some(ch) => ch.solve(&rhs),
                None => return Err(EstimatorError::SingularDesign { size: k }),
            }
        }
    };
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(EstimatorError::SingularDesign { size: k });
    }
    for (c, &j) in allowed.iter().enumerate() {
        coef[j] = gamma[c];
    }
    Ok(coef)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Stop when the largest coordinate change in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimizes `(1/2n) ||y - A g||^2 + lambda ||g||_1` by cyclic coordinate
/// descent. `design` is `n x d`.
pub fn lasso(design: &DMatrix<f64>, y: &[f64], lambda: f64, opts: LassoOptions) -> LassoFit {
    let (n, d) = design.shape();
    assert_eq!(y.len(), n, "response length must match design rows");
    assert!(lambda >= 0.0, "lambda must be non-negative");
    let mut coef = vec![0.0; d];
    if n == 0 {
        return LassoFit {
            coef,
            converged: true,
            sweeps: 0,
        };
    }
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..d).map(|j| design.column(j).norm_squared() / nf).collect();
    let mut resid = y.to_vec();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = design.column(j);
            let old = coef[j];
            let corr = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf;
            let new = soft_threshold(corr + col_sq[j] * old, lambda) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col.iter()) {
                    *r -= a * delta;
                }
                coef[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    LassoFit {
        coef,
        converged,
        sweeps,
    }
}

/// Lasso fit of reward row `i` on the batch actions.
pub fn lasso_row(batch: &BatchData, i: usize, lambda: f64) -> LassoFit {
    lasso_row_with(batch, i, lambda, LassoOptions::default())
}

pub fn lasso_row_with(batch: &BatchData, i: usize, lambda: f64, opts: LassoOptions) -> LassoFit {
    lasso(&batch.action_matrix(), &batch.reward_column(i), lambda, opts)
}

/// `(1/2n) ||y - A g||^2 + lambda ||g||_1`.
pub fn lasso_objective(design: &DMatrix<f64>, y: &[f64], coef: &[f64], lambda: f64) -> f64 {
    let n = design.nrows() as f64;
    let g = DVector::from_column_slice(coef);
    let fitted = design * g;
    let rss: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    rss / (2.0 * n) + lambda * coef.iter().map(|c| c.abs()).sum::<f64>()
}

/// Largest violation of the lasso optimality conditions: for nonzero `g_j`,
/// `|c_j - lambda sign(g_j)|`; for zero `g_j`, `max(|c_j| - lambda, 0)`, where
/// `c_j = (1/n) A_j^T (y - A g)`.
pub fn lasso_kkt_violation(design: &DMatrix<f64>, y: &[f64], coef: &[f64], lambda: f64) -> f64 {
    let n = design.nrows() as f64;
    let g = DVector::from_column_slice(coef);
    let resid = DVector::from_column_slice(y) - design * g;
    let corr = design.tr_mul(&resid) / n;
    coef.iter()
        .zip(corr.iter())
        .map(|(&c, &r)| {
            if c != 0.0 {
                (r - lambda * c.signum()).abs()
            } else {
                (r.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Probe settings for [`restricted_eigenvalue_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReProbe {
    /// Random supports examined at each probed sparsity level.
    pub support_probes: usize,
    /// Greedy support searches started from random coordinates.
    pub greedy_starts: usize,
    /// Random directions drawn from the l1 cone.
    pub cone_probes: usize,
    pub seed: u64,
}

impl Default for ReProbe {
    fn default() -> Self {
        Self {
            support_probes: 200,
            greedy_starts: 16,
            cone_probes: 200,
            seed: 0,
        }
    }
}

/// Sampled lower estimate of the restricted eigenvalue of `A^T A / n`.
pub fn restricted_eigenvalue_diagnostic(actions: &DMatrix<f64>, s: usize) -> f64 {
    restricted_eigenvalue_probe(actions, s, &ReProbe::default())
}

fn min_eig_on(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |a, b| gram[(support[a], support[b])]);
    SymmetricEigen::new(sub).eigenvalues.min()
}

fn greedy_support(gram: &DMatrix<f64>, start: usize, size: usize) -> f64 {
    let d = gram.nrows();
    let mut support = vec![start];
    let mut value = gram[(start, start)];
    while support.len() < size {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..d {
            if support.contains(&j) {
                continue;
            }
            support.push(j);
            let v = min_eig_on(gram, &support);
            support.pop();
            if v < best.0 {
                best = (v, j);
            }
        }
        support.push(best.1);
        value = best.0;
    }
    value
}

/// Minimizes `u^T G u / ||u[S~]||^2` over probe directions, where `G` is the
/// empirical Gram matrix, `S` ranges over supports of size `s` and `S~` is
/// `S` plus the `s` largest remaining coordinates of `u`. Probes:
///
/// - exact minima over random and greedily grown supports of size `s` and
///   `2s` (on a `2s`-sparse vector the cone holds and `S~` is the whole
///   support, so the ratio is the smallest eigenvalue of the sub-Gram);
/// - random directions satisfying `||u[S^c]||_1 <= 3 ||u[S]||_1`.
///
/// The result is an upper bound on the true restricted eigenvalue and is
/// meant as a diagnostic.
pub fn restricted_eigenvalue_probe(actions: &DMatrix<f64>, s: usize, probe: &ReProbe) -> f64 {
    let (n, d) = actions.shape();
    assert!(n >= 1, "design needs at least one row");
    if d == 0 || s == 0 {
        return f64::INFINITY;
    }
    let gram = actions.tr_mul(actions) / n as f64;
    let mut g = rng::stream(probe.seed, 0);
    let mut best = f64::INFINITY;

    let k = s.min(d);
    for size in [k, (2 * k).min(d)] {
        for _ in 0..probe.support_probes {
            let support = sample(&mut g, d, size).into_vec();
            best = best.min(min_eig_on(&gram, &support));
        }
        for _ in 0..probe.greedy_starts.min(d) {
            let start = g.gen_range(0..d);
            best = best.min(greedy_support(&gram, start, size));
        }
    }

    for _ in 0..probe.cone_probes {
        let support = sample(&mut g, d, k).into_vec();
        let mut u = vec![0.0f64; d];
        for &j in &support {
            u[j] = g.sample(StandardNormal);
        }
        let l1_in: f64 = support.iter().map(|&j| u[j].abs()).sum();
        let outside: Vec<usize> = (0..d).filter(|j| !support.contains(j)).collect();
        if !outside.is_empty() {
            let m = g.gen_range(1..=outside.len());
            let picks = sample(&mut g, outside.len(), m);
            let raw: Vec<f64> = picks.iter().map(|_| g.sample::<f64, _>(StandardNormal)).collect();
            let raw_l1: f64 = raw.iter().map(|x| x.abs()).sum();
            let budget = 3.0 * l1_in * g.gen::<f64>();
            if raw_l1 > 0.0 {
                for (p, r) in picks.iter().zip(&raw) {
                    u[outside[p]] = r * budget / raw_l1;
                }
            }
        }
        let mut rest: Vec<f64> = outside.iter().map(|&j| u[j] * u[j]).collect();
        rest.sort_by(|a, b| b.total_cmp(a));
        let denom: f64 = support.iter().map(|&j| u[j] * u[j]).sum::<f64>() + rest.iter().take(k).sum::<f64>();
        if denom > 0.0 {
            let uv = DVector::from_vec(u);
            let quad = uv.dot(&(&gram * &uv));
            best = best.min(quad / denom);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch_from(actions: &[Vec<i8>], rewards: &[Vec<f64>]) -> BatchData {
        let d = actions[0].len();
        let mut b = BatchData::new(d);
        for (a, y) in actions.iter().zip(rewards) {
            b.push(&ActionVector::new(a.clone()).unwrap(), y);
        }
        b
    }

    #[test]
    fn one_hot_single_sample() {
        let x = [[0.3, -0.1, 0.0], [0.2, 0.5, 0.1], [0.0, 0.0, -0.4]];
        let a = [1i8, -1, 1];
        let y: Vec<f64> = x
            .iter()
            .map(|row| row.iter().zip(a).map(|(v, s)| v * f64::from(s)).sum())
            .collect();
        let b = batch_from(&[a.to_vec()], std::slice::from_ref(&y));
        for j in 0..3 {
            let est = one_hot_estimate(&b, j);
            for i in 0..3 {
                let want: f64 = (0..3).map(|k| x[i][k] * f64::from(a[k]) * f64::from(a[j])).sum();
                assert!((est[i] - want).abs() < 1e-15);
            }
        }
        let zero = batch_from(&[a.to_vec(), vec![-1, -1, 1]], &[vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(one_hot_estimate(&zero, 1), vec![0.0; 3]);
    }

    #[test]
    fn column_sum_rules() {
        let col = [0.5, 0.01, -0.3];
        assert_eq!(theta_full_support(&col, &[false; 3]), 0.0);
        assert!((theta_full_support(&col, &[true; 3]) - 0.21).abs() < 1e-15);
        assert!((theta_full_support(&col, &[true, false, true]) - 0.2).abs() < 1e-15);
        assert!((theta_hard_threshold(&col, 0.8) - 0.2).abs() < 1e-15);
        assert!((theta_hard_threshold(&col, 0.0) - 0.21).abs() < 1e-15);
        assert_eq!(theta_hard_threshold(&col, 8.0), 0.0);
    }

    #[test]
    fn ols_empty_set_and_singular_design() {
        let b = batch_from(&[vec![1, -1]], &[vec![0.3, 0.1]]);
        assert_eq!(restricted_ols(&b, 0, &[]).unwrap(), vec![0.0, 0.0]);
        // A single round centers to the zero design.
        assert_eq!(
            restricted_ols(&b, 0, &[0, 1]),
            Err(EstimatorError::SingularDesign { size: 2 })
        );
    }

    #[test]
    fn lasso_large_lambda_is_zero() {
        let b = batch_from(
            &[vec![1, -1, 1], vec![-1, -1, 1], vec![1, 1, -1], vec![-1, 1, 1]],
            &[vec![0.4, 0.0, 0.0], vec![-0.2, 0.0, 0.0], vec![0.9, 0.0, 0.0], vec![0.1, 0.0, 0.0]],
        );
        let design = b.action_matrix();
        let y = b.reward_column(0);
        let lmax = (0..3)
            .map(|j| (0..4).map(|t| design[(t, j)] * y[t]).sum::<f64>().abs() / 4.0)
            .fold(0.0, f64::max);
        let fit = lasso_row(&b, 0, lmax);
        assert!(fit.converged);
        assert_eq!(fit.coef, vec![0.0; 3]);
    }

    #[test]
    fn re_probe_rank_one_design_is_zero() {
        let a = DMatrix::from_row_slice(1, 6, &[1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        let est = restricted_eigenvalue_diagnostic(&a, 2);
        assert!(est.abs() < 1e-12, "got {est}");
    }

    #[test]
    fn re_probe_on_repeated_identity() {
        let d = 10;
        let reps = 3;
        let a = DMatrix::from_fn(d * reps, d, |t, j| if t % d == j { 1.0 } else { 0.0 });
        let est = restricted_eigenvalue_diagnostic(&a, 3);
        assert!((est - 1.0 / d as f64).abs() < 1e-12, "got {est}");
    }
}

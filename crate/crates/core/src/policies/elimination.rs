//! Batched successive elimination over coordinates.
//!
//! Both variants keep an undetermined set `U`. Inside a batch, coordinates in
//! `U` play fresh Rademacher signs and the rest replay their committed sign.
//! At each batch boundary the variant re-estimates `theta_j` for `j` in `U`
//! from that batch alone and commits every coordinate whose estimate clears
//! its threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::schedule::BatchSchedule;
use super::{log2_horizon, Feedback, FeedbackKind, Policy};
use crate::estimators::{one_hot_estimate, restricted_ols, theta_full_support, theta_hard_threshold, BatchData};
use crate::model::{sign_of, ActionVector, ColumnProfile, SupportMask};
use crate::rng;

struct EliminationCore {
    d: usize,
    schedule: BatchSchedule,
    batch: usize,
    undetermined: Vec<bool>,
    theta_hat: Vec<f64>,
    committed: Vec<i8>,
    data: BatchData,
    last_action: Option<ActionVector>,
    rng: ChaCha8Rng,
    remaining: Vec<usize>,
}

impl EliminationCore {
    fn new(d: usize, horizon: usize, seed: u64) -> Self {
        Self {
            d,
            schedule: BatchSchedule::new(horizon),
            batch: 1,
            undetermined: vec![true; d],
            theta_hat: vec![0.0; d],
            committed: vec![1; d],
            data: BatchData::new(d),
            last_action: None,
            rng: rng::stream(seed, 0),
            remaining: Vec::new(),
        }
    }

    fn choose(&mut self) -> ActionVector {
        let signs = (0..self.d)
            .map(|j| {
                if self.undetermined[j] {
                    if self.rng.gen::<bool>() {
                        1
                    } else {
                        -1
                    }
                } else {
                    self.committed[j]
                }
            })
            .collect();
        let a = ActionVector::from_signs(signs);
        self.last_action = Some(a.clone());
        a
    }

    /// Records the round; returns the finished batch index at a boundary.
    fn record(&mut self, t: usize, y: &[f64]) -> Option<usize> {
        let a = self
            .last_action
            .take()
            .expect("observe called without a preceding choose_action");
        self.data.push(&a, y);
        if self.batch <= self.schedule.num_batches() && t == self.schedule.end(self.batch) {
            Some(self.batch)
        } else {
            None
        }
    }

    fn active(&self) -> Vec<usize> {
        (0..self.d).filter(|&j| self.undetermined[j]).collect()
    }

    fn commit(&mut self, j: usize) {
        self.undetermined[j] = false;
        self.committed[j] = sign_of(self.theta_hat[j]);
    }

    fn close_batch(&mut self) {
        self.data.clear();
        self.batch += 1;
        self.remaining.push(self.undetermined.iter().filter(|&&u| u).count());
    }
}

/// Threshold choice for [`Nse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NseThresholds {
    /// `tau_m = 16 sqrt(log(4 d^2 log2(T) / delta) / 2^(m-1))`; `None` means
    /// `delta = 1 / (d T)`.
    Theory { delta: Option<f64> },
    /// `tau_m = c_tau sqrt(2 log(2T) / T_m)`.
    Practical { c_tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NseConfig {
    pub thresholds: NseThresholds,
}

impl Default for NseConfig {
    fn default() -> Self {
        Self {
            thresholds: NseThresholds::Theory { delta: None },
        }
    }
}

impl NseConfig {
    pub fn practical(c_tau: f64) -> Self {
        Self {
            thresholds: NseThresholds::Practical { c_tau },
        }
    }
}

/// Successive elimination with known column support sizes.
///
/// Per batch: one-hot estimates of `X[., j]` for undetermined `j`, a
/// hard-thresholded column sum at `tau_m / 8`, and elimination once
/// `|theta_hat_j| > rho_j tau_m`. Columns with `rho_j = 0` have `theta_j = 0`
/// and are committed to `+1` after the first batch.
pub struct Nse {
    core: EliminationCore,
    rho: Vec<usize>,
    config: NseConfig,
}

impl Nse {
    pub fn new(horizon: usize, rho: ColumnProfile, config: NseConfig, seed: u64) -> Self {
        let d = rho.0.len();
        Self {
            core: EliminationCore::new(d, horizon, seed),
            rho: rho.0,
            config,
        }
    }

    pub fn tau(&self, m: usize) -> f64 {
        let d = self.core.d as f64;
        let horizon = self.core.schedule.horizon();
        match self.config.thresholds {
            NseThresholds::Theory { delta } => {
                let delta = delta.unwrap_or(1.0 / (d * horizon as f64));
                16.0 * ((4.0 * d * d * log2_horizon(horizon) / delta).ln() / 2f64.powi(m as i32 - 1)).sqrt()
            }
            NseThresholds::Practical { c_tau } => {
                let t_m = self.core.schedule.end(m) as f64;
                c_tau * (2.0 * (2.0 * horizon as f64).ln() / t_m).sqrt()
            }
        }
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.core.theta_hat
    }

    pub fn committed_signs(&self) -> &[i8] {
        &self.core.committed
    }

    /// `|U_m|` after each completed batch.
    pub fn undetermined_history(&self) -> &[usize] {
        &self.core.remaining
    }

    fn update(&mut self, m: usize) {
        let tau = self.tau(m);
        for j in self.core.active() {
            let col = one_hot_estimate(&self.core.data, j);
            self.core.theta_hat[j] = theta_hard_threshold(&col, tau);
            if self.rho[j] == 0 || self.core.theta_hat[j].abs() > self.rho[j] as f64 * tau {
                if self.rho[j] == 0 {
                    self.core.theta_hat[j] = 0.0;
                }
                self.core.commit(j);
            }
        }
        self.core.close_batch();
    }
}

impl Policy for Nse {
    fn name(&self) -> &'static str {
        "nse"
    }

    fn dim(&self) -> usize {
        self.core.d
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Vector
    }

    fn choose_action(&mut self, _t: usize) -> ActionVector {
        self.core.choose()
    }

    fn observe(&mut self, t: usize, feedback: Feedback<'_>) {
        let Feedback::Vector(y) = feedback else {
            panic!("nse requires vector feedback");
        };
        if let Some(m) = self.core.record(t, y) {
            self.update(m);
        }
    }

    fn undetermined(&self) -> Option<&[bool]> {
        Some(&self.core.undetermined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NseFsConfig {
    /// Confidence level in the thresholds; `None` means `1 / (d T)`.
    pub delta: Option<f64>,
    /// Leading constant `c` in `tau_m = c sqrt(log(16 d^2 log2(T) / delta) / 2^m)`.
    pub tau_constant: f64,
    /// First least-squares batch; `None` derives it from `s`, `d`, `T`, `delta`.
    pub warmup_batches: Option<usize>,
}

impl Default for NseFsConfig {
    fn default() -> Self {
        Self {
            delta: None,
            tau_constant: 8.0,
            warmup_batches: None,
        }
    }
}

/// Successive elimination with the full support known.
///
/// Batches `m < m0` use one-hot estimates summed over each column's support
/// and eliminate once `|theta_hat_j| > rho_j tau_m`. Batches `m >= m0` fit
/// each row by centered least squares on `S_i` intersected with `U` and
/// eliminate once `|theta_hat_j| > sqrt(rho_j) tau_m`. A row whose design is
/// singular falls back to the one-hot estimate for that batch.
pub struct NseFs {
    core: EliminationCore,
    support: SupportMask,
    support_cols: Vec<Vec<bool>>,
    rho: Vec<usize>,
    delta: f64,
    tau_constant: f64,
    m0: usize,
    singular_events: usize,
}

impl NseFs {
    pub fn new(horizon: usize, support: SupportMask, config: NseFsConfig, seed: u64) -> Self {
        let d = support.dim();
        let rho = support.column_profile().0;
        let support_cols = (0..d).map(|j| (0..d).map(|i| support.get(i, j)).collect()).collect();
        let delta = config.delta.unwrap_or(1.0 / (d as f64 * horizon as f64));
        let core = EliminationCore::new(d, horizon, seed);
        let m_total = core.schedule.num_batches();
        let m0 = config
            .warmup_batches
            .unwrap_or_else(|| Self::default_warmup(d, support.row_sparsity(), horizon, delta))
            .clamp(1, m_total);
        Self {
            core,
            support,
            support_cols,
            rho,
            delta,
            tau_constant: config.tau_constant,
            m0,
            singular_events: 0,
        }
    }

    /// `ceil(log2(128 s log(8 log2(T) d s / delta)))`, before capping at `M`.
    pub fn default_warmup(d: usize, s: usize, horizon: usize, delta: f64) -> usize {
        let s = s.max(1) as f64;
        let inner = (8.0 * log2_horizon(horizon) * d as f64 * s / delta).ln();
        let v = (128.0 * s * inner).log2().ceil();
        if v.is_finite() && v >= 1.0 {
            v as usize
        } else {
            1
        }
    }

    pub fn warmup_batches(&self) -> usize {
        self.m0
    }

    pub fn tau(&self, m: usize) -> f64 {
        let d = self.core.d as f64;
        let horizon = self.core.schedule.horizon();
        self.tau_constant * ((16.0 * d * d * log2_horizon(horizon) / self.delta).ln() / 2f64.powi(m as i32)).sqrt()
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.core.theta_hat
    }

    pub fn committed_signs(&self) -> &[i8] {
        &self.core.committed
    }

    pub fn undetermined_history(&self) -> &[usize] {
        &self.core.remaining
    }

    /// Row fits that fell back to the one-hot estimate.
    pub fn singular_events(&self) -> usize {
        self.singular_events
    }

    fn update(&mut self, m: usize) {
        let tau = self.tau(m);
        let active = self.core.active();
        if m < self.m0 {
            for &j in &active {
                let col = one_hot_estimate(&self.core.data, j);
                self.core.theta_hat[j] = theta_full_support(&col, &self.support_cols[j]);
            }
        } else {
            let d = self.core.d;
            let mut sums = vec![0.0; d];
            let mut fallback_cols: Vec<Option<Vec<f64>>> = vec![None; d];
            for i in 0..d {
                let allowed: Vec<usize> = self.support.row(i).filter(|&j| self.core.undetermined[j]).collect();
                if allowed.is_empty() {
                    continue;
                }
                match restricted_ols(&self.core.data, i, &allowed) {
                    Ok(coef) => {
                        for &j in &allowed {
                            sums[j] += coef[j];
                        }
                    }
                    Err(_) => {
                        self.singular_events += 1;
                        for &j in &allowed {
                            let col = fallback_cols[j].get_or_insert_with(|| one_hot_estimate(&self.core.data, j));
                            sums[j] += col[i];
                        }
                    }
                }
            }
            for &j in &active {
                self.core.theta_hat[j] = sums[j];
            }
        }
        for &j in &active {
            let rho = self.rho[j] as f64;
            let scale = if m < self.m0 { rho } else { rho.sqrt() };
            if self.rho[j] == 0 || self.core.theta_hat[j].abs() > scale * tau {
                self.core.commit(j);
            }
        }
        self.core.close_batch();
    }
}

impl Policy for NseFs {
    fn name(&self) -> &'static str {
        "nse-fs"
    }

    fn dim(&self) -> usize {
        self.core.d
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Vector
    }

    fn choose_action(&mut self, _t: usize) -> ActionVector {
        self.core.choose()
    }

    fn observe(&mut self, t: usize, feedback: Feedback<'_>) {
        let Feedback::Vector(y) = feedback else {
            panic!("nse-fs requires vector feedback");
        };
        if let Some(m) = self.core.record(t, y) {
            self.update(m);
        }
    }

    fn undetermined(&self) -> Option<&[bool]> {
        Some(&self.core.undetermined)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::generate_circulant;
    use crate::model::InterferenceInstance;

    fn drive(policy: &mut dyn Policy, inst: &InterferenceInstance, horizon: usize) -> Vec<ActionVector> {
        let mut played = Vec::new();
        for t in 1..=horizon {
            let a = policy.choose_action(t);
            let y: Vec<f64> = inst.mean_rewards(&a).iter().copied().collect();
            policy.observe(t, Feedback::Vector(&y));
            played.push(a);
        }
        played
    }

    #[test]
    fn zero_columns_commit_after_first_batch() {
        // Column 2 is empty.
        let inst = InterferenceInstance::from_rows(&[
            vec![0.5, 0.0, 0.0],
            vec![0.0, -0.5, 0.0],
            vec![0.2, 0.0, 0.0],
        ])
        .unwrap();
        let mut nsefs = NseFs::new(30, inst.support().clone(), NseFsConfig::default(), 1);
        drive(&mut nsefs, &inst, 2);
        assert!(!nsefs.undetermined().unwrap()[2]);
        assert_eq!(nsefs.committed_signs()[2], 1);

        let mut nse = Nse::new(30, inst.column_profile(), NseConfig::default(), 1);
        drive(&mut nse, &inst, 2);
        assert!(!nse.undetermined().unwrap()[2]);
        assert_eq!(nse.theta_hat()[2], 0.0);
        assert_eq!(nse.committed_signs()[2], 1);
    }

    #[test]
    fn tau_formulas() {
        let inst = generate_circulant(10, 2, 0.1).unwrap();
        let nse = Nse::new(100, inst.column_profile(), NseConfig::default(), 0);
        let delta = 1.0 / 1000.0;
        let want = 16.0 * ((400.0 * 100f64.log2() / delta).ln() / 4.0).sqrt();
        assert!((nse.tau(3) - want).abs() < 1e-12);
        let p = Nse::new(100, inst.column_profile(), NseConfig::practical(0.2), 0);
        let want = 0.2 * (2.0 * 200f64.ln() / 14.0).sqrt();
        assert!((p.tau(3) - want).abs() < 1e-12);

        let fs = NseFs::new(
            100,
            inst.support().clone(),
            NseFsConfig {
                delta: Some(0.05),
                ..Default::default()
            },
            0,
        );
        let want = 8.0 * ((1600.0 * 100f64.log2() / 0.05).ln() / 8.0).sqrt();
        assert!((fs.tau(3) - want).abs() < 1e-12);
    }

    #[test]
    fn default_warmup_formula() {
        let d = 100;
        let s = 20;
        let horizon = 20_000;
        let delta = 0.05;
        let inner = (8.0 * (horizon as f64).log2() * 100.0 * 20.0 / delta).ln();
        let want = (128.0 * 20.0 * inner).log2().ceil() as usize;
        assert_eq!(NseFs::default_warmup(d, s, horizon, delta), want);
        // Capped at M = 14.
        let p = NseFs::new(
            horizon,
            generate_circulant(d, s, 0.01).unwrap().support().clone(),
            NseFsConfig {
                delta: Some(delta),
                ..Default::default()
            },
            0,
        );
        assert_eq!(p.warmup_batches(), 14.min(want));
    }

    #[test]
    fn committed_coordinates_stay_fixed() {
        let inst = generate_circulant(12, 3, 1.0 / 3.0).unwrap();
        let mut nse = Nse::new(200, inst.column_profile(), NseConfig::practical(0.2), 5);
        let played = drive(&mut nse, &inst, 200);
        let u = nse.undetermined().unwrap().to_vec();
        let hist = nse.undetermined_history();
        assert!(hist.windows(2).all(|w| w[1] <= w[0]));
        for j in (0..12).filter(|&j| !u[j]) {
            let last = played.last().unwrap().as_slice()[j];
            assert_eq!(last, nse.committed_signs()[j]);
        }
    }
}

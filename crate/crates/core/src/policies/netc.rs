use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Feedback, FeedbackKind, Policy};
use crate::estimators::{lasso, BatchData, LassoOptions};
use crate::model::{sign_of, ActionVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetcConfig {
    /// Fixed lasso penalty; default `4 sqrt(2 log(2 d^2 / delta) / T1)`.
    pub lambda: Option<f64>,
    /// Fixed exploration length; default `ceil((s T)^(2/3))`.
    pub explore_rounds: Option<usize>,
    /// Confidence level for the default penalty; default `1 / (d T)`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetcPhase {
    Explore,
    Commit,
}

/// Explore-then-commit with row-wise lasso.
///
/// Plays i.i.d. Rademacher actions for `T1` rounds, fits each reward row on
/// the actions with an L1 penalty, and plays `sign(sum_i Xhat[i, .])` for the
/// rest of the horizon.
pub struct Netc {
    d: usize,
    horizon: usize,
    explore_rounds: usize,
    lambda: f64,
    degenerate: bool,
    phase: NetcPhase,
    data: BatchData,
    xhat: Vec<Vec<f64>>,
    theta_hat: Vec<f64>,
    committed: Option<ActionVector>,
    unconverged_rows: usize,
    last_action: Option<ActionVector>,
    undetermined: Vec<bool>,
    rng: ChaCha8Rng,
}

impl Netc {
    pub fn new(d: usize, horizon: usize, s: usize, config: NetcConfig, seed: u64) -> Self {
        let requested = config.explore_rounds.unwrap_or_else(|| Self::default_explore_rounds(s, horizon));
        let degenerate = requested >= horizon;
        let explore_rounds = requested.min(horizon).max(1);
        let lambda = config.lambda.unwrap_or_else(|| {
            let delta = config.delta.unwrap_or(1.0 / (d as f64 * horizon as f64));
            Self::default_lambda(d, explore_rounds, delta)
        });
        Self {
            d,
            horizon,
            explore_rounds,
            lambda,
            degenerate,
            phase: NetcPhase::Explore,
            data: BatchData::with_capacity(d, explore_rounds),
            xhat: Vec::new(),
            theta_hat: vec![0.0; d],
            committed: None,
            unconverged_rows: 0,
            last_action: None,
            undetermined: vec![true; d],
            rng: rng::stream(seed, 0),
        }
    }

    /// `ceil((s T)^(2/3))` with `s` clamped to at least one.
    pub fn default_explore_rounds(s: usize, horizon: usize) -> usize {
        ((s.max(1) as f64 * horizon as f64).powf(2.0 / 3.0)).ceil() as usize
    }

    pub fn default_lambda(d: usize, explore_rounds: usize, delta: f64) -> f64 {
        4.0 * (2.0 * (2.0 * (d * d) as f64 / delta).ln() / explore_rounds as f64).sqrt()
    }

    pub fn explore_rounds(&self) -> usize {
        self.explore_rounds
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// True when the requested exploration covers the whole horizon.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn phase(&self) -> NetcPhase {
        self.phase
    }

    pub fn estimate(&self) -> &[Vec<f64>] {
        &self.xhat
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn committed_action(&self) -> Option<&ActionVector> {
        self.committed.as_ref()
    }

    /// Rows whose coordinate descent hit the sweep limit.
    pub fn unconverged_rows(&self) -> usize {
        self.unconverged_rows
    }

    fn fit(&mut self) {
        let design = self.data.action_matrix();
        let opts = LassoOptions::default();
        self.xhat = (0..self.d)
            .map(|i| {
                let fit = lasso(&design, &self.data.reward_column(i), self.lambda, opts);
                if !fit.converged {
                    self.unconverged_rows += 1;
                }
                fit.coef
            })
            .collect();
        for j in 0..self.d {
            self.theta_hat[j] = self.xhat.iter().map(|row| row[j]).sum();
        }
        let a = ActionVector::from_signs(self.theta_hat.iter().map(|&t| sign_of(t)).collect());
        self.committed = Some(a);
        self.phase = NetcPhase::Commit;
        self.undetermined.iter_mut().for_each(|u| *u = false);
        self.data = BatchData::new(self.d);
    }
}

impl Policy for Netc {
    fn name(&self) -> &'static str {
        "netc"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Vector
    }

    fn choose_action(&mut self, _t: usize) -> ActionVector {
        let a = match (&self.phase, &self.committed) {
            (NetcPhase::Commit, Some(a)) => a.clone(),
            _ => ActionVector::from_signs(
                (0..self.d)
                    .map(|_| if self.rng.gen::<bool>() { 1 } else { -1 })
                    .collect(),
            ),
        };
        self.last_action = Some(a.clone());
        a
    }

    fn observe(&mut self, t: usize, feedback: Feedback<'_>) {
        let Feedback::Vector(y) = feedback else {
            panic!("netc requires vector feedback");
        };
        let a = self
            .last_action
            .take()
            .expect("observe called without a preceding choose_action");
        if self.phase == NetcPhase::Explore {
            self.data.push(&a, y);
            if t == self.explore_rounds && !self.degenerate {
                self.fit();
            }
        }
    }

    fn undetermined(&self) -> Option<&[bool]> {
        Some(&self.undetermined)
    }
}

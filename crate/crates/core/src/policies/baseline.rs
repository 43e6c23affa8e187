//! Optimism-based linear bandit on the aggregated reward.
//!
//! The policy only ever sees `(a_t, Z_t)` with `Z_t = 1^T Y_t` and treats the
//! problem as a `d`-dimensional linear bandit with parameter `theta`. It keeps
//! `V = lambda I + sum a a^T` (through its inverse, updated by
//! Sherman-Morrison) and the ridge estimate `theta_hat = V^-1 sum a Z`, and
//! plays an approximate maximizer of
//!
//! ```text
//! theta_hat^T a + beta_t sqrt(a^T V^-1 a)
//! beta_t = R sqrt(2 log(det(V)^(1/2) lambda^(-d/2) / delta)) + sqrt(lambda) S
//! ```
//!
//! over the hypercube, with noise scale `R = sqrt(d)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Feedback, FeedbackKind, Policy};
use crate::model::{sign_of, ActionVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Ridge parameter `lambda`.
    pub ridge: f64,
    /// Confidence level; `None` means `1 / T`.
    pub delta: Option<f64>,
    /// Bound `S` on `||theta||_2`; `None` means `d`.
    pub theta_bound: Option<f64>,
    /// Random restarts of coordinate ascent per round.
    pub restarts: usize,
    /// Objective evaluations allowed per round.
    pub budget: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ridge: 1.0,
            delta: None,
            theta_bound: None,
            restarts: 8,
            budget: 10_000,
        }
    }
}

/// The UCB objective `theta^T a + beta sqrt(a^T W a)` for a fixed round.
pub struct UcbObjective<'a> {
    pub theta: &'a [f64],
    /// Inverse design matrix `V^-1`.
    pub inv_design: &'a DMatrix<f64>,
    pub beta: f64,
}

impl UcbObjective<'_> {
    pub fn value(&self, a: &[i8]) -> f64 {
        let x = DVector::from_iterator(a.len(), a.iter().map(|&v| f64::from(v)));
        let lin: f64 = self.theta.iter().zip(x.iter()).map(|(t, v)| t * v).sum();
        let quad = x.dot(&(self.inv_design * &x));
        lin + self.beta * quad.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaximizerOutcome {
    /// Every point of the hypercube was evaluated.
    Exhaustive,
    /// `sign(theta)` and every ascent finished within the budget.
    LocalSearch,
    /// The budget ran out first; a previously played action was replayed.
    Fallback,
}

struct AscentState {
    a: Vec<i8>,
    q: Vec<f64>,
    lin: f64,
    quad: f64,
}

impl AscentState {
    fn new(a: Vec<i8>, obj: &UcbObjective<'_>) -> Self {
        let d = a.len();
        let w = obj.inv_design;
        let q: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| w[(i, k)] * f64::from(a[k])).sum())
            .collect();
        let lin = obj.theta.iter().zip(&a).map(|(t, &v)| t * f64::from(v)).sum();
        let quad = q.iter().zip(&a).map(|(x, &v)| x * f64::from(v)).sum();
        Self { a, q, lin, quad }
    }

    fn value(&self, beta: f64) -> f64 {
        self.lin + beta * self.quad.max(0.0).sqrt()
    }

    /// Objective after flipping coordinate `k`.
    fn flipped(&self, k: usize, obj: &UcbObjective<'_>) -> f64 {
        let ak = f64::from(self.a[k]);
        let lin = self.lin - 2.0 * ak * obj.theta[k];
        let quad = self.quad - 4.0 * ak * self.q[k] + 4.0 * obj.inv_design[(k, k)];
        lin + obj.beta * quad.max(0.0).sqrt()
    }

    fn flip(&mut self, k: usize, obj: &UcbObjective<'_>) {
        let ak = f64::from(self.a[k]);
        let w = obj.inv_design;
        self.lin -= 2.0 * ak * obj.theta[k];
        self.quad += -4.0 * ak * self.q[k] + 4.0 * w[(k, k)];
        for (i, q) in self.q.iter_mut().enumerate() {
            *q -= 2.0 * ak * w[(i, k)];
        }
        self.a[k] = -self.a[k];
    }
}

/// Approximate hypercube maximizer of the UCB objective.
///
/// Enumerates `{+-1}^d` when it fits in `budget`. Otherwise the candidates are
/// `sign(theta)` and the end points of first-improvement coordinate ascent
/// from `restarts` uniform random starts, one evaluation per candidate flip.
/// If the budget runs out before every ascent reaches a local optimum, a
/// uniformly chosen element of `history` is replayed instead (or the best
/// point seen, when `history` is empty).
pub fn maximize_ucb(
    obj: &UcbObjective<'_>,
    restarts: usize,
    budget: usize,
    history: &[ActionVector],
    rng: &mut ChaCha8Rng,
) -> (ActionVector, MaximizerOutcome) {
    let d = obj.theta.len();
    if d < usize::BITS as usize - 1 && (1usize << d) <= budget {
        return (exhaustive(obj), MaximizerOutcome::Exhaustive);
    }
    let greedy: Vec<i8> = obj.theta.iter().map(|&t| sign_of(t)).collect();
    let mut used = 1usize;
    let mut best = (obj.value(&greedy), greedy);
    let mut exhausted = false;
    'starts: for _ in 0..restarts {
        if used >= budget {
            exhausted = true;
            break;
        }
        let init: Vec<i8> = (0..d).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut state = AscentState::new(init, obj);
        used += 1;
        let mut current = state.value(obj.beta);
        let mut since_improvement = 0usize;
        let mut k = 0usize;
        while since_improvement < d {
            if used >= budget {
                exhausted = true;
                if current > best.0 {
                    best = (current, state.a.clone());
                }
                break 'starts;
            }
            used += 1;
            let cand = state.flipped(k, obj);
            if cand > current + 1e-12 * (1.0 + current.abs()) {
                state.flip(k, obj);
                current = cand;
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            k = (k + 1) % d;
        }
        if current > best.0 {
            best = (current, state.a);
        }
    }
    if exhausted {
        if let Some(prev) = history.choose(rng) {
            return (prev.clone(), MaximizerOutcome::Fallback);
        }
    }
    (ActionVector::from_signs(best.1), MaximizerOutcome::LocalSearch)
}

fn exhaustive(obj: &UcbObjective<'_>) -> ActionVector {
    let d = obj.theta.len();
    let mut best_val = f64::NEG_INFINITY;
    let mut best = vec![1i8; d];
    let mut state = AscentState::new(vec![1i8; d], obj);
    // Gray-code walk: step g flips the lowest set bit of g.
    for g in 0..(1usize << d) {
        if g > 0 {
            state.flip(g.trailing_zeros() as usize, obj);
        }
        let v = state.value(obj.beta);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&state.a);
        }
    }
    ActionVector::from_signs(best)
}

pub struct BaselineUcb {
    d: usize,
    config: BaselineConfig,
    delta: f64,
    theta_bound: f64,
    noise_scale: f64,
    inv_design: DMatrix<f64>,
    response: DVector<f64>,
    theta_hat: DVector<f64>,
    log_det: f64,
    history: Vec<ActionVector>,
    last_action: Option<ActionVector>,
    outcomes: [usize; 3],
    rng: ChaCha8Rng,
}

impl BaselineUcb {
    pub fn new(d: usize, horizon: usize, config: BaselineConfig, seed: u64) -> Self {
        assert!(config.ridge > 0.0, "ridge must be positive");
        Self {
            d,
            delta: config.delta.unwrap_or(1.0 / horizon.max(1) as f64),
            theta_bound: config.theta_bound.unwrap_or(d as f64),
            noise_scale: (d as f64).sqrt(),
            inv_design: DMatrix::identity(d, d) / config.ridge,
            response: DVector::zeros(d),
            theta_hat: DVector::zeros(d),
            log_det: d as f64 * config.ridge.ln(),
            history: Vec::new(),
            last_action: None,
            outcomes: [0; 3],
            config,
            rng: rng::stream(seed, 0),
        }
    }

    pub fn theta_hat(&self) -> &[f64] {
        self.theta_hat.as_slice()
    }

    pub fn inv_design(&self) -> &DMatrix<f64> {
        &self.inv_design
    }

    /// Current confidence radius `beta_t`.
    pub fn radius(&self) -> f64 {
        let ridge = self.config.ridge;
        let log_ratio = 0.5 * self.log_det - 0.5 * self.d as f64 * ridge.ln() - self.delta.ln();
        self.noise_scale * (2.0 * log_ratio.max(0.0)).sqrt() + ridge.sqrt() * self.theta_bound
    }

    /// Counts of maximizer outcomes: exhaustive, local search, fallback.
    pub fn maximizer_outcomes(&self) -> [usize; 3] {
        self.outcomes
    }
}

impl Policy for BaselineUcb {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Aggregate
    }

    fn choose_action(&mut self, _t: usize) -> ActionVector {
        let beta = self.radius();
        let obj = UcbObjective {
            theta: self.theta_hat.as_slice(),
            inv_design: &self.inv_design,
            beta,
        };
        let (a, outcome) = maximize_ucb(&obj, self.config.restarts, self.config.budget, &self.history, &mut self.rng);
        self.outcomes[match outcome {
            MaximizerOutcome::Exhaustive => 0,
            MaximizerOutcome::LocalSearch => 1,
            MaximizerOutcome::Fallback => 2,
        }] += 1;
        self.last_action = Some(a.clone());
        a
    }

    fn observe(&mut self, _t: usize, feedback: Feedback<'_>) {
        let Feedback::Aggregate(z) = feedback else {
            panic!("baseline accepts only aggregated feedback");
        };
        let a = self
            .last_action
            .take()
            .expect("observe called without a preceding choose_action");
        let x = DVector::from_vec(a.to_f64());
        let wx = &self.inv_design * &x;
        let denom = 1.0 + x.dot(&wx);
        self.inv_design.ger(-1.0 / denom, &wx, &wx, 1.0);
        self.log_det += denom.ln();
        self.response.axpy(z, &x, 1.0);
        self.theta_hat = &self.inv_design * &self.response;
        self.history.push(a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_actions(d: usize) -> Vec<Vec<i8>> {
        (0..1usize << d)
            .map(|m| (0..d).map(|k| if m >> k & 1 == 1 { 1 } else { -1 }).collect())
            .collect()
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let w = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.5]);
        let theta = [0.4, -1.2, 0.05];
        let obj = UcbObjective {
            theta: &theta,
            inv_design: &w,
            beta: 0.7,
        };
        let brute = all_actions(3)
            .into_iter()
            .map(|a| obj.value(&a))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut g = rng::stream(0, 0);
        let (a, outcome) = maximize_ucb(&obj, 8, 10_000, &[], &mut g);
        assert_eq!(outcome, MaximizerOutcome::Exhaustive);
        assert!((obj.value(a.as_slice()) - brute).abs() < 1e-12);
    }

    #[test]
    fn local_search_flip_bookkeeping_matches_direct_evaluation() {
        let d = 6;
        let mut g = rng::stream(3, 0);
        let m = DMatrix::from_fn(d, d, |_, _| g.gen_range(-1.0..1.0));
        let w = &m * m.transpose() + DMatrix::identity(d, d);
        let theta: Vec<f64> = (0..d).map(|_| g.gen_range(-1.0..1.0)).collect();
        let obj = UcbObjective {
            theta: &theta,
            inv_design: &w,
            beta: 0.9,
        };
        let mut st = AscentState::new(vec![1; d], &obj);
        for k in [2, 0, 5, 2, 3] {
            let predicted = st.flipped(k, &obj);
            st.flip(k, &obj);
            assert!((predicted - obj.value(&st.a)).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_exhaustion_replays_history() {
        let d = 30;
        let theta = vec![0.1; d];
        let w = DMatrix::identity(d, d);
        let obj = UcbObjective {
            theta: &theta,
            inv_design: &w,
            beta: 1.0,
        };
        let prev = ActionVector::filled(d, -1);
        let mut g = rng::stream(0, 0);
        let (a, outcome) = maximize_ucb(&obj, 8, 5, std::slice::from_ref(&prev), &mut g);
        assert_eq!(outcome, MaximizerOutcome::Fallback);
        assert_eq!(a, prev);
    }

    #[test]
    fn isotropic_start_is_a_valid_argmax() {
        let d = 4;
        let mut p = BaselineUcb::new(d, 100, BaselineConfig::default(), 0);
        let a = p.choose_action(1);
        let obj = UcbObjective {
            theta: p.theta_hat(),
            inv_design: p.inv_design(),
            beta: p.radius(),
        };
        let best = all_actions(d)
            .into_iter()
            .map(|x| obj.value(&x))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((obj.value(a.as_slice()) - best).abs() < 1e-12);
    }

    #[test]
    fn sherman_morrison_tracks_direct_inverse() {
        let d = 5;
        let mut p = BaselineUcb::new(d, 50, BaselineConfig::default(), 1);
        let mut v = DMatrix::<f64>::identity(d, d);
        let mut b = DVector::zeros(d);
        for t in 1..=12 {
            let a = p.choose_action(t);
            let x = DVector::from_vec(a.to_f64());
            let z = 0.3 * t as f64 - 1.0;
            p.observe(t, Feedback::Aggregate(z));
            v += &x * x.transpose();
            b += &x * z;
        }
        let inv = v.clone().try_inverse().unwrap();
        assert!((&inv - p.inv_design()).amax() < 1e-12);
        let theta = inv * b;
        for (x, y) in theta.iter().zip(p.theta_hat()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((p.log_det - v.determinant().ln()).abs() < 1e-10);
    }
}

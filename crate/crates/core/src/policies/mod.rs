//! Online allocation policies.
//!
//! Every policy is a single-owner state machine driven by two calls per
//! round: [`Policy::choose_action`] and then [`Policy::observe`]. What a
//! policy may see is fixed when it is built: its constructor receives only
//! the structural knowledge its setting allows, and [`Policy::feedback_kind`]
//! tells the driver whether to hand it the full reward vector or only the
//! aggregated scalar.

mod baseline;
mod elimination;
mod netc;
mod oracle;
mod schedule;

pub use baseline::{maximize_ucb, BaselineConfig, BaselineUcb, MaximizerOutcome, UcbObjective};
pub use elimination::{Nse, NseConfig, NseFs, NseFsConfig, NseThresholds};
pub use netc::{Netc, NetcConfig};
pub use oracle::OraclePolicy;
pub use schedule::BatchSchedule;

use crate::model::ActionVector;

/// Feedback channel a policy is entitled to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackKind {
    /// Only `Z_t = 1^T Y_t`.
    Aggregate,
    /// The full reward vector `Y_t`.
    Vector,
}

#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    Aggregate(f64),
    Vector(&'a [f64]),
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn feedback_kind(&self) -> FeedbackKind;

    /// Action for round `t` (1-based).
    fn choose_action(&mut self, t: usize) -> ActionVector;

    /// Feedback for the action last returned by `choose_action(t)`.
    fn observe(&mut self, t: usize, feedback: Feedback<'_>);

    /// Coordinates whose sign is still being explored, when the policy keeps
    /// such a set. Coordinates outside it must be played with a fixed sign.
    fn undetermined(&self) -> Option<&[bool]> {
        None
    }
}

/// `log2(T)` clamped below at 1 so the threshold formulas stay finite for
/// `T = 1`.
pub(crate) fn log2_horizon(t: usize) -> f64 {
    (t.max(2) as f64).log2()
}

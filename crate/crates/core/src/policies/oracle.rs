use super::{Feedback, FeedbackKind, Policy};
use crate::model::{oracle_action, ActionVector, InterferenceInstance};

/// Plays `sign(theta)` every round. Regret reference only.
pub struct OraclePolicy {
    action: ActionVector,
}

impl OraclePolicy {
    pub fn new(instance: &InterferenceInstance) -> Self {
        Self {
            action: oracle_action(instance.theta()),
        }
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn dim(&self) -> usize {
        self.action.len()
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Aggregate
    }

    fn choose_action(&mut self, _t: usize) -> ActionVector {
        self.action.clone()
    }

    fn observe(&mut self, _t: usize, _feedback: Feedback<'_>) {}
}

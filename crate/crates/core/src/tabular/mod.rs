//! Tabular update rules and ε-greedy control.
//!
//! Every update rule records the visit on the `(s, a)` entry it modifies and
//! draws its step size from a [`LearningRateSchedule`] evaluated at that
//! entry's new count. A `terminal` transition is never bootstrapped from;
//! truncated-but-not-terminal transitions are.

mod agent;
mod double;
mod ema;
mod self_correcting;

pub use agent::{
    run_tabular_episode, EpisodeLog, Learner, LearnerKind, TabularAgent, TabularAgentConfig,
};
pub use double::{double_q_update, DoubleQState, Estimator};
pub use ema::{ema_update, q_learning_ema_update, EmaInit, EmaKeying, EmaRewardTable};
pub use self_correcting::{self_correcting_update, SelfCorrectingState};

use crate::mdp::{argmax_random_tie, ActionId, LearningRateSchedule, QTable, Transition};
use crate::rng::RngStream;

/// With probability `epsilon` a uniformly random action, otherwise a greedy one
/// with ties broken uniformly. The exploration coin is always drawn.
pub fn epsilon_greedy(q_row: &[f64], epsilon: f64, rng: &mut RngStream) -> ActionId {
    debug_assert!(!q_row.is_empty());
    if rng.uniform() < epsilon {
        ActionId(rng.below(q_row.len()))
    } else {
        ActionId(argmax_random_tie(q_row, rng))
    }
}

/// `Q(s,a) += α [r + γ max Q(s',·) − Q(s,a)]`; the target is `r` alone on a
/// terminal transition. Returns the new `Q(s,a)`.
pub fn q_learning_update(
    q: &mut QTable,
    t: &Transition,
    lr: &LearningRateSchedule,
    gamma: f64,
) -> f64 {
    q_learning_update_with_reward(q, t, t.r, lr, gamma)
}

#[inline]
pub(crate) fn q_learning_update_with_reward(
    q: &mut QTable,
    t: &Transition,
    reward: f64,
    lr: &LearningRateSchedule,
    gamma: f64,
) -> f64 {
    let target = if t.terminal {
        reward
    } else {
        reward + gamma * q.max_value(t.s_next)
    };
    let alpha = lr.rate(q.record_visit(t.s, t.a));
    let entry = q.get_mut(t.s, t.a);
    *entry += alpha * (target - *entry);
    *entry
}

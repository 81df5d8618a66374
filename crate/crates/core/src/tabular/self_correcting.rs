//! Self-correcting Q-Learning.
//!
//! `q_aux(s,a)` holds the value `q(s,a)` had before its most recent update.
//! The successor action is chosen on the extrapolated estimate
//! `β·q(s',·) − (β−1)·q_aux(s',·)` and evaluated on `q(s',·)`. β = 1
//! recovers plain Q-Learning.

use crate::mdp::{argmax_random_tie, LearningRateSchedule, QTable, Transition};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCorrectingState {
    pub q: QTable,
    pub q_aux: QTable,
    pub beta: f64,
    scratch: Vec<f64>,
}

impl SelfCorrectingState {
    pub const DEFAULT_BETA: f64 = 2.0;

    pub fn new(num_states: usize, num_actions: usize, beta: f64) -> Self {
        assert!(beta >= 1.0, "self-correcting beta must be at least 1");
        Self {
            q: QTable::new(num_states, num_actions),
            q_aux: QTable::new(num_states, num_actions),
            beta,
            scratch: Vec::with_capacity(num_actions),
        }
    }

    /// Successor action under the self-correcting selection rule.
    pub fn select(&mut self, t: &Transition, rng: &mut RngStream) -> usize {
        let beta = self.beta;
        self.scratch.clear();
        self.scratch.extend(
            self.q
                .row(t.s_next)
                .iter()
                .zip(self.q_aux.row(t.s_next))
                .map(|(q, aux)| beta * q - (beta - 1.0) * aux),
        );
        argmax_random_tie(&self.scratch, rng)
    }
}

pub fn self_correcting_update(
    sc: &mut SelfCorrectingState,
    t: &Transition,
    lr: &LearningRateSchedule,
    gamma: f64,
    rng: &mut RngStream,
) -> f64 {
    let target = if t.terminal {
        t.r
    } else {
        let best = sc.select(t, rng);
        t.r + gamma * sc.q.row(t.s_next)[best]
    };
    let alpha = lr.rate(sc.q.record_visit(t.s, t.a));
    let old = sc.q.get(t.s, t.a);
    *sc.q_aux.get_mut(t.s, t.a) = old;
    let entry = sc.q.get_mut(t.s, t.a);
    *entry += alpha * (target - *entry);
    *entry
}

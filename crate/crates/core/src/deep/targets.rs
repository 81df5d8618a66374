//! Bootstrap targets for a sampled minibatch.
//!
//! `done[i]` marks rows whose target is the reward alone: true terminals,
//! and truncations unless the run bootstraps through them.

use ndarray::Array2;

use super::DeepTransition;
use crate::env::cartpole::STATE_DIM;
use crate::neural::Mlp;

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    pub done: Vec<bool>,
}

impl Batch {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            states: Array2::zeros((n, STATE_DIM)),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            next_states: Array2::zeros((n, STATE_DIM)),
            done: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn from_transitions(ts: &[&DeepTransition], bootstrap_on_truncation: bool) -> Self {
        let mut b = Self::with_capacity(ts.len());
        b.fill(ts, bootstrap_on_truncation);
        b
    }

    /// Overwrites the batch in place, reusing its buffers.
    pub fn fill(&mut self, ts: &[&DeepTransition], bootstrap_on_truncation: bool) {
        let n = ts.len();
        if self.states.nrows() != n {
            self.states = Array2::zeros((n, STATE_DIM));
            self.next_states = Array2::zeros((n, STATE_DIM));
        }
        self.actions.clear();
        self.rewards.clear();
        self.done.clear();
        for (i, t) in ts.iter().enumerate() {
            for j in 0..STATE_DIM {
                self.states[[i, j]] = t.s[j];
                self.next_states[[i, j]] = t.s_next[j];
            }
            self.actions.push(t.a.0);
            self.rewards.push(t.r);
            // The cap sets both flags, so the flag only matters for capped
            // steps that did not also fail.
            let capped_only = t.truncated && !failed(t);
            self.done.push(if capped_only { !bootstrap_on_truncation } else { t.terminal });
        }
    }
}

fn failed(t: &DeepTransition) -> bool {
    t.terminal && !t.truncated
}

fn first_argmax(row: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in row.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn assemble(batch: &Batch, gamma: f64, bootstrap: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..batch.len())
        .map(|i| {
            if batch.done[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + gamma * bootstrap(i)
            }
        })
        .collect()
}

/// `r + γ max_a target(s', a)`.
pub fn dqn_targets(batch: &Batch, target: &Mlp, gamma: f64) -> Vec<f64> {
    let next = target.forward(&batch.next_states.view());
    assemble(batch, gamma, |i| next.row(i).fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
}

/// `r + γ target(s', argmax_a online(s', a))`.
pub fn ddqn_targets(batch: &Batch, online: &Mlp, target: &Mlp, gamma: f64) -> Vec<f64> {
    let choose = online.forward(&batch.next_states.view());
    let value = target.forward(&batch.next_states.view());
    assemble(batch, gamma, |i| value[[i, first_argmax(choose.row(i).iter().copied())]])
}

/// `r + γ target(s', a*)` with
/// `a* = argmax_a [β online(s', a) − (β−1) target(s', a)]`.
pub fn sc_dqn_targets(batch: &Batch, online: &Mlp, target: &Mlp, gamma: f64, beta: f64) -> Vec<f64> {
    let on = online.forward(&batch.next_states.view());
    let tg = target.forward(&batch.next_states.view());
    assemble(batch, gamma, |i| {
        let a = first_argmax(
            on.row(i)
                .iter()
                .zip(tg.row(i))
                .map(|(o, t)| beta * o - (beta - 1.0) * t),
        );
        tg[[i, a]]
    })
}

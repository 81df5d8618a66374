use serde::{Deserialize, Serialize};

use crate::mdp::{LearningRateSchedule, QTable, StateId, Transition};
use crate::tabular::q_learning_update_with_reward;

/// What the moving average is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmaKeying {
    /// One average per state `s_t` in which the action was taken.
    State,
    /// One average per `(s_t, a_t)`. Default: with per-state keying, a state
    /// whose actions pay differently (stick vs hit in Blackjack) averages
    /// them together and the TD target stops estimating `E[r | s, a]`.
    #[default]
    StateAction,
}

/// Starting value of an average before its first update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmaInit {
    /// `r̂ = 0`; the first reward moves it by `r/x` like any other.
    #[default]
    Zero,
    /// `r̂` jumps to the first reward seen. With `x ≫ 1` a single lucky
    /// draw then dominates the target for roughly `x` visits.
    FirstObservation,
}

/// Running reward averages `r̂` with weight `1/x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaRewardTable {
    x: f64,
    keying: EmaKeying,
    init: EmaInit,
    num_actions: usize,
    r_hat: Vec<f64>,
    initialized: Vec<bool>,
}

impl EmaRewardTable {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        x: f64,
        keying: EmaKeying,
        init: EmaInit,
    ) -> Self {
        assert!(x > 0.0, "EMA weight x must be positive");
        let slots = match keying {
            EmaKeying::State => num_states,
            EmaKeying::StateAction => num_states * num_actions,
        };
        Self {
            x,
            keying,
            init,
            num_actions,
            r_hat: vec![0.0; slots],
            initialized: vec![false; slots],
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn keying(&self) -> EmaKeying {
        self.keying
    }

    pub fn init(&self) -> EmaInit {
        self.init
    }

    #[inline]
    fn slot(&self, t: &Transition) -> usize {
        match self.keying {
            EmaKeying::State => t.s.0,
            EmaKeying::StateAction => t.s.0 * self.num_actions + t.a.0,
        }
    }

    /// Current average at a state-keyed slot, if any reward has been seen.
    pub fn get(&self, s: StateId) -> Option<f64> {
        assert_eq!(self.keying, EmaKeying::State);
        self.initialized[s.0].then(|| self.r_hat[s.0])
    }

    #[inline]
    fn update_slot(&mut self, slot: usize, r: f64) -> f64 {
        let first = !self.initialized[slot];
        self.initialized[slot] = true;
        if first && self.init == EmaInit::FirstObservation {
            self.r_hat[slot] = r;
        } else {
            let w = 1.0 / self.x;
            // x = 1 is the identity r̂ = r; the general form can round there.
            self.r_hat[slot] = if w == 1.0 {
                r
            } else {
                self.r_hat[slot] + w * (r - self.r_hat[slot])
            };
        }
        self.r_hat[slot]
    }
}

/// `r̂ += (1/x)(r − r̂)`, starting from the table's [`EmaInit`].
/// Returns the new average.
pub fn ema_update(table: &mut EmaRewardTable, s: StateId, r: f64) -> f64 {
    assert_eq!(
        table.keying,
        EmaKeying::State,
        "state-keyed update on a state-action table"
    );
    table.update_slot(s.0, r)
}

/// Folds `t.r` into the average for `t`'s key, then applies the Q-Learning
/// step with `r̂` in place of `r`.
pub fn q_learning_ema_update(
    q: &mut QTable,
    ema: &mut EmaRewardTable,
    t: &Transition,
    lr: &LearningRateSchedule,
    gamma: f64,
) -> f64 {
    let slot = ema.slot(t);
    let r_hat = ema.update_slot(slot, t.r);
    q_learning_update_with_reward(q, t, r_hat, lr, gamma)
}

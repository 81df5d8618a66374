//! Shared MDP vocabulary: ids, transitions, Q-tables and schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// One environment interaction.
///
/// `terminal` marks a true end of the MDP: the successor must not be
/// bootstrapped from. `truncated` marks an episode cut short by a step cap.
/// An environment may set both (CartPole's 200-step cap ends the episode);
/// whether a truncated successor is bootstrapped is decided by the learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<S = StateId> {
    pub s: S,
    pub a: ActionId,
    pub r: f64,
    pub s_next: S,
    pub terminal: bool,
    pub truncated: bool,
}

impl<S> Transition<S> {
    /// Whether the episode ends with this transition.
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Dense `states × actions` table of action values with per-entry update
/// counts. Initialized to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
    visit_counts: Vec<u64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        assert!(num_states > 0 && num_actions > 0, "empty Q-table shape");
        Self {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
            visit_counts: vec![0; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 >= self.num_states {
            return Err(Error::usage(format!(
                "state {} out of range (table has {} states)",
                s.0, self.num_states
            )));
        }
        Ok(())
    }

    fn check(&self, s: StateId, a: ActionId) -> Result<()> {
        self.check_state(s)?;
        if a.0 >= self.num_actions {
            return Err(Error::usage(format!(
                "action {} out of range (table has {} actions)",
                a.0, self.num_actions
            )));
        }
        Ok(())
    }

    /// Action values of state `s`.
    pub fn lookup(&self, s: StateId) -> Result<&[f64]> {
        self.check_state(s)?;
        Ok(self.row(s))
    }

    pub fn set(&mut self, s: StateId, a: ActionId, value: f64) -> Result<()> {
        self.check(s, a)?;
        let i = self.index(s, a);
        self.values[i] = value;
        Ok(())
    }

    #[inline]
    pub(crate) fn index(&self, s: StateId, a: ActionId) -> usize {
        debug_assert!(s.0 < self.num_states && a.0 < self.num_actions);
        s.0 * self.num_actions + a.0
    }

    /// Unchecked row access for hot loops; panics on an invalid state.
    #[inline]
    pub fn row(&self, s: StateId) -> &[f64] {
        let start = s.0 * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    #[inline]
    pub fn get(&self, s: StateId, a: ActionId) -> f64 {
        self.values[self.index(s, a)]
    }

    #[inline]
    pub(crate) fn get_mut(&mut self, s: StateId, a: ActionId) -> &mut f64 {
        let i = self.index(s, a);
        &mut self.values[i]
    }

    #[inline]
    pub fn visits(&self, s: StateId, a: ActionId) -> u64 {
        self.visit_counts[self.index(s, a)]
    }

    /// Increments the update count of `(s, a)` and returns the new count.
    #[inline]
    pub(crate) fn record_visit(&mut self, s: StateId, a: ActionId) -> u64 {
        let i = self.index(s, a);
        self.visit_counts[i] += 1;
        self.visit_counts[i]
    }

    #[inline]
    pub fn max_value(&self, s: StateId) -> f64 {
        max_of(self.row(s))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visit_counts
    }
}

#[inline]
pub fn max_of(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Index of a maximal entry, ties broken uniformly at random.
///
/// Draws from `rng` only when there is a tie.
pub fn argmax_random_tie(row: &[f64], rng: &mut RngStream) -> usize {
    debug_assert!(!row.is_empty());
    let best = max_of(row);
    let ties = row.iter().filter(|&&v| v == best).count();
    if ties == 1 {
        return row.iter().position(|&v| v == best).unwrap();
    }
    let pick = rng.below(ties);
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LearningRateSchedule {
    Constant { alpha: f64 },
    /// `1 / n^exponent` where `n` counts updates of the pair, including the
    /// current one.
    PolynomialCount { exponent: f64 },
}

impl LearningRateSchedule {
    /// The decaying baseline schedule, `1 / n(s,a)`.
    pub const DYNAMIC: Self = LearningRateSchedule::PolynomialCount { exponent: 1.0 };

    #[inline]
    pub fn rate(&self, visit_count: u64) -> f64 {
        debug_assert!(visit_count >= 1);
        match *self {
            LearningRateSchedule::Constant { alpha } => alpha,
            LearningRateSchedule::PolynomialCount { exponent } => {
                (visit_count as f64).powf(-exponent)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningRateSchedule::Constant { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(
                Error::config(format!("constant learning rate {alpha} outside (0, 1]")),
            ),
            LearningRateSchedule::PolynomialCount { exponent }
                if !(exponent > 0.0 && exponent <= 1.0) =>
            {
                Err(Error::config(format!(
                    "learning-rate exponent {exponent} outside (0, 1]"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LearningRateSchedule::Constant { alpha } => format!("constant({alpha})"),
            LearningRateSchedule::PolynomialCount { exponent } => {
                format!("1/n^{exponent}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExplorationSchedule {
    Constant { epsilon: f64 },
    /// `1 / sqrt(n(s))` where `n(s)` counts visits of the current state,
    /// including the current one.
    CountBased,
    Linear { start: f64, end: f64, horizon: u64 },
}

impl ExplorationSchedule {
    #[inline]
    pub fn epsilon(&self, state_visit_count: u64, episode: u64) -> f64 {
        match *self {
            ExplorationSchedule::Constant { epsilon } => epsilon,
            ExplorationSchedule::CountBased => 1.0 / (state_visit_count.max(1) as f64).sqrt(),
            ExplorationSchedule::Linear {
                start,
                end,
                horizon,
            } => {
                let frac = episode as f64 / horizon.max(1) as f64;
                (start - (start - end) * frac).max(end)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| (0.0..=1.0).contains(&e);
        match *self {
            ExplorationSchedule::Constant { epsilon } if !ok(epsilon) => Err(Error::config(
                format!("epsilon {epsilon} outside [0, 1]"),
            )),
            ExplorationSchedule::Linear {
                start,
                end,
                horizon,
            } if !ok(start) || !ok(end) || end > start || horizon == 0 => Err(Error::config(
                format!("invalid linear epsilon schedule {start} -> {end} over {horizon}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Discount factor in `[0, 1]`. γ = 1 is admitted for episodic tasks.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config(format!("discount factor {gamma} outside [0, 1]")));
        }
        Ok(Self(gamma))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DiscountFactor {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DiscountFactor> for f64 {
    fn from(value: DiscountFactor) -> Self {
        value.0
    }
}

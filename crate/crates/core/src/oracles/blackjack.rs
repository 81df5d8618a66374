//! Exact infinite-deck Blackjack solution by dynamic programming.
//!
//! The dealer's final-score distribution is computed per up-card by
//! enumerating draws until the dealer stands. The player's optimal value in
//! every state is then `max(stick, hit)`, solved by recursion on the hand
//! (hitting strictly increases the hard total, so the recursion is finite).

use std::collections::HashMap;

use crate::env::blackjack::{
    card_probability, Blackjack, BlackjackState, Hand, HIT, NUM_STATES, STICK,
};
use crate::error::{Error, Result};
use crate::mdp::{ActionId, QTable, StateId};
use crate::rng::RngStream;

/// Dealer outcome probabilities: indices 0..=4 are final scores 17..=21,
/// index 5 is a bust.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DealerOutcomes(pub [f64; 6]);

impl DealerOutcomes {
    pub const BUST: usize = 5;

    pub fn score_probability(&self, score: u8) -> f64 {
        match score {
            17..=21 => self.0[(score - 17) as usize],
            _ => 0.0,
        }
    }

    pub fn bust_probability(&self) -> f64 {
        self.0[Self::BUST]
    }

    /// Expected reward of standing on `player_score`.
    pub fn stick_value(&self, player_score: u8) -> f64 {
        let mut v = self.bust_probability();
        for dealer in 17..=21u8 {
            let p = self.score_probability(dealer);
            v += p * match player_score.cmp(&dealer) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Less => -1.0,
            };
        }
        v
    }
}

fn dealer_from(hand: Hand, memo: &mut HashMap<Hand, [f64; 6]>) -> [f64; 6] {
    if hand.is_bust() {
        let mut out = [0.0; 6];
        out[DealerOutcomes::BUST] = 1.0;
        return out;
    }
    if hand.score() >= 17 {
        let mut out = [0.0; 6];
        out[(hand.score() - 17) as usize] = 1.0;
        return out;
    }
    if let Some(v) = memo.get(&hand) {
        return *v;
    }
    let mut out = [0.0; 6];
    for card in 1..=10u8 {
        let p = card_probability(card);
        let sub = dealer_from(hand.add(card), memo);
        for (o, s) in out.iter_mut().zip(sub) {
            *o += p * s;
        }
    }
    memo.insert(hand, out);
    out
}

/// Final-score distribution of the dealer showing `upcard` (1 = ace).
pub fn dealer_outcome_distribution(upcard: u8) -> DealerOutcomes {
    let mut memo = HashMap::new();
    DealerOutcomes(dealer_from(Hand::from_cards(&[upcard]), &mut memo))
}

/// Optimal values and policy over every enumerated state.
#[derive(Debug, Clone)]
pub struct BlackjackSolution {
    pub dealer: [DealerOutcomes; 10],
    pub stick_values: Vec<f64>,
    pub hit_values: Vec<f64>,
    /// `max(stick, hit)` per state id.
    pub values: Vec<f64>,
    pub policy: Vec<ActionId>,
    /// Expected reward of the optimal policy from a fresh deal.
    pub expected_value: f64,
}

impl BlackjackSolution {
    pub fn solve() -> Self {
        let dealer: [DealerOutcomes; 10] =
            std::array::from_fn(|i| dealer_outcome_distribution(i as u8 + 1));
        let mut stick_values = vec![0.0; NUM_STATES];
        let mut hit_values = vec![0.0; NUM_STATES];
        let mut values = vec![f64::NAN; NUM_STATES];

        // A soft hand can fall back to a lower hard sum after a hit, so states
        // are solved by memoized recursion rather than in sum order.
        fn value(
            state: BlackjackState,
            dealer: &[DealerOutcomes; 10],
            stick: &mut [f64],
            hit: &mut [f64],
            values: &mut [f64],
        ) -> f64 {
            let id = state.id().0;
            if !values[id].is_nan() {
                return values[id];
            }
            let d = &dealer[(state.dealer_showing - 1) as usize];
            let stick_v = d.stick_value(state.player_sum);
            let mut hit_v = 0.0;
            for card in 1..=10u8 {
                let p = card_probability(card);
                let hand = state.hand().add(card);
                hit_v += p * if hand.is_bust() {
                    -1.0
                } else {
                    value(
                        BlackjackState::from_hand(hand, state.dealer_showing),
                        dealer,
                        stick,
                        hit,
                        values,
                    )
                };
            }
            stick[id] = stick_v;
            hit[id] = hit_v;
            values[id] = stick_v.max(hit_v);
            values[id]
        }

        for id in 0..NUM_STATES {
            let state = BlackjackState::from_id(StateId(id));
            if state.is_reachable() {
                value(state, &dealer, &mut stick_values, &mut hit_values, &mut values);
            } else {
                values[id] = 0.0;
            }
        }
        let policy = (0..NUM_STATES)
            .map(|i| if hit_values[i] > stick_values[i] { HIT } else { STICK })
            .collect();
        let expected_value = initial_state_distribution()
            .iter()
            .zip(&values)
            .map(|(p, v)| p * v)
            .sum();
        Self {
            dealer,
            stick_values,
            hit_values,
            values,
            policy,
            expected_value,
        }
    }

    pub fn action(&self, state: BlackjackState) -> ActionId {
        self.policy[state.id().0]
    }
}

/// Probability of each state id as the initial state of an episode.
pub fn initial_state_distribution() -> Vec<f64> {
    let mut dist = vec![0.0; NUM_STATES];
    for c1 in 1..=10u8 {
        for c2 in 1..=10u8 {
            for up in 1..=10u8 {
                let p = card_probability(c1) * card_probability(c2) * card_probability(up);
                let s = BlackjackState::from_hand(Hand::from_cards(&[c1, c2]), up);
                dist[s.id().0] += p;
            }
        }
    }
    dist
}

/// Expected reward of basic strategy (optimal hit/stick play) from a fresh deal.
pub fn blackjack_basic_strategy_ev() -> f64 {
    BlackjackSolution::solve().expected_value
}

/// Counts of episode-initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartStateOccupancy {
    counts: Vec<u64>,
}

impl StartStateOccupancy {
    pub fn new(num_states: usize) -> Self {
        Self {
            counts: vec![0; num_states],
        }
    }

    pub fn record(&mut self, s: StateId) {
        self.counts[s.0] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ_s count(s)·value(s) / Σ_s count(s)`.
    pub fn weighted_mean(&self, mut value: impl FnMut(StateId) -> f64) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::usage("occupancy-weighted estimate with no recorded starts"));
        }
        let sum: f64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| c as f64 * value(StateId(s)))
            .sum();
        Ok(sum / total as f64)
    }
}

/// Occurrence-weighted mean of `max_a Q(s, a)` over observed start states.
pub fn blackjack_weighted_start_estimate(q: &QTable, occupancy: &StartStateOccupancy) -> Result<f64> {
    occupancy.weighted_mean(|s| q.max_value(s))
}

/// Monte-Carlo return of playing `solution`'s policy: `(mean, standard error)`.
pub fn simulate_policy_return(
    solution: &BlackjackSolution,
    episodes: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if episodes < 2 {
        return Err(Error::usage("need at least two episodes for a standard error"));
    }
    let mut env = Blackjack::new();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..episodes {
        let mut s = env.reset_state(rng);
        let mut ret = 0.0;
        loop {
            let (t, next) = Blackjack::transition(s, solution.action(s), rng)?;
            ret += t.r;
            match next {
                Some(n) if !t.terminal => s = n,
                _ => break,
            }
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    Ok((mean, (var.max(0.0) / n).sqrt()))
}

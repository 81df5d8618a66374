//! Ground-truth values and the overestimation statistic.

mod blackjack;
mod cartpole;
mod gridworld;

pub use blackjack::{
    blackjack_basic_strategy_ev, blackjack_weighted_start_estimate, dealer_outcome_distribution,
    simulate_policy_return, BlackjackSolution, DealerOutcomes, StartStateOccupancy,
};
pub use cartpole::{cartpole_optimal_start_value, cartpole_optimal_start_value_by_summation};
pub use gridworld::{
    gridworld_greedy_path, gridworld_optimal_start_value, gridworld_value_iteration,
    ValueIterationResult,
};

use serde::{Deserialize, Serialize};

/// `estimate − optimum`: positive is overestimation, negative underestimation.
#[inline]
pub fn overestimation_bias(estimate: f64, optimum: f64) -> f64 {
    estimate - optimum
}

/// One bias measurement at a training checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub environment: String,
    pub algorithm: String,
    pub checkpoint: u64,
    pub estimate: f64,
    pub optimum: f64,
    pub bias: f64,
}

impl BiasRecord {
    pub fn new(
        environment: impl Into<String>,
        algorithm: impl Into<String>,
        checkpoint: u64,
        estimate: f64,
        optimum: f64,
    ) -> Self {
        Self {
            environment: environment.into(),
            algorithm: algorithm.into(),
            checkpoint,
            estimate,
            optimum,
            bias: overestimation_bias(estimate, optimum),
        }
    }
}

//! Q-Learning overestimation bias laboratory.
//!
//! Tabular agents (Q-Learning, its static-α / low-γ / EMA-reward variants,
//! Double Q-Learning, Self-Correcting Q-Learning), deep agents on CartPole
//! (DQN, Double DQN, Self-Correcting DQN), exact ground-truth oracles, and an
//! experiment harness that measures `max_a Q(s₀,a) − Q*(s₀)`.

pub mod deep;
pub mod env;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod neural;
pub mod oracles;
pub mod rng;
pub mod tabular;

pub use error::{Error, Result};

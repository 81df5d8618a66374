//! Simulators for the three benchmark environments.

pub mod blackjack;
pub mod cartpole;
pub mod gridworld;

pub use blackjack::{Blackjack, BlackjackState};
pub use cartpole::{CartPole, CartPoleState};
pub use gridworld::{Gridworld, GridworldConfig, GridworldState};

use crate::error::Result;
use crate::mdp::{ActionId, StateId, Transition};
use crate::rng::RngStream;

/// An episodic environment with an enumerated state space.
pub trait DiscreteEnv {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;

    /// Starts a new episode and returns its initial state.
    fn reset(&mut self, rng: &mut RngStream) -> StateId;

    /// Advances the current episode. Stepping after the episode has ended is a
    /// usage error.
    fn step(&mut self, action: ActionId, rng: &mut RngStream) -> Result<Transition>;
}

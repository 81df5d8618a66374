//! 3×3 Gridworld with Bernoulli rewards on every non-goal step.
//!
//! The agent starts in the corner `(0, 0)`; the goal is the opposite corner
//! `(2, 2)`. Moving costs a reward of −12 or +10 with equal probability
//! (mean −1); moves off the grid leave the agent in place and pay the same
//! stochastic reward. Any action taken in the goal cell pays the fixed
//! terminal reward +5 and ends the episode, so the shortest episode is four
//! moves followed by one goal action, worth `5γ⁴ − (1 + γ + γ² + γ³)`.

use crate::env::DiscreteEnv;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, StateId, Transition};
use crate::rng::RngStream;

pub const UP: ActionId = ActionId(0);
pub const DOWN: ActionId = ActionId(1);
pub const LEFT: ActionId = ActionId(2);
pub const RIGHT: ActionId = ActionId(3);

#[derive(Debug, Clone, PartialEq)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    pub start: GridworldState,
    pub goal: GridworldState,
    pub low_reward: f64,
    pub high_reward: f64,
    pub high_probability: f64,
    pub terminal_reward: f64,
    pub max_episode_steps: u64,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        Self {
            width: 3,
            height: 3,
            start: GridworldState { col: 0, row: 0 },
            goal: GridworldState { col: 2, row: 2 },
            low_reward: -12.0,
            high_reward: 10.0,
            high_probability: 0.5,
            terminal_reward: 5.0,
            max_episode_steps: 1_000,
        }
    }
}

impl GridworldConfig {
    pub fn expected_step_reward(&self) -> f64 {
        self.high_probability * self.high_reward
            + (1.0 - self.high_probability) * self.low_reward
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridworldState {
    pub col: usize,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct Gridworld {
    config: GridworldConfig,
    current: Option<GridworldState>,
    steps: u64,
}

impl Default for Gridworld {
    fn default() -> Self {
        Self::new(GridworldConfig::default())
    }
}

impl Gridworld {
    pub fn new(config: GridworldConfig) -> Self {
        Self {
            config,
            current: None,
            steps: 0,
        }
    }

    pub fn config(&self) -> &GridworldConfig {
        &self.config
    }

    /// Row-major id: `row * width + col`.
    pub fn state_id(&self, cell: GridworldState) -> StateId {
        StateId(cell.row * self.config.width + cell.col)
    }

    pub fn cell(&self, id: StateId) -> GridworldState {
        GridworldState {
            col: id.0 % self.config.width,
            row: id.0 / self.config.width,
        }
    }

    pub fn start_state(&self) -> StateId {
        self.state_id(self.config.start)
    }

    pub fn is_goal(&self, cell: GridworldState) -> bool {
        cell == self.config.goal
    }

    /// Deterministic part of a move: the cell reached when moving from `cell`.
    pub fn moved(&self, cell: GridworldState, action: ActionId) -> Result<GridworldState> {
        let GridworldState { col, row } = cell;
        let next = match action {
            UP => GridworldState {
                col,
                row: row.saturating_sub(1),
            },
            DOWN => GridworldState {
                col,
                row: (row + 1).min(self.config.height - 1),
            },
            LEFT => GridworldState {
                col: col.saturating_sub(1),
                row,
            },
            RIGHT => GridworldState {
                col: (col + 1).min(self.config.width - 1),
                row,
            },
            other => return Err(Error::usage(format!("gridworld has no action {}", other.0))),
        };
        Ok(next)
    }

    /// One transition from `cell`, independent of episode bookkeeping.
    pub fn transition(
        &self,
        cell: GridworldState,
        action: ActionId,
        rng: &mut RngStream,
    ) -> Result<(Transition, GridworldState)> {
        let next = self.moved(cell, action)?;
        let s = self.state_id(cell);
        if self.is_goal(cell) {
            let t = Transition {
                s,
                a: action,
                r: self.config.terminal_reward,
                s_next: s,
                terminal: true,
                truncated: false,
            };
            return Ok((t, cell));
        }
        let r = if rng.bernoulli(self.config.high_probability) {
            self.config.high_reward
        } else {
            self.config.low_reward
        };
        let t = Transition {
            s,
            a: action,
            r,
            s_next: self.state_id(next),
            terminal: false,
            truncated: false,
        };
        Ok((t, next))
    }

    pub fn reset_cell(&mut self) -> GridworldState {
        self.current = Some(self.config.start);
        self.steps = 0;
        self.config.start
    }
}

impl DiscreteEnv for Gridworld {
    fn num_states(&self) -> usize {
        self.config.width * self.config.height
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn reset(&mut self, _rng: &mut RngStream) -> StateId {
        let cell = self.reset_cell();
        self.state_id(cell)
    }

    fn step(&mut self, action: ActionId, rng: &mut RngStream) -> Result<Transition> {
        let cell = self
            .current
            .ok_or_else(|| Error::usage("gridworld stepped without an active episode"))?;
        let (mut t, next) = self.transition(cell, action, rng)?;
        self.steps += 1;
        if !t.terminal && self.steps >= self.config.max_episode_steps {
            t.truncated = true;
        }
        self.current = if t.done() { None } else { Some(next) };
        Ok(t)
    }
}

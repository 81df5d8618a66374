//! Classic cart-pole balancing task with plain Euler integration.

use crate::error::{Error, Result};
use crate::mdp::{ActionId, Transition};
use crate::rng::RngStream;

pub const PUSH_LEFT: ActionId = ActionId(0);
pub const PUSH_RIGHT: ActionId = ActionId(1);

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole's length.
pub const HALF_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * std::f64::consts::PI / 180.0;
pub const MAX_EPISODE_STEPS: u32 = 200;
pub const STATE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_array(self) -> [f64; STATE_DIM] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn from_array(v: [f64; STATE_DIM]) -> Self {
        Self {
            x: v[0],
            x_dot: v[1],
            theta: v[2],
            theta_dot: v[3],
        }
    }

    pub fn out_of_bounds(&self) -> bool {
        self.x.abs() > X_THRESHOLD || self.theta.abs() > THETA_THRESHOLD
    }

    /// Euler step of the cart-pole equations of motion under `action`.
    pub fn advance(self, action: ActionId) -> Result<Self> {
        let force = match action {
            PUSH_LEFT => -FORCE_MAG,
            PUSH_RIGHT => FORCE_MAG,
            other => return Err(Error::usage(format!("cartpole has no action {}", other.0))),
        };
        let (sin, cos) = self.theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        Ok(Self {
            x: self.x + TAU * self.x_dot,
            x_dot: self.x_dot + TAU * x_acc,
            theta: self.theta + TAU * self.theta_dot,
            theta_dot: self.theta_dot + TAU * theta_acc,
        })
    }
}

/// Episode wrapper: resets, counts steps and flags termination.
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    current: Option<CartPoleState>,
    steps: u32,
}

impl CartPole {
    pub fn new() -> Self {
        Self::default()
    }

    /// Each component drawn uniformly from `[-0.05, 0.05)`.
    pub fn reset(&mut self, rng: &mut RngStream) -> CartPoleState {
        let mut draw = || rng.uniform_range(-0.05, 0.05);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.start_from(state);
        state
    }

    /// Starts an episode from an explicit state.
    pub fn start_from(&mut self, state: CartPoleState) {
        self.current = Some(state);
        self.steps = 0;
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Reward is +1 on every step. A bound violation is terminal; reaching the
    /// step cap without one sets both `terminal` and `truncated`.
    pub fn step(&mut self, action: ActionId) -> Result<Transition<CartPoleState>> {
        let s = self
            .current
            .ok_or_else(|| Error::usage("cartpole stepped past the end of an episode"))?;
        let s_next = s.advance(action)?;
        self.steps += 1;
        let failed = s_next.out_of_bounds();
        let capped = !failed && self.steps >= MAX_EPISODE_STEPS;
        let t = Transition {
            s,
            a: action,
            r: 1.0,
            s_next,
            terminal: failed || capped,
            truncated: capped,
        };
        self.current = if t.done() { None } else { Some(s_next) };
        Ok(t)
    }
}

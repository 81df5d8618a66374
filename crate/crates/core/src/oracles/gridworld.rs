use crate::env::gridworld::{Gridworld, GridworldConfig};
use crate::env::DiscreteEnv;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, StateId};

/// Value of the start state under the optimal policy: four stochastic moves
/// (mean reward −1) and the +5 goal action, `5γ⁴ − Σ_{k=0}^{3} γᵏ`.
pub fn gridworld_optimal_start_value(gamma: f64) -> f64 {
    5.0 * gamma.powi(4) + (0..4).map(|k| -gamma.powi(k)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult {
    pub values: Vec<f64>,
    pub start_value: f64,
    pub sweeps: usize,
    /// Greedy action per state.
    pub policy: Vec<ActionId>,
}

const MAX_SWEEPS: usize = 100_000;

/// Value iteration on the expected-reward model of the Gridworld, iterated
/// until the sup-norm change of a sweep drops below `tol`.
pub fn gridworld_value_iteration(gamma: f64, tol: f64) -> Result<ValueIterationResult> {
    let env = Gridworld::new(GridworldConfig::default());
    let cfg = env.config().clone();
    let n = env.num_states();
    let step_reward = cfg.expected_step_reward();
    let actions = env.num_actions();

    let q_value = |values: &[f64], s: usize, a: usize| -> f64 {
        let cell = env.cell(StateId(s));
        if env.is_goal(cell) {
            return cfg.terminal_reward;
        }
        let next = env.moved(cell, ActionId(a)).expect("valid action");
        step_reward + gamma * values[env.state_id(next).0]
    };

    let mut values = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                (0..actions)
                    .map(|a| q_value(&values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let delta = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        sweeps += 1;
        if delta < tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NotConverged {
                what: "gridworld value iteration",
                iterations: sweeps,
                delta,
            });
        }
    }
    // Prefer the lowest action index among near-ties so the extracted policy
    // is deterministic.
    let policy = (0..n)
        .map(|s| {
            let best = (0..actions)
                .map(|a| q_value(&values, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            let a = (0..actions)
                .find(|&a| q_value(&values, s, a) >= best - 1e-12)
                .unwrap();
            ActionId(a)
        })
        .collect();
    Ok(ValueIterationResult {
        start_value: values[env.start_state().0],
        values,
        sweeps,
        policy,
    })
}

/// Cells visited by following `policy` from the start until the goal, capped
/// at `max_moves`. Returns `None` if the goal is not reached.
pub fn gridworld_greedy_path(policy: &[ActionId], max_moves: usize) -> Option<Vec<StateId>> {
    let env = Gridworld::default();
    let mut cell = env.config().start;
    let mut path = vec![env.state_id(cell)];
    for _ in 0..max_moves {
        if env.is_goal(cell) {
            return Some(path);
        }
        cell = env.moved(cell, policy[env.state_id(cell).0]).ok()?;
        path.push(env.state_id(cell));
    }
    env.is_goal(cell).then_some(path)
}

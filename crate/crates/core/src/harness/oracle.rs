//! Ground-truth values printed side by side with an independent check.

use std::fmt;

use super::config::EnvName;
use crate::env::cartpole::MAX_EPISODE_STEPS;
use crate::error::{Error, Result};
use crate::oracles::{
    cartpole_optimal_start_value, cartpole_optimal_start_value_by_summation,
    gridworld_optimal_start_value, gridworld_value_iteration, simulate_policy_return,
    BlackjackSolution,
};
use crate::rng::RngStream;

/// Reference value quoted for basic strategy in the literature.
pub const BLACKJACK_REFERENCE_EV: f64 = -0.045;
pub const GRIDWORLD_TOLERANCE: f64 = 1e-8;
pub const CARTPOLE_TOLERANCE: f64 = 1e-9;
const BLACKJACK_SIMULATION_EPISODES: u64 = 1_000_000;
/// Simulation agreement is judged in standard errors.
const BLACKJACK_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub entries: Vec<(&'static str, String)>,
    pub analytic: f64,
    pub check: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn delta(&self) -> f64 {
        (self.analytic - self.check).abs()
    }

    pub fn agrees(&self) -> bool {
        self.delta() <= self.tolerance
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        writeln!(f, "delta = {:e}", self.delta())?;
        writeln!(f, "tolerance = {:e}", self.tolerance)?;
        writeln!(f, "agree = {}", self.agrees())
    }
}

pub fn oracle_report(env: EnvName, gamma: f64) -> Result<OracleReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
    }
    let mut entries = vec![("env", env.label().to_owned()), ("gamma", gamma.to_string())];
    let report = match env {
        EnvName::Gridworld => {
            if gamma >= 1.0 {
                return Err(Error::config("gridworld value iteration needs gamma < 1"));
            }
            let closed = gridworld_optimal_start_value(gamma);
            let vi = gridworld_value_iteration(gamma, 1e-12)?;
            entries.push(("closed_form", format!("{closed:.10}")));
            entries.push(("value_iteration", format!("{:.10}", vi.start_value)));
            entries.push(("value_iteration_sweeps", vi.sweeps.to_string()));
            OracleReport { entries, analytic: closed, check: vi.start_value, tolerance: GRIDWORLD_TOLERANCE }
        }
        EnvName::Cartpole => {
            if gamma == 0.0 {
                return Err(Error::config("cartpole optimum needs gamma in (0, 1]"));
            }
            let closed = cartpole_optimal_start_value(gamma, MAX_EPISODE_STEPS);
            let summed = cartpole_optimal_start_value_by_summation(gamma, MAX_EPISODE_STEPS);
            entries.push(("horizon", MAX_EPISODE_STEPS.to_string()));
            entries.push(("closed_form", format!("{closed:.10}")));
            entries.push(("summation", format!("{summed:.10}")));
            OracleReport { entries, analytic: closed, check: summed, tolerance: CARTPOLE_TOLERANCE }
        }
        EnvName::Blackjack => {
            if gamma != 1.0 {
                return Err(Error::config("the blackjack oracle is only defined for gamma = 1"));
            }
            let sol = BlackjackSolution::solve();
            let (mean, stderr) =
                simulate_policy_return(&sol, BLACKJACK_SIMULATION_EPISODES, &mut RngStream::new(0))?;
            entries.push(("dynamic_programming_ev", format!("{:.10}", sol.expected_value)));
            entries.push(("simulated_ev", format!("{mean:.6}")));
            entries.push(("simulated_stderr", format!("{stderr:.6}")));
            entries.push(("simulated_episodes", BLACKJACK_SIMULATION_EPISODES.to_string()));
            entries.push(("reference_ev", format!("{BLACKJACK_REFERENCE_EV}")));
            entries.push((
                "deviation_from_reference",
                format!("{:+.6}", sol.expected_value - BLACKJACK_REFERENCE_EV),
            ));
            OracleReport {
                entries,
                analytic: sol.expected_value,
                check: mean,
                tolerance: BLACKJACK_SIGMAS * stderr,
            }
        }
    };
    Ok(report)
}

use serde::{Deserialize, Serialize};

use crate::env::DiscreteEnv;
use crate::error::Result;
use crate::mdp::{
    max_of, ActionId, ExplorationSchedule, LearningRateSchedule, QTable, StateId, Transition,
};
use crate::rng::RngStream;
use crate::tabular::{
    double_q_update, epsilon_greedy, q_learning_ema_update, q_learning_update,
    self_correcting_update, DoubleQState, EmaInit, EmaKeying, EmaRewardTable,
    SelfCorrectingState,
};

/// Which update rule the agent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LearnerKind {
    QLearning,
    QLearningEma {
        x: f64,
        #[serde(default)]
        keying: EmaKeying,
        #[serde(default)]
        init: EmaInit,
    },
    DoubleQ,
    SelfCorrecting { beta: f64 },
}

#[derive(Debug, Clone)]
pub enum Learner {
    QLearning(QTable),
    QLearningEma(QTable, EmaRewardTable),
    DoubleQ(DoubleQState),
    SelfCorrecting(SelfCorrectingState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularAgentConfig {
    pub learner: LearnerKind,
    pub learning_rate: LearningRateSchedule,
    pub exploration: ExplorationSchedule,
    pub gamma: f64,
}

/// A tabular learner together with its behavior policy and random stream.
#[derive(Debug, Clone)]
pub struct TabularAgent {
    learner: Learner,
    learning_rate: LearningRateSchedule,
    exploration: ExplorationSchedule,
    gamma: f64,
    state_visits: Vec<u64>,
    rng: RngStream,
    scratch: Vec<f64>,
}

impl TabularAgent {
    pub fn new(config: TabularAgentConfig, num_states: usize, num_actions: usize, rng: RngStream) -> Self {
        let learner = match config.learner {
            LearnerKind::QLearning => Learner::QLearning(QTable::new(num_states, num_actions)),
            LearnerKind::QLearningEma { x, keying, init } => Learner::QLearningEma(
                QTable::new(num_states, num_actions),
                EmaRewardTable::new(num_states, num_actions, x, keying, init),
            ),
            LearnerKind::DoubleQ => Learner::DoubleQ(DoubleQState::new(num_states, num_actions)),
            LearnerKind::SelfCorrecting { beta } => {
                Learner::SelfCorrecting(SelfCorrectingState::new(num_states, num_actions, beta))
            }
        };
        Self {
            learner,
            learning_rate: config.learning_rate,
            exploration: config.exploration,
            gamma: config.gamma,
            state_visits: vec![0; num_states],
            rng,
            scratch: Vec::with_capacity(num_actions),
        }
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    /// `max_a Q(s, a)` on the estimate the agent acts on.
    pub fn state_value(&self, s: StateId) -> f64 {
        match &self.learner {
            Learner::QLearning(q) | Learner::QLearningEma(q, _) => q.max_value(s),
            Learner::SelfCorrecting(sc) => sc.q.max_value(s),
            Learner::DoubleQ(dq) => max_of(&dq.mean_row(s)),
        }
    }

    pub fn act(&mut self, s: StateId, episode: u64) -> ActionId {
        self.state_visits[s.0] += 1;
        let epsilon = self.exploration.epsilon(self.state_visits[s.0], episode);
        // Double Q-Learning acts on the mean of both tables.
        let row: &[f64] = match &self.learner {
            Learner::QLearning(q) | Learner::QLearningEma(q, _) => q.row(s),
            Learner::SelfCorrecting(sc) => sc.q.row(s),
            Learner::DoubleQ(dq) => {
                dq.mean_row_into(s, &mut self.scratch);
                &self.scratch
            }
        };
        epsilon_greedy(row, epsilon, &mut self.rng)
    }

    pub fn observe(&mut self, t: &Transition) {
        let lr = &self.learning_rate;
        let gamma = self.gamma;
        match &mut self.learner {
            Learner::QLearning(q) => {
                q_learning_update(q, t, lr, gamma);
            }
            Learner::QLearningEma(q, ema) => {
                q_learning_ema_update(q, ema, t, lr, gamma);
            }
            Learner::DoubleQ(dq) => {
                double_q_update(dq, t, lr, gamma, &mut self.rng);
            }
            Learner::SelfCorrecting(sc) => {
                self_correcting_update(sc, t, lr, gamma, &mut self.rng);
            }
        }
    }

    /// The primary value table (`q`, or table A for Double Q-Learning).
    pub fn primary_table(&self) -> &QTable {
        match &self.learner {
            Learner::QLearning(q) | Learner::QLearningEma(q, _) => q,
            Learner::SelfCorrecting(sc) => &sc.q,
            Learner::DoubleQ(dq) => &dq.table_a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub start_state: StateId,
    pub reward_sum: f64,
    pub steps: u64,
    /// `max_a Q(s₀, a)` after the episode's updates, `s₀` being this
    /// episode's initial state.
    pub start_estimate: f64,
}

/// Runs one full act/observe episode.
pub fn run_tabular_episode<E: DiscreteEnv>(
    agent: &mut TabularAgent,
    env: &mut E,
    env_rng: &mut RngStream,
    episode: u64,
) -> Result<EpisodeLog> {
    let start_state = env.reset(env_rng);
    let mut s = start_state;
    let mut reward_sum = 0.0;
    let mut steps = 0;
    loop {
        let a = agent.act(s, episode);
        let t = env.step(a, env_rng)?;
        agent.observe(&t);
        reward_sum += t.r;
        steps += 1;
        if t.done() {
            break;
        }
        s = t.s_next;
    }
    Ok(EpisodeLog {
        start_state,
        reward_sum,
        steps,
        start_estimate: agent.state_value(start_state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Gridworld;
    use crate::rng::streams;

    fn config(learner: LearnerKind) -> TabularAgentConfig {
        TabularAgentConfig {
            learner,
            learning_rate: LearningRateSchedule::DYNAMIC,
            exploration: ExplorationSchedule::CountBased,
            gamma: 0.95,
        }
    }

    fn run(learner: LearnerKind, seed: u64, episodes: u64) -> (Vec<EpisodeLog>, TabularAgent) {
        let root = RngStream::new(seed);
        let mut env = Gridworld::default();
        let mut env_rng = root.split(streams::ENVIRONMENT);
        let mut agent = TabularAgent::new(config(learner), 9, 4, root.split(streams::AGENT));
        let logs = (0..episodes)
            .map(|e| run_tabular_episode(&mut agent, &mut env, &mut env_rng, e).unwrap())
            .collect();
        (logs, agent)
    }

    #[test]
    fn reruns_are_identical() {
        for kind in [
            LearnerKind::QLearning,
            LearnerKind::DoubleQ,
            LearnerKind::SelfCorrecting { beta: 2.0 },
            LearnerKind::QLearningEma {
                x: 70.0,
                keying: EmaKeying::State,
                init: EmaInit::FirstObservation,
            },
        ] {
            let (a, qa) = run(kind, 5, 200);
            let (b, qb) = run(kind, 5, 200);
            assert_eq!(a, b);
            assert_eq!(qa.primary_table(), qb.primary_table());
        }
    }

    #[test]
    fn ema_with_unit_weight_reproduces_q_learning() {
        let (a, qa) = run(LearnerKind::QLearning, 17, 500);
        let (b, qb) = run(
            LearnerKind::QLearningEma {
                x: 1.0,
                keying: EmaKeying::StateAction,
                init: EmaInit::Zero,
            },
            17,
            500,
        );
        assert_eq!(a, b);
        assert_eq!(qa.primary_table(), qb.primary_table());
    }

    #[test]
    fn episode_log_is_consistent() {
        let (logs, agent) = run(LearnerKind::QLearning, 1, 50);
        let total_updates: u64 = agent.primary_table().visit_counts().iter().sum();
        assert_eq!(total_updates, logs.iter().map(|l| l.steps).sum::<u64>());
        for l in &logs {
            assert_eq!(l.start_state, StateId(0));
            assert!(l.steps >= 5);
        }
        assert_eq!(
            logs.last().unwrap().start_estimate,
            agent.state_value(StateId(0))
        );
    }
}

//! DQN, Double DQN and Self-Correcting DQN on CartPole.
//!
//! All three share one loop: ε-greedy acting on the online network, a replay
//! buffer, one Adam step per environment step once a full batch is stored,
//! and a target copy refreshed every `target_sync` updates. They differ only
//! in how the bootstrap target is formed (see [`targets`]).

mod targets;

pub use targets::{ddqn_targets, dqn_targets, sc_dqn_targets, Batch};

use serde::{Deserialize, Serialize};

use crate::env::cartpole::STATE_DIM;
use crate::env::CartPole;
use crate::error::{Error, Result};
use crate::mdp::{argmax_random_tie, max_of, ActionId, DiscountFactor, ExplorationSchedule, Transition};
use crate::neural::{Adam, AdamConfig, Mlp, ReplayBuffer, TargetNetworkHandle, HIDDEN_LAYERS};
use crate::rng::{streams, RngStream};

pub type DeepTransition = Transition<[f64; STATE_DIM]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeepVariant {
    Dqn,
    Ddqn,
    ScDqn,
}

impl DeepVariant {
    pub fn label(self) -> &'static str {
        match self {
            DeepVariant::Dqn => "dqn",
            DeepVariant::Ddqn => "ddqn",
            DeepVariant::ScDqn => "sc-dqn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepAgentConfig {
    pub variant: DeepVariant,
    pub gamma: f64,
    pub episodes: u64,
    pub exploration: ExplorationSchedule,
    pub target_sync: u64,
    pub batch: usize,
    pub replay_capacity: usize,
    pub adam: AdamConfig,
    /// Selection weight for [`DeepVariant::ScDqn`].
    pub beta: f64,
    /// When false, the 200-step cap is treated as terminal in targets.
    pub bootstrap_on_truncation: bool,
    pub hidden: Vec<usize>,
}

impl DeepAgentConfig {
    pub fn new(variant: DeepVariant, gamma: f64) -> Self {
        Self {
            variant,
            gamma,
            episodes: 400,
            exploration: ExplorationSchedule::Linear {
                start: 1.0,
                end: 0.0,
                horizon: 400,
            },
            target_sync: 64,
            batch: 512,
            replay_capacity: 100_000,
            adam: AdamConfig::default(),
            beta: 2.0,
            bootstrap_on_truncation: false,
            hidden: HIDDEN_LAYERS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        DiscountFactor::new(self.gamma)?;
        if self.episodes == 0 {
            return Err(Error::config("episodes must be positive"));
        }
        if self.batch == 0 || self.replay_capacity < self.batch {
            return Err(Error::config(format!(
                "batch {} must be positive and fit in replay capacity {}",
                self.batch, self.replay_capacity
            )));
        }
        if self.target_sync == 0 {
            return Err(Error::config("target_sync must be positive"));
        }
        if self.variant == DeepVariant::ScDqn && !(self.beta > 1.0) {
            return Err(Error::config(format!("sc-dqn needs beta > 1, got {}", self.beta)));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        self.exploration.validate()?;
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![STATE_DIM];
        sizes.extend(&self.hidden);
        sizes.push(2);
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// `max_a Q(s_reset, a)` from the online network before the episode.
    pub start_estimate: f64,
    pub episode_return: f64,
    pub epsilon: f64,
    pub steps: u64,
}

/// One record per training episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StartStateEstimateLog {
    pub records: Vec<EpisodeRecord>,
}

impl StartStateEstimateLog {
    /// Mean start-state estimate over the last `window` episodes.
    pub fn late_estimate(&self, window: usize) -> Option<f64> {
        tail_mean(&self.records, window, |r| r.start_estimate)
    }

    pub fn late_return(&self, window: usize) -> Option<f64> {
        tail_mean(&self.records, window, |r| r.episode_return)
    }
}

fn tail_mean(records: &[EpisodeRecord], window: usize, f: impl Fn(&EpisodeRecord) -> f64) -> Option<f64> {
    if records.is_empty() || window == 0 {
        return None;
    }
    let tail = &records[records.len().saturating_sub(window)..];
    Some(tail.iter().map(f).sum::<f64>() / tail.len() as f64)
}

#[derive(Debug, Clone)]
pub struct DeepRun {
    pub log: StartStateEstimateLog,
    pub network: Mlp,
    pub gradient_updates: u64,
}

/// Trains one agent from `seed`. Deterministic in `(config, seed)`.
pub fn train_deep(config: &DeepAgentConfig, seed: u64) -> Result<DeepRun> {
    config.validate()?;
    let root = RngStream::new(seed);
    let mut env_rng = root.split(streams::ENVIRONMENT);
    let mut agent_rng = root.split(streams::AGENT);
    let mut init_rng = root.split(streams::NETWORK_INIT);
    let mut replay_rng = root.split(streams::REPLAY);

    let mut online = Mlp::new(&config.layer_sizes(), &mut init_rng);
    let mut target = TargetNetworkHandle::new(&online, config.target_sync);
    let mut adam = Adam::new(config.adam, &online);
    let mut replay: ReplayBuffer<DeepTransition> = ReplayBuffer::new(config.replay_capacity);
    let mut batch = Batch::with_capacity(config.batch);
    let mut env = CartPole::new();
    let mut log = StartStateEstimateLog::default();
    let mut updates = 0u64;

    for episode in 0..config.episodes {
        let epsilon = config.exploration.epsilon(1, episode);
        let mut state = env.reset(&mut env_rng).to_array();
        let start_estimate = max_of(&online.forward_one(&state));
        let mut episode_return = 0.0;
        let mut steps = 0u64;
        loop {
            let action = if agent_rng.uniform() < epsilon {
                agent_rng.below(2)
            } else {
                argmax_random_tie(&online.forward_one(&state), &mut agent_rng)
            };
            let t = env.step(ActionId(action))?;
            let next = t.s_next.to_array();
            episode_return += t.r;
            steps += 1;
            let done = t.done();
            replay.push(Transition {
                s: state,
                a: t.a,
                r: t.r,
                s_next: next,
                terminal: t.terminal,
                truncated: t.truncated,
            });

            if let Ok(sample) = replay.sample(config.batch, &mut replay_rng) {
                batch.fill(&sample, config.bootstrap_on_truncation);
                let targets = match config.variant {
                    DeepVariant::Dqn => dqn_targets(&batch, target.network(), config.gamma),
                    DeepVariant::Ddqn => ddqn_targets(&batch, &online, target.network(), config.gamma),
                    DeepVariant::ScDqn => {
                        sc_dqn_targets(&batch, &online, target.network(), config.gamma, config.beta)
                    }
                };
                let (_, grads) = online.backward(&batch.states.view(), &batch.actions, &targets);
                adam.apply(&mut online, &grads);
                target.tick(&online);
                updates += 1;
            }

            state = next;
            if done {
                break;
            }
        }
        log.records.push(EpisodeRecord {
            episode,
            start_estimate,
            episode_return,
            epsilon,
            steps,
        });
    }

    if !online.all_finite() {
        return Err(Error::Results(format!("seed {seed}: network weights diverged to non-finite values")));
    }
    Ok(DeepRun {
        log,
        network: online,
        gradient_updates: updates,
    })
}

/// Start-state estimate of a trained network at a fixed state.
pub fn start_value(network: &Mlp, state: &[f64; STATE_DIM]) -> f64 {
    max_of(&network.forward_one(state))
}

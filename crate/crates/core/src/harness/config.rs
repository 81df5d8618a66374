//! Experiment files: a JSON document holding an `experiments` array.
//!
//! Every field except `env` and `algorithm` is optional and falls back to the
//! defaults below. Fields that do not apply to the chosen algorithm are
//! rejected rather than silently ignored.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deep::{DeepAgentConfig, DeepVariant};
use crate::env::GridworldConfig;
use crate::error::{Error, Result};
use crate::mdp::{ExplorationSchedule, LearningRateSchedule};
use crate::neural::AdamConfig;
use crate::tabular::{EmaInit, EmaKeying, LearnerKind, TabularAgentConfig};

pub const TABULAR_RUNS: u64 = 100;
pub const DEEP_RUNS: u64 = 10;
pub const TABULAR_CHECKPOINT_EVERY: u64 = 100;
pub const TABULAR_REWARD_WINDOW: usize = 500;
pub const DEEP_REWARD_WINDOW: usize = 20;
/// Deep runs report their final statistics averaged over this many episodes.
pub const DEEP_FINAL_WINDOW: u64 = 50;
pub const STATIC_ALPHA: f64 = 0.05;
pub const LOW_GAMMA: f64 = 0.6;
pub const EMA_X: f64 = 70.0;
pub const DEFAULT_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    Gridworld,
    Blackjack,
    Cartpole,
}

impl EnvName {
    pub fn label(self) -> &'static str {
        match self {
            EnvName::Gridworld => "gridworld",
            EnvName::Blackjack => "blackjack",
            EnvName::Cartpole => "cartpole",
        }
    }

    /// Discount of the headline experiment on this environment.
    pub fn reference_gamma(self) -> f64 {
        match self {
            EnvName::Gridworld => 0.95,
            EnvName::Blackjack => 1.0,
            EnvName::Cartpole => 0.999,
        }
    }

    pub fn default_episodes(self) -> u64 {
        match self {
            EnvName::Gridworld => 10_000,
            EnvName::Blackjack => 1_000_000,
            EnvName::Cartpole => 400,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::config(format!("unknown environment {s:?} (gridworld, blackjack, cartpole)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ql,
    Dql,
    Scql,
    QlStaticAlpha,
    QlLowGamma,
    QlEma,
    Dqn,
    Ddqn,
    ScDqn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Ql,
        Algorithm::Dql,
        Algorithm::Scql,
        Algorithm::QlStaticAlpha,
        Algorithm::QlLowGamma,
        Algorithm::QlEma,
        Algorithm::Dqn,
        Algorithm::Ddqn,
        Algorithm::ScDqn,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Ql => "ql",
            Algorithm::Dql => "dql",
            Algorithm::Scql => "scql",
            Algorithm::QlStaticAlpha => "ql-static-alpha",
            Algorithm::QlLowGamma => "ql-low-gamma",
            Algorithm::QlEma => "ql-ema",
            Algorithm::Dqn => "dqn",
            Algorithm::Ddqn => "ddqn",
            Algorithm::ScDqn => "sc-dqn",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == s)
    }

    pub fn is_deep(self) -> bool {
        matches!(self, Algorithm::Dqn | Algorithm::Ddqn | Algorithm::ScDqn)
    }

    fn uses_beta(self) -> bool {
        matches!(self, Algorithm::Scql | Algorithm::ScDqn)
    }
}

/// One experiment as written in the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: Option<String>,
    pub env: Option<EnvName>,
    pub algorithm: Option<Algorithm>,
    pub gamma: Option<f64>,
    pub episodes: Option<u64>,
    pub runs: Option<u64>,
    pub base_seed: Option<u64>,
    pub checkpoint_every: Option<u64>,
    pub reward_window: Option<usize>,
    // Tabular only.
    pub learning_rate: Option<LearningRateSchedule>,
    pub exploration: Option<ExplorationSchedule>,
    pub x: Option<f64>,
    pub ema_keying: Option<EmaKeying>,
    pub ema_init: Option<EmaInit>,
    pub max_episode_steps: Option<u64>,
    // Self-correcting variants.
    pub beta: Option<f64>,
    // Deep only.
    pub bootstrap_on_truncation: Option<bool>,
    pub batch: Option<usize>,
    pub target_sync: Option<u64>,
    pub replay_capacity: Option<usize>,
    pub adam_learning_rate: Option<f64>,
    pub hidden: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub output_dir: Option<String>,
    pub experiments: Vec<ExperimentSpec>,
}

impl ExperimentFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid experiment file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates every experiment and applies defaults.
    pub fn resolve(&self) -> Result<Vec<Experiment>> {
        if self.experiments.is_empty() {
            return Err(Error::config("experiment file lists no experiments"));
        }
        let mut names = BTreeSet::new();
        let mut out = Vec::with_capacity(self.experiments.len());
        for (i, spec) in self.experiments.iter().enumerate() {
            let exp = spec
                .resolve()
                .map_err(|e| Error::config(format!("experiment #{i}: {}", strip_prefix(e))))?;
            if !names.insert(exp.name.clone()) {
                return Err(Error::config(format!("duplicate experiment name {:?}", exp.name)));
            }
            out.push(exp);
        }
        Ok(out)
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub name: String,
    pub env: EnvName,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub episodes: u64,
    pub runs: u64,
    pub base_seed: u64,
    pub checkpoint_every: u64,
    pub reward_window: usize,
    /// Final statistics average the checkpoints within this many trailing
    /// episodes; 1 means the last checkpoint only.
    pub final_window: u64,
    pub agent: AgentSetup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AgentSetup {
    Tabular {
        config: TabularAgentConfig,
        max_episode_steps: Option<u64>,
    },
    Deep {
        config: DeepAgentConfig,
    },
}

impl Experiment {
    pub fn csv_file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn seed(&self, run_id: u64) -> u64 {
        self.base_seed.wrapping_add(run_id)
    }

    pub fn gridworld_config(&self) -> GridworldConfig {
        let mut cfg = GridworldConfig::default();
        if let AgentSetup::Tabular { max_episode_steps: Some(m), .. } = self.agent {
            cfg.max_episode_steps = m;
        }
        cfg
    }
}

macro_rules! reject_if_set {
    ($spec:expr, $why:expr, $($field:ident),+) => {
        $(
            if $spec.$field.is_some() {
                return Err(Error::config(format!("`{}` {}", stringify!($field), $why)));
            }
        )+
    };
}

impl ExperimentSpec {
    pub fn resolve(&self) -> Result<Experiment> {
        let env = self.env.ok_or_else(|| Error::config("missing `env`"))?;
        let algorithm = self.algorithm.ok_or_else(|| Error::config("missing `algorithm`"))?;
        let label = algorithm.label();

        if algorithm == Algorithm::QlEma && env == EnvName::Cartpole {
            return Err(Error::config(
                "ql-ema is not offered on cartpole: its rewards are deterministic, so averaging them changes nothing",
            ));
        }
        if algorithm.is_deep() && env != EnvName::Cartpole {
            return Err(Error::config(format!(
                "{label} is a function-approximation agent and only runs on cartpole, not {}",
                env.label()
            )));
        }
        if !algorithm.is_deep() && env == EnvName::Cartpole {
            return Err(Error::config(format!(
                "{label} is tabular and cartpole has a continuous state; use dqn, ddqn or sc-dqn"
            )));
        }
        if !algorithm.uses_beta() {
            reject_if_set!(self, format!("only applies to scql and sc-dqn, not {label}"), beta);
        }
        if algorithm != Algorithm::QlEma {
            reject_if_set!(self, format!("only applies to ql-ema, not {label}"), x, ema_keying, ema_init);
        }
        if env != EnvName::Gridworld {
            reject_if_set!(self, "only applies to gridworld", max_episode_steps);
        }
        if algorithm.is_deep() {
            reject_if_set!(self, "only applies to tabular algorithms", learning_rate);
        } else {
            reject_if_set!(
                self,
                "only applies to deep algorithms",
                bootstrap_on_truncation,
                batch,
                target_sync,
                replay_capacity,
                adam_learning_rate,
                hidden
            );
        }

        let reference = env.reference_gamma();
        let gamma = match (algorithm, self.gamma) {
            (Algorithm::QlLowGamma, None) => LOW_GAMMA,
            (Algorithm::QlLowGamma, Some(g)) if g >= reference => {
                return Err(Error::config(format!(
                    "ql-low-gamma needs gamma below {reference} on {}, got {g}",
                    env.label()
                )))
            }
            (_, Some(g)) => g,
            (_, None) => reference,
        };
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
        }

        let episodes = self.episodes.unwrap_or_else(|| env.default_episodes());
        let runs = self.runs.unwrap_or(if algorithm.is_deep() { DEEP_RUNS } else { TABULAR_RUNS });
        let checkpoint_every = self
            .checkpoint_every
            .unwrap_or(if algorithm.is_deep() { 1 } else { TABULAR_CHECKPOINT_EVERY });
        let reward_window = self.reward_window.unwrap_or(if algorithm.is_deep() {
            DEEP_REWARD_WINDOW
        } else {
            TABULAR_REWARD_WINDOW
        });
        if episodes == 0 || runs == 0 || checkpoint_every == 0 || reward_window == 0 {
            return Err(Error::config("episodes, runs, checkpoint_every and reward_window must be positive"));
        }
        let beta = self.beta.unwrap_or(DEFAULT_BETA);
        if algorithm.uses_beta() && !(beta > 1.0) {
            return Err(Error::config(format!("beta must exceed 1, got {beta}")));
        }

        let name = match &self.name {
            Some(n) => n.clone(),
            None if algorithm != Algorithm::QlLowGamma && gamma != reference => {
                format!("{}-{}-gamma{}", env.label(), label, gamma)
            }
            None => format!("{}-{}", env.label(), label),
        };
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
            || name.starts_with('.')
            || name == "summary"
        {
            return Err(Error::config(format!(
                "experiment name {name:?} must be non-empty [A-Za-z0-9._-], not start with '.', and not be \"summary\""
            )));
        }

        let agent = if algorithm.is_deep() {
            let variant = match algorithm {
                Algorithm::Dqn => DeepVariant::Dqn,
                Algorithm::Ddqn => DeepVariant::Ddqn,
                _ => DeepVariant::ScDqn,
            };
            let mut config = DeepAgentConfig::new(variant, gamma);
            config.episodes = episodes;
            config.exploration = self.exploration.unwrap_or(ExplorationSchedule::Linear {
                start: 1.0,
                end: 0.0,
                horizon: episodes,
            });
            config.beta = beta;
            if let Some(b) = self.bootstrap_on_truncation {
                config.bootstrap_on_truncation = b;
            }
            if let Some(b) = self.batch {
                config.batch = b;
            }
            if let Some(t) = self.target_sync {
                config.target_sync = t;
            }
            if let Some(c) = self.replay_capacity {
                config.replay_capacity = c;
            }
            if let Some(lr) = self.adam_learning_rate {
                config.adam = AdamConfig { learning_rate: lr, ..config.adam };
            }
            if let Some(h) = &self.hidden {
                config.hidden = h.clone();
            }
            config.validate()?;
            AgentSetup::Deep { config }
        } else {
            let learning_rate = match (algorithm, self.learning_rate) {
                (Algorithm::QlStaticAlpha, Some(lr @ LearningRateSchedule::Constant { .. })) => lr,
                (Algorithm::QlStaticAlpha, Some(_)) => {
                    return Err(Error::config("ql-static-alpha needs a constant learning rate"))
                }
                (Algorithm::QlStaticAlpha, None) => LearningRateSchedule::Constant { alpha: STATIC_ALPHA },
                (_, Some(lr)) => lr,
                (_, None) => LearningRateSchedule::DYNAMIC,
            };
            learning_rate.validate()?;
            let exploration = self.exploration.unwrap_or(ExplorationSchedule::CountBased);
            exploration.validate()?;
            let learner = match algorithm {
                Algorithm::Dql => LearnerKind::DoubleQ,
                Algorithm::Scql => LearnerKind::SelfCorrecting { beta },
                Algorithm::QlEma => {
                    let x = self.x.unwrap_or(EMA_X);
                    if !(x > 0.0) {
                        return Err(Error::config(format!("x must be positive, got {x}")));
                    }
                    LearnerKind::QLearningEma {
                        x,
                        keying: self.ema_keying.unwrap_or_default(),
                        init: self.ema_init.unwrap_or_default(),
                    }
                }
                _ => LearnerKind::QLearning,
            };
            if self.max_episode_steps == Some(0) {
                return Err(Error::config("max_episode_steps must be positive"));
            }
            AgentSetup::Tabular {
                config: TabularAgentConfig {
                    learner,
                    learning_rate,
                    exploration,
                    gamma,
                },
                max_episode_steps: self.max_episode_steps,
            }
        };

        Ok(Experiment {
            name,
            env,
            algorithm,
            gamma,
            episodes,
            runs,
            base_seed: self.base_seed.unwrap_or(0),
            checkpoint_every,
            reward_window,
            final_window: if algorithm.is_deep() { DEEP_FINAL_WINDOW } else { 1 },
            agent,
        })
    }
}

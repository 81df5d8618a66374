//! Executes resolved experiments across seeds and writes their artifacts.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentSetup, EnvName, Experiment, ExperimentFile};
use crate::deep::train_deep;
use crate::env::cartpole::MAX_EPISODE_STEPS;
use crate::env::{DiscreteEnv, Blackjack, Gridworld};
use crate::error::{Error, Result};
use crate::mdp::StateId;
use crate::oracles::{
    blackjack_basic_strategy_ev, cartpole_optimal_start_value, gridworld_optimal_start_value,
    overestimation_bias, StartStateOccupancy,
};
use crate::rng::{streams, RngStream};
use crate::tabular::{run_tabular_episode, EpisodeLog, TabularAgent};

pub const CSV_COLUMNS: [&str; 9] = [
    "run_id",
    "env",
    "algorithm",
    "checkpoint",
    "episode_reward_mean",
    "start_estimate",
    "optimum",
    "bias",
    "seed",
];

/// Tabular runs also track mean reward over this many final episodes.
pub const TABULAR_TAIL_EPISODES: usize = 1_000;

/// One CSV row. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub run_id: u64,
    pub env: String,
    pub algorithm: String,
    /// Training episodes completed when the row was taken.
    pub checkpoint: u64,
    /// Trailing mean episode reward over the experiment's reward window.
    pub episode_reward_mean: f64,
    pub start_estimate: f64,
    pub optimum: Option<f64>,
    pub bias: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: u64,
    pub seed: u64,
    pub rows: Vec<CsvRow>,
    pub final_estimate: f64,
    pub final_bias: Option<f64>,
    /// Mean reward over every training episode.
    pub mean_reward: f64,
    /// Mean reward over the final [`Experiment::tail_episodes`] episodes.
    pub tail_reward: f64,
}

impl Experiment {
    /// Ground-truth start value this experiment's estimates are compared to.
    /// Blackjack is only solved undiscounted.
    pub fn optimum(&self) -> Option<f64> {
        match self.env {
            EnvName::Gridworld => Some(gridworld_optimal_start_value(self.gamma)),
            EnvName::Blackjack => (self.gamma == 1.0).then(blackjack_basic_strategy_ev),
            EnvName::Cartpole => Some(cartpole_optimal_start_value(self.gamma, MAX_EPISODE_STEPS)),
        }
    }

    pub fn tail_episodes(&self) -> usize {
        match self.agent {
            AgentSetup::Tabular { .. } => TABULAR_TAIL_EPISODES,
            AgentSetup::Deep { .. } => self.final_window as usize,
        }
    }
}

/// Rows within the final window: checkpoints after `episodes − window`.
pub fn final_rows<'a>(rows: &'a [CsvRow], episodes: u64, window: u64) -> impl Iterator<Item = &'a CsvRow> {
    let cutoff = episodes.saturating_sub(window.max(1));
    rows.iter().filter(move |r| r.checkpoint > cutoff)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut n, mut s) = (0usize, 0.0);
    for v in values {
        n += 1;
        s += v;
    }
    (n > 0).then(|| s / n as f64)
}

enum StartProbe {
    Fixed(StateId),
    Occupancy(StartStateOccupancy),
}

impl StartProbe {
    fn observe(&mut self, log: &EpisodeLog) {
        if let StartProbe::Occupancy(o) = self {
            o.record(log.start_state);
        }
    }

    fn estimate(&self, agent: &TabularAgent) -> Result<f64> {
        match self {
            StartProbe::Fixed(s) => Ok(agent.state_value(*s)),
            StartProbe::Occupancy(o) => o.weighted_mean(|s| agent.state_value(s)),
        }
    }
}

struct Row<'a> {
    exp: &'a Experiment,
    optimum: Option<f64>,
    run_id: u64,
    seed: u64,
}

impl Row<'_> {
    fn make(&self, checkpoint: u64, reward_mean: f64, estimate: f64) -> CsvRow {
        CsvRow {
            run_id: self.run_id,
            env: self.exp.env.label().to_owned(),
            algorithm: self.exp.algorithm.label().to_owned(),
            checkpoint,
            episode_reward_mean: reward_mean,
            start_estimate: estimate,
            optimum: self.optimum,
            bias: self.optimum.map(|o| overestimation_bias(estimate, o)),
            seed: self.seed,
        }
    }
}

fn tail_mean(recent: &VecDeque<f64>, n: usize) -> f64 {
    let n = n.min(recent.len());
    recent.iter().rev().take(n).sum::<f64>() / n as f64
}

fn run_tabular<E: DiscreteEnv>(
    exp: &Experiment,
    row: Row<'_>,
    agent: &mut TabularAgent,
    env: &mut E,
    probe: &mut StartProbe,
    env_rng: &mut RngStream,
) -> Result<(Vec<CsvRow>, f64, f64)> {
    let keep = exp.reward_window.max(exp.tail_episodes());
    let mut recent = VecDeque::with_capacity(keep + 1);
    let mut total = 0.0;
    let mut rows = Vec::with_capacity((exp.episodes / exp.checkpoint_every + 1) as usize);
    for episode in 0..exp.episodes {
        let log = run_tabular_episode(agent, env, env_rng, episode)?;
        probe.observe(&log);
        total += log.reward_sum;
        recent.push_back(log.reward_sum);
        if recent.len() > keep {
            recent.pop_front();
        }
        let done = episode + 1;
        if done % exp.checkpoint_every == 0 || done == exp.episodes {
            let estimate = probe.estimate(agent)?;
            rows.push(row.make(done, tail_mean(&recent, exp.reward_window), estimate));
        }
    }
    Ok((rows, total / exp.episodes as f64, tail_mean(&recent, exp.tail_episodes())))
}

/// One seed of an experiment.
pub fn run_single(exp: &Experiment, run_id: u64) -> Result<RunResult> {
    let seed = exp.seed(run_id);
    let optimum = exp.optimum();
    let row = Row { exp, optimum, run_id, seed };
    let (rows, mean_reward, tail_reward) = match &exp.agent {
        AgentSetup::Tabular { config, .. } => {
            let root = RngStream::new(seed);
            let mut env_rng = root.split(streams::ENVIRONMENT);
            match exp.env {
                EnvName::Gridworld => {
                    let mut env = Gridworld::new(exp.gridworld_config());
                    let mut agent =
                        TabularAgent::new(*config, env.num_states(), env.num_actions(), root.split(streams::AGENT));
                    let mut probe = StartProbe::Fixed(env.start_state());
                    run_tabular(exp, row, &mut agent, &mut env, &mut probe, &mut env_rng)?
                }
                EnvName::Blackjack => {
                    let mut env = Blackjack::new();
                    let mut agent =
                        TabularAgent::new(*config, env.num_states(), env.num_actions(), root.split(streams::AGENT));
                    let mut probe = StartProbe::Occupancy(StartStateOccupancy::new(env.num_states()));
                    run_tabular(exp, row, &mut agent, &mut env, &mut probe, &mut env_rng)?
                }
                EnvName::Cartpole => {
                    return Err(Error::config("tabular agents cannot run on cartpole"));
                }
            }
        }
        AgentSetup::Deep { config } => {
            let run = train_deep(config, seed)?;
            let rec = &run.log.records;
            let returns: Vec<f64> = rec.iter().map(|r| r.episode_return).collect();
            let mut rows = Vec::new();
            for (i, r) in rec.iter().enumerate() {
                let done = i as u64 + 1;
                if done % exp.checkpoint_every == 0 || done == exp.episodes {
                    let lo = (i + 1).saturating_sub(exp.reward_window);
                    let window = &returns[lo..=i];
                    let reward_mean = window.iter().sum::<f64>() / window.len() as f64;
                    rows.push(row.make(done, reward_mean, r.start_estimate));
                }
            }
            let mean_reward = returns.iter().sum::<f64>() / returns.len() as f64;
            let tail = exp.tail_episodes().min(returns.len());
            let tail_reward = returns[returns.len() - tail..].iter().sum::<f64>() / tail as f64;
            (rows, mean_reward, tail_reward)
        }
    };
    let final_estimate = mean(final_rows(&rows, exp.episodes, exp.final_window).map(|r| r.start_estimate))
        .ok_or_else(|| Error::Results(format!("{}: run {run_id} produced no checkpoints", exp.name)))?;
    Ok(RunResult {
        run_id,
        seed,
        final_bias: optimum.map(|o| overestimation_bias(final_estimate, o)),
        final_estimate,
        rows,
        mean_reward,
        tail_reward,
    })
}

/// All seeds of one experiment on a pool of `workers` threads. Results come
/// back in run-id order whatever order they finish in.
pub fn run_experiment(exp: &Experiment, workers: usize) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Results(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..exp.runs).into_par_iter().map(|id| run_single(exp, id)).collect())
}

pub fn write_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        for row in &r.rows {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Results(format!(
            "{}: columns {:?} differ from the expected {:?}",
            path.display(),
            header,
            CSV_COLUMNS
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let row: CsvRow =
            rec.map_err(|e| Error::Results(format!("{} row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Values the code fixes where the method description leaves a choice.
pub fn design_decisions() -> serde_json::Value {
    serde_json::json!({
        "dynamic_learning_rate": "1/n(s,a), n counting updates of the pair (reconstruction of the decaying baseline)",
        "tabular_exploration": "epsilon-greedy with epsilon = 1/sqrt(n(s)), n counting visits to the state",
        "tie_breaking": "uniform random among maximal entries, drawn from the agent stream",
        "double_q": "fair coin picks the updated table; behavior policy and start estimate use the mean of both tables",
        "self_correcting_aux_table": "q_aux(s,a) holds q(s,a) as it was before its latest update",
        "ema_reward": "per-(s,a) average by default, zero-initialized; see each experiment's learner config",
        "gridworld": {
            "layout": "3x3, start (0,0), goal (2,2), wall moves clamp and still pay the step reward",
            "goal": "any action taken in the goal cell pays +5 and terminates; moving into it pays the step reward",
            "step_reward": "-12 or +10 with probability 0.5 each",
            "step_cap": "truncation at the cap is bootstrapped",
        },
        "blackjack": {
            "rules": "infinite deck, dealer stands on all 17s, natural pays 1, actions stick/hit only",
            "start_estimate": "occurrence-weighted max_a Q over the initial states seen so far",
            "optimum": "exact dynamic-programming value of the optimal policy",
        },
        "cartpole": {
            "dynamics": "Euler integration, tau 0.02, force 10, failure at |x| > 2.4 or |theta| > 12 degrees",
            "cap": MAX_EPISODE_STEPS,
        },
        "deep": {
            "network": "fully connected, relu hidden layers, linear output per action",
            "initialization": "weights and biases uniform in +-1/sqrt(fan_in)",
            "loss": "mean squared TD error on the taken action",
            "replay": "FIFO ring, uniform sampling with replacement, updates start once a full batch is stored",
            "updates_per_step": 1,
            "truncation": "the 200-step cap is terminal in targets unless bootstrap_on_truncation is set",
            "sc_dqn_auxiliary": "the target network",
            "start_estimate": "online network at the reset state, before the episode is played",
        },
        "final_statistic": "tabular: last checkpoint; deep: mean over checkpoints in the last 50 episodes",
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub name: String,
    pub csv: String,
    pub env: String,
    pub algorithm: String,
    pub gamma: f64,
    pub episodes: u64,
    pub runs: u64,
    pub final_window: u64,
    pub optimum: Option<f64>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub design: serde_json::Value,
    pub experiments: Vec<ExperimentMeta>,
}

impl ExperimentMeta {
    pub fn new(exp: &Experiment) -> Result<Self> {
        Ok(Self {
            name: exp.name.clone(),
            csv: exp.csv_file_name(),
            env: exp.env.label().to_owned(),
            algorithm: exp.algorithm.label().to_owned(),
            gamma: exp.gamma,
            episodes: exp.episodes,
            runs: exp.runs,
            final_window: exp.final_window,
            optimum: exp.optimum(),
            config: serde_json::to_value(exp)?,
        })
    }
}

pub const META_FILE: &str = "meta.json";

/// Runs every experiment of a file and writes one CSV each plus `meta.json`
/// into `out` (or the file's `output_dir`, or `results`).
pub fn run_file(
    file: &ExperimentFile,
    out: Option<&Path>,
    workers: usize,
) -> Result<(PathBuf, Vec<(Experiment, Vec<RunResult>)>)> {
    let experiments = file.resolve()?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| file.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir)?;
    let meta = RunMeta {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        design: design_decisions(),
        experiments: experiments.iter().map(ExperimentMeta::new).collect::<Result<_>>()?,
    };
    let mut done = Vec::with_capacity(experiments.len());
    for exp in experiments {
        let results = run_experiment(&exp, workers)?;
        write_csv(&dir.join(exp.csv_file_name()), &results)?;
        done.push((exp, results));
    }
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok((dir, done))
}

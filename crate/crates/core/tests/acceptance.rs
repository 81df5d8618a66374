//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and bands are pinned below.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use qbias::env::{DiscreteEnv, Gridworld};
use qbias::harness::config::{Algorithm, EnvName, ExperimentSpec};
use qbias::harness::{run_experiment, run_file, Experiment, ExperimentFile, RunResult};
use qbias::mdp::LearningRateSchedule;
use qbias::neural::Mlp;
use qbias::oracles::{
    blackjack_basic_strategy_ev, cartpole_optimal_start_value, gridworld_optimal_start_value,
    gridworld_value_iteration,
};
use qbias::rng::{streams, RngStream};
use qbias::tabular::{
    run_tabular_episode, EmaInit, EmaKeying, LearnerKind, TabularAgent, TabularAgentConfig,
};

const GRIDWORLD_SEEDS: u64 = 100;
const GRIDWORLD_EPISODES: u64 = 10_000;
const GRIDWORLD_BUDGET: Duration = Duration::from_secs(5 * 60);
const BLACKJACK_SEEDS: u64 = 100;
const BLACKJACK_EPISODES: u64 = 1_000_000;
const BLACKJACK_BUDGET: Duration = Duration::from_secs(30 * 60);
const DEEP_SEEDS: u64 = 10;
const DEEP_BUDGET: Duration = Duration::from_secs(60 * 60);
const ORACLE_BUDGET: Duration = Duration::from_secs(1);

struct Gate {
    failures: usize,
    total: usize,
}

impl Gate {
    fn check(&mut self, criterion: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failures += 1;
        }
        println!("{} {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
        std::io::stdout().flush().ok();
    }

    fn band(&mut self, criterion: &str, value: f64, lo: f64, hi: f64) {
        self.check(criterion, (lo..=hi).contains(&value), format!("{value:+.4} in [{lo:+}, {hi:+}]"));
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn experiment(env: EnvName, algorithm: Algorithm, runs: u64, episodes: u64) -> Experiment {
    ExperimentSpec {
        env: Some(env),
        algorithm: Some(algorithm),
        runs: Some(runs),
        episodes: Some(episodes),
        ..Default::default()
    }
    .resolve()
    .expect("valid acceptance experiment")
}

fn mean_of(results: &[RunResult], f: impl Fn(&RunResult) -> f64) -> f64 {
    results.iter().map(f).sum::<f64>() / results.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn final_bias(r: &RunResult) -> f64 {
    r.final_bias.expect("experiment has an optimum")
}

fn oracle_agreement(gate: &mut Gate) {
    let t = Instant::now();
    let closed = gridworld_optimal_start_value(0.95);
    let vi = gridworld_value_iteration(0.95, 1e-12).map(|r| r.start_value);
    let cart = cartpole_optimal_start_value(0.999, 200);
    let elapsed = t.elapsed();
    gate.check(
        "oracle/gridworld closed form",
        (closed - 0.3626).abs() <= 1e-4,
        format!("{closed:.6} vs 0.3626 +- 1e-4"),
    );
    match vi {
        Ok(v) => gate.check(
            "oracle/gridworld value iteration",
            (v - closed).abs() <= 1e-8,
            format!("|{v:.10} - {closed:.10}| = {:e} <= 1e-8", (v - closed).abs()),
        ),
        Err(e) => gate.check("oracle/gridworld value iteration", false, e.to_string()),
    }
    gate.check("oracle/cartpole", (cart - 181.35).abs() <= 0.01, format!("{cart:.4} vs 181.35 +- 0.01"));
    gate.check(
        "oracle/runtime",
        elapsed < ORACLE_BUDGET,
        format!("{:.3} ms < 1 s", elapsed.as_secs_f64() * 1e3),
    );
}

fn numerical_core(gate: &mut Gate) {
    // Central differences against backprop on the production architecture.
    let mut rng = RngStream::new(4242);
    let mut net = Mlp::new(&[4, 48, 96, 2], &mut rng);
    let n = 16;
    let states = Array2::from_shape_simple_fn((n, 4), || rng.uniform_range(-1.0, 1.0));
    let actions: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
    let targets: Vec<f64> = (0..n).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
    let (_, grads) = net.backward(&states.view(), &actions, &targets);
    let flat = grads.flat();
    let (h, probes) = (1e-4, 200);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let i = rng.below(net.parameter_count());
        let p = net.parameter(i);
        net.set_parameter(i, p + h);
        let up = net.loss(&states.view(), &actions, &targets);
        net.set_parameter(i, p - h);
        let down = net.loss(&states.view(), &actions, &targets);
        net.set_parameter(i, p);
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - flat[i]).abs() / numeric.abs().max(flat[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    gate.check(
        "core/gradient check",
        worst <= 1e-4,
        format!("{probes} probes, worst relative error {worst:.2e} <= 1e-4"),
    );

    // x = 1 EMA against plain Q-Learning, same seed, whole training run.
    let run = |learner| {
        let cfg = TabularAgentConfig {
            learner,
            learning_rate: LearningRateSchedule::DYNAMIC,
            exploration: qbias::mdp::ExplorationSchedule::CountBased,
            gamma: 0.95,
        };
        let root = RngStream::new(77);
        let mut env = Gridworld::default();
        let mut env_rng = root.split(streams::ENVIRONMENT);
        let mut agent = TabularAgent::new(cfg, env.num_states(), env.num_actions(), root.split(streams::AGENT));
        let logs: Vec<_> = (0..2_000)
            .map(|e| run_tabular_episode(&mut agent, &mut env, &mut env_rng, e).unwrap())
            .collect();
        (logs, agent.primary_table().clone())
    };
    let (plain_logs, plain_q) = run(LearnerKind::QLearning);
    let (ema_logs, ema_q) = run(LearnerKind::QLearningEma {
        x: 1.0,
        keying: EmaKeying::default(),
        init: EmaInit::default(),
    });
    let bits = |q: &qbias::mdp::QTable| q.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    gate.check(
        "core/EMA x=1 equals Q-Learning",
        bits(&plain_q) == bits(&ema_q) && plain_logs == ema_logs,
        "2000 Gridworld episodes, Q-table compared bit for bit".into(),
    );

    // Same-seed reruns through the full harness write identical bytes.
    let file = ExperimentFile::from_json(
        r#"{"experiments":[
            {"env":"gridworld","algorithm":"scql","runs":3,"episodes":300},
            {"env":"blackjack","algorithm":"ql-ema","runs":2,"episodes":2000},
            {"env":"cartpole","algorithm":"ddqn","runs":1,"episodes":8,"batch":32,"hidden":[8,8]}
        ]}"#,
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_file(&file, Some(a.path()), 1).unwrap();
    run_file(&file, Some(b.path()), workers().max(2)).unwrap();
    let names = ["gridworld-scql.csv", "blackjack-ql-ema.csv", "cartpole-ddqn.csv", "meta.json"];
    let identical = names
        .iter()
        .all(|n| std::fs::read(a.path().join(n)).unwrap() == std::fs::read(b.path().join(n)).unwrap());
    gate.check(
        "core/byte-identical reruns",
        identical,
        "CSV and meta.json from two runs (1 worker vs several) compared byte for byte".into(),
    );
    println!("INFO core/module invariant suites: run as the library unit-test target of this cargo test invocation");
}

fn gridworld(gate: &mut Gate) {
    let t = Instant::now();
    let algs = [
        Algorithm::Ql,
        Algorithm::Dql,
        Algorithm::Scql,
        Algorithm::QlStaticAlpha,
        Algorithm::QlEma,
        Algorithm::QlLowGamma,
    ];
    let results: Vec<(Algorithm, Vec<RunResult>)> = algs
        .iter()
        .map(|&a| {
            let exp = experiment(EnvName::Gridworld, a, GRIDWORLD_SEEDS, GRIDWORLD_EPISODES);
            (a, run_experiment(&exp, workers()).unwrap())
        })
        .collect();
    let elapsed = t.elapsed();
    let bias = |a: Algorithm| mean_of(&results.iter().find(|r| r.0 == a).unwrap().1, final_bias);
    let reward = |a: Algorithm| mean_of(&results.iter().find(|r| r.0 == a).unwrap().1, |r| r.tail_reward);

    gate.band("gridworld/QL bias", bias(Algorithm::Ql), 8.0, 22.0);
    gate.band("gridworld/DQL bias", bias(Algorithm::Dql), -12.0, -3.0);
    gate.band("gridworld/SCQL bias", bias(Algorithm::Scql), -11.0, -2.0);
    gate.band("gridworld/QL alpha=0.05 bias", bias(Algorithm::QlStaticAlpha), -3.0, 3.0);
    gate.band("gridworld/QL x=70 bias", bias(Algorithm::QlEma), -4.0, 2.0);
    gate.band("gridworld/QL gamma=0.6 bias (vs gamma=0.6 optimum)", bias(Algorithm::QlLowGamma), -2.0, 4.0);

    let baselines = [Algorithm::Ql, Algorithm::Dql, Algorithm::Scql];
    let tuned = [Algorithm::QlStaticAlpha, Algorithm::QlLowGamma, Algorithm::QlEma];
    let smallest_baseline = baselines.iter().map(|&a| bias(a).abs()).fold(f64::INFINITY, f64::min);
    let signs = bias(Algorithm::Ql) > 0.0
        && bias(Algorithm::Dql) < 0.0
        && bias(Algorithm::Scql) < 0.0
        && tuned.iter().all(|&a| bias(a).abs() < smallest_baseline);
    gate.check(
        "gridworld/sign pattern",
        signs,
        format!(
            "QL {:+.3} > 0, DQL {:+.3} < 0, SCQL {:+.3} < 0, tuned |bias| {:.3}/{:.3}/{:.3} below every baseline |bias| (min {smallest_baseline:.3})",
            bias(Algorithm::Ql),
            bias(Algorithm::Dql),
            bias(Algorithm::Scql),
            bias(Algorithm::QlStaticAlpha).abs(),
            bias(Algorithm::QlLowGamma).abs(),
            bias(Algorithm::QlEma).abs(),
        ),
    );
    for &v in &tuned {
        let worst_gap = baselines
            .iter()
            .map(|&b| reward(v) - reward(b))
            .fold(f64::INFINITY, f64::min);
        gate.check(
            &format!("gridworld/ordering {}", v.label()),
            worst_gap > 0.0,
            format!(
                "final-1000-episode reward {:.3} vs QL {:.3}, DQL {:.3}, SCQL {:.3}",
                reward(v),
                reward(Algorithm::Ql),
                reward(Algorithm::Dql),
                reward(Algorithm::Scql)
            ),
        );
    }
    gate.check(
        "gridworld/runtime",
        elapsed < GRIDWORLD_BUDGET,
        format!("{:.1} s < {} s for {} runs", elapsed.as_secs_f64(), GRIDWORLD_BUDGET.as_secs(), 6 * GRIDWORLD_SEEDS),
    );
}

fn blackjack(gate: &mut Gate) {
    let ev = blackjack_basic_strategy_ev();
    gate.check(
        "blackjack/DP expected value",
        (ev + 0.045).abs() <= 0.02,
        format!("{ev:.6} within 0.02 of -0.045 (deviation {:+.6})", ev + 0.045),
    );
    let t = Instant::now();
    let algs = [Algorithm::Ql, Algorithm::Dql, Algorithm::Scql, Algorithm::QlEma];
    let results: Vec<(Algorithm, Vec<RunResult>)> = algs
        .iter()
        .map(|&a| {
            let exp = experiment(EnvName::Blackjack, a, BLACKJACK_SEEDS, BLACKJACK_EPISODES);
            (a, run_experiment(&exp, workers()).unwrap())
        })
        .collect();
    let elapsed = t.elapsed();
    let get = |a: Algorithm| &results.iter().find(|r| r.0 == a).unwrap().1;
    let bias = |a: Algorithm| mean_of(get(a), final_bias);
    gate.band("blackjack/QL bias", bias(Algorithm::Ql), -0.03, 0.05);
    let dql = bias(Algorithm::Dql);
    gate.check("blackjack/DQL bias", dql <= -0.03, format!("{dql:+.4} <= -0.03"));
    gate.band("blackjack/SCQL bias", bias(Algorithm::Scql), -0.03, 0.03);
    gate.band("blackjack/r_hat bias", bias(Algorithm::QlEma), -0.02, 0.08);
    let (rq, rd) = (mean_of(get(Algorithm::Ql), |r| r.mean_reward), mean_of(get(Algorithm::Dql), |r| r.mean_reward));
    gate.check(
        "blackjack/DQL reward below QL",
        rd < rq,
        format!("mean training reward DQL {rd:.5} < QL {rq:.5}"),
    );
    gate.check(
        "blackjack/runtime",
        elapsed < BLACKJACK_BUDGET,
        format!("{:.1} s < {} s for {} runs", elapsed.as_secs_f64(), BLACKJACK_BUDGET.as_secs(), 4 * BLACKJACK_SEEDS),
    );
}

fn deep(gate: &mut Gate) {
    let t = Instant::now();
    let run = |a: Algorithm, gamma: f64| {
        let exp = ExperimentSpec {
            env: Some(EnvName::Cartpole),
            algorithm: Some(a),
            gamma: Some(gamma),
            runs: Some(DEEP_SEEDS),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        run_experiment(&exp, workers()).unwrap()
    };
    let dqn = run(Algorithm::Dqn, 0.999);
    let ddqn = run(Algorithm::Ddqn, 0.999);
    let scdqn = run(Algorithm::ScDqn, 0.999);
    let low = run(Algorithm::Dqn, 0.97);
    let elapsed = t.elapsed();
    let biases = |rs: &[RunResult]| median(rs.iter().map(final_bias).collect());

    let d = biases(&dqn);
    gate.check("deep/(a) DQN gamma=0.999 overestimates", d > 100.0, format!("median final bias {d:+.2} > +100"));
    let (dd, sc) = (biases(&ddqn), biases(&scdqn));
    gate.check("deep/(b) DDQN gamma=0.999 underestimates", dd < 0.0, format!("median final bias {dd:+.2} < 0"));
    gate.check("deep/(b) SC-DQN gamma=0.999 underestimates", sc < 0.0, format!("median final bias {sc:+.2} < 0"));
    let opt = cartpole_optimal_start_value(0.97, 200);
    let est = median(low.iter().map(|r| r.final_estimate).collect());
    gate.check(
        "deep/(c) DQN gamma=0.97 estimate",
        (est - opt).abs() <= 15.0,
        format!("median late estimate {est:.2} within 15 of {opt:.2}"),
    );
    let ret = median(low.iter().map(|r| r.tail_reward).collect());
    gate.check("deep/(d) DQN gamma=0.97 return", ret >= 150.0, format!("median last-50 return {ret:.1} >= 150"));
    gate.check(
        "deep/runtime",
        elapsed < DEEP_BUDGET,
        format!("{:.1} s < {} s for {} runs", elapsed.as_secs_f64(), DEEP_BUDGET.as_secs(), 4 * DEEP_SEEDS),
    );
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0, total: 0 };
    oracle_agreement(&mut gate);
    numerical_core(&mut gate);
    gridworld(&mut gate);
    blackjack(&mut gate);
    deep(&mut gate);
    println!("acceptance: {} of {} criteria passed", gate.total - gate.failures, gate.total);
    if gate.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

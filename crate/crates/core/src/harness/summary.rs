//! Aggregates a results directory into per-experiment statistics and an
//! environment × method bias table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{Algorithm, EnvName};
use super::run::{final_rows, read_csv, CsvRow, RunMeta, META_FILE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub env: String,
    pub algorithm: String,
    pub name: String,
    pub gamma: f64,
    pub runs: usize,
    pub mean_final_bias: Option<f64>,
    pub stderr_final_bias: Option<f64>,
    pub mean_final_estimate: f64,
    pub optimum: Option<f64>,
    pub mean_final_reward: f64,
    pub stderr_final_reward: Option<f64>,
}

/// `(mean, standard error)`; the error is absent for a single value.
pub fn mean_and_stderr(values: &[f64]) -> Option<(f64, Option<f64>)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, None));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, Some((var / n as f64).sqrt())))
}

pub const TABLE_COLUMNS: [&str; 6] = ["QL", "DQL", "SCQL", "alpha", "gamma", "r_hat"];
pub const TABLE_ROWS: [EnvName; 3] = [EnvName::Gridworld, EnvName::Blackjack, EnvName::Cartpole];

/// Table column for an experiment. Plain Q-Learning (or DQN) run below the
/// environment's reference discount lands in the γ column.
pub fn table_column(env: EnvName, algorithm: Algorithm, gamma: f64) -> Option<usize> {
    let reference = gamma == env.reference_gamma();
    match algorithm {
        Algorithm::Ql | Algorithm::Dqn if reference => Some(0),
        Algorithm::Ql | Algorithm::Dqn if gamma < env.reference_gamma() => Some(4),
        Algorithm::Dql | Algorithm::Ddqn if reference => Some(1),
        Algorithm::Scql | Algorithm::ScDqn if reference => Some(2),
        Algorithm::QlStaticAlpha if reference => Some(3),
        Algorithm::QlLowGamma => Some(4),
        Algorithm::QlEma if reference => Some(5),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Mean final bias per table cell, `None` where nothing was measured.
    pub table: [[Option<f64>; 6]; 3],
}

fn summarize_rows(
    meta: &super::run::ExperimentMeta,
    rows: &[CsvRow],
) -> Result<SummaryRow> {
    let mut by_run: BTreeMap<u64, Vec<&CsvRow>> = BTreeMap::new();
    for r in rows {
        by_run.entry(r.run_id).or_default().push(r);
    }
    if by_run.is_empty() {
        return Err(Error::Results(format!("{} has no rows", meta.csv)));
    }
    let (mut biases, mut estimates, mut rewards) = (Vec::new(), Vec::new(), Vec::new());
    for (run_id, mut run_rows) in by_run {
        run_rows.sort_by_key(|r| r.checkpoint);
        let owned: Vec<CsvRow> = run_rows.into_iter().cloned().collect();
        let fin: Vec<&CsvRow> = final_rows(&owned, meta.episodes, meta.final_window).collect();
        if fin.is_empty() {
            return Err(Error::Results(format!("{}: run {run_id} has no final checkpoints", meta.csv)));
        }
        let n = fin.len() as f64;
        estimates.push(fin.iter().map(|r| r.start_estimate).sum::<f64>() / n);
        rewards.push(fin.iter().map(|r| r.episode_reward_mean).sum::<f64>() / n);
        if fin.iter().all(|r| r.bias.is_some()) {
            biases.push(fin.iter().map(|r| r.bias.unwrap()).sum::<f64>() / n);
        }
    }
    let (mean_est, _) = mean_and_stderr(&estimates).unwrap();
    let (mean_reward, se_reward) = mean_and_stderr(&rewards).unwrap();
    let bias = mean_and_stderr(&biases);
    Ok(SummaryRow {
        env: meta.env.clone(),
        algorithm: meta.algorithm.clone(),
        name: meta.name.clone(),
        gamma: meta.gamma,
        runs: estimates.len(),
        mean_final_bias: bias.map(|b| b.0),
        stderr_final_bias: bias.and_then(|b| b.1),
        mean_final_estimate: mean_est,
        optimum: meta.optimum,
        mean_final_reward: mean_reward,
        stderr_final_reward: se_reward,
    })
}

/// Reads `meta.json` and every CSV it lists.
pub fn summarize(dir: &Path) -> Result<Summary> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.exists() {
        return Err(Error::Results(format!("{} holds no result set ({META_FILE} missing)", dir.display())));
    }
    let meta: RunMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| Error::Results(format!("{}: {e}", meta_path.display())))?;
    if meta.experiments.is_empty() {
        return Err(Error::Results(format!("{} lists no experiments", meta_path.display())));
    }
    let mut rows = Vec::with_capacity(meta.experiments.len());
    for m in &meta.experiments {
        let csv = read_csv(&dir.join(&m.csv))?;
        rows.push(summarize_rows(m, &csv)?);
    }
    rows.sort_by(|a, b| {
        env_rank(&a.env)
            .cmp(&env_rank(&b.env))
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.gamma.total_cmp(&b.gamma))
            .then_with(|| a.name.cmp(&b.name))
    });
    let mut table = [[None; 6]; 3];
    for r in &rows {
        let (Ok(env), Some(alg)) = (EnvName::parse(&r.env), Algorithm::from_label(&r.algorithm)) else {
            continue;
        };
        let Some(col) = table_column(env, alg, r.gamma) else { continue };
        let row = TABLE_ROWS.iter().position(|e| *e == env).unwrap();
        // First in sort order wins, so the lowest discount fills the γ cell.
        if table[row][col].is_none() {
            table[row][col] = r.mean_final_bias;
        }
    }
    Ok(Summary { rows, table })
}

fn env_rank(env: &str) -> usize {
    TABLE_ROWS.iter().position(|e| e.label() == env).unwrap_or(TABLE_ROWS.len())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

impl Summary {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Results(e.to_string()))?)
            .map_err(|e| Error::Results(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let header = [
            "env", "algorithm", "name", "gamma", "runs", "final_bias", "stderr", "estimate", "optimum",
            "reward", "stderr",
        ];
        let body: Vec<[String; 11]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.env.clone(),
                    r.algorithm.clone(),
                    r.name.clone(),
                    format!("{}", r.gamma),
                    r.runs.to_string(),
                    opt(r.mean_final_bias),
                    opt(r.stderr_final_bias),
                    format!("{:.6}", r.mean_final_estimate),
                    opt(r.optimum),
                    format!("{:.6}", r.mean_final_reward),
                    opt(r.stderr_final_reward),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..11)
            .map(|i| body.iter().map(|b| b[i].len()).chain([header[i].len()]).max().unwrap())
            .collect();
        let line = |cells: &[&str]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(s, "{}", line(&header)).unwrap();
        for b in &body {
            let cells: Vec<&str> = b.iter().map(String::as_str).collect();
            writeln!(s, "{}", line(&cells)).unwrap();
        }

        writeln!(s, "\nmean final bias (estimate - optimum)").unwrap();
        write!(s, "{:<10}", "").unwrap();
        for c in TABLE_COLUMNS {
            write!(s, "{c:>10}").unwrap();
        }
        writeln!(s).unwrap();
        for (env, cells) in TABLE_ROWS.iter().zip(&self.table) {
            write!(s, "{:<10}", env.label()).unwrap();
            for c in cells {
                match c {
                    Some(v) => write!(s, "{v:>+10.3}").unwrap(),
                    None => write!(s, "{:>10}", "-").unwrap(),
                }
            }
            writeln!(s).unwrap();
        }
        s
    }

    /// Writes `summary.csv` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("summary.csv"), self.to_csv()?)?;
        fs::write(dir.join("summary.txt"), self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sample_statistics() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_abs_diff_eq!(se.unwrap(), 0.57735, epsilon = 1e-5);
        assert_eq!(mean_and_stderr(&[4.0]), Some((4.0, None)));
        assert_eq!(mean_and_stderr(&[]), None);
    }

    #[test]
    fn table_columns() {
        use Algorithm::*;
        assert_eq!(table_column(EnvName::Gridworld, Ql, 0.95), Some(0));
        assert_eq!(table_column(EnvName::Gridworld, QlLowGamma, 0.6), Some(4));
        assert_eq!(table_column(EnvName::Cartpole, Dqn, 0.97), Some(4));
        assert_eq!(table_column(EnvName::Cartpole, Ddqn, 0.999), Some(1));
        assert_eq!(table_column(EnvName::Blackjack, QlEma, 1.0), Some(5));
        assert_eq!(table_column(EnvName::Gridworld, Dql, 0.6), None);
    }

    #[test]
    fn missing_directory_contents_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(summarize(dir.path()), Err(Error::Results(_))));
    }
}

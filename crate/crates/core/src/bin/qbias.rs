use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbias::harness::{oracle_report, run_file, summarize, EnvName, ExperimentFile};
use qbias::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_ORACLE: u8 = 3;

#[derive(Parser)]
#[command(name = "qbias", about = "Q-Learning overestimation bias experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the file's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate a results directory into summary.csv and summary.txt.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print ground-truth values with an independent cross-check.
    Oracle {
        #[arg(long)]
        env: String,
        /// Defaults to the environment's reference discount.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Print the tool version.
    Version,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Usage(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config, out, workers } => {
            let file = ExperimentFile::load(&config)?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            if workers == 0 {
                return Err(Error::Config("--workers must be positive".into()));
            }
            let (dir, done) = run_file(&file, out.as_deref(), workers)?;
            for (exp, results) in &done {
                let biases: Vec<f64> = results.iter().filter_map(|r| r.final_bias).collect();
                let bias = if biases.is_empty() {
                    "-".to_owned()
                } else {
                    format!("{:+.4}", biases.iter().sum::<f64>() / biases.len() as f64)
                };
                println!("{}: {} runs, mean final bias {}", exp.name, results.len(), bias);
            }
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Summarize { input } => {
            let summary = summarize(&input)?;
            summary.write(&input)?;
            print!("{}", summary.to_text());
            Ok(0)
        }
        Command::Oracle { env, gamma } => {
            let env = EnvName::parse(&env)?;
            let report = oracle_report(env, gamma.unwrap_or(env.reference_gamma()))?;
            print!("{report}");
            Ok(if report.agrees() { 0 } else { EXIT_ORACLE })
        }
        Command::Version => {
            println!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

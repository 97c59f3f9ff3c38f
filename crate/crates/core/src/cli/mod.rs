//! Command-line front end: config parsing, experiment runs and report files.

mod check;
mod config;
mod run;

pub use check::{run_checks, CheckResult};
pub use config::{
    parse_config, parse_config_text, ExperimentConfig, GridConfig, IntegrandConfig, MicrostructureConfig,
    NonconvexChoice, PhaseExpr, RunConfig, SolverConfig,
};
pub use run::{
    content_hash, fmt_value, oracle_value, run_experiment, run_oracle, run_sweep, solve_rows, solves_header,
    summary_header, summary_row, RunOptions, RunOutcome,
};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::microstructure::write_sample;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stochhom", version, about = "Cell-problem estimates of homogenized energies of random media")]
pub struct Cli {
    /// Experiment config (`section.key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides run.master_seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; defaults to run.out_path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record per-solve wall times in the CSV.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one realization on the first R and write it as a sample file.
    Sample {
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Solve one cell problem (first formula, Λ and R) and print its value.
    Cell {
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Full Monte Carlo experiment.
    Homogenize,
    /// Reference values for the configured medium, when available.
    Oracle,
    /// R- and t-sweeps.
    Sweep,
    /// Run the built-in invariant suite.
    Check,
}

enum Failure {
    Usage(String),
    Internal(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Validation(_) => Failure::Usage(e.to_string()),
            other => Failure::Internal(other),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Internal(Error::Unsupported(format!("thread pool: {e}")))),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e}");
            EXIT_INTERNAL
        }
    }
}

fn load(cli: &Cli) -> std::result::Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --config PATH".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config_text(&text)?;
    if let Some(seed) = cli.seed {
        cfg.run.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn options(cli: &Cli, cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        out_dir: cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.run.out_path)),
        timings: cli.timings,
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<i32, Failure> {
    match &cli.command {
        Command::Check => {
            let results = run_checks();
            for r in &results {
                println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_INTERNAL })
        }
        Command::Sample { index } => {
            let cfg = load(cli)?;
            let (_, d) = cfg.shape()?;
            let exp = cfg.experiment()?;
            let sample = exp.draw(d, cfg.run.r_list[0], *index)?;
            let opts = options(cli, &cfg);
            std::fs::create_dir_all(&opts.out_dir).map_err(Error::from)?;
            let path = opts.out_dir.join(format!("sample_{index}.txt"));
            std::fs::write(&path, write_sample(&sample)).map_err(Error::from)?;
            println!("{} inclusions written to {}", sample.len(), path.display());
            Ok(EXIT_OK)
        }
        Command::Cell { index } => {
            let cfg = load(cli)?;
            let exp = cfg.experiment()?;
            let p = cfg.problems()?.remove(0);
            let r = exp.solve_realization(&p, *index)?;
            let value = if r.diverged { f64::INFINITY } else { r.value };
            println!("{}", fmt_value(value));
            eprintln!(
                "{} R = {} realization {}: {} solves, stabilized {}, diverged {}",
                p.formula.name(),
                p.side,
                index,
                r.solves.len(),
                r.stabilized,
                r.diverged
            );
            Ok(EXIT_OK)
        }
        Command::Homogenize => {
            let cfg = load(cli)?;
            let opts = options(cli, &cfg);
            let out = run_experiment(&cfg, &opts)?;
            print!("{}", std::fs::read_to_string(opts.out_dir.join("summary.csv")).map_err(Error::from)?);
            if out.infeasible > 0 {
                eprintln!("{} estimate(s) flagged infeasible", out.infeasible);
            }
            Ok(EXIT_OK)
        }
        Command::Oracle => {
            let cfg = load(cli)?;
            print!("{}", run_oracle(&cfg, &options(cli, &cfg))?);
            Ok(EXIT_OK)
        }
        Command::Sweep => {
            let cfg = load(cli)?;
            print!("{}", run_sweep(&cfg, &options(cli, &cfg))?);
            Ok(EXIT_OK)
        }
    }
}

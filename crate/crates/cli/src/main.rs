mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;
use failure::Failure;

/// Temporal-difference policy-evaluation experiments.
#[derive(Parser)]
#[command(name = "tdlab", version)]
struct Cli {
    /// Worker threads for sweeps [default: available parallelism]. Runtime
    /// measurements always use a single thread.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter sweep on random MDPs.
    Sweep {
        /// Experiment config (TOML); defaults are used when omitted.
        config: Option<PathBuf>,
        /// on-policy or off-policy.
        #[arg(long)]
        setting: Option<String>,
        /// tabular, aliased-tabular or binary.
        #[arg(long)]
        representation: Option<String>,
        /// Comma-separated algorithm names, or `all`.
        #[arg(long)]
        algorithms: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep on Baird's counterexample.
    Baird {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algorithms: Option<String>,
        /// rmse or rmspbe.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Update timings (table) or learning under a per-iteration compute budget.
    Runtime {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Table)]
        mode: Mode,
        /// Comma-separated budgets in milliseconds (budget mode).
        #[arg(long, value_name = "MS,...")]
        c_values: Option<String>,
        /// Setting for budget mode; table mode always covers both.
        #[arg(long)]
        setting: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise every sweep found under a results directory.
    Report { dir: PathBuf },
    /// Print the default config or validate a config file.
    Config {
        #[arg(long, conflicts_with = "check", required_unless_present = "check")]
        default: bool,
        #[arg(long, value_name = "FILE")]
        check: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Table,
    Budget,
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig, Failure> {
    let mut config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.apply_env()?;
    Ok(config)
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse<T: std::str::FromStr<Err = tdlab_core::Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(|e: tdlab_core::Error| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let jobs = match cli.command {
        Command::Runtime { .. } => Some(1),
        _ => cli.jobs,
    };
    if let Some(n) = jobs {
        tdlab_core::exec::configure_workers(n).map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }

    match cli.command {
        Command::Sweep { config, setting, representation, algorithms, out } => {
            let mut c = load(config.as_ref())?;
            if let Some(s) = setting {
                c.sweep.setting = parse(&s)?;
            }
            if let Some(r) = representation {
                c.sweep.representation = parse(&r)?;
            }
            if let Some(a) = algorithms {
                c.sweep.algorithms = list(&a);
            }
            if let Some(o) = out {
                c.out = o;
            }
            c.validate()?;
            commands::sweep(&c)
        }
        Command::Baird { config, algorithms, metric, out } => {
            let mut c = load(config.as_ref())?;
            if let Some(a) = algorithms {
                c.baird.algorithms = list(&a);
            }
            if let Some(m) = metric {
                c.baird.metric = parse(&m)?;
            }
            if let Some(o) = out {
                c.out = o;
            }
            c.validate()?;
            commands::baird(&c)
        }
        Command::Runtime { config, mode, c_values, setting, out } => {
            let mut c = load(config.as_ref())?;
            if let Some(v) = c_values {
                c.runtime.c_values = list(&v)
                    .iter()
                    .map(|x| x.parse().map_err(|_| Failure::Config(format!("budget `{x}` is not a number"))))
                    .collect::<Result<_, _>>()?;
            }
            if let Some(s) = setting {
                c.runtime.setting = parse(&s)?;
            }
            if let Some(o) = out {
                c.out = o;
            }
            c.validate()?;
            match mode {
                Mode::Table => commands::runtime_table(&c),
                Mode::Budget => commands::runtime_budget(&c),
            }
        }
        Command::Report { dir } => commands::report(&dir),
        Command::Config { check: Some(path), .. } => {
            let mut c = ExperimentConfig::load(&path)?;
            c.apply_env()?;
            println!("{}: ok (hash {})", path.display(), c.hash()?);
            Ok(())
        }
        Command::Config { .. } => {
            print!("{}", ExperimentConfig::default().emit()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tdlab: {f}");
            f.exit_code()
        }
    }
}

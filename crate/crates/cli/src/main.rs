//! `digeco`: command-line driver for the digital ecosystem simulator.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use digeco_core::experiment::DESK_RUNS;
use digeco_core::{RunConfig, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "digeco", version, about = "Digital ecosystem simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Request events per run.
    #[arg(long)]
    steps: Option<u64>,
    /// Override a config value by dotted path, e.g. `network.eta=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct Fanout {
    /// Number of independent runs.
    #[arg(long, default_value_t = DESK_RUNS)]
    runs: usize,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One simulation run.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Many seeded runs of one configuration, optionally under a named scenario.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fanout: Fanout,
        /// One of the six request-behaviour scenarios.
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<Scenario>,
    },
    /// All six request-behaviour scenarios plus a summary table.
    PaperSuite {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fanout: Fanout,
    },
    /// One run, reporting the emergent connection topology.
    TopologyReport {
        #[command(flatten)]
        common: Common,
    },
    /// Checks the configuration and prints it with overrides applied.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::ALL
        .into_iter()
        .find(|sc| sc.name() == s)
        .ok_or_else(|| {
            let names: Vec<_> = Scenario::ALL.iter().map(|sc| sc.name()).collect();
            format!("expected one of {}", names.join(", "))
        })
}

fn effective_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut c = config::load(common.config.as_deref(), &common.overrides)?;
    if let Some(seed) = common.seed {
        c.seed = seed;
    }
    if let Some(steps) = common.steps {
        c.steps = steps;
    }
    config::check(&c)?;
    Ok(c)
}

fn workers(fanout: &Fanout) -> usize {
    fanout
        .parallel
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common } => {
            let c = effective_config(&common)?;
            output::run(&c, &common.out)
        }
        Command::Experiment {
            common,
            fanout,
            scenario,
        } => {
            let c = effective_config(&common)?;
            if fanout.runs == 0 {
                return Err(CliError::Config("runs must be >= 1".into()));
            }
            let exp = match scenario {
                Some(sc) => sc.experiment(&c, fanout.runs),
                None => digeco_core::ExperimentConfig {
                    name: "experiment".into(),
                    base: c,
                    n_runs: fanout.runs,
                },
            };
            output::experiment(&exp, workers(&fanout), &common.out).map(|_| ())
        }
        Command::PaperSuite { common, fanout } => {
            let c = effective_config(&common)?;
            if fanout.runs == 0 {
                return Err(CliError::Config("runs must be >= 1".into()));
            }
            output::paper_suite(&c, fanout.runs, workers(&fanout), &common.out)
        }
        Command::TopologyReport { common } => {
            let c = effective_config(&common)?;
            output::topology(&c, &common.out)
        }
        Command::Validate { common } => {
            let c = effective_config(&common)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&c).expect("config serialises")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("digeco: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use avgrl::envs::GridVariant;
use avgrl::harness::{report_metrics, run_experiment, EnvSpec, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "avgrl", about = "Average-reward RL experiment runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run(RunArgs),
    /// Print the diagnostics report of an environment as JSON.
    Report(ReportArgs),
    /// Write an environment's exact model as JSON.
    ExportEnv(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config.
    config: PathBuf,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(subcommand)]
    env: EnvCmd,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, global = true, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[command(subcommand)]
    env: EnvCmd,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EnvCmd {
    /// The classic stochastic chain.
    Riverswim {
        #[arg(long, default_value_t = 6)]
        states: usize,
    },
    /// Gridworld rooms ("four_room7x7" or "two_room9x11").
    Grid {
        #[arg(long)]
        variant: String,
    },
    /// Randomly generated MDP.
    Garnet {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        branching: usize,
        #[arg(long, default_value_t = 0.25)]
        reward_density: f64,
        #[arg(long, default_value_t = 0.0)]
        min_mass: f64,
        #[arg(long, default_value_t = 0.1)]
        min_reward: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_variant(text: &str) -> Result<GridVariant, String> {
    match text {
        "four_room7x7" | "four-room" | "4room" => Ok(GridVariant::FourRoom7x7),
        "two_room9x11" | "two-room" | "2room" => Ok(GridVariant::TwoRoom9x11),
        other => Err(format!(
            "unknown grid variant '{other}' (expected four_room7x7 or two_room9x11)"
        )),
    }
}

impl EnvCmd {
    fn to_spec(&self) -> Result<EnvSpec, String> {
        match self {
            EnvCmd::Riverswim { states } => {
                if *states < 2 {
                    return Err("riverswim needs at least 2 states".into());
                }
                Ok(EnvSpec::Riverswim { n_states: *states })
            }
            EnvCmd::Grid { variant } => Ok(EnvSpec::Grid { variant: parse_variant(variant)? }),
            EnvCmd::Garnet {
                states,
                actions,
                branching,
                reward_density,
                min_mass,
                min_reward,
                seed,
            } => {
                if *states < 2 || *actions < 1 {
                    return Err("garnet needs at least 2 states and 1 action".into());
                }
                if *branching < 1 || branching > states {
                    return Err("garnet branching must lie in [1, states]".into());
                }
                if !(*reward_density > 0.0 && *reward_density <= 1.0) {
                    return Err("garnet reward_density must lie in (0, 1]".into());
                }
                if *min_mass < 0.0 || *min_mass * *branching as f64 > 1.0 {
                    return Err("garnet min_mass * branching must not exceed 1".into());
                }
                if !(0.0..=1.0).contains(min_reward) {
                    return Err("garnet min_reward must lie in [0, 1]".into());
                }
                Ok(EnvSpec::Garnet {
                    n_states: *states,
                    n_actions: *actions,
                    branching: *branching,
                    reward_density: *reward_density,
                    min_mass: *min_mass,
                    min_reward: *min_reward,
                    seed: *seed,
                })
            }
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for AppError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(m) => AppError::Config(m),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), AppError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = Some(j);
    }
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    println!(
        "wrote {} and {} (g* = {:.6}, {} checkpoints)",
        cfg.out.join("runs.csv").display(),
        cfg.out.join("aggregate.csv").display(),
        result.g_star,
        result.checkpoints.len()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), AppError> {
    let spec = args.env.to_spec().map_err(AppError::Config)?;
    let json = report_metrics(&spec, args.horizon, args.delta)?;
    println!("{json}");
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), AppError> {
    let spec = args.env.to_spec().map_err(AppError::Config)?;
    let json = spec.build().model.to_json();
    match args.out {
        Some(path) => std::fs::write(&path, json.as_bytes())
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
        Command::ExportEnv(args) => cmd_export(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(AppError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rlsp_core::eval::{
    combiner_compare, combiner_suite, horizon_sweep, run_scenario, table1, Algorithm, RunOptions, HORIZON_GRID,
    SIGMA_GRID,
};
use rlsp_core::gridworlds::{build_scenario, PriorMode, SCENARIO_NAMES};
use rlsp_core::RlspError;

#[derive(Parser)]
#[command(name = "rlsp", version, about = "Infer preferences from the state of the world and evaluate them on side-effect gridworlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one environment and write its report.
    Run(RunArgs),
    /// Evaluate the four summary algorithms on every environment.
    Table1(TableArgs),
    /// Produce sweep data as CSV or JSON.
    Sweep(SweepArgs),
    /// List environments with their feature labels.
    ListEnvs,
    /// Write an environment's MDP (or its scenario description) as JSON.
    DumpEnv(DumpArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long = "alg")]
    algorithm: Option<String>,
    #[arg(long)]
    prior: Option<String>,
    /// Assumed horizon of the person.
    #[arg(long = "T")]
    alice_horizon: Option<usize>,
    #[arg(long)]
    robot_horizon: Option<usize>,
    /// Use this penalty / combination weight instead of tuning.
    #[arg(long)]
    lambda: Option<f64>,
    /// Use this prior std instead of tuning (rlsp-bayesian).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    env: Option<String>,
    algorithm: Option<String>,
    prior_mode: Option<String>,
    #[serde(rename = "T")]
    alice_horizon: Option<usize>,
    robot_horizon: Option<usize>,
    lambda: Option<f64>,
    sigma: Option<f64>,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value = "known")]
    prior: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Horizon,
    Combiner,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    /// Environments to include (repeatable); defaults depend on the sweep.
    #[arg(long = "env")]
    envs: Vec<String>,
    /// Grid values: horizons for `horizon`, prior stds for `combiner`.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Planning temperatures for `combiner`; 0 means hard planning.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    temperatures: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    env: String,
    /// Dump the scenario description instead of the MDP.
    #[arg(long)]
    scenario: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Evidence(String),
    Other(String),
}

impl From<RlspError> for Failure {
    fn from(e: RlspError) -> Self {
        match e {
            RlspError::ImpossibleEvidence(_) => Failure::Evidence(e.to_string()),
            RlspError::InvalidInput(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ListEnvs => cmd_list_envs(),
        Command::DumpEnv(args) => cmd_dump_env(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Evidence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_prior(s: &str) -> Result<PriorMode, Failure> {
    s.parse().map_err(Failure::Config)
}

fn check_env(name: &str) -> Result<(), Failure> {
    if SCENARIO_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "unknown environment `{name}`; valid names: {}",
            SCENARIO_NAMES.join(", ")
        )))
    }
}

fn positive(name: &str, v: Option<usize>) -> Result<Option<usize>, Failure> {
    match v {
        Some(0) => Err(Failure::Config(format!("{name} must be positive"))),
        other => Ok(other),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let env = args
        .env
        .or(file.env)
        .ok_or_else(|| Failure::Config(format!("--env is required; valid names: {}", SCENARIO_NAMES.join(", "))))?;
    check_env(&env)?;
    let algorithm: Algorithm = args
        .algorithm
        .or(file.algorithm)
        .ok_or_else(|| Failure::Config("--alg is required".into()))?
        .parse()
        .map_err(Failure::Config)?;
    let prior = parse_prior(args.prior.or(file.prior_mode).as_deref().unwrap_or("known"))?;
    let alice_horizon = positive("T", args.alice_horizon.or(file.alice_horizon))?;
    let robot_horizon = positive("robot horizon", args.robot_horizon.or(file.robot_horizon))?;
    let lambda = args.lambda.or(file.lambda);
    let sigma = args.sigma.or(file.sigma);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let format = args.format.or(file.format).unwrap_or(Format::Json);
    let output = args.output.or(file.output_path);

    let mut scenario = build_scenario(&env)?.with_prior_mode(prior);
    if let Some(t) = alice_horizon {
        scenario = scenario.with_alice_horizon(t);
    }
    if let Some(h) = robot_horizon {
        scenario = scenario.with_robot_horizon(h);
    }
    let fixed = match algorithm.hyperparameter() {
        Some("sigma") => sigma,
        Some(_) => lambda,
        None => None,
    };
    if let Some(v) = fixed {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Failure::Config(format!("hyperparameter must be finite and non-negative, got {v}")));
        }
    }
    let grid = fixed.map_or_else(|| algorithm.default_grid(), |v| vec![v]);
    let options = RunOptions {
        seed,
        ..RunOptions::default()
    };
    let report = run_scenario(&scenario, algorithm, &grid, &options)?;
    let text = match format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    };
    emit(output.as_deref(), &text)
}

fn cmd_table1(args: TableArgs) -> Result<(), Failure> {
    let prior = parse_prior(&args.prior)?;
    let options = RunOptions {
        seed: args.seed,
        ..RunOptions::default()
    };
    let table = table1(prior, &options)?;
    let text = match args.format {
        Format::Json => table.to_json()? + "\n",
        Format::Csv => table.to_csv(),
        Format::Text => table.to_text(),
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    for env in &args.envs {
        check_env(env)?;
    }
    let options = RunOptions {
        seed: args.seed,
        ..RunOptions::default()
    };
    let result = match args.kind {
        SweepKind::Horizon => {
            let grid: Vec<usize> = if args.grid.is_empty() {
                HORIZON_GRID.to_vec()
            } else {
                args.grid
                    .iter()
                    .map(|&t| {
                        if t >= 1.0 && t.fract() == 0.0 {
                            Ok(t as usize)
                        } else {
                            Err(Failure::Config(format!("horizon {t} is not a positive integer")))
                        }
                    })
                    .collect::<Result<_, _>>()?
            };
            let envs: Vec<String> = if args.envs.is_empty() {
                SCENARIO_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                args.envs.clone()
            };
            let mut merged: Option<rlsp_core::eval::SweepResult> = None;
            for env in &envs {
                let part = horizon_sweep(env, &grid, &options)?;
                match &mut merged {
                    Some(m) => m.rows.extend(part.rows),
                    None => merged = Some(part),
                }
            }
            merged.expect("at least one environment")
        }
        SweepKind::Combiner => {
            let envs: Vec<&str> = if args.envs.is_empty() {
                combiner_suite()
            } else {
                args.envs.iter().map(String::as_str).collect()
            };
            let grid = if args.grid.is_empty() { SIGMA_GRID.to_vec() } else { args.grid.clone() };
            combiner_compare(&envs, &grid, &args.temperatures)?
        }
    };
    let text = match args.format {
        Format::Json => result.to_json()? + "\n",
        Format::Csv | Format::Text => result.to_csv(),
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_list_envs() -> Result<(), Failure> {
    let mut out = String::new();
    for name in SCENARIO_NAMES {
        let scenario = build_scenario(name)?;
        out += &format!(
            "{name}\tstates={}\tT={}\tfeatures={}\n",
            scenario.env.mdp.num_states(),
            scenario.alice_horizon,
            scenario.env.feature_names().join(",")
        );
    }
    emit(None, &out)
}

fn cmd_dump_env(args: DumpArgs) -> Result<(), Failure> {
    check_env(&args.env)?;
    let scenario = build_scenario(&args.env)?;
    let text = if args.scenario {
        scenario.to_json()?
    } else {
        scenario.env.mdp.to_json()?
    };
    emit(args.output.as_deref(), &(text + "\n"))
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 `bell` finished but found no violation of `|S| ≤ 2`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isoqubit::commands::{self, Mode, Status};
use isoqubit::config::RunConfig;
use isoqubit::error::{Error, Result};
use isoqubit::output::{Format, Payload, ResultRecord};

#[derive(Parser)]
#[command(name = "isoqubit", version, about = "Dual-species ensemble qubit entangled with a frequency-encoded photon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML); the built-in reference run when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of trials per setting.
    #[arg(long)]
    trials: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Derived interaction parameters and fringe amplitude.
    Params(Common),
    /// Coincidence fringes versus the idler phase.
    Fringes {
        #[command(flatten)]
        common: Common,
        /// Signal phases in units of π (repeatable); taken from the configuration when omitted.
        #[arg(long = "phi-s", allow_hyphen_values = true)]
        phi_s: Vec<f64>,
    },
    /// Correlations at the Bell angles and the CHSH parameter.
    Bell(Common),
    /// Repeats the Bell and fringe summaries across a parameter range.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path of a numeric configuration entry, e.g. `phase_noise.var_phi_s`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long)]
        points: usize,
    },
    /// Checks normalizations, balance, truncation and the lowest-order rate gap.
    Validate(Common),
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::reference(),
    };
    if let Some(seed) = common.seed {
        config.monte_carlo.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.monte_carlo.n_trials = Some(trials);
    }
    Ok(config)
}

fn emit(common: &Common, config: &RunConfig, command: &str, payload: Payload) -> Result<()> {
    let format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let record = ResultRecord::new(&config.hash(), command, config.monte_carlo.seed, payload);
    let text = record.render(format)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn mode(common: &Common) -> Mode {
    match common.mode {
        ModeArg::Analytic => Mode::Analytic,
        ModeArg::Mc => Mode::Mc,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Params(common) => {
            let config = load(&common)?;
            let report = commands::cmd_params(&config.resolve()?)?;
            emit(&common, &config, "params", Payload::Params(report))?;
        }
        Command::Fringes { common, phi_s } => {
            let config = load(&common)?;
            let model = config.resolve()?;
            let phi_s: Vec<f64> = if phi_s.is_empty() {
                model.fringe_phi_s.clone()
            } else {
                phi_s.iter().map(|p| p * std::f64::consts::PI).collect()
            };
            let table = commands::cmd_fringes(&model, &phi_s, &model.fringe_grid, mode(&common))?;
            emit(&common, &config, "fringes", Payload::Fringes(table))?;
        }
        Command::Bell(common) => {
            let config = load(&common)?;
            let report = commands::cmd_bell(&config.resolve()?, mode(&common))?;
            let violation = report.violation;
            emit(&common, &config, "bell", Payload::Bell(report))?;
            if !violation {
                return Ok(4);
            }
        }
        Command::Sweep { common, param, start, stop, points } => {
            let config = load(&common)?;
            let values = commands::linspace(start, stop, points);
            let table = commands::cmd_sweep(&config, &param, &values, mode(&common))?;
            emit(&common, &config, "sweep", Payload::Sweep(table))?;
        }
        Command::Validate(common) => {
            let config = match load(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(2);
                }
            };
            let report = commands::cmd_validate(&config);
            let code = match report.worst() {
                Status::Fail if report.schema_failed() => 2,
                Status::Fail => 3,
                _ => 0,
            };
            emit(&common, &config, "validate", Payload::Validate(report))?;
            return Ok(code);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}

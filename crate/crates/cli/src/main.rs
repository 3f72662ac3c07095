//! `trialkit`: command-line front end.
//!
//! Exit status: 0 success, 1 I/O failure, 2 invalid input or config,
//! 3 infeasible constraints, 4 simulation scale problems.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trialkit::Error;

use crate::config::{
    load_config, BoundsParams, CommandName, OracleParams, Params, RunConfig, TransportParams,
};
use crate::report::Format;

/// Directory for outputs when no path is given.
const OUTPUT_DIR_ENV: &str = "TRIALKIT_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "trialkit",
    version,
    about = "Bounds, design comparisons and simulations for trial analysis"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML run config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best and worst achievable success rates.
    Bounds {
        #[arg(long)]
        rj: f64,
        #[arg(long)]
        rk: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Bounds by enumerating every response table.
    Oracle {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        rj: f64,
        #[arg(long)]
        rk: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Randomized versus opposites cell sizes.
    Transport {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long = "n-star")]
        n_star: Option<u64>,
    },
    /// Simulate temporal-discontinuity assignment for one cohort.
    TdSim {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Distance from randomization across a ladder of spreads.
    KSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated standard deviations.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Simulate a regression discontinuity population.
    RddSim {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "n-pop")]
        n_pop: Option<u64>,
        /// Also write the latent-score density at the cutoff as CSV.
        #[arg(long = "emit-density")]
        emit_density: Option<PathBuf>,
    },
    /// Check marginal and conditional no-confounding.
    Confounding {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run any config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Io(String),
    Config(String),
    Lib(Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Lib(e) => match e {
                Error::AlphaInfeasible { .. } | Error::InfeasibleConstraints { .. } => 3,
                Error::SpaceTooLarge { .. }
                | Error::DegenerateWindow { .. }
                | Error::ZeroMass
                | Error::CalibrationFailed(_) => 4,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) | Failure::Config(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn load_for(path: &Path, expected: CommandName) -> Result<RunConfig, Failure> {
    let cfg = load_config(path)?;
    if cfg.command() != expected {
        return Err(Failure::Config(format!(
            "{}: command: config is for `{}`, expected `{expected}`",
            path.display(),
            cfg.command()
        )));
    }
    Ok(cfg)
}

fn inline(params: Params) -> RunConfig {
    RunConfig { params, seed: 0, format: None, output_path: None }
}

fn resolve(command: Command) -> Result<(RunConfig, Option<PathBuf>), Failure> {
    let mut density = None;
    let cfg = match command {
        Command::Bounds { rj, rk, alpha } => inline(Params::Bounds(BoundsParams { rj, rk, alpha })),
        Command::Oracle { n, rj, rk, alpha } => inline(Params::Oracle(OracleParams { n, rj, rk, alpha })),
        Command::Transport { n, p, q, n_star } => {
            inline(Params::Transport(TransportParams { n, p, q, n_star }))
        }
        Command::TdSim { cfg, draws } => {
            let mut c = load_for(&cfg.config, CommandName::TdSim)?;
            if let Params::TdSim(p) = &mut c.params {
                p.draws = draws.unwrap_or(p.draws);
            }
            c.seed = cfg.seed.unwrap_or(c.seed);
            c
        }
        Command::KSweep { cfg, sigmas, draws } => {
            let mut c = load_for(&cfg.config, CommandName::KSweep)?;
            if let Params::KSweep(p) = &mut c.params {
                p.draws = draws.unwrap_or(p.draws);
                if let Some(s) = sigmas {
                    p.sigmas = s;
                }
            }
            c.seed = cfg.seed.unwrap_or(c.seed);
            c
        }
        Command::RddSim { cfg, n_pop, emit_density } => {
            let mut c = load_for(&cfg.config, CommandName::RddSim)?;
            if let Params::RddSim(p) = &mut c.params {
                p.n_pop = n_pop.unwrap_or(p.n_pop);
                if emit_density.is_some() {
                    p.emit_density = emit_density;
                }
            }
            c.seed = cfg.seed.unwrap_or(c.seed);
            c
        }
        Command::Confounding { config } => load_for(&config, CommandName::Confounding)?,
        Command::Run { config, seed } => {
            let mut c = load_config(&config)?;
            c.seed = seed.unwrap_or(c.seed);
            c
        }
    };
    if let Params::RddSim(p) = &cfg.params {
        density = p.emit_density.clone();
    }
    Ok((cfg, density))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Io(format!("output: cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, text)
        .map_err(|e| Failure::Io(format!("output: cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (cfg, density) = resolve(cli.command)?;
    let format = cli.format.or(cfg.format).unwrap_or(Format::Table);
    let report = commands::execute(&cfg.params, cfg.seed)?;
    if let (Some(path), Params::RddSim(p)) = (density, &cfg.params) {
        let grid = commands::density_report(p)?;
        commands::write_csv(&grid, &path)
            .map_err(|e| Failure::Io(format!("emit_density: cannot write {}: {e}", path.display())))?;
    }
    let text = report.render(format);
    let command = cfg.command();
    let target = cli.output.or(cfg.output_path).or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
    });
    match target {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

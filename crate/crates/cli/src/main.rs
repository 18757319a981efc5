mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lambda_scope::Error;

use crate::commands::{Context, Panels};
use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "lambda-scope", version, about = "Dressed-state single-photon detector simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Integrator step in ns.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Highest Fock level of resonator A.
    #[arg(long = "na-max", global = true)]
    n_a_max: Option<usize>,
    /// Highest Fock level of resonator B.
    #[arg(long = "nb-max", global = true)]
    n_b_max: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized dressed decay rates over the drive strength.
    DressedRates,
    /// Weak-signal reflection coefficient over drive strength and carrier.
    ReflectionMap,
    /// Capture trajectories with and without the probe, plus a silent run.
    PulseResponse,
    /// Detection efficiency over pulse length, drive and carrier.
    Efficiency {
        /// Panels to compute (default: lengths and bands).
        #[arg(long, value_enum, value_delimiter = ',')]
        panels: Vec<Panel>,
    },
    /// Time-averaged vs quantum-jump efficiency for exponential decay.
    Appendix,
    /// Every acceptance check; exits 4 when any fails.
    Regression,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Panel {
    Lengths,
    Map,
    Bands,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_REGRESSION: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_convergence() {
                ExitCode::from(EXIT_CONVERGENCE)
            } else {
                ExitCode::from(EXIT_CONFIG)
            }
        }
    }
}

fn run(cli: Cli) -> lambda_scope::Result<u8> {
    let path = cli.config.ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.dt.is_some() {
        cfg.dt = cli.dt;
    }
    if cli.n_a_max.is_some() {
        cfg.n_a_max = cli.n_a_max;
    }
    if cli.n_b_max.is_some() {
        cfg.n_b_max = cli.n_b_max;
    }
    let ctx = Context::new(cfg)?;

    let report = match cli.command {
        Command::DressedRates => commands::dressed_rates(&ctx)?,
        Command::ReflectionMap => commands::reflection(&ctx)?,
        Command::PulseResponse => commands::pulse_response(&ctx)?,
        Command::Efficiency { panels } => {
            let pick = |p| panels.contains(&p);
            let panels = if panels.is_empty() {
                Panels { lengths: true, map: false, bands: true }
            } else {
                Panels { lengths: pick(Panel::Lengths), map: pick(Panel::Map), bands: pick(Panel::Bands) }
            };
            commands::efficiency(&ctx, panels)?
        }
        Command::Appendix => commands::appendix(&ctx)?,
        Command::Regression => {
            let report = commands::regression(&ctx)?;
            for check in &report.checks {
                println!("{check}");
            }
            println!("report: {}", ctx.out.join("regression.json").display());
            return Ok(if report.passed() { 0 } else { EXIT_REGRESSION });
        }
    };
    let summary = report.write(&ctx.out)?;
    for h in &report.headlines {
        let value = h.value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        let verdict = match h.within {
            Some(true) => "ok",
            Some(false) => "OUT OF BAND",
            None => "",
        };
        println!("{:<60} {value:>12}  ({}) {verdict}", h.name, h.tolerance);
    }
    println!("summary: {}", summary.display());
    Ok(0)
}

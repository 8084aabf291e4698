#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::RunConfig;
use output::{Meta, Outputs};

#[derive(Parser)]
#[command(
    name = "lambda-adapt",
    version,
    about = "Single-photon adaptation of a three-level emitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Grid points for the entropy curve.
    #[arg(long, global = true, default_value_t = 200)]
    points: usize,

    /// Accepted for scripts; every computation is deterministic.
    #[arg(long, global = true)]
    seedless: bool,

    /// Report entropies in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one run: trajectory.csv, ledger.json, entropy.json.
    Simulate,
    /// Evaluate the objective over the [sweep] grid: sweep.csv.
    Sweep,
    /// Maximize the objective within the [optimize] bounds: optimum.json, trace.jsonl.
    Optimize,
    /// Long-time entropies against p_ab(inf): entropy_curve.csv.
    #[command(alias = "figure2")]
    EntropyCurve,
    /// Compare with the discrete-mode oracle and check the balances: verify.json.
    #[command(alias = "verify")]
    OracleVerify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
            Command::EntropyCurve => "entropy-curve",
            Command::OracleVerify => "oracle-verify",
        }
    }
}

fn limit_threads() -> Outcome {
    let Ok(raw) = std::env::var("LAMBDA_ADAPT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::config(format!(
            "LAMBDA_ADAPT_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn run(cli: &Cli) -> Outcome {
    limit_threads()?;
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_config(),
    };
    let mut out = Outputs::new(&cli.out, Meta::new(cli.command.name(), &cfg, cli.bits))?;
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out, cli.bits),
        Command::Sweep => commands::sweep_cmd(&cfg, &mut out),
        Command::Optimize => commands::optimize_cmd(&cfg, &mut out),
        Command::EntropyCurve => commands::entropy_curve_cmd(&cfg, &mut out, cli.points, cli.bits),
        Command::OracleVerify => commands::verify_cmd(&cfg, &mut out),
    };
    for p in out.written() {
        eprintln!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}

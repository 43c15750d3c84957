use std::path::PathBuf;
use std::process::ExitCode;

use arcert_cli::commands::{cmd_certify, cmd_montecarlo, cmd_rate_sweep, cmd_simulate};
use arcert_cli::{with_threads, CliError, ExperimentConfig, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arcert", version, about = "Finite-sample certificates for least-squares AR(n) estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance sandwich and deviation radii for one (epsilon, N).
    Certify(Common),
    /// Monte Carlo coverage campaign.
    Montecarlo(Common),
    /// Failure probability along a horizon grid with epsilon = lambda_n - N^(-1/2).
    RateSweep(Common),
    /// Dump one stationary trajectory as CSV.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, name) = match &cli.command {
        Command::Certify(c) => (c, "certify"),
        Command::Montecarlo(c) => (c, "montecarlo"),
        Command::RateSweep(c) => (c, "rate-sweep"),
        Command::Simulate(c) => (c, "simulate"),
    };
    let cfg = ExperimentConfig::from_path(&common.config)?;
    let opts = RunOptions {
        out: common.out.clone(),
        seed: common.seed,
        threads: common.threads,
    };
    with_threads(opts.threads, || match name {
        "certify" => cmd_certify(&cfg, &opts).map(|out| print!("{}", arcert_cli::commands::certify_summary(&out))),
        "montecarlo" => cmd_montecarlo(&cfg, &opts).map(|r| {
            for e in &r.events {
                println!("{:<12} freq={:.3e} stderr={:.1e} bound={:.3e} {}", e.event, e.frequency, e.stderr, e.bound, e.verdict.as_str());
            }
            let c = r.chain_violations;
            println!("chain violations: sandwich={} deviation={}", c.sandwich, c.deviation);
        }),
        "rate-sweep" => cmd_rate_sweep(&cfg, &opts).map(|a| match a.slope {
            Some(s) => println!("slope {s:.6} vs -lambda_n = {:.6}", -a.lambda_n),
            None => println!("fewer than two finite points; no slope fitted"),
        }),
        _ => cmd_simulate(&cfg, &opts),
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

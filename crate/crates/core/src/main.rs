use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radpose::bench::{cmd_bench, cmd_sweep, cmd_synth, BenchOptions, CliError};

#[derive(Parser)]
#[command(name = "radpose", version, about = "Radial-distortion relative pose benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (JSON Lines) from a JSON config.
    Synth { config: PathBuf, out: PathBuf },
    /// Run methods over a dataset; writes a CSV and a JSON summary beside it.
    Bench {
        dataset: PathBuf,
        out: PathBuf,
        /// Methods file; defaults to the bundled method matrix.
        #[arg(long)]
        methods: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold_px: Option<f64>,
        #[arg(long)]
        confidence: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Distortion sweep from a JSON config; writes one CSV row per level and method.
    Sweep {
        config: PathBuf,
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { config, out } => {
            let n = cmd_synth(&config, &out)?;
            eprintln!("wrote {n} pairs to {}", out.display());
        }
        Command::Bench {
            dataset,
            out,
            methods,
            seed,
            threshold_px,
            confidence,
            max_iters,
            jobs,
        } => {
            let d = BenchOptions::default();
            let opts = BenchOptions {
                seed: seed.unwrap_or(d.seed),
                threshold_px: threshold_px.unwrap_or(d.threshold_px),
                confidence: confidence.unwrap_or(d.confidence),
                max_iterations: max_iters.unwrap_or(d.max_iterations),
                jobs: jobs.unwrap_or(d.jobs),
                ..d
            };
            for s in cmd_bench(&dataset, methods.as_deref(), &out, &opts)? {
                eprintln!(
                    "{:<40} med pose {:>8.3}°  med ε(λ) {:>7.4}  AUC@10 {:.3}",
                    s.method, s.pose_err_med, s.lambda_err_med, s.auc[1]
                );
            }
        }
        Command::Sweep { config, out, jobs } => {
            let rows = cmd_sweep(&config, &out, jobs)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
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

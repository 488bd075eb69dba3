use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use odex_core::McSettings;

mod commands;
mod config;

use commands::{Failure, Options, Range, ReportArgs};

#[derive(Parser)]
#[command(name = "odex", version, about = "Adaptive exploration of black-box simulations")]
struct Cli {
    /// Directory for all emitted files (overrides the config's output_dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Also write `<name>.models.json` with the final estimator's internals.
    #[arg(long, global = true)]
    dump_models: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every setup of a config.
    Explore {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fresh runs of every setup for each n of a range; writes benchmark.csv.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_start: usize,
        #[arg(long)]
        n_end: usize,
        #[arg(long, default_value_t = 1)]
        n_step: usize,
        /// Score prefixes of one run with N = n-end instead of fresh runs.
        #[arg(long)]
        prefix_mode: bool,
    },
    /// Retrain on an archived points file and report its characteristics.
    Report {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "toy")]
        sim: String,
        /// Config supplying the external simulation and its space.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = odex_core::metrics::DEFAULT_MC_SAMPLES)]
        mc_n: usize,
        #[arg(long, default_value_t = odex_core::metrics::DEFAULT_CONFIDENCE)]
        confidence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file stem (defaults to the points file stem).
        #[arg(long)]
        name: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        out_dir: cli.out_dir,
        dump_models: cli.dump_models,
    };
    let result = match cli.command {
        Command::Explore { config } => commands::explore(&config, &opts),
        Command::Benchmark {
            config,
            n_start,
            n_end,
            n_step,
            prefix_mode,
        } => commands::benchmark(
            &config,
            &Range {
                start: n_start,
                end: n_end,
                step: n_step,
                prefix_mode,
            },
            &opts,
        ),
        Command::Report {
            points,
            sim,
            config,
            mc_n,
            confidence,
            seed,
            name,
        } => commands::report(
            &ReportArgs {
                points,
                sim,
                config,
                mc: McSettings {
                    samples: mc_n,
                    confidence,
                    seed,
                },
                name,
            },
            &opts,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lionlab::cli;

#[derive(Parser)]
#[command(
    name = "lionlab",
    version,
    about = "Lion optimizer family: runs, invariant suites and rate fits"
)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a JSON config; writes one CSV per seed and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an invariant suite: lemma1, unbiased-sign, reduction, bits, assumptions.
    Verify { suite: String },
    /// Sweep the benchmark problem under a theorem schedule and fit the log-log rate.
    Rates {
        #[arg(long)]
        theorem: String,
        #[arg(long = "T", value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit exact power-law data instead of running the optimizer.
        #[arg(long)]
        self_test: bool,
    },
}

fn main() -> ExitCode {
    let code = match Args::parse().cmd {
        Cmd::Run { config, out } => cli::cmd_run(&config, &out),
        Cmd::Verify { suite } => cli::cmd_verify(&suite),
        Cmd::Rates {
            theorem,
            horizons,
            seeds,
            out,
            self_test,
        } => {
            let out = out.unwrap_or_else(|| cli::default_rates_path(&theorem));
            cli::cmd_rates(&theorem, &horizons, &seeds, &out, self_test)
        }
    };
    ExitCode::from(code as u8)
}

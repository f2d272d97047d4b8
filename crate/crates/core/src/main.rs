use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nfwpt_core::cli;
use nfwpt_core::{Error, StrategyKind};

#[derive(Parser)]
#[command(name = "nfwpt", version, about = "Near-field RF wireless power transfer simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one strategy over the sampling plane and write a field CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// siso | rps | bf | gbf (default: the config's strategy.kind)
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo target power versus phase-error standard deviation.
    SweepSigma {
        #[arg(long)]
        config: PathBuf,
        /// start:stop:step in degrees, stop inclusive
        #[arg(long)]
        sigmas: Option<String>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Focal spot, in/out distributions and gains of a field CSV.
    Metrics {
        #[arg(long)]
        field: PathBuf,
        /// x,y in meters
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Use a square of this half-width as the inside region instead of the spot
        #[arg(long)]
        box_halfwidth: Option<f64>,
        /// Companion field to compute gain against (repeatable)
        #[arg(long = "vs")]
        companions: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gain of field A over field B at a point, plus field-wide summary.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// x,y in meters
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Run all strategies with one seed and write every data file.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(args: Args) -> Result<String, Error> {
    match args.command {
        Command::Simulate { config, strategy, seed, out } => {
            let kind = strategy.map(|s| s.parse::<StrategyKind>()).transpose()?;
            cli::simulate(&config, kind, seed, &out)
        }
        Command::SweepSigma { config, sigmas, realizations, seed, out } => {
            cli::sweep(&config, sigmas.as_deref(), realizations, seed, &out)
        }
        Command::Metrics { field, target, box_halfwidth, companions, out } => {
            let refs: Vec<&std::path::Path> = companions.iter().map(PathBuf::as_path).collect();
            cli::metrics(&field, cli::parse_xy(&target)?, box_halfwidth, &refs, &out)
        }
        Command::Compare { a, b, at } => {
            let v = cli::compare(&a, &b, cli::parse_xy(&at)?)?;
            Ok(serde_json::to_string_pretty(&v).expect("JSON values serialize"))
        }
        Command::Report { config, seed, out } => cli::report(&config, seed, &out),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

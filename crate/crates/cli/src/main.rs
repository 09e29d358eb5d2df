// bohr: batch experiments over the bohr-core library.
//
// Every command prints one JSON report on stdout. With `--emit NAME` the
// report, a CSV table (when the command has one) and a manifest are also
// written to $BOHR_OUT_DIR (default: the current directory) as NAME.json,
// NAME.csv and NAME.manifest.json.
//
// Examples:
//   bohr horseshoe build --cylinder 0101
//   bohr horseshoe disjointify --order 4 --emit k4
//   bohr horseshoe verify k4.json
//   bohr weights index --weight '{"kind":"moebius"}' --n 100000 --q 3
//   bohr average lift --certificate k2.json --weight w.json --n 10000 --seed 7
//   bohr toral analyze --matrix companion_4d.json
//   bohr toral riesz-verify --config riesz.json --seed 1 --jobs 4
//   bohr control rotation --beta 0.3333333333333333 --n 1000000
//   bohr replay k4.manifest.json

mod average;
mod config;
mod control;
mod error;
mod horseshoe;
mod output;
mod toral;
mod weights;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::output::Emitter;

#[derive(Parser, Debug)]
#[command(name = "bohr", version, about = "Horseshoes, weighted Birkhoff averages and Riesz-product checks")]
struct Cli {
    /// Base name for report, CSV and manifest files written to $BOHR_OUT_DIR.
    #[arg(long, global = true)]
    emit: Option<String>,
    /// Worker threads for the parallel parts of the library.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    #[command(subcommand)]
    Horseshoe(horseshoe::HorseshoeCmd),
    #[command(subcommand)]
    Weights(weights::WeightsCmd),
    #[command(subcommand)]
    Average(average::AverageCmd),
    #[command(subcommand)]
    Toral(toral::ToralCmd),
    #[command(subcommand)]
    Control(control::ControlCmd),
    /// Re-runs the command recorded in a manifest and compares output hashes.
    Replay { manifest: String },
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(&argv).map_err(|e| {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            CliError::Exit(0)
        } else {
            CliError::Malformed(e.to_string())
        }
    })?;
    if let Some(jobs) = cli.jobs {
        // A replayed command finds the pool already built; keeping it only
        // changes the thread count, never the output.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let mut out = Emitter::new(argv, cli.emit)?;
    let result = match cli.command {
        Command::Horseshoe(cmd) => horseshoe::run(cmd, &mut out),
        Command::Weights(cmd) => weights::run(cmd, &mut out),
        Command::Average(cmd) => average::run(cmd, &mut out),
        Command::Toral(cmd) => toral::run(cmd, &mut out),
        Command::Control(cmd) => control::run(cmd, &mut out),
        Command::Replay { manifest } => return output::replay(&manifest),
    };
    // Failed verifications still leave a manifest for whatever was written.
    let finished = out.finish();
    result.and(finished)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Exit(code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bohr: {e}");
            ExitCode::from(e.code())
        }
    }
}

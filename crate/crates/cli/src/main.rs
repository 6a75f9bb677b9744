mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mbqc_mps::Mode;

#[derive(Parser)]
#[command(name = "mbqc-mps", version, about = "Matrix-product-state simulator for measurement-based computation on grid cluster states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cluster state, write its tensors as JSON and print a bond summary.
    Build { spec: PathBuf, out: PathBuf },

    /// Run a measurement pattern on a cluster and print a JSON run report.
    Run {
        spec: PathBuf,
        pattern: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "full_update")]
        mode: Mode,
        /// Cross-check the output state against a dense simulation (at most 20 qubits).
        #[arg(long)]
        verify: bool,
    },

    /// Build a cluster and check every bond against the Schmidt-number bound.
    Verify { spec: PathBuf },

    /// Time an all-qubit pattern over a grid of widths and lengths; prints CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        widths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        lengths: Vec<usize>,
        #[arg(long, default_value = "in_order")]
        mode: Mode,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run independent (width, length) cells on separate threads.
        #[arg(long)]
        parallel: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { spec, out } => commands::build(&spec, &out),
        Command::Run { spec, pattern, seed, mode, verify } => commands::run(&spec, &pattern, seed, mode, verify),
        Command::Verify { spec } => commands::verify(&spec),
        Command::Bench { widths, lengths, mode, repeats, seed, parallel } => {
            commands::bench(&widths, &lengths, mode, repeats, seed, parallel)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}

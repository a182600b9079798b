//! `taucorr` — command-line front end for the multi-tau correlator and the
//! dynamic light scattering analysis chain.
//!
//! The subcommands mirror the stages of an experiment and chain through
//! files, so a full synthetic run is:
//!
//! ```text
//! taucorr simulate  --diameter 530 --angle 30 --duration 60 --rate 5e6 \
//!                   --seed 42 --out run.phot
//! taucorr correlate --in run.phot --out run.corr
//! taucorr fit       --in run.corr --out run.fit
//! taucorr size      --fit run.fit --params run.phot.truth --cert 530
//! ```
//!
//! Exit codes: 0 success, 1 I/O or unexpected failure, 2 malformed input
//! data (including command-line usage errors), 3 invalid parameters or
//! configuration, 4 analysis that completed without a usable answer.

mod cmd;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "taucorr", version, about = "Multi-tau photon correlation and particle sizing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic photon timestamp capture with known ground truth
    Simulate(cmd::simulate::Args),
    /// Run the streaming correlator over a timestamp capture
    Correlate(cmd::correlate::Args),
    /// Fit a single-exponential decay to a correlogram
    Fit(cmd::fit::Args),
    /// Recover diffusion coefficient and hydrodynamic diameter from a fit
    Size(cmd::size::Args),
    /// Measure the streaming engine's coarsening bias against a direct correlator
    Compare(cmd::compare::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd::simulate::run(args),
        Command::Correlate(args) => cmd::correlate::run(args),
        Command::Fit(args) => cmd::fit::run(args),
        Command::Size(args) => cmd::size::run(args),
        Command::Compare(args) => cmd::compare::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(cmd::exit_code(&err));
    }
}

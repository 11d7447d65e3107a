//! `cheshire`: photon and neutron pre/post-selection experiments from the
//! command line.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config file, or output path (exit 1).
    Usage(String),
    /// Regime or numerical error from the simulator (exit 2).
    Numerical(cheshire_core::Error),
    /// At least one acceptance criterion failed (exit 3).
    Acceptance,
}

impl From<cheshire_core::Error> for Failure {
    fn from(e: cheshire_core::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Acceptance => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cheshire",
    version,
    about = "Pre/post-selected interferometers with explicit pointers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Photon interferometer: pointer densities, centroids, lobes, weak values.
    PhotonCat(Flags),
    /// Neutron interferometer: detector curves over the phase χ per probe.
    NeutronCat(Flags),
    /// Weak values of path and polarization operators with simulated shifts.
    WeakValues(Flags),
    /// Run the acceptance checks.
    Verify {
        #[arg(long, default_value_t = cheshire_core::verify::DEFAULT_SEED)]
        seed: u64,
        /// Corrupt one post-selected coefficient (negative control).
        #[arg(long, hide = true)]
        tamper: bool,
    },
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::PhotonCat(flags) => commands::photon_cat(&RunConfig::resolve(&flags)?),
        Command::NeutronCat(flags) => commands::neutron_cat(&RunConfig::resolve(&flags)?),
        Command::WeakValues(flags) => commands::weak_values(&RunConfig::resolve(&flags)?),
        Command::Verify { seed, tamper } => {
            let (report, ok) = commands::verify(seed, tamper);
            print!("{report}");
            if ok {
                Ok(String::new())
            } else {
                Err(Failure::Acceptance)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numerical(e) => eprintln!("error: {e}"),
                Failure::Acceptance => eprintln!("acceptance failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

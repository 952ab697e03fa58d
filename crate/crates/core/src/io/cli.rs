use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::io::network_file::{parse_network, NetworkFormat};
use crate::io::report;
use crate::io::run::{certify, fit_rates, prepare, run_observer, run_simulate, Prepared};
use crate::io::scenario::read_scenario;
use crate::kernel::Exec;
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "gasnet",
    version,
    about = "Gas network simulation with a nodal observer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the original system only.
    Simulate(Common),
    /// Run original and observer, write Lyapunov series, residuals, rates and snapshots.
    Observe(Common),
    /// Run the pair and write the theoretical constants to certificate.txt.
    Certify(Common),
    /// Run the pair and write only the snapshots.
    Snapshot(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Native,
    Gaslib,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Network file format; by default `.xml` means GasLib.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<Prepared> {
        let text = std::fs::read_to_string(&self.network).map_err(|source| Error::Io {
            path: self.network.clone(),
            source,
        })?;
        let format = match self.format {
            Some(FormatArg::Native) => NetworkFormat::Native,
            Some(FormatArg::Gaslib) => NetworkFormat::GaslibSubset,
            None => NetworkFormat::from_path(&self.network),
        };
        let graph = parse_network(&text, format)?;
        prepare(&graph, &read_scenario(&self.scenario)?)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

fn dispatch(command: &Command) -> Result<PathBuf> {
    match command {
        Command::Simulate(args) => {
            let prep = args.load()?;
            let run = run_simulate(&prep, args.exec())?;
            report::write_simulate(&args.out, &prep.graph, &run, prep.reference_level)?;
            Ok(args.out.clone())
        }
        Command::Observe(args) => {
            let prep = args.load()?;
            let run = run_observer(&prep, args.exec())?;
            report::write_observe(&args.out, &prep.graph, &run, &fit_rates(&prep, &run))?;
            Ok(args.out.clone())
        }
        Command::Certify(args) => {
            let prep = args.load()?;
            let run = run_observer(&prep, args.exec())?;
            report::write_certificate(&args.out, &certify(&prep, &run)?)?;
            Ok(args.out.clone())
        }
        Command::Snapshot(args) => {
            let prep = args.load()?;
            let run = run_observer(&prep, args.exec())?;
            std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
                path: args.out.clone(),
                source,
            })?;
            report::write_snapshots(&args.out, &prep.graph, &run.snapshots)?;
            Ok(args.out.clone())
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 on invalid input, 3 on numerical failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => {
            eprintln!("wrote {}", Path::new(&out).display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use hypergrid_lab::commands::{self, ExtractOverrides};
use hypergrid_lab::format::parse_list;
use hypergrid_lab::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "hypergrid",
    version,
    about = "Grid simulations and measure-valued limits of forward-backward diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug)]
struct Opts {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid level (eps = 2^-j), overriding the configuration.
    #[arg(long, global = true)]
    j: Option<u32>,
    /// Extraction window h.
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Extraction cutoff M.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Histogram bins per cell.
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Seed of the verification test family.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma-separated regularization parameters for `compare`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a configuration and write snapshots, extractions and diagnostics.
    Simulate {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Extract local measures and atoms from a snapshot file.
    Extract { snapshot: PathBuf },
    /// Check the measure-valued solution conditions for a run directory.
    Verify { run: PathBuf },
    /// Reproduce the oscillation-plus-spike worked example.
    Example,
    /// Compare the grid run with pseudoparabolic runs over --eta.
    Compare {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
}

fn config_path(positional: Option<PathBuf>, flag: &Option<PathBuf>) -> Result<PathBuf> {
    positional
        .or_else(|| flag.clone())
        .ok_or_else(|| CliError::Usage("a config path is required".into()))
}

fn run(cli: Cli) -> Result<String> {
    let o = &cli.opts;
    let overrides = ExtractOverrides {
        window: o.window,
        cutoff: o.cutoff,
        bins: o.bins,
    };
    let out = o.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Simulate { path } => {
            commands::simulate(&config_path(path, &o.config)?, &out, o.j, overrides)
        }
        Command::Extract { snapshot } => {
            commands::extract_snapshot(&snapshot, o.out.as_deref(), overrides)
        }
        Command::Verify { run } => commands::verify_run(&run, o.out.as_deref(), o.seed),
        Command::Example => commands::example(&out),
        Command::Compare { path } => {
            let etas = match o.eta.as_deref().map(str::trim) {
                None | Some("") => Vec::new(),
                Some(list) => parse_list(list).map_err(CliError::Usage)?,
            };
            commands::compare(&config_path(path, &o.config)?, &etas, &out, o.j, overrides)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `ypcap`: material-point and spherical-shock runs of the Yp-Cap
//! ground-shock model, driven by an INI config.
//!
//! Exit codes: 0 success, 1 bad inputs (config or flags), 2 numerical
//! failure during the run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ypcap_cli::{execute, Command, Overrides};

#[derive(Parser)]
#[command(name = "ypcap", version, about = "Yp-Cap ground-shock model toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the composite strength/cap yield envelope
    Surface(Common),
    /// Run a hydrostatic crush curve
    Crush(Common),
    /// Run a strain-controlled triaxial path
    Triax(Common),
    /// Run the cavity-loaded 1D spherical shock solver
    Shock(Common),
    /// Tabulate the loaded equation of state
    Eos(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration file (INI sections; SI units)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides [output] dir)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Shock mesh cell count (overrides [solver] cells)
    #[arg(long, value_name = "N")]
    cells: Option<usize>,
    /// Clamp out-of-range EOS table queries to the table hull
    #[arg(long)]
    clamp_eos: bool,
    /// Disable the compaction cap: the strength surface acts alone
    #[arg(long)]
    yp_only: bool,
    /// Replace the damage coupling X from the config (0 to 1)
    #[arg(long, value_name = "VAL")]
    x_override: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if e.kind() == ErrorKind::DisplayHelp || e.kind() == ErrorKind::DisplayVersion =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let (cmd, common) = match cli.cmd {
        Cmd::Surface(c) => (Command::Surface, c),
        Cmd::Crush(c) => (Command::Crush, c),
        Cmd::Triax(c) => (Command::Triax, c),
        Cmd::Shock(c) => (Command::Shock, c),
        Cmd::Eos(c) => (Command::Eos, c),
    };
    let overrides = Overrides {
        out: common.out,
        cells: common.cells,
        clamp_eos: common.clamp_eos,
        yp_only: common.yp_only,
        x_override: common.x_override,
    };

    match execute(cmd, &common.config, &overrides) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ypcap {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `csi-shield`: command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 validation error, 4 runtime error.

mod commands;
mod values;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csi_shield::Error;

#[derive(Debug, Parser)]
#[command(
    name = "csi-shield",
    version,
    about = "Simulate Wi-Fi motion sensing and IRS channel obfuscation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scenario file (TOML); the built-in office scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "CSI_SHIELD_OUT", default_value = "csi-shield-out")]
    out: PathBuf,

    /// Worker threads for sweep and coverage cells; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MotionKind {
    None,
    Walk,
    Reflector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn is_on(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVar {
    Size,
    Distance,
    Orientation,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one recording; writes trace.csv, observation.csv, manifest.json.
    Simulate {
        #[arg(long, value_enum, default_value = "none")]
        motion: MotionKind,
        #[arg(long, value_enum, default_value = "off")]
        defense: OnOff,
        /// Session length in seconds (default: experiment.session_s).
        #[arg(long)]
        duration: Option<f64>,
        /// Reflector position `X,Y` for `--motion reflector`.
        #[arg(long, value_parser = values::parse_point)]
        at: Option<csi_shield::geometry::Point>,
    },
    /// Score a motion observation against a reference; writes report.json.
    Attack {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        motion: PathBuf,
        /// Conservativeness factor of the median/MAD threshold.
        #[arg(long = "C", conflicts_with = "max_ref")]
        c: Option<f64>,
        /// Use the maximum of the reference as threshold.
        #[arg(long)]
        max_ref: bool,
    },
    /// Rotating-reflector detection rates over a grid; writes coverage.csv.
    Coverage {
        /// Grid size `NXxNY`.
        #[arg(long, default_value = "5x4", value_parser = values::parse_grid)]
        grid: (usize, usize),
        #[arg(long, value_enum, default_value = "on")]
        defense: OnOff,
        #[arg(long = "C")]
        c: Option<f64>,
    },
    /// Observation statistics while varying the surface; writes sweep.csv.
    Sweep {
        #[arg(long, value_enum)]
        var: SweepVar,
        /// `START:STOP:STEP` (inclusive) or a comma-separated list.
        #[arg(long)]
        values: String,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Generator parameter grid; writes paramstudy.csv.
    Paramstudy {
        #[arg(long = "R", value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long = "P", value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Compute the observation of a recorded trace; writes observation.csv.
    Ingest {
        #[arg(long)]
        trace: PathBuf,
        /// Window length in seconds (default: experiment.window_s).
        #[arg(long)]
        window: Option<f64>,
        /// Number of subcarriers to keep (default: experiment.n_select).
        #[arg(long)]
        select: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidScenario(_)
        | Error::Contract(_)
        | Error::Parse { .. }
        | Error::Validation { .. }
        | Error::Ingest(_)
        | Error::Schema(_)
        | Error::UndefinedCoherence => 3,
        Error::File { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

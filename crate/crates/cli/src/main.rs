//! `puw`: synthesize, unwrap and evaluate wrapped-phase rasters.
//!
//! Exit status: 0 success, 2 I/O or format error, 3 the unwrapped shifts
//! still carry curl violations (shifts and report are written so `hybrid`
//! can take over), 4 invalid parameters.

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use puw::solver::AnnealSchedule;
use puw::ModelParams;

use exit::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "puw",
    version,
    about = "Phase unwrapping by annealed mean-field inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic surface, wrap it, and write the ground truth.
    Synth {
        /// Terrain config (`key = value` lines); the default terrain if omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_surface: PathBuf,
        #[arg(long)]
        out_wrapped: PathBuf,
        #[arg(long)]
        out_shifts: PathBuf,
    },
    /// Anneal the mean-field beliefs and integrate the most probable shifts.
    Unwrap(UnwrapArgs),
    /// Least-squares unwrapping of the wrapped differences.
    Lsq {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_surface: PathBuf,
    },
    /// Least-squares fit to the gradient implied by a (possibly curled) shift file.
    Hybrid {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        shifts: PathBuf,
        #[arg(long)]
        out_surface: PathBuf,
    },
    /// Compare an estimated surface with the truth; prints `key=value` lines.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Render a beliefs file as a per-pixel entropy heatmap (black = uncertain).
    Entropy {
        #[arg(long)]
        beliefs_report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact posterior of a tiny image by enumeration.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = ModelParams::DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        temp: f64,
    },
    /// Edgewise nearest-integer shifts, for debugging.
    Greedy {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_shifts: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct UnwrapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Likelihood standard deviation, in wavelengths.
    #[arg(long, default_value_t = ModelParams::DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_T_START)]
    t_start: f64,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_T_END)]
    t_end: f64,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_STEPS)]
    t_steps: usize,
    /// Maximum sweeps per temperature.
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_SWEEPS)]
    sweeps: usize,
    /// Relative free-energy change that ends a temperature early.
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Visit edges in a freshly shuffled order every sweep.
    #[arg(long)]
    random_order: bool,
    #[arg(long, default_value_t = 0, requires = "random_order")]
    seed: u64,
    #[arg(long)]
    out_surface: PathBuf,
    #[arg(long)]
    out_shifts: Option<PathBuf>,
    /// Per-pixel entropy heatmap (PGM).
    #[arg(long)]
    out_entropy: Option<PathBuf>,
    /// Final beliefs, readable by `entropy --beliefs-report`.
    #[arg(long)]
    out_beliefs: Option<PathBuf>,
    /// Per-temperature CSV trace.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::INVALID_PARAMETERS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("puw: {message}");
            ExitCode::from(code)
        }
    }
}

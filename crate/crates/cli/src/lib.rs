//! `progq` command-line driver.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use progq::cartan::Sign;
use progq::linalg::set_tolerances;

pub mod commands;
pub mod config;
mod error;

pub use commands::Outcome;
pub use config::{Format, RunConfig, OUT_DIR_ENV};
pub use error::CliError;

use commands::{CoveringArgs, FidelityMode, NoGoArgs, VerifyArgs};
use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "progq", version, about = "Programmable qubit gates and detectors")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (default: $PROGQ_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the optimal qubit gate reaches worst-case fidelity 1/4.
    VerifyOptimal {
        #[arg(long, default_value = "plus")]
        sign: Sign,
        /// Canonical angles to check instead, e.g. 0.795,0,0.785.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Points per axis of the start grid.
        #[arg(long, default_value_t = 24)]
        grid: usize,
    },
    /// Closed-form worst-case fidelity over a grid of canonical angles (CSV).
    ScanCartan {
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of the covariant detector for 2j = 1..=2 j_max.
    CovariantSweep {
        /// Largest spin, e.g. 25/2 or 12.5.
        #[arg(long, default_value = "25/2")]
        j_max: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Net size against accuracy for controlled-unitary detectors.
    Covering {
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.4,0.2,0.1")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 200_000)]
        pool: usize,
        #[arg(long, default_value_t = 100_000)]
        max_centers: usize,
        #[arg(long, default_value_t = 1000)]
        targets: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two POVM files and its norm bounds.
    PovmDistance { p: PathBuf, q: PathBuf },
    /// Fidelity of a programmed channel with a target unitary.
    ChannelFidelity {
        /// Target unitary (JSON matrix).
        #[arg(long)]
        target: Option<PathBuf>,
        /// Joint gate on system ⊗ ancilla (JSON matrix).
        #[arg(long)]
        gate: PathBuf,
        #[arg(long, value_enum, default_value = "best")]
        mode: FidelityMode,
        /// Program state (JSON matrix), for mode program.
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// Controlled-unitary gates cannot program every qubit unitary.
    NoGoCheck {
        #[arg(long)]
        v1: Option<PathBuf>,
        #[arg(long)]
        v2: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Resolve the configuration and run the command on a pool of `workers` threads.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(
        cli.config.as_deref(),
        env_out_dir(),
        Overrides {
            seed: cli.seed,
            output_path: cli.out_dir.clone(),
            format: cli.format,
            workers: cli.workers,
        },
    )?;
    set_tolerances(cfg.tolerances);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::VerifyOptimal {
            sign,
            alpha,
            samples,
            grid,
        } => {
            let alpha = match alpha.as_deref() {
                None => None,
                Some(&[a, b, c]) => Some([a, b, c]),
                Some(_) => return Err(CliError::Input("--alpha takes exactly three angles".into())),
            };
            let mut args = VerifyArgs {
                sign: *sign,
                alpha,
                samples: *samples,
                ..Default::default()
            };
            if *grid < 2 {
                return Err(CliError::Input("--grid must be at least 2".into()));
            }
            args.search.grid_resolution = *grid;
            commands::verify_optimal(&args, cfg)
        }
        Command::ScanCartan { grid, out } => commands::scan_cartan_cmd(*grid, out.as_deref(), cfg),
        Command::CovariantSweep { j_max, samples, out } => {
            let tj = commands::parse_spin(j_max)?;
            commands::covariant_sweep_cmd(tj, *samples, out.as_deref(), cfg)
        }
        Command::Covering {
            radii,
            pool,
            max_centers,
            targets,
            out,
        } => {
            let args = CoveringArgs {
                radii: radii.clone(),
                pool_size: *pool,
                max_centers: *max_centers,
                targets: *targets,
            };
            commands::covering_cmd(&args, out.as_deref(), cfg)
        }
        Command::PovmDistance { p, q } => commands::povm_distance_cmd(p, q),
        Command::ChannelFidelity {
            target,
            gate,
            mode,
            program,
        } => commands::channel_fidelity_cmd(target.as_deref(), gate, *mode, program.as_deref(), cfg),
        Command::NoGoCheck { v1, v2, pairs } => {
            let args = NoGoArgs {
                v1: v1.clone(),
                v2: v2.clone(),
                pairs: *pairs,
            };
            commands::no_go_cmd(&args, cfg)
        }
    }
}

/// Parse, run and print; returns the process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.report).expect("report serializes")
            );
            if outcome.passed {
                0
            } else {
                eprintln!("check failed: {}", outcome.failures.join(", "));
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

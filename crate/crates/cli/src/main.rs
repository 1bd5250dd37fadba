//! `hse`: simulate kicked-qubit drives and measure how fast their temporal
//! ensembles approach Haar-random moments.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{check_key, parse_config_file, Settings};
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "hse", version, about = "Hilbert-space ergodicity of kicked-qubit drives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write Δ⁽ᵏ⁾(T) for one drive and initial state as `T,k,delta` CSV.
    Simulate(RunArgs),
    /// Run a grid of drive angles (in parallel) and write one block per point and trial.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Semicolon-separated angle pairs, e.g. `0.43pi:0.37pi;0.36pi:0.18pi`.
        #[arg(long)]
        grid: Option<String>,
        /// Trials per grid point (only differ for `--init haar-random`).
        #[arg(long)]
        trials: Option<String>,
    },
    /// Residual distance of the time-averaged channel from full depolarization.
    TwirlCheck {
        #[command(flatten)]
        drive: DriveArgs,
        /// Comma-separated averaging times.
        #[arg(long)]
        times: Option<String>,
        /// Number of Haar-random inputs.
        #[arg(long)]
        trials: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Simulate tomography records for a trajectory, reconstruct it and compute Δ⁽ᵏ⁾.
    TomoDemo {
        #[command(flatten)]
        run: RunArgs,
        /// Shots per tomography sequence (0 = noiseless expectations).
        #[arg(long)]
        shots: Option<String>,
        /// PL rate of |0⟩.
        #[arg(long)]
        l0: Option<String>,
        /// PL rate of |1⟩.
        #[arg(long)]
        l1: Option<String>,
        /// Polarization efficiency.
        #[arg(long)]
        pe: Option<String>,
        /// Re-ingest an existing record file instead of simulating one.
        #[arg(long)]
        records: Option<String>,
    },
    /// Render a `T,k,delta` CSV as a log-log SVG.
    Plot {
        /// CSV written by `simulate`, `sweep` or `tomo-demo`.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the command recorded in the header of an output file.
    Replay {
        /// Any CSV written by `simulate`, `sweep`, `twirl-check` or `tomo-demo`.
        file: PathBuf,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        jobs: Option<String>,
    },
}

#[derive(Args, Debug)]
struct DriveArgs {
    /// floquet, smoothqp, fibonacci or custom.
    #[arg(long)]
    drive: Option<String>,
    /// Kick angle about x (radians, or e.g. `0.38pi`).
    #[arg(long, allow_hyphen_values = true)]
    theta_x: Option<String>,
    /// Kick angle about y (Floquet drive).
    #[arg(long, allow_hyphen_values = true)]
    theta_y: Option<String>,
    /// Kick angle about z (Fibonacci and custom drives).
    #[arg(long, allow_hyphen_values = true)]
    theta_z: Option<String>,
    /// Second frequency of the custom drive, in (0, 2pi).
    #[arg(long)]
    omega2: Option<String>,
}

#[derive(Args, Debug)]
struct IoArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (standard output if omitted; a file stem for tomo-demo).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    drive: DriveArgs,
    /// `(theta,phi)`, `floquet-eigenstate` or `haar-random`.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    /// Number of steps T_max.
    #[arg(long)]
    steps: Option<String>,
    /// Highest moment order (1..=8).
    #[arg(long)]
    kmax: Option<String>,
    /// `geom[:N]`, `all`, or a comma-separated list of times.
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[command(flatten)]
    io: IoArgs,
}

fn put(s: &mut Settings, key: &str, value: Option<String>) {
    if let Some(v) = value {
        s.insert(key.to_string(), v);
    }
}

impl DriveArgs {
    fn into_settings(self, s: &mut Settings) {
        put(s, "drive", self.drive);
        put(s, "theta-x", self.theta_x);
        put(s, "theta-y", self.theta_y);
        put(s, "theta-z", self.theta_z);
        put(s, "omega2", self.omega2);
    }
}

impl IoArgs {
    /// Config-file entries first, then flags on top.
    fn base_settings(&self, command: &str) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_config_file(&text, path, &commands::allowed_keys(command))?
            }
            None => Settings::new(),
        };
        put(&mut s, "out", self.out.clone());
        put(&mut s, "jobs", self.jobs.clone());
        Ok(s)
    }
}

impl RunArgs {
    fn settings(self, command: &str) -> CliResult<Settings> {
        let mut s = self.io.base_settings(command)?;
        self.drive.into_settings(&mut s);
        put(&mut s, "init", self.init);
        put(&mut s, "steps", self.steps);
        put(&mut s, "kmax", self.kmax);
        put(&mut s, "samples", self.samples);
        put(&mut s, "seed", self.seed);
        Ok(s)
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(run) => commands::simulate(&run.settings(commands::SIMULATE)?),
        Command::Sweep { run, grid, trials } => {
            let mut s = run.settings(commands::SWEEP)?;
            put(&mut s, "grid", grid);
            put(&mut s, "trials", trials);
            commands::sweep(&s)
        }
        Command::TwirlCheck { drive, times, trials, seed, io } => {
            let mut s = io.base_settings(commands::TWIRL_CHECK)?;
            drive.into_settings(&mut s);
            put(&mut s, "times", times);
            put(&mut s, "trials", trials);
            put(&mut s, "seed", seed);
            commands::twirl_check(&s)
        }
        Command::TomoDemo { run, shots, l0, l1, pe, records } => {
            let mut s = run.settings(commands::TOMO_DEMO)?;
            put(&mut s, "shots", shots);
            put(&mut s, "l0", l0);
            put(&mut s, "l1", l1);
            put(&mut s, "pe", pe);
            put(&mut s, "records", records);
            commands::tomo_demo(&s)
        }
        Command::Plot { input, out } => commands::plot(&input, &out),
        Command::Replay { file, out, jobs } => {
            let mut overrides = Settings::new();
            put(&mut overrides, "out", out);
            put(&mut overrides, "jobs", jobs);
            for key in overrides.keys() {
                check_key(key, &["out", "jobs"])?;
            }
            commands::replay(&file, &overrides)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

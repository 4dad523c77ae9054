use std::io::IsTerminal;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use ptqm_cli::config::{load_config, resolve, Overrides, ResolvedJob};
use ptqm_cli::error::Result;
use ptqm_cli::json::{complex, render};
use ptqm_cli::runners::{
    run_audit, run_frame_load, run_frame_save, run_phase_scan, run_spectrum, Sweep,
    SweepParameter,
};
use ptqm_core::linop::Tolerances;
use ptqm_core::models::parse::parse_potential;

#[derive(Parser)]
#[command(
    name = "ptqm",
    version,
    about = "Spectra, metrics, and observable audits for PT-symmetric Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Random seed override for generated operators
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory prepended to relative output paths from the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override for the number of low modes kept
    #[arg(long, global = true)]
    modes: Option<usize>,

    /// Override for the eigenvalue reality tolerance
    #[arg(long = "tol-real", global = true)]
    tol_real: Option<f64>,

    /// Override for the discretization tolerance
    #[arg(long = "tol-disc", global = true)]
    tol_disc: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose one Hamiltonian and classify its phase
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Construct the frame and audit the configured operators against it
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep one model parameter and label the phase at each point
    PhaseScan {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to sweep: epsilon or theta
        #[arg(long)]
        parameter: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of sweep points, endpoints included (at least 2)
        #[arg(long)]
        steps: usize,
    },
    /// Persist, reload, and verify frames
    #[command(subcommand)]
    Frame(FrameCommand),
    /// Parse a potential expression and print its canonical form
    ParseCheck {
        #[arg(long)]
        expr: String,
    },
}

#[derive(Subcommand)]
enum FrameCommand {
    /// Construct a frame from a config and write it to disk
    Save {
        #[arg(long)]
        config: PathBuf,
        /// Destination; defaults to outputs.frame_path from the config
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Load a frame, re-verify every invariant, and print its summary
    Load {
        #[arg(long)]
        path: PathBuf,
    },
    /// Load and re-verify a frame; the exit code is the answer
    Check {
        #[arg(long)]
        path: PathBuf,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            modes: self.modes,
            tol_real: self.tol_real,
            tol_disc: self.tol_disc,
        }
    }

    fn job(&self, config: &PathBuf) -> Result<ResolvedJob> {
        resolve(load_config(config)?, &self.overrides())
    }

    /// Tolerances for commands that run without a job config.
    fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_real {
            tol.tau_real = v;
        }
        if let Some(v) = self.tol_disc {
            tol.tau_disc = v;
        }
        tol.validate().map_err(ptqm_cli::error::CliError::from)?;
        Ok(tol)
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Spectrum { config } => run_spectrum(&cli.job(config)?, &cli.out),
        Command::Audit { config } => run_audit(&cli.job(config)?, &cli.out),
        Command::PhaseScan { config, parameter, from, to, steps } => {
            let sweep = Sweep {
                parameter: SweepParameter::parse(parameter)?,
                from: *from,
                to: *to,
                steps: *steps,
            };
            run_phase_scan(&cli.job(config)?, &sweep, &cli.out)
        }
        Command::Frame(FrameCommand::Save { config, path }) => {
            run_frame_save(&cli.job(config)?, path, &cli.out)
        }
        Command::Frame(FrameCommand::Load { path }) => {
            run_frame_load(path, &cli.tolerances()?, false).map(|_| ())
        }
        Command::Frame(FrameCommand::Check { path }) => {
            run_frame_load(path, &cli.tolerances()?, true).map(|_| ())
        }
        Command::ParseCheck { expr } => {
            let poly = parse_potential(expr)?;
            let coefficients: Vec<_> =
                poly.coefficients().iter().map(|c| complex(*c)).collect();
            let doc = json!({
                "ok": true,
                "degree": poly.degree(),
                "coefficients": coefficients,
            });
            print!("{}", render(&doc));
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        let color = std::env::var_os("PTQM_NO_COLOR").is_none()
            && std::io::stderr().is_terminal();
        if color {
            eprintln!("\x1b[31merror:\x1b[0m {e}");
        } else {
            eprintln!("error: {e}");
        }
        std::process::exit(e.exit_code());
    }
}

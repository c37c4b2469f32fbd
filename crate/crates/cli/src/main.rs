//! `hivoc`: equilibria, stability, simulation, optimal control and
//! sensitivities of the delayed HIV-1 model, as JSON and CSV artifacts.

mod commands;
mod config;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "hivoc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Delay preset: 1 (none), 2 (tau = 0.5), 3 (tau = 0.5, xi = 0.2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub case: Option<u8>,
    /// Weight of the drug cost.
    #[arg(long)]
    pub w: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Iop,
    Grid,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduction numbers and equilibria.
    Equilibria(Common),
    /// Local stability verdicts with their evidence.
    Stability(Common),
    /// Integrate the model and write `t,Z,I,V,T`.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// End time; defaults to `t_f`.
        #[arg(long)]
        horizon: Option<f64>,
        /// `off`, `const:<c>`, `bang:<t_s>` or `file:<csv with t and c columns>`.
        #[arg(long, default_value = "off")]
        control: String,
        /// Also run with tau = 0 and tau = 0.5 and write both trajectories.
        #[arg(long)]
        paired: bool,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Solve the optimal-control problem and verify the minimum principle.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Iop)]
        method: Method,
        /// Grid intervals on [0, t_f].
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Derivatives of the optimum with respect to model parameters.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "w,r,v")]
        vary: Vec<String>,
        #[arg(long)]
        grid_n: Option<usize>,
        /// Hold this control fixed instead of re-optimizing (same syntax as `simulate`).
        #[arg(long)]
        control: Option<String>,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const INTEGRATION: u8 = 3;
    pub const SOLVER: u8 = 4;

    pub fn config(message: impl Display) -> Self {
        Self {
            code: Self::CONFIG,
            message: message.to_string(),
        }
    }

    pub fn io(message: impl Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Equilibria(common) => commands::equilibria(&common),
        Command::Stability(common) => commands::stability(&common),
        Command::Simulate {
            common,
            horizon,
            control,
            paired,
            step,
        } => commands::simulate(&common, horizon, &control, paired, step),
        Command::Optimize {
            common,
            method,
            grid_n,
        } => commands::optimize(&common, method, grid_n),
        Command::Sensitivity {
            common,
            vary,
            grid_n,
            control,
        } => commands::sensitivity(&common, &vary, grid_n, control.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

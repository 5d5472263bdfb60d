//! `primpose`: reproducible workflows over the pose pipeline.
//!
//! Subcommands: `gen`, `render`, `estimate`, `eval`, `check-grads`, `bench`.
//! Every run is deterministic given its flags (seeds included), logs its
//! fully resolved configuration to stderr, and uses stable exit codes:
//! 0 success, 1 verification failure, 2 usage or config error, 3 I/O error.

mod commands;
mod config;
mod estimates;

use clap::Parser;

/// Command failure carrying the exit code contract.
#[derive(Debug)]
pub enum CliError {
    /// A checked property did not hold (bad gradient, failed solve, budget).
    Verification(String),
    /// Bad flags, bad config file, or invalid parameter values.
    Config(String),
    /// Filesystem or artifact-format failure.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Verification(m) | CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

impl From<primpose_core::Error> for CliError {
    fn from(e: primpose_core::Error) -> Self {
        use primpose_core::Error;
        match e {
            Error::Sample { id, source } => {
                let inner = CliError::from(*source);
                let msg = format!("sample {id}: {}", inner.message());
                match inner {
                    CliError::Verification(_) => CliError::Verification(msg),
                    CliError::Config(_) => CliError::Config(msg),
                    CliError::Io(_) => CliError::Io(msg),
                }
            }
            Error::Io { .. } | Error::Parse { .. } => CliError::Io(e.to_string()),
            Error::Config(_) | Error::InvalidParam(_) | Error::InvalidInput(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Verification(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "primpose", version, about = "Rotational-primitive 6D pose pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Generate a synthetic dataset with domain randomization
    Gen(commands::gen::GenArgs),
    /// Render a mesh or the primitive at a given pose to PNG
    Render(commands::render::RenderArgs),
    /// Estimate poses for a dataset with a controllable noise oracle
    Estimate(commands::estimate::EstimateArgs),
    /// Evaluate estimated poses against dataset ground truth
    Eval(commands::eval::EvalArgs),
    /// Verify analytic loss gradients against finite differences
    #[command(name = "check-grads")]
    CheckGrads(commands::checkgrads::CheckGradsArgs),
    /// Time the solver and renderer hot paths
    Bench(commands::bench::BenchArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen::run(args),
        Command::Render(args) => commands::render::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::CheckGrads(args) => commands::checkgrads::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use berknash_core::Error;

#[derive(Parser)]
#[command(name = "berknash", version, about = "Nash and Berk-Nash equilibria of linear-quadratic network games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario and write it as a config file.
    Generate(GenerateArgs),
    /// Solve for a Nash or Berk-Nash equilibrium.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Value of misspecification and the action-deviation bound along a
    /// path of scaled attention errors.
    Vom {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated scales in [0, 1].
        #[arg(long, default_value = "1.0")]
        scales: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the designer's distortion problem and verify its KKT conditions.
    Arbitrage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run learning simulations over a batch of seeds.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "learning")]
        mode: Mode,
        /// Number of seeds; defaults to the config's `simulation.seeds`.
        #[arg(long)]
        seeds: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, default_value_t = 0.3)]
    pub coverage: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = commands::GENERATED_BUDGET)]
    pub budget: f64,
    #[arg(long, default_value_t = commands::GENERATED_B_HAT)]
    pub b_hat: f64,
    #[arg(long, default_value_t = commands::GENERATED_K1)]
    pub k1: f64,
    /// Seeds per simulation batch recorded in the config.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    Ne,
    BneConst,
    BneGmf,
    BneLmf,
    /// Berk-Nash equilibrium for the config's own conjecture assignment.
    Bne,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Learning,
    TwoTimescale,
}

/// Exit status for a failed command: 2 for bad input, 3 for solver
/// failures, 4 for I/O.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) => 4,
        e if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Solve { config, kind, out } => commands::solve(&config, kind, out.as_deref()),
        Command::Vom { config, scales, out } => commands::vom(&config, &scales, out.as_deref()),
        Command::Arbitrage { config, out } => commands::arbitrage(&config, out.as_deref()),
        Command::Simulate { config, mode, seeds, out } => commands::simulate(&config, mode, seeds, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! gadd: generalized ANOVA dimensional decomposition for correlated
//! Gaussian inputs.
//!
//! `decompose` builds the truncated decomposition of a configured response
//! and writes the expansion plus its component functions.  `sensitivity`
//! derives global sensitivity indices, total effects, and effective
//! dimensions.  `sample` draws joint input samples and evaluates the
//! surrogate.  `model-serve` exposes a builtin model over the external-model
//! line protocol.

mod config;
mod error;
mod external;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use run::RunArgs;

#[derive(Parser)]
#[command(
    name = "gadd",
    version,
    about = "Generalized ANOVA dimensional decomposition for correlated Gaussian inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the run configuration (TOML, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Use the classical product-measure decomposition built from the
    /// covariance diagonal instead of the generalized one.
    #[arg(long)]
    classical: bool,
    /// Output directory (beats GADD_OUT_DIR and the config value).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse a saved expansion.json instead of recomputing.
    #[arg(long)]
    expansion: Option<PathBuf>,
    /// Also write basis.json with every basis polynomial spelled out.
    #[arg(long)]
    dump_basis: bool,
}

impl CommonArgs {
    fn into_run_args(self) -> RunArgs {
        RunArgs {
            config: self.config,
            classical: self.classical,
            out: self.out,
            seed: self.seed,
            expansion: self.expansion,
            dump_basis: self.dump_basis,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the expansion coefficients and write the component
    /// functions.
    Decompose(CommonArgs),
    /// Compute sensitivity indices, total effects, and effective
    /// dimensions.
    Sensitivity(CommonArgs),
    /// Draw joint samples and evaluate the surrogate.
    Sample(CommonArgs),
    /// Serve a builtin model over the line protocol (one line of inputs in,
    /// one value out).
    ModelServe {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(args) => run::cmd_decompose(&args.into_run_args()),
        Command::Sensitivity(args) => run::cmd_sensitivity(&args.into_run_args()),
        Command::Sample(args) => run::cmd_sample(&args.into_run_args()),
        Command::ModelServe { config } => run::cmd_model_serve(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gadd: {}", e);
            ExitCode::from(e.code as u8)
        }
    }
}

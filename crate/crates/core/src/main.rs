use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tensor_heston::harness::cli::{self, Invocation};

#[derive(Parser)]
#[command(name = "tensor-heston", version, about = "Tensor Heston simulation and analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Y (and X) paths to paths.csv
    Simulate(Common),
    /// Characteristic functionals and covariance operators
    Analytics(Common),
    /// Forward-curve covariances on the Filipovic space
    Forward(Common),
    /// Projected variance and the CIR case
    Project(Common),
    /// Run the validation suite
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed_override: Option<u64>,
    /// Write wall_ms as 0 so reruns are byte-identical
    #[arg(long)]
    no_timing: bool,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Command::Simulate(a) => (cli::Subcommand::Simulate, a),
        Command::Analytics(a) => (cli::Subcommand::Analytics, a),
        Command::Forward(a) => (cli::Subcommand::Forward, a),
        Command::Project(a) => (cli::Subcommand::Project, a),
        Command::Validate(a) => (cli::Subcommand::Validate, a),
    };
    std::process::exit(cli::execute(&Invocation {
        command,
        config: args.config,
        out: args.out,
        threads: args.threads,
        seed_override: args.seed_override,
        timing: !args.no_timing,
    }));
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use specfun::cli::{run, CliCommand};

#[derive(Parser)]
#[command(
    name = "specfun",
    version,
    about = "m-functions, spectral distribution functions and eigenfunction transforms of symmetric differential systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the generated files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration: coefficient symmetry, weight positivity,
    /// subspace neutrality, definiteness, parameter class.
    Validate(CommonArgs),
    /// Sample the m-function on the configured lambda grid (CSV).
    #[command(name = "sample-m")]
    SampleM(CommonArgs),
    /// Stieltjes inversion: distribution function CSV plus jump list JSON.
    Invert(CommonArgs),
    /// Fourier transform of the configured function with a Parseval report.
    Fourier(CommonArgs),
    /// Cross-check the resolvent kernel against the direct solve.
    #[command(name = "resolvent-check")]
    ResolventCheck(CommonArgs),
    /// Existence and dimension report for spectral functions.
    Report(CommonArgs),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Command::Validate(a) => (CliCommand::Validate, a),
        Command::SampleM(a) => (CliCommand::SampleM, a),
        Command::Invert(a) => (CliCommand::Invert, a),
        Command::Fourier(a) => (CliCommand::Fourier, a),
        Command::ResolventCheck(a) => (CliCommand::ResolventCheck, a),
        Command::Report(a) => (CliCommand::Report, a),
    };
    std::process::exit(run(cmd, &args.config, &args.out));
}

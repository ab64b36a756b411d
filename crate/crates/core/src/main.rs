use clap::{Parser, ValueEnum};
use ris_geom::cli::{parse_config, run, CliError, Overrides, Subcommand};
use ris_geom::montecarlo::Mode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Analytic,
    Simulate,
    Validate,
    Raster,
    Figures,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Geometric,
    Independent,
}

/// Blind spots, association and coverage of RIS-assisted cellular networks.
#[derive(Debug, Parser)]
#[command(name = "ris-geom", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Single seed replacing the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Confidence level of the Monte Carlo intervals.
    #[arg(long)]
    ci: Option<f64>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    config.apply(&Overrides {
        seed: args.seed,
        reps: args.reps,
        mode: args.mode.map(|m| match m {
            ModeArg::Geometric => Mode::Geometric,
            ModeArg::Independent => Mode::Independent,
        }),
        out: args.out.clone(),
        ci_level: args.ci,
    })?;
    let sub = match args.command {
        Command::Analytic => Subcommand::Analytic,
        Command::Simulate => Subcommand::Simulate,
        Command::Validate => Subcommand::Validate,
        Command::Raster => Subcommand::Raster,
        Command::Figures => Subcommand::Figures,
    };
    let outcome = run(sub, &config)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if outcome.failures > 0 {
        eprintln!("{} validation row(s) failed", outcome.failures);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

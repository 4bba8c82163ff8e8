use std::path::PathBuf;
use std::process::ExitCode;

use approxqi::experiments::{run_to_dir, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Quasi-interpolation and cubature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with parameter overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the RNG seed of the node generator.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Mu(0) − u(0) on perturbed 2-D grids for several h and D.
    Table1,
    /// Θ − 1 for several star sizes and polynomial degrees.
    ThetaScan,
    /// Error profiles of the gridded quasi-interpolant.
    QiFigures,
    /// Cubature of a radial kernel against a closed form.
    CubatureDemo,
    /// Checks the node-set conditions of a generated layout.
    CheckConditions,
    /// Builds Θ and writes its coefficients.
    ThetaBuild,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::ThetaScan => "theta-scan",
            Command::QiFigures => "qi-figures",
            Command::CubatureDemo => "cubature-demo",
            Command::CheckConditions => "check-conditions",
            Command::ThetaBuild => "theta-build",
        }
    }
}

fn execute(cli: &Cli) -> approxqi::Result<()> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p)?, Some(name))?,
        None => ExperimentConfig::defaults_for(name)?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let (path, table) = run_to_dir(&cfg, &cli.out)?;
    if !cli.quiet {
        for (k, v) in &table.notes {
            println!("{k} = {v}");
        }
        println!("wrote {} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "error" } else { "warn" }))
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

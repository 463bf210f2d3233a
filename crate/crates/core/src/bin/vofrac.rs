use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vofrac::cli::{exit_code, run, write_artifacts, Command, Format, RunConfig};
use vofrac::Error;

#[derive(Parser)]
#[command(name = "vofrac", version, about = "Variable-order fractional relaxation, renewal and CTRW tables")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Kernel pair and Sonine residuals.
    Kernel,
    /// Relaxation function and its derivative.
    Relax,
    /// Counting probabilities.
    Pmf,
    /// Factorial moments of the count.
    Moments,
    /// Autocovariance of the count.
    Cov,
    /// Monte Carlo count statistics.
    Simulate,
    /// CTRW scaling-limit experiment.
    CtrwLimit,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Kernel => Command::Kernel,
            Cmd::Relax => Command::Relax,
            Cmd::Pmf => Command::Pmf,
            Cmd::Moments => Command::Moments,
            Cmd::Cov => Command::Cov,
            Cmd::Simulate => Command::Simulate,
            Cmd::CtrwLimit => Command::CtrwLimit,
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    if let Ok(v) = std::env::var("VOFRAC_THREADS") {
        let n: usize =
            v.parse().map_err(|_| Error::Config(format!("VOFRAC_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config("VOFRAC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    let artifacts = run(cli.command.into(), &cfg)?;
    write_artifacts(&out, &artifacts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vofrac: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

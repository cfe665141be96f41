use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use tipcurve::cli_io::{self, error_json, exit_code, Mode, RunConfig, RunOptions};
use tipcurve::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulate,
    Classify,
    LambdaStar,
    Curve,
    Tipping,
    Collision,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Classify => Mode::Classify,
            ModeArg::LambdaStar => Mode::LambdaStar,
            ModeArg::Curve => Mode::Curve,
            ModeArg::Tipping => Mode::Tipping,
            ModeArg::Collision => Mode::Collision,
        }
    }
}

/// Rate-induced tipping analysis for x' = -x² + q(t)x + p(t) + λ.
#[derive(Debug, Parser)]
#[command(name = "tipcurve", version)]
struct Cli {
    mode: ModeArg,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out` from the config, else ./tipcurve-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: TIPCURVE_WORKERS, then the config, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Recompute even when a cached result exists, and do not store one.
    #[arg(long)]
    no_cache: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = Error::Config(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return ExitCode::from(exit_code(&err) as u8);
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let status = if report.cache_hit { "cached" } else { "computed" };
            println!(
                "{} {status}: {} files in {}",
                report.mode,
                report.files.len(),
                report.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn execute(cli: &Cli) -> tipcurve::Result<cli_io::RunReport> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let config = RunConfig::from_json(&text)?;
    cli_io::run(
        &config,
        &RunOptions {
            mode: Some(cli.mode.into()),
            out: cli.out.clone(),
            workers: cli.workers,
            no_cache: cli.no_cache,
        },
    )
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use levinson2d::report::{self, Format, Outcome, RunConfig, RunError};
use levinson2d::ExecMode;
use log::{error, info, warn};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "levinson2d",
    version,
    about = "Levinson theorem checks for the 2D Dirac equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format, overriding the config
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Theorem check, one row per j
    Verify,
    /// Phase shifts along a coupling-then-energy path
    Phase,
    /// Bound states and half-bound flags
    Spectrum,
    /// Long-format table over a depth or tail-strength family
    SweepFamily,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn exec_mode(threads: Option<usize>) -> ExecMode {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                warn!("could not size the thread pool: {e}");
            }
        }
        if threads == Some(1) {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        if threads.is_some_and(|n| n != 1) {
            warn!("built without the parallel feature; --threads ignored");
        }
        ExecMode::Sequential
    }
}

fn run(cli: &Cli) -> Result<u8, RunError> {
    let Some(path) = &cli.config else {
        return Err(report::ConfigError {
            field: "--config".into(),
            message: "a config file is required".into(),
        }
        .into());
    };
    let cfg = RunConfig::load(path)?;
    let mode = exec_mode(cli.threads);
    info!("running {:?} in {mode:?} mode", path);
    let outcome: Outcome = match cli.command {
        Command::Verify => report::cmd_verify(&cfg, mode)?,
        Command::Phase => report::cmd_phase(&cfg, mode)?,
        Command::Spectrum => report::cmd_spectrum(&cfg, mode)?,
        Command::SweepFamily => report::cmd_sweep_family(&cfg, mode)?,
    };
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.output.format,
    };
    match cli.out.as_ref().or(cfg.output.path.as_ref()) {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            report::write_output(&outcome, &cfg, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            report::write_output(&outcome, &cfg, format, &mut w)?;
        }
    }
    info!(
        "{} rows, status {:?}",
        outcome.table.rows.len(),
        outcome.status
    );
    Ok(outcome.status.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(RunError::Config(e)) => {
            error!("{e}");
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

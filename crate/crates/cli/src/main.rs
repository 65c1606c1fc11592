mod commands;
mod config;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, RunConfig};
use error::{CliError, ErrorRecord};

/// `RAINBOW_THREADS` caps the worker pool; unset or 0 leaves it automatic.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RAINBOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| error::usage(format!("RAINBOW_THREADS must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| error::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = RunConfig::resolve(cli);
    log::info!("running {}", cfg.command.name());
    let report = commands::run(cli, &mut cfg)?;
    let text = report.render(cfg.format);
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "stdout".into(), source }),
    }
}

fn fail(record: ErrorRecord, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&record).expect("error record serialises"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let msg = text.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            return fail(ErrorRecord { error: msg, module: "cli" }, 2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if matches!(e, CliError::Usage(_)) { 2 } else { 1 };
            fail(e.record(), code)
        }
    }
}

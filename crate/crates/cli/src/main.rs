mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use evident::harness::write_atomic;

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("EVIDENT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("EVIDENT_THREADS must be a nonnegative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Option<bool>> {
    configure_threads()?;
    let outcome = commands::run(&cli.global, &cli.command)?;
    match &cli.global.out {
        Some(dir) => {
            for a in &outcome.artifacts {
                let path = dir.join(&a.name);
                write_atomic(&path, &a.bytes)
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&outcome.artifacts[0].bytes)?;
            stdout.flush()?;
        }
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(pass) => {
            match pass {
                Some(true) => eprintln!("PASS"),
                Some(false) => eprintln!("FAIL"),
                None => {}
            }
            if cli.global.expect_pass && pass == Some(false) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

mod args;
mod commands;
mod error;
mod manifest;

use clap::Parser;

use crate::args::Cli;
use crate::error::{CliError, CliResult};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(manifest) => {
            for path in manifest.outputs.keys() {
                log::info!("{}: wrote {path}", cli.command.label());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<manifest::RunManifest> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| commands::run(&cli.command))
}

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        anyhow::ensure!(threads >= 1, "--threads must be at least 1");
        pool = pool.num_threads(threads);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Learn(a) => commands::learn(&a),
        Command::Select(a) => commands::select(&a),
        Command::Encode(a) => commands::encode(&a),
        Command::Mosaic(a) => commands::mosaic(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Blocks(a) => commands::blocks(&a),
        Command::Stack(a) => commands::stack(&a),
    })
}

use std::process::ExitCode;

use clap::Parser;
use kfp::persist::{cache_dir, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli, &cache_dir()) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: checks failed", cli.command.name());
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use chevron::harness::{exit_code, parse_config, run_experiment, EXIT_CONFIG, EXIT_IO};
use chevron::Error;

/// Run a chevron experiment described by a `key = value` config file.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Path to the run configuration.
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("chevron: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("chevron: {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("chevron: --threads must be >= 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("chevron: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };

    match pool.install(|| run_experiment(&cfg)) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rqed_cli::{run, RunRequest, Scenario, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "rqed", version, about = "Run rqed verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write results.csv and manifest.json.
    Run {
        scenario: Scenario,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Replaces every `seed` in the scenario parameters.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run { scenario, config, out, threads, seed } = cli.command;
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("config error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot start thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let req = RunRequest {
        scenario,
        config_path: &config,
        out: out.as_deref(),
        threads: rayon::current_num_threads(),
        seed,
    };
    ExitCode::from(run(&req))
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rvo_cli::{load_config, run_scenario, CliError, RunConfig, Scenario};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Scan,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Fig2a => Scenario::Fig2a,
            Command::Fig2b => Scenario::Fig2b,
            Command::Fig3 => Scenario::Fig3,
            Command::Fig4 => Scenario::Fig4,
            Command::Scan => Scenario::Scan,
        }
    }
}

/// Rubidium vapor OPO simulator: figure scenarios and parameter scans.
#[derive(Debug, Parser)]
#[command(name = "rvo", version)]
struct Args {
    /// Scenario to run.
    #[arg(value_enum)]
    scenario: Command,
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "RVO_THREADS")]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    config.scenario = Some(args.scenario.into());
    if let Some(dir) = args.out_dir {
        config.output_dir = dir;
    }
    if let Some(n) = args.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let manifest = run_scenario(&config)?;
    println!(
        "{}: wrote {} files to {} in {:.2} s",
        manifest.scenario,
        manifest.outputs.len(),
        config.output_dir.display(),
        manifest.duration_s
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

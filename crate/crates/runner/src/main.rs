use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdclt_runner::{run, ExperimentConfig, ExperimentTag, RunnerResult};

#[derive(Parser)]
#[command(name = "hdclt", version, about = "High-dimensional CLT experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        config: PathBuf,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (falls back to HDCLT_THREADS)
        #[arg(long, env = "HDCLT_THREADS")]
        threads: Option<usize>,
        /// Exit with status 1 when any acceptance criterion fails
        #[arg(long)]
        check: bool,
        /// Override the output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment tags
    List,
    /// Validate a config and print the resolved plan
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> RunnerResult<u8> {
    match command {
        Command::List => {
            for tag in ExperimentTag::ALL {
                println!("{:<22}{}", tag.name(), tag.summary());
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let plan = ExperimentConfig::load(&config)?.validate()?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
            Ok(0)
        }
        Command::Run { config, seed, threads, check, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            if threads == Some(0) {
                return Err(hdclt_runner::RunnerError::Config("--threads must be >= 1".into()));
            }
            let plan = cfg.validate()?;
            let (manifest, output) = run(&plan, threads)?;
            for c in &output.criteria {
                println!(
                    "{} {:<28} value={} threshold={}  {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.value,
                    c.threshold,
                    c.description
                );
            }
            println!("run directory: {}", manifest.run_dir.display());
            Ok(if check && !manifest.all_pass { 1 } else { 0 })
        }
    }
}

//! Config-driven experiment runner behind the `hdclt` CLI.
//!
//! A flat TOML file names an experiment tag and optional overrides. It is
//! validated into a [`config::Plan`] before any sampling, executed on a
//! rayon pool of the requested size, and persisted as fixed-column CSVs,
//! a summary JSON, SVG plots and a manifest appended to
//! `<out>/manifests.jsonl`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{ExperimentConfig, ExperimentTag, Plan};
pub use error::{RunnerError, RunnerResult};
pub use experiments::{execute, Criterion, ExperimentOutput};
pub use output::RunManifest;

/// Executes `plan` and writes its artifacts. `threads = None` uses the
/// global rayon pool; results do not depend on the thread count.
pub fn run(plan: &Plan, threads: Option<usize>) -> RunnerResult<(RunManifest, ExperimentOutput)> {
    let started = chrono::Utc::now().to_rfc3339();
    let go = || -> RunnerResult<(usize, ExperimentOutput)> { Ok((rayon::current_num_threads(), execute(plan)?)) };
    let (used, output) = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| RunnerError::Config(format!("cannot build a {k}-thread pool: {e}")))?
            .install(go)?,
        None => go()?,
    };
    let manifest = output::persist(plan, &output, used, started)?;
    Ok((manifest, output))
}

//! Run directories, CSV/JSON/SVG persistence and the append-only manifest
//! log.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Plan;
use crate::error::{RunnerError, RunnerResult};
use crate::experiments::{Criterion, ExperimentOutput};
use crate::plot::emit_plot;

/// Record of one completed run; also appended to `<out>/manifests.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub run_dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub plot_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub all_pass: bool,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    seed: u64,
    all_pass: bool,
    criteria: &'a [Criterion],
    metadata: &'a serde_json::Value,
    plan: &'a Plan,
}

pub const MANIFEST_LOG: &str = "manifests.jsonl";

/// SHA-256 of the resolved plan's JSON form, hex encoded.
pub fn config_hash(plan: &Plan) -> RunnerResult<String> {
    let bytes = serde_json::to_vec(plan)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// `<out>/<experiment>-<first 12 hex digits of the hash>`.
pub fn run_dir(plan: &Plan, hash: &str) -> PathBuf {
    plan.common.out_dir.join(format!("{}-{}", plan.experiment.name(), &hash[..12]))
}

fn create_dir(path: &Path) -> RunnerResult<()> {
    std::fs::create_dir_all(path).map_err(|e| RunnerError::io(path, e))
}

/// Writes every artifact of `output` into its run directory and appends the
/// manifest line.
pub(crate) fn persist(
    plan: &Plan,
    output: &ExperimentOutput,
    threads: usize,
    started: String,
) -> RunnerResult<RunManifest> {
    let hash = config_hash(plan)?;
    let dir = run_dir(plan, &hash);
    create_dir(&dir)?;
    let mut csv_paths = Vec::new();
    for table in &output.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| RunnerError::io(&path, e))?;
        csv_paths.push(path);
    }
    let mut plot_paths = Vec::new();
    for plot in output.plots.iter().filter(|p| !p.points.is_empty()) {
        let path = dir.join(plot.file);
        emit_plot(&plot.points, plot.kind, &plot.title, plot.x_label, plot.y_label, &path)?;
        plot_paths.push(path);
    }
    let summary_path = dir.join("summary.json");
    let summary = Summary {
        experiment: plan.experiment.name(),
        config_hash: &hash,
        seed: plan.common.seed,
        all_pass: output.all_pass(),
        criteria: &output.criteria,
        metadata: &output.metadata,
        plan,
    };
    write_json(&summary_path, &summary)?;
    let manifest = RunManifest {
        experiment: plan.experiment.name().to_string(),
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: plan.common.seed,
        threads,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        run_dir: dir.clone(),
        csv_paths,
        plot_paths,
        summary_path,
        all_pass: output.all_pass(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let log = plan.common.out_dir.join(MANIFEST_LOG);
    let mut f = OpenOptions::new().create(true).append(true).open(&log).map_err(|e| RunnerError::io(&log, e))?;
    let line = serde_json::to_string(&manifest)?;
    writeln!(f, "{line}").map_err(|e| RunnerError::io(&log, e))?;
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> RunnerResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| RunnerError::io(path, e))
}

use std::path::Path;

use hdclt_runner::output::MANIFEST_LOG;
use hdclt_runner::{run, ExperimentConfig, RunManifest};

fn plan(text: &str, out: &Path) -> hdclt_runner::Plan {
    let mut cfg = ExperimentConfig::from_toml_str(text).unwrap();
    cfg.out_dir = Some(out.to_path_buf());
    cfg.validate().unwrap()
}

const SMOKE: &str = "experiment = \"rate_vs_n\"\nreps = 100\nseed = 11";

#[test]
fn rate_smoke_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, output) = run(&plan(SMOKE, dir.path()), Some(2)).unwrap();
    assert_eq!(manifest.threads, 2);
    let csv = std::fs::read_to_string(&manifest.csv_paths[0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "experiment,n,d,B,family,distance,se,normalized,bound_shape,seed");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let distance: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(distance.is_finite() && (0.0..=1.0).contains(&distance));
    }
    assert_eq!(manifest.plot_paths.len(), 1);
    let svg = std::fs::read_to_string(&manifest.plot_paths[0]).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"slope\""));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest.summary_path).unwrap()).unwrap();
    assert_eq!(summary["criteria"].as_array().unwrap().len(), output.criteria.len());
    assert_eq!(summary["all_pass"], manifest.all_pass);
    assert!(manifest.run_dir.starts_with(dir.path()));
}

#[test]
fn identical_config_and_seed_reproduce_csv_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ma, _) = run(&plan(SMOKE, a.path()), Some(1)).unwrap();
    let (mb, _) = run(&plan(SMOKE, b.path()), Some(3)).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    for (pa, pb) in ma.csv_paths.iter().zip(&mb.csv_paths) {
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }
}

#[test]
fn manifests_append_and_runs_stay_separate() {
    let dir = tempfile::tempdir().unwrap();
    let (first, _) = run(&plan(SMOKE, dir.path()), None).unwrap();
    let before = std::fs::read(&first.csv_paths[0]).unwrap();
    let other = plan("experiment = \"anticoncentration\"\nreps = 2000\nd = 5", dir.path());
    let (second, _) = run(&other, None).unwrap();
    assert_ne!(first.run_dir, second.run_dir);
    assert_eq!(std::fs::read(&first.csv_paths[0]).unwrap(), before);
    run(&plan(SMOKE, dir.path()), None).unwrap();
    let log = std::fs::read_to_string(dir.path().join(MANIFEST_LOG)).unwrap();
    let entries: Vec<RunManifest> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[0].config_hash, entries[2].config_hash);
    assert_eq!(entries[1].experiment, "anticoncentration");
}

#[test]
fn every_experiment_runs_at_smoke_scale() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "experiment = \"zero_skew_rate\"\nreps = 2000\nd = 4\nn_list = [10, 20, 40]",
        "experiment = \"bootstrap_coverage\"\nn = 50\nd = 4\nreps = 200\nouter_reps = 40",
        "experiment = \"bootstrap_agreement\"\nn = 50\nd = 4\nreps = 2000",
        "experiment = \"local_means\"\nd_list = [5]\nn_per_dim = 10\nreps = 2000",
        "experiment = \"smoothing_verify\"\nd_list = [2]\nv_list = [1]\nphi_list = [4.0, inf]\neps_list = [1.0, 0.5]\nhalf_widths = [1.0]",
        "experiment = \"gaussian_comparison\"\nd = 5\nreps = 2000\ngap_list = [0.1]",
        "experiment = \"poisson_check\"\nn = 50\nd = 10\nreps = 5000",
    ] {
        let (m, out) = run(&plan(text, dir.path()), None).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(!out.criteria.is_empty(), "{text}");
        for p in m.csv_paths.iter().chain(&m.plot_paths) {
            assert!(p.exists());
        }
    }
}

use std::process::Command;

fn hdclt() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hdclt"));
    c.env_remove("HDCLT_THREADS");
    c
}

fn write(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn list_prints_every_tag() {
    let out = hdclt().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for tag in hdclt_runner::ExperimentTag::ALL {
        assert!(text.contains(tag.name()));
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "experiment = \"poisson_check\"");
    assert_eq!(hdclt().arg("validate").arg(&good).output().unwrap().status.code(), Some(0));
    let bad = write(dir.path(), "experiment = \"poisson_check\"\nwhatever = 2");
    assert_eq!(hdclt().arg("validate").arg(&bad).output().unwrap().status.code(), Some(2));
    assert_eq!(hdclt().arg("validate").arg(dir.path().join("missing.toml")).output().unwrap().status.code(), Some(2));
}

#[test]
fn check_mode_reflects_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let pass = write(dir.path(), "experiment = \"anticoncentration\"\nd = 5\nreps = 5000");
    let status = hdclt().args(["run", "--check", "--threads", "2", "--out"]).arg(&out).arg(&pass).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    // a single n admits no slope fit, so the slope check fails
    let fail = write(dir.path(), "experiment = \"rate_vs_n\"\nreps = 100\nn_list = [50]");
    let status = hdclt().args(["run", "--check", "--out"]).arg(&out).arg(&fail).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let status = hdclt().args(["run", "--out"]).arg(&out).arg(&fail).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(out.join("manifests.jsonl").exists());
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = write(dir.path(), "experiment = \"anticoncentration\"\nd = 5\nreps = 2000\nseed = 8");
    let status = hdclt().env("HDCLT_THREADS", "3").args(["run", "--out"]).arg(&out).arg(&cfg).output().unwrap().status;
    assert!(status.success());
    let log = std::fs::read_to_string(out.join("manifests.jsonl")).unwrap();
    let m: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(m["threads"], 3);
    let status = hdclt().env("HDCLT_THREADS", "zero").args(["run", "--out"]).arg(&out).arg(&cfg).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = write(dir.path(), "experiment = \"anticoncentration\"\nd = 5\nreps = 2000\nseed = 8");
    assert!(hdclt().args(["run", "--seed", "99", "--out"]).arg(&out).arg(&cfg).output().unwrap().status.success());
    let log = std::fs::read_to_string(out.join("manifests.jsonl")).unwrap();
    let m: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
}

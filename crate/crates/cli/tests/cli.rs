use std::fs;
use std::process::Command;

use rankone_cli::{sha256_hex, RunManifest};

fn rankone() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankone"))
}

#[test]
fn verify_writes_hashed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = rankone()
        .args(["verify", "--seed", "3", "--threads", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stdout));

    let run = dir.path().join("verify");
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.passed);
    assert_eq!(manifest.config.seed, 3);
    let artifacts = &manifest.pipelines[0].artifacts;
    assert!(artifacts.contains_key("convexity.csv"));
    for (file, hash) in artifacts {
        assert_eq!(&sha256_hex(&fs::read(run.join(file)).unwrap()), hash, "{file}");
    }
    assert!(run.join("summary.json").is_file());
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = rankone()
        .args(["verify", "--seed", "1", "--function", "neg_half_norm_sq", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = rankone().args(["theta", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(no_seed.status.code(), Some(2));

    let unknown = rankone()
        .args(["theta", "--seed", "1", "--function", "no_such_thing", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("neg_det_2x2"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# opening at the origin\nseed = 11\nfunction = \"half_norm_sq_2\"\neval_points = 4\n").unwrap();
    let out = rankone()
        .args(["theta", "--seed", "12", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("theta/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.seed, 12);
    assert_eq!(manifest.config.function.as_deref(), Some("half_norm_sq_2"));
}

#[test]
fn list_corpus_filters() {
    let out = rankone().args(["list-corpus", "--flag", "rank_one_affine"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("neg_det_2x2"));
    assert!(!text.contains("half_norm_sq"));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bidguard_cli::io;
use bidguard_core::{BidLevel, BidMatrix, ConferenceInstance};
use ndarray::Array2;

fn bidguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bidguard")).args(args).output().unwrap()
}

/// Reviewer 0 is the worst match for every paper but competes for p0.
fn crafted_dir(root: &Path) -> PathBuf {
    let dir = root.join("instance");
    let text = Array2::from_shape_fn((4, 4), |(p, r)| if r == 0 { 0.3 } else { 0.5 + 0.1 * p as f64 });
    let inst = ConferenceInstance::from_similarity(text, 1, 1);
    io::save_instance(&dir, &inst, None).unwrap();
    io::save_bids(&dir.join(io::BIDS_FILE), &inst, &BidMatrix::uniform(4, 4, BidLevel::InAPinch), None).unwrap();
    dir
}

fn config(root: &Path, defenses: &str) -> PathBuf {
    crafted_dir(root);
    let text = format!(
        r#"seed = 11
trials = 50
experiments = ["solve", "attack", "q_sweep", "scorecard"]
instance = {{ path = "instance" }}

{defenses}

[[attacks]]
name = "naive"
attackers = [0]
targets = [0]
strategy = {{ kind = "naive" }}

[q_sweep]
qs = [0.25, 0.5, 1.0]
"#
    );
    let path = root.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

const TWO_DEFENSES: &str = "[[defenses]]\nkind = \"standard\"\n\n[[defenses]]\nkind = \"plra\"\nq = 0.3\n";

fn worst_case(out: &Path, file: &str) -> f64 {
    let text = fs::read_to_string(out.join("attack").join(file)).unwrap();
    let value: toml::Table = toml::from_str(&text).unwrap();
    value["worst_case"].as_float().unwrap()
}

#[test]
fn naive_attack_succeeds_under_standard_and_is_capped_by_plra() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), TWO_DEFENSES);
    let out = root.path().join("out");
    let o = bidguard(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "attack"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(worst_case(&out, "standard__naive.toml"), 1.0);
    assert!(worst_case(&out, "plra_q=0.3__naive.toml") <= 0.3 + 1e-9);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"complete\""));
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "timings.tsv" {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), TWO_DEFENSES);
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = root.path().join(name);
        let o = bidguard(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        trees.push(tree(&out));
    }
    assert!(trees[0].len() > 5);
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn seed_override_changes_provenance() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), TWO_DEFENSES);
    let out = root.path().join("out");
    let o = bidguard(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5", "sweep-q"]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("q_sweep.tsv")).unwrap();
    assert!(text.starts_with("# config_hash=") && text.lines().next().unwrap().ends_with("seed=5"));
    assert_eq!(text.lines().last().unwrap().split('\t').nth(2), Some("1"));
}

#[test]
fn unknown_defense_fails_before_any_output() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), "[[defenses]]\nkind = \"oracle\"\n");
    let out = root.path().join("out");
    let o = bidguard(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle"));
    assert!(!out.exists());
}

#[test]
fn invalid_parameter_fails_with_code_1() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), "[[defenses]]\nkind = \"plra\"\nq = 1.5\n");
    let o = bidguard(&["--config", cfg.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = bidguard(&["--config", "/nonexistent/bidguard.toml", "run"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn generated_instances_validate() {
    let root = tempfile::tempdir().unwrap();
    let spec = root.path().join("spec.toml");
    fs::write(&spec, "n_reviewers = 12\nn_papers = 10\npaper_load = 2\nn_regions = 2\n").unwrap();
    let out = root.path().join("gen");
    let o = bidguard(&["--out", out.to_str().unwrap(), "--seed", "3", "gen", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join(io::BIDS_FILE).is_file());
    let o = bidguard(&["validate", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let again = root.path().join("gen2");
    bidguard(&["--out", again.to_str().unwrap(), "--seed", "3", "gen", "--spec", spec.to_str().unwrap()]);
    assert_eq!(tree(&out), tree(&again));
}

#[test]
fn invalid_instance_is_reported() {
    let root = tempfile::tempdir().unwrap();
    let dir = crafted_dir(root.path());
    let csv = dir.join(io::TEXT_FILE);
    let text = fs::read_to_string(&csv).unwrap().replacen("0.3", "1.7", 1);
    fs::write(&csv, text).unwrap();
    let o = bidguard(&["validate", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

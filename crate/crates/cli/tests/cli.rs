use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forge_cli::config::RunConfig;
use forge_cli::run_pipeline;
use forge_core::dataset::{BinCount, BinPolicy};
use forge_core::doc::DocOptions;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge")).args(args).output().unwrap()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn write_data(dir: &Path, seed: u64, n: usize, d: usize) -> PathBuf {
    let data = forge_core::synth::interview_like(seed, n, d).unwrap();
    let path = dir.join("data.csv");
    fs::write(&path, data.to_csv_string().unwrap()).unwrap();
    path
}

fn all_published(dir: &Path) -> PathBuf {
    let mut runs = Vec::new();
    for b in ["25", "45", "65", "85"] {
        let text = fs::read_to_string(fixtures().join(format!("published_beta{b}.json"))).unwrap();
        runs.push(serde_json::from_str::<serde_json::Value>(&text).unwrap());
    }
    let path = dir.join("published.json");
    fs::write(&path, serde_json::to_string(&runs).unwrap()).unwrap();
    path
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_data(dir.path(), 1, 12, 20);
    let config = |out: &str| RunConfig {
        input: Some(input.clone()),
        output_dir: Some(dir.path().join(out)),
        betas: vec![0.45, 0.65],
        seed: Some(3),
        bins: Some(BinPolicy::uniform(BinCount::Auto)),
        ..RunConfig::default()
    };
    let a = run_pipeline(&config("a"), &DocOptions::default()).unwrap();
    let b = run_pipeline(&config("b"), &DocOptions::default()).unwrap();
    let names: Vec<String> = a.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in [
        "dataset.json",
        "clusters.json",
        "clusters_beta45.csv",
        "clusters_beta65.csv",
        "clusters_all.csv",
        "similarity.csv",
        "dendrogram.json",
        "merge.json",
        "report.md",
        "cooccurrence.csv",
        "ca.json",
        "categories.csv",
        "mca.json",
        "eta2.csv",
    ] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
    for (pa, pb) in a.iter().zip(&b) {
        if pa.file_name().unwrap() == "config.json" {
            continue;
        }
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{}", pa.display());
    }
}

#[test]
fn run_subcommand_with_config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_data(dir.path(), 2, 10, 12);
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        serde_json::json!({
            "input": input,
            "output_dir": dir.path().join("out"),
            "betas": [0.45],
            "seed": 1,
            "w": "auto"
        })
        .to_string(),
    )
    .unwrap();
    let out = forge(&["run", "--config", cfg.to_str().unwrap(), "--beta", "0.65"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    assert!(out_dir.join("clusters_beta65.csv").exists());
    assert!(!out_dir.join("clusters_beta45.csv").exists());
    assert!(out_dir.join("w_estimate.json").exists());
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "subject,d1,d2\n1,0.5,1.5\n").unwrap();
    let out = forge(&["ingest", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["stage"], "ingest");
    assert!(err["error"]["message"].as_str().unwrap().contains("d2"));

    let input = write_data(dir.path(), 1, 8, 10);
    let out = forge(&["cluster", input.to_str().unwrap(), "--beta", "0.45"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn trial_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_data(dir.path(), 1, 8, 10);
    let out = Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(["cluster", input.to_str().unwrap(), "--beta", "0.85", "--seed", "1"])
        .env("FORGE_MAX_TRIALS", "100")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("100"));
}

#[test]
fn cooccur_reproduces_published_table() {
    let dir = tempfile::tempdir().unwrap();
    let clusters = all_published(dir.path());
    let out = forge(&["cooccur", clusters.to_str().unwrap(), "--exclude", "J85,K85,L85,M85"]);
    assert!(out.status.success());
    let want = fs::read_to_string(fixtures().join("cooccurrence_published.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), want.trim_end());
}

#[test]
fn merge_cuts_refine() {
    let dir = tempfile::tempdir().unwrap();
    let clusters = dir.path().join("b65.json");
    fs::copy(fixtures().join("published_beta65.json"), &clusters).unwrap();
    let sets = |h: &str| {
        let out = forge(&["merge", clusters.to_str().unwrap(), "--cut", h]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        serde_json::from_value::<Vec<Vec<String>>>(v["sets"].clone()).unwrap()
    };
    let coarse = sets("0.5");
    let fine = sets("0.2");
    assert_eq!(coarse, sets("0.5"));
    for s in &fine {
        assert!(coarse.iter().any(|c| s.iter().all(|id| c.contains(id))));
    }
}

#[test]
fn ca_and_describe_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = forge(&["ca", fixtures().join("cooccurrence_published.csv").to_str().unwrap()]);
    assert!(out.status.success());
    let map: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(map["rows"].as_array().unwrap().len(), 20);
    assert!(map["inertia_pct"][0].as_f64().unwrap() > 41.0);

    let input = write_data(dir.path(), 4, 10, 12);
    let clusters = dir.path().join("c.json");
    let out = forge(&["cluster", input.to_str().unwrap(), "--beta", "0.65", "--seed", "2", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    fs::rename(dir.path().join("clusters.json"), &clusters).unwrap();
    let merged = dir.path().join("m.json");
    let out = forge(&["merge", clusters.to_str().unwrap(), "--cut", "0.5", "-o", merged.to_str().unwrap()]);
    assert!(out.status.success());
    let out = forge(&["describe", merged.to_str().unwrap(), "--data", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.starts_with("# Proto-personas"));
    assert!(md.contains("### Goals"));
}

#[test]
fn bin_mca_corr() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_data(dir.path(), 5, 12, 8);
    let p = input.to_str().unwrap();
    let out = forge(&["bin", p, "--bins", "3", "--overrides", "d1=2"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("subject,d1"));
    let out = forge(&["mca", p]);
    assert!(out.status.success());
    let out = forge(&["corr", p, "--axes", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("variable,dim1,dim2"));
    assert_eq!(text.lines().count(), 9);
}

use std::fmt;
use std::fs;
use std::path::PathBuf;

use forge_core::correspondence::{cooccurrence, correspondence_analysis, variable_axis_correlation};
use forge_core::doc::{beta_tag, cluster_table_csv, DocOptions, SubspaceCluster};
use forge_core::persona::{markdown_report, SimilarityMatrix};
use forge_core::{ForgeError, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::stages;

/// A failed stage: which one and why.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: ForgeError,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

#[derive(Serialize)]
struct ErrorReport<'a> {
    stage: &'a str,
    message: String,
}

impl StageError {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({
            "error": ErrorReport { stage: self.stage, message: self.source.to_string() }
        }))
        .expect("error report serializes")
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}

/// Runs every stage and writes its artifact into the output directory.
/// Returns the written paths in order.
pub fn run_pipeline(
    config: &RunConfig,
    options: &DocOptions,
) -> std::result::Result<Vec<PathBuf>, StageError> {
    config.validate().at("config")?;
    let input = config
        .input
        .as_deref()
        .ok_or_else(|| ForgeError::InvalidParameter("no input file given".into()))
        .at("config")?;
    let seed = config
        .seed
        .ok_or_else(|| ForgeError::InvalidParameter("a seed is required".into()))
        .at("config")?;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("forge-out"));
    fs::create_dir_all(&dir).map_err(ForgeError::from).at("output")?;
    let mut out = Out { dir, written: Vec::new() };

    let data = stages::load_dataset(input, config.dims.as_deref()).at("ingest")?;
    out.write("dataset.json", &data.to_json().at("ingest")?).at("ingest")?;

    let w = stages::resolve_w(&data, config.w).at("estimate-w")?;
    if let crate::config::WSetting::Auto(_) = config.w {
        let est = forge_core::doc::estimate_w(&data).at("estimate-w")?;
        out.write("w_estimate.json", &serde_json::to_string_pretty(&est).map_err(ForgeError::from).at("estimate-w")?)
            .at("estimate-w")?;
    }

    let runs = stages::cluster_runs(&data, w, config.alpha, &config.betas, seed, None, options).at("cluster")?;
    out.write("clusters.json", &stages::runs_to_json(&runs).at("cluster")?).at("cluster")?;
    for run in &runs {
        let name = format!("clusters_beta{}.csv", beta_tag(run.params.beta));
        out.write(&name, &cluster_table_csv(&run.clusters, None).at("cluster")?).at("cluster")?;
    }
    let all: Vec<SubspaceCluster> = runs.iter().flat_map(|r| r.clusters.iter().cloned()).collect();
    let dim_ids: Vec<String> = data.dimensions().iter().map(|d| d.id.clone()).collect();
    out.write("clusters_all.csv", &cluster_table_csv(&all, Some(&dim_ids)).at("cluster")?)
        .at("cluster")?;

    if all.len() >= 2 {
        let sims = SimilarityMatrix::compute(&all);
        out.write("similarity.csv", &sims.to_csv_string().at("similarity")?).at("similarity")?;
        let dend = stages::dendrogram_for(&all, config.linkage).at("dendrogram")?;
        out.write("dendrogram.json", &dend.to_json().at("dendrogram")?).at("dendrogram")?;
        let mut merged = stages::merge_at(&all, config.linkage, config.cut, config.conflict_sd).at("merge")?;
        stages::describe_all(&mut merged.protos, &data).at("describe")?;
        out.write("merge.json", &to_json(&merged).at("merge")?).at("merge")?;
        out.write("report.md", &markdown_report(&merged.protos, data.dimensions()).at("describe")?)
            .at("describe")?;
    }

    let subjects: Vec<String> = data.subjects().iter().map(|s| s.id.clone()).collect();
    let co = cooccurrence(&all, &config.exclude, Some(&subjects)).at("cooccur")?;
    out.write("cooccurrence.csv", &co.to_csv_string().at("cooccur")?).at("cooccur")?;
    let map = correspondence_analysis(&co.subjects, &co.subjects, &co.as_f64()).at("ca")?;
    out.write("ca.json", &map.to_json().at("ca")?).at("ca")?;

    if let Some(policy) = &config.bins {
        let (table, result) = stages::mca_of(&data, policy).at("mca")?;
        out.write("categories.csv", &table.to_csv_string().at("bin")?).at("bin")?;
        out.write("mca.json", &to_json(&result).at("mca")?).at("mca")?;
        let eta = variable_axis_correlation(&table, &result.map, config.axes).at("corr")?;
        out.write("eta2.csv", &eta.to_csv_string().at("corr")?).at("corr")?;
    }

    out.write("config.json", &to_json(config).at("output")?).at("output")?;
    Ok(out.written)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

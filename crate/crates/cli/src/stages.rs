//! Library versions of the subcommands. The binary only parses flags and
//! writes what these return.

use std::fs;
use std::path::Path;

use forge_core::correspondence::{mca, variable_axis_correlation, EtaSquared, McaResult};
use forge_core::dataset::{bin_to_categories, read_dimension_catalog, BinPolicy, CategoricalTable};
use forge_core::doc::{
    doc_for_target, doc_full_coverage, estimate_w, ClusterRun, DocOptions, DocParams, RunParams,
    SubspaceCluster, DEFAULT_TRIAL_CAP,
};
use forge_core::persona::{
    build_dendrogram, describe, merge_clusters, Dendrogram, Linkage, ProtoPersona, SimilarityMatrix,
};
use forge_core::{ingest_csv, ForgeError, Result, VasDataSet};
use serde::{Deserialize, Serialize};

use crate::config::WSetting;

pub const MAX_TRIALS_ENV: &str = "FORGE_MAX_TRIALS";

/// Trial cap from `FORGE_MAX_TRIALS`, or the default.
pub fn trial_cap_from_env() -> Result<u64> {
    match std::env::var(MAX_TRIALS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            ForgeError::InvalidParameter(format!("{MAX_TRIALS_ENV} must be a positive integer, got {v:?}"))
        }),
        Err(_) => Ok(DEFAULT_TRIAL_CAP),
    }
}

/// Reads a dataset from CSV, or from the JSON written by `ingest`.
pub fn load_dataset(path: &Path, dims: Option<&Path>) -> Result<VasDataSet> {
    let data = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        VasDataSet::from_json(&fs::read_to_string(path)?)?
    } else {
        ingest_csv(fs::File::open(path)?)?
    };
    match dims {
        Some(p) => Ok(data.with_dimension_metadata(&read_dimension_catalog(fs::File::open(p)?)?)),
        None => Ok(data),
    }
}

pub fn load_clusters(path: &Path) -> Result<Vec<SubspaceCluster>> {
    forge_core::doc::clusters_from_json(&fs::read_to_string(path)?)
}

pub fn resolve_w(data: &VasDataSet, w: WSetting) -> Result<f64> {
    match w {
        WSetting::Value(v) => Ok(v),
        WSetting::Auto(_) => Ok(estimate_w(data)?.suggested),
    }
}

/// One run per beta. With a target only that subject's best cluster is kept.
pub fn cluster_runs(
    data: &VasDataSet,
    w: f64,
    alpha: f64,
    betas: &[f64],
    seed: u64,
    target: Option<&str>,
    options: &DocOptions,
) -> Result<Vec<ClusterRun>> {
    let mut runs = Vec::with_capacity(betas.len());
    for &beta in betas {
        let params = DocParams::new(w, alpha, beta, seed);
        let run = match target {
            Some(t) => {
                let params = params.with_target(t);
                let plan = params.plan(data.n_dims(), data.n_subjects(), options.trial_cap)?;
                ClusterRun {
                    params: RunParams {
                        w,
                        alpha,
                        beta,
                        seed: Some(seed),
                    },
                    clusters: vec![doc_for_target(data, &params, options)?],
                    warnings: plan.warnings,
                }
            }
            None => doc_full_coverage(data, &params, options)?,
        };
        runs.push(run);
    }
    Ok(runs)
}

pub fn runs_to_json(runs: &[ClusterRun]) -> Result<String> {
    Ok(serde_json::to_string_pretty(runs)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub height: f64,
    pub linkage: Linkage,
    pub sets: Vec<Vec<String>>,
    pub protos: Vec<ProtoPersona>,
}

pub fn dendrogram_for(clusters: &[SubspaceCluster], linkage: Linkage) -> Result<Dendrogram> {
    build_dendrogram(&SimilarityMatrix::compute(clusters), linkage)
}

/// Cuts the dendrogram of `clusters` at `height` and merges each resulting set.
pub fn merge_at(
    clusters: &[SubspaceCluster],
    linkage: Linkage,
    height: f64,
    conflict_sd: f64,
) -> Result<MergeOutcome> {
    let dend = dendrogram_for(clusters, linkage)?;
    let sets = forge_core::persona::cut_dendrogram(&dend, height)?;
    let protos = sets
        .iter()
        .map(|set| {
            let members: Vec<SubspaceCluster> = set
                .iter()
                .map(|id| clusters.iter().find(|c| &c.id == id).cloned().expect("leaf from clusters"))
                .collect();
            merge_clusters(&members, conflict_sd)
        })
        .collect::<Result<_>>()?;
    Ok(MergeOutcome {
        height,
        linkage,
        sets,
        protos,
    })
}

/// Fills in each proto-persona's description from the dimension labels.
pub fn describe_all(protos: &mut [ProtoPersona], data: &VasDataSet) -> Result<()> {
    for p in protos.iter_mut() {
        p.description = describe(p, data.dimensions())?;
    }
    Ok(())
}

pub fn bin(data: &VasDataSet, policy: &BinPolicy) -> Result<CategoricalTable> {
    bin_to_categories(data, policy)
}

pub fn mca_of(data: &VasDataSet, policy: &BinPolicy) -> Result<(CategoricalTable, McaResult)> {
    let table = bin_to_categories(data, policy)?;
    let result = mca(&table)?;
    Ok((table, result))
}

pub fn eta_of(data: &VasDataSet, policy: &BinPolicy, axes: usize) -> Result<EtaSquared> {
    let (table, result) = mca_of(data, policy)?;
    variable_axis_correlation(&table, &result.map, axes)
}

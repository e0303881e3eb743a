//! Overlapping, full-coverage subspace clustering with a fixed anchor subject.

mod cluster;
mod engine;
mod estimate;
mod params;

pub use cluster::{
    beta_tag, cluster_table_csv, clusters_from_json, letter_label, ClusterRun, RunParams,
    SubspaceCluster,
};
pub use engine::{cluster_membership, doc_for_target, doc_full_coverage, induce_subspace, DocOptions};
pub use estimate::{estimate_w, mean_abs_distance, WEstimate};
pub use params::{
    alpha_for_min_size, beta_for_set_size, discrimination_set_size, inner_trial_count,
    inner_trial_count_capped, inner_trial_count_exact, min_cluster_size, outer_iterations, quality,
    DocParams, SearchPlan, BETA_GUARANTEE_LIMIT, DEFAULT_TRIAL_CAP,
};

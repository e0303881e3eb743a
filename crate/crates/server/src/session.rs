//! Session state as persisted on disk.

use std::time::{SystemTime, UNIX_EPOCH};

use forge_core::doc::{beta_tag, ClusterRun, SubspaceCluster};
use forge_core::persona::{Dendrogram, Linkage, ProtoPersona, SimilarityMatrix};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub w: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub params: RunRequest,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ClusterRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutState {
    pub height: f64,
    pub sets: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    /// Seconds since the Unix epoch.
    pub at: u64,
    pub action: String,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset: String,
    #[serde(default)]
    pub runs: Vec<RunRecord>,
    #[serde(default)]
    pub linkage: Option<Linkage>,
    #[serde(default)]
    pub similarity: Option<SimilarityMatrix>,
    #[serde(default)]
    pub dendrogram: Option<Dendrogram>,
    #[serde(default)]
    pub cut: Option<CutState>,
    #[serde(default)]
    pub protos: Vec<ProtoPersona>,
    #[serde(default)]
    pub audit: Vec<AuditEntry>,
}

impl Session {
    pub fn new(id: String, dataset: String) -> Self {
        Session {
            id,
            dataset,
            runs: Vec::new(),
            linkage: None,
            similarity: None,
            dendrogram: None,
            cut: None,
            protos: Vec::new(),
            audit: Vec::new(),
        }
    }

    pub fn log(&mut self, action: &str, detail: Value) {
        let at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.audit.push(AuditEntry {
            seq: self.audit.len() as u64 + 1,
            at,
            action: action.to_string(),
            detail,
        });
    }

    pub fn run(&self, id: &str) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.id == id)
    }

    pub fn run_mut(&mut self, id: &str) -> Option<&mut RunRecord> {
        self.runs.iter_mut().find(|r| r.id == id)
    }

    pub fn active_run(&self) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.status == RunStatus::Running)
    }

    /// Completed runs in submission order. A later run at the same beta
    /// replaces an earlier one, since both would label clusters alike.
    pub fn current_runs(&self) -> Vec<&ClusterRun> {
        let done: Vec<&ClusterRun> = self
            .runs
            .iter()
            .filter(|r| r.status == RunStatus::Done)
            .filter_map(|r| r.result.as_ref())
            .collect();
        done.iter()
            .enumerate()
            .filter(|(i, run)| {
                let tag = beta_tag(run.params.beta);
                !done[i + 1..].iter().any(|later| beta_tag(later.params.beta) == tag)
            })
            .map(|(_, run)| *run)
            .collect()
    }

    pub fn clusters(&self) -> Vec<SubspaceCluster> {
        self.current_runs()
            .into_iter()
            .flat_map(|r| r.clusters.iter().cloned())
            .collect()
    }

    /// Similarity, dendrogram and cut describe one cluster list; a new run
    /// makes them stale.
    pub fn invalidate_merge_state(&mut self) {
        self.similarity = None;
        self.dendrogram = None;
        self.cut = None;
    }
}

//! Turns sparse visual-analogue-scale ratings into overlapping subspace
//! clusters ("proto-personas"), then supports similarity-driven merging,
//! correspondence analysis, and templated persona reports.

pub mod correspondence;
pub mod dataset;
pub mod doc;
pub mod error;
pub mod ids;
pub mod persona;
pub mod synth;

pub use dataset::{ingest_csv, VasDataSet};
pub use doc::{doc_for_target, doc_full_coverage, ClusterRun, DocOptions, DocParams, SubspaceCluster};
pub use error::{ForgeError, Result};

//! Similarity, agglomerative merging and templated text for proto-personas.

mod dendrogram;
mod describe;
mod merge;
mod radar;
mod report;
mod similarity;

pub use dendrogram::{build_dendrogram, cut_dendrogram, Dendrogram, Linkage, Merge};
pub use describe::{clause, describe, HIGH_BAND, LOW_BAND};
pub use merge::{merge_clusters, MergedDim, ProtoPersona, DEFAULT_CONFLICT_SD};
pub use radar::{radar_data, RadarAxis, RadarData, RadarSeries, RadarSource};
pub use report::markdown_report;
pub use similarity::{cluster_mean_vector, drop_similar, shared_dims, similarity, SimilarityMatrix};

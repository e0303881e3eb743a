//! Similarity between subspace clusters: a Dice coefficient over the two
//! subspaces, scaled by one minus the mean squared difference of member
//! means on the shared dimensions. Identical clusters score 1; clusters with
//! no shared dimension, or with means at opposite extremes on every shared
//! dimension, score 0.

use serde::{Deserialize, Serialize};

use crate::doc::SubspaceCluster;
use crate::error::{ForgeError, Result};
use crate::ids::natural_cmp;

/// Dimensions in both subspaces, in natural id order.
pub fn shared_dims(a: &SubspaceCluster, b: &SubspaceCluster) -> Vec<String> {
    let mut f: Vec<String> = a
        .subspace
        .iter()
        .filter(|d| b.in_subspace(d))
        .cloned()
        .collect();
    f.sort_by(|x, y| natural_cmp(x, y));
    f
}

/// Member means of `c` on `dims`, in the given order.
pub fn cluster_mean_vector(c: &SubspaceCluster, dims: &[String]) -> Result<Vec<f64>> {
    let outside: Vec<String> = dims.iter().filter(|d| !c.in_subspace(d)).cloned().collect();
    if !outside.is_empty() {
        return Err(ForgeError::NotInSubspace {
            cluster: c.id.clone(),
            dims: outside,
        });
    }
    Ok(dims.iter().map(|d| c.means[d.as_str()]).collect())
}

pub fn similarity(a: &SubspaceCluster, b: &SubspaceCluster) -> f64 {
    let f = shared_dims(a, b);
    if f.is_empty() {
        return 0.0;
    }
    let dice = 2.0 * f.len() as f64 / (a.subspace.len() + b.subspace.len()) as f64;
    let msd = f
        .iter()
        .map(|d| (b.means[d.as_str()] - a.means[d.as_str()]).powi(2))
        .sum::<f64>()
        / f.len() as f64;
    (dice * (1.0 - msd)).clamp(0.0, 1.0)
}

/// Symmetric matrix of pairwise similarities with a unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn compute(clusters: &[SubspaceCluster]) -> Self {
        let n = clusters.len();
        let mut entries = vec![vec![0.0; n]; n];
        for i in 0..n {
            entries[i][i] = 1.0;
            for j in (i + 1)..n {
                let s = similarity(&clusters[i], &clusters[j]);
                entries[i][j] = s;
                entries[j][i] = s;
            }
        }
        SimilarityMatrix {
            ids: clusters.iter().map(|c| c.id.clone()).collect(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(&self.entries) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| ForgeError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }
}

/// Optional post-filter: walks clusters in descending quality and drops any
/// whose similarity to an already kept cluster exceeds `threshold`.
pub fn drop_similar(clusters: &[SubspaceCluster], threshold: f64) -> Vec<SubspaceCluster> {
    let mut order: Vec<&SubspaceCluster> = clusters.iter().collect();
    order.sort_by(|a, b| b.quality.total_cmp(&a.quality));
    let mut kept: Vec<SubspaceCluster> = Vec::new();
    for c in order {
        if kept.iter().all(|k| similarity(k, c) <= threshold) {
            kept.push(c.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    pub(crate) fn cluster(id: &str, members: &[&str], means: &[(&str, f64)]) -> SubspaceCluster {
        let means: IndexMap<String, f64> = means.iter().map(|(d, v)| (d.to_string(), *v)).collect();
        SubspaceCluster {
            id: id.into(),
            members: members.iter().map(|m| m.to_string()).collect(),
            subspace: means.keys().cloned().collect(),
            quality: 0.0,
            means,
        }
    }

    #[test]
    fn identical_is_one() {
        let a = cluster("a", &["1", "2"], &[("d1", 0.2), ("d5", 0.9)]);
        assert_eq!(similarity(&a, &a), 1.0);
        assert_eq!(shared_dims(&a, &a), ["d1", "d5"]);
    }

    #[test]
    fn disjoint_or_opposite_is_zero() {
        let a = cluster("a", &["1"], &[("d1", 0.0), ("d2", 1.0)]);
        let b = cluster("b", &["2"], &[("d3", 0.5)]);
        assert!(shared_dims(&a, &b).is_empty());
        assert_eq!(similarity(&a, &b), 0.0);
        let c = cluster("c", &["3"], &[("d1", 1.0), ("d2", 0.0)]);
        assert_eq!(similarity(&a, &c), 0.0);
    }

    #[test]
    fn mean_vector_requires_subspace() {
        let a = cluster("a", &["1"], &[("d1", 0.3)]);
        assert_eq!(cluster_mean_vector(&a, &["d1".into()]).unwrap(), [0.3]);
        assert!(matches!(
            cluster_mean_vector(&a, &["d2".into()]),
            Err(ForgeError::NotInSubspace { .. })
        ));
    }

    #[test]
    fn post_filter_keeps_best_of_near_duplicates() {
        let mut a = cluster("a", &["1"], &[("d1", 0.3), ("d2", 0.3)]);
        a.quality = 5.0;
        let mut b = cluster("b", &["2"], &[("d1", 0.31), ("d2", 0.3)]);
        b.quality = 9.0;
        let mut c = cluster("c", &["3"], &[("d7", 0.3)]);
        c.quality = 1.0;
        let kept = drop_similar(&[a, b, c], 0.9);
        let ids: Vec<&str> = kept.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let cs = vec![
            cluster("a", &["1"], &[("d1", 0.3), ("d2", 0.5)]),
            cluster("b", &["2"], &[("d1", 0.4)]),
            cluster("c", &["3"], &[("d2", 0.9)]),
        ];
        let m = SimilarityMatrix::compute(&cs);
        for i in 0..3 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert!(m.to_csv_string().unwrap().starts_with(",a,b,c\n"));
    }
}

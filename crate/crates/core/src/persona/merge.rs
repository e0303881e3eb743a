use serde::{Deserialize, Serialize};

use crate::doc::SubspaceCluster;
use crate::error::{ForgeError, Result};
use crate::ids::{natural_cmp, sort_natural};

pub const DEFAULT_CONFLICT_SD: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedDim {
    pub dim: String,
    pub mean: f64,
    pub std_dev: f64,
    pub support: usize,
    pub conflicting: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtoPersona {
    pub name: String,
    pub sources: Vec<String>,
    pub members: Vec<String>,
    pub dims: Vec<MergedDim>,
    #[serde(default)]
    pub vetoed: Vec<String>,
    #[serde(default)]
    pub description: String,
}

impl ProtoPersona {
    pub fn dim(&self, id: &str) -> Option<&MergedDim> {
        self.dims.iter().find(|d| d.dim == id)
    }

    pub fn conflicting(&self) -> Vec<&str> {
        self.dims
            .iter()
            .filter(|d| d.conflicting)
            .map(|d| d.dim.as_str())
            .collect()
    }

    /// Drops the given dims. Unknown ids are an error so a typo does not pass
    /// silently.
    pub fn veto(&mut self, dims: &[String]) -> Result<()> {
        for d in dims {
            if self.dim(d).is_none() {
                return Err(ForgeError::UnknownId {
                    kind: "dimension",
                    id: d.clone(),
                });
            }
        }
        self.dims.retain(|m| !dims.contains(&m.dim));
        for d in dims {
            if !self.vetoed.contains(d) {
                self.vetoed.push(d.clone());
            }
        }
        sort_natural(&mut self.vetoed);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn default_name(sources: &[String]) -> String {
    sources.join("+")
}

/// Merges a set of clusters. A dimension is kept when it lies in the subspace
/// of at least half the set (rounded up); its mean and sample standard
/// deviation are taken over the cluster means of the supporting clusters.
pub fn merge_clusters(set: &[SubspaceCluster], conflict_sd: f64) -> Result<ProtoPersona> {
    if set.is_empty() {
        return Err(ForgeError::Empty("cannot merge an empty set of clusters".into()));
    }
    if !(conflict_sd >= 0.0) {
        return Err(ForgeError::InvalidParameter(format!(
            "conflict threshold must be non-negative, got {conflict_sd}"
        )));
    }
    let n = set.len();
    let need = n.div_ceil(2);

    let mut all_dims: Vec<String> = Vec::new();
    for c in set {
        for d in &c.subspace {
            if !all_dims.contains(d) {
                all_dims.push(d.clone());
            }
        }
    }

    let mut dims = Vec::new();
    for d in all_dims {
        let vals: Vec<f64> = set.iter().filter_map(|c| c.mean(&d)).collect();
        if vals.len() < need {
            continue;
        }
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let std_dev = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        dims.push(MergedDim {
            dim: d,
            mean,
            std_dev,
            support: vals.len(),
            conflicting: std_dev > conflict_sd,
        });
    }
    dims.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| natural_cmp(&a.dim, &b.dim)));

    let sources: Vec<String> = set.iter().map(|c| c.id.clone()).collect();
    let mut members: Vec<String> = Vec::new();
    for c in set {
        for m in &c.members {
            if !members.contains(m) {
                members.push(m.clone());
            }
        }
    }
    sort_natural(&mut members);

    Ok(ProtoPersona {
        name: default_name(&sources),
        sources,
        members,
        dims,
        vetoed: Vec::new(),
        description: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn cluster(id: &str, members: &[&str], means: &[(&str, f64)]) -> SubspaceCluster {
        let means: IndexMap<String, f64> = means.iter().map(|(d, v)| (d.to_string(), *v)).collect();
        SubspaceCluster {
            id: id.into(),
            members: members.iter().map(|s| s.to_string()).collect(),
            subspace: means.keys().cloned().collect(),
            means,
            quality: 1.0,
        }
    }

    #[test]
    fn singleton_is_identity() {
        let c = cluster("A", &["1", "2"], &[("d1", 0.2), ("d3", 0.9)]);
        let p = merge_clusters(&[c], DEFAULT_CONFLICT_SD).unwrap();
        assert_eq!(p.dims.len(), 2);
        assert!(p.dims.iter().all(|d| d.std_dev == 0.0 && d.support == 1));
        assert_eq!(p.dim("d1").unwrap().mean, 0.2);
        assert_eq!(p.members, vec!["1", "2"]);
    }

    #[test]
    fn copies_have_zero_spread() {
        let c = cluster("A", &["1"], &[("d1", 0.25), ("d2", 0.75)]);
        let p = merge_clusters(&[c.clone(), c.clone(), c], DEFAULT_CONFLICT_SD).unwrap();
        for d in &p.dims {
            assert!(d.std_dev.abs() < 1e-15);
            assert_eq!(d.support, 3);
        }
    }

    #[test]
    fn half_support_rule() {
        let a = cluster("A", &["1"], &[("d1", 0.1), ("d2", 0.2)]);
        let b = cluster("B", &["2"], &[("d1", 0.3)]);
        let c = cluster("C", &["3"], &[("d1", 0.2), ("d3", 0.5)]);
        let d = cluster("D", &["4"], &[("d1", 0.2), ("d2", 0.4)]);
        let p = merge_clusters(&[a, b, c, d], DEFAULT_CONFLICT_SD).unwrap();
        let ids: Vec<&str> = p.dims.iter().map(|d| d.dim.as_str()).collect();
        assert_eq!(ids, vec!["d1", "d2"]);
        assert!((p.dim("d2").unwrap().mean - 0.3).abs() < 1e-12);
        assert_eq!(p.members, vec!["1", "2", "3", "4"]);
    }

    #[test]
    fn conflict_flag_and_veto() {
        let a = cluster("A", &["1"], &[("d1", 0.0), ("d2", 0.5)]);
        let b = cluster("B", &["2"], &[("d1", 1.0), ("d2", 0.5)]);
        let mut p = merge_clusters(&[a, b], DEFAULT_CONFLICT_SD).unwrap();
        assert_eq!(p.conflicting(), vec!["d1"]);
        p.veto(&["d1".into()]).unwrap();
        assert!(p.dim("d1").is_none());
        assert_eq!(p.vetoed, vec!["d1"]);
        assert!(p.veto(&["d9".into()]).is_err());
    }

    #[test]
    fn empty_set_rejected() {
        assert!(merge_clusters(&[], DEFAULT_CONFLICT_SD).is_err());
    }
}

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::VasDataSet;
use crate::error::{ForgeError, Result};
use crate::ids::{natural_cmp, sort_natural};

use super::params::quality;

/// A set of subjects that lie within `2w` of each other on every dimension
/// of `subspace`. `means` holds member means on exactly the subspace dims.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCluster {
    pub id: String,
    pub members: Vec<String>,
    pub subspace: Vec<String>,
    pub means: IndexMap<String, f64>,
    pub quality: f64,
}

impl SubspaceCluster {
    /// Builds a cluster from row/column indices of `data`, computing means
    /// over members on each subspace dimension.
    pub fn from_indices(
        id: impl Into<String>,
        data: &VasDataSet,
        members: &[usize],
        subspace: &[usize],
        beta: f64,
    ) -> Self {
        let mut means = IndexMap::with_capacity(subspace.len());
        for &k in subspace {
            let sum: f64 = members
                .iter()
                .map(|&i| data.value(i, k).expect("members are present on subspace dims"))
                .sum();
            means.insert(data.dimensions()[k].id.clone(), sum / members.len() as f64);
        }
        SubspaceCluster {
            id: id.into(),
            members: members.iter().map(|&i| data.subjects()[i].id.clone()).collect(),
            subspace: subspace.iter().map(|&k| data.dimensions()[k].id.clone()).collect(),
            means,
            quality: quality(members.len(), subspace.len(), beta),
        }
    }

    pub fn mean(&self, dim: &str) -> Option<f64> {
        self.means.get(dim).copied()
    }

    pub fn in_subspace(&self, dim: &str) -> bool {
        self.means.contains_key(dim)
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn dimensionality(&self) -> usize {
        self.subspace.len()
    }

    /// Checks the structural invariants against the data the cluster came from:
    /// every member present on every subspace dim, spread at most `2w`,
    /// size at least `min_size`, and means consistent with the members.
    pub fn check_against(&self, data: &VasDataSet, w: f64, min_size: usize) -> Result<()> {
        let fail = |msg: String| Err(ForgeError::InvalidParameter(format!("cluster {}: {msg}", self.id)));
        if self.members.len() < min_size {
            return fail(format!("{} members, below minimum {min_size}", self.members.len()));
        }
        if self.subspace.len() != self.means.len() {
            return fail("means not defined exactly on the subspace".into());
        }
        let rows: Vec<usize> = self
            .members
            .iter()
            .map(|m| data.require_subject(m))
            .collect::<Result<_>>()?;
        for dim in &self.subspace {
            let k = data.dimension_index(dim).ok_or_else(|| ForgeError::UnknownId {
                kind: "dimension",
                id: dim.clone(),
            })?;
            let mut vals = Vec::with_capacity(rows.len());
            for &i in &rows {
                match data.value(i, k) {
                    Some(v) => vals.push(v),
                    None => return fail(format!("member {} missing on {dim}", data.subjects()[i].id)),
                }
            }
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > 2.0 * w + 1e-12 {
                return fail(format!("spread {} on {dim} exceeds 2w", hi - lo));
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            match self.means.get(dim) {
                Some(m) if (m - mean).abs() < 1e-12 => {}
                _ => return fail(format!("stored mean on {dim} disagrees with members")),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub w: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: Option<u64>,
}

/// Envelope written by a clustering run: parameters, clusters, warnings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub params: RunParams,
    pub clusters: Vec<SubspaceCluster>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ClusterRun {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Reads either a single run envelope or a JSON array of them, flattening
/// to one cluster list.
pub fn clusters_from_json(s: &str) -> Result<Vec<SubspaceCluster>> {
    let value: serde_json::Value = serde_json::from_str(s)?;
    match value {
        serde_json::Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                let run: ClusterRun = serde_json::from_value(item)?;
                out.extend(run.clusters);
            }
            Ok(out)
        }
        other => Ok(serde_json::from_value::<ClusterRun>(other)?.clusters),
    }
}

/// Dimensions-as-rows table with one column per cluster and `NA` outside
/// each cluster's subspace. The first row lists members joined by `.`, the
/// last row the subspace size. `dims` fixes the row order; when `None`, the
/// union of subspaces is used in natural id order.
pub fn cluster_table_csv(clusters: &[SubspaceCluster], dims: Option<&[String]>) -> Result<String> {
    let rows: Vec<String> = match dims {
        Some(d) => d.to_vec(),
        None => {
            let mut all: Vec<String> = clusters.iter().flat_map(|c| c.subspace.iter().cloned()).collect();
            sort_natural(&mut all);
            all.dedup();
            all
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dimension".to_string()];
    header.extend(clusters.iter().map(|c| c.id.clone()));
    w.write_record(&header)?;

    let mut members = vec!["members".to_string()];
    members.extend(clusters.iter().map(|c| {
        let mut m = c.members.clone();
        m.sort_by(|a, b| natural_cmp(a, b));
        m.join(".")
    }));
    w.write_record(&members)?;

    for dim in &rows {
        let mut rec = vec![dim.clone()];
        rec.extend(clusters.iter().map(|c| match c.mean(dim) {
            Some(v) => format!("{v:.3}"),
            None => "NA".to_string(),
        }));
        w.write_record(&rec)?;
    }
    let mut footer = vec!["dimensions".to_string()];
    footer.extend(clusters.iter().map(|c| c.dimensionality().to_string()));
    w.write_record(&footer)?;
    let bytes = w.into_inner().map_err(|e| ForgeError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Spreadsheet-style letters: 0 → A, 25 → Z, 26 → AA.
pub fn letter_label(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Label suffix for a beta value: 0.45 → "45".
pub fn beta_tag(beta: f64) -> String {
    format!("{}", (beta * 100.0).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters() {
        assert_eq!(letter_label(0), "A");
        assert_eq!(letter_label(25), "Z");
        assert_eq!(letter_label(26), "AA");
        assert_eq!(letter_label(27), "AB");
        assert_eq!(letter_label(52), "BA");
        assert_eq!(beta_tag(0.45), "45");
        assert_eq!(beta_tag(0.85), "85");
    }

    #[test]
    fn table_marks_na() {
        let data = VasDataSet::from_rows(vec![
            vec![Some(0.1), Some(0.9)],
            vec![Some(0.2), Some(0.1)],
        ])
        .unwrap();
        let c = SubspaceCluster::from_indices("A25", &data, &[0, 1], &[0], 0.25);
        assert!((c.mean("d1").unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(c.quality, 8.0);
        let dims: Vec<String> = vec!["d1".into(), "d2".into()];
        let csv = cluster_table_csv(&[c], Some(&dims)).unwrap();
        assert_eq!(csv, "dimension,A25\nmembers,1.2\nd1,0.150\nd2,NA\ndimensions,1\n");
    }
}

//! Plot data for radar comparisons. The centre of each axis is the left
//! extreme (0) and the rim the right extreme (1); axes outside a series'
//! subspace carry no value and are greyed for that series.

use serde::{Deserialize, Serialize};

use crate::dataset::Dimension;
use crate::doc::SubspaceCluster;
use crate::ids::sort_natural;

use super::merge::ProtoPersona;

pub trait RadarSource {
    fn radar_id(&self) -> &str;
    fn radar_value(&self, dim: &str) -> Option<f64>;
    fn radar_dims(&self) -> Vec<String>;
}

impl RadarSource for SubspaceCluster {
    fn radar_id(&self) -> &str {
        &self.id
    }
    fn radar_value(&self, dim: &str) -> Option<f64> {
        self.mean(dim)
    }
    fn radar_dims(&self) -> Vec<String> {
        self.subspace.clone()
    }
}

impl RadarSource for ProtoPersona {
    fn radar_id(&self) -> &str {
        &self.name
    }
    fn radar_value(&self, dim: &str) -> Option<f64> {
        self.dim(dim).map(|d| d.mean)
    }
    fn radar_dims(&self) -> Vec<String> {
        self.dims.iter().map(|d| d.dim.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarAxis {
    pub dim: String,
    pub label: String,
    pub centre: String,
    pub rim: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarSeries {
    pub id: String,
    pub values: Vec<Option<f64>>,
    pub greyed: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarData {
    pub axes: Vec<RadarAxis>,
    pub series: Vec<RadarSeries>,
}

pub fn radar_data(
    sources: &[&dyn RadarSource],
    labels: Option<&[Dimension]>,
) -> RadarData {
    let mut dims: Vec<String> = Vec::new();
    for s in sources {
        for d in s.radar_dims() {
            if !dims.contains(&d) {
                dims.push(d);
            }
        }
    }
    sort_natural(&mut dims);
    let axes = dims
        .iter()
        .map(|d| {
            let meta = labels.and_then(|l| l.iter().find(|m| &m.id == d));
            RadarAxis {
                dim: d.clone(),
                label: meta.map_or_else(|| d.clone(), |m| m.label.clone()),
                centre: meta.map(|m| m.left_extreme.clone()).unwrap_or_default(),
                rim: meta.map(|m| m.right_extreme.clone()).unwrap_or_default(),
            }
        })
        .collect();
    let series = sources
        .iter()
        .map(|s| {
            let values: Vec<Option<f64>> = dims.iter().map(|d| s.radar_value(d)).collect();
            RadarSeries {
                id: s.radar_id().to_string(),
                greyed: values.iter().map(Option::is_none).collect(),
                values,
            }
        })
        .collect();
    RadarData { axes, series }
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn cluster(id: &str, means: &[(&str, f64)]) -> SubspaceCluster {
        let means: IndexMap<String, f64> = means.iter().map(|(d, v)| (d.to_string(), *v)).collect();
        SubspaceCluster {
            id: id.into(),
            members: vec!["1".into()],
            subspace: means.keys().cloned().collect(),
            means,
            quality: 1.0,
        }
    }

    #[test]
    fn union_axes_and_grey() {
        let a = cluster("A", &[("d2", 0.1), ("d10", 0.9)]);
        let b = cluster("B", &[("d3", 0.5), ("d2", 0.2)]);
        let r = radar_data(&[&a, &b], None);
        let dims: Vec<&str> = r.axes.iter().map(|a| a.dim.as_str()).collect();
        assert_eq!(dims, vec!["d2", "d3", "d10"]);
        assert_eq!(r.series[0].values, vec![Some(0.1), None, Some(0.9)]);
        assert_eq!(r.series[1].greyed, vec![false, false, true]);
    }

    #[test]
    fn self_comparison_identical() {
        let a = cluster("A", &[("d1", 0.3)]);
        let r = radar_data(&[&a, &a], None);
        assert_eq!(r.series[0].values, r.series[1].values);
    }
}

//! The visual-analogue-scale score matrix: subjects × behavioural dimensions,
//! with explicit per-cell absence for unmarked scales.

mod binning;
mod csv_io;

pub use binning::{bin_to_categories, BinCount, BinPolicy, CategoricalTable, CategoricalVariable};
pub use csv_io::{ingest_csv, read_dimension_catalog};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub label: String,
}

/// One behavioural scale. `left`/`right` name the extremes at score 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub id: String,
    pub label: String,
    #[serde(rename = "left", default)]
    pub left_extreme: String,
    #[serde(rename = "right", default)]
    pub right_extreme: String,
}

impl Dimension {
    pub fn bare(id: impl Into<String>) -> Self {
        let id = id.into();
        Dimension {
            label: id.clone(),
            id,
            left_extreme: String::new(),
            right_extreme: String::new(),
        }
    }
}

#[derive(Deserialize)]
struct RawDataSet {
    subjects: Vec<Subject>,
    dimensions: Vec<Dimension>,
    values: Vec<Vec<Option<f64>>>,
}

/// Validated score matrix. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataSet")]
pub struct VasDataSet {
    subjects: Vec<Subject>,
    dimensions: Vec<Dimension>,
    values: Vec<Vec<Option<f64>>>,
    #[serde(skip)]
    subject_index: HashMap<String, usize>,
    #[serde(skip)]
    dimension_index: HashMap<String, usize>,
}

impl TryFrom<RawDataSet> for VasDataSet {
    type Error = ForgeError;

    fn try_from(raw: RawDataSet) -> Result<Self> {
        VasDataSet::new(raw.subjects, raw.dimensions, raw.values)
    }
}

impl VasDataSet {
    pub fn new(
        subjects: Vec<Subject>,
        dimensions: Vec<Dimension>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let subject_index = index_unique(subjects.iter().map(|s| s.id.as_str()), "subject")?;
        let dimension_index =
            index_unique(dimensions.iter().map(|d| d.id.as_str()), "dimension")?;
        if values.len() != subjects.len() {
            return Err(ForgeError::InvalidParameter(format!(
                "value matrix has {} rows for {} subjects",
                values.len(),
                subjects.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != dimensions.len() {
                return Err(ForgeError::RaggedRow {
                    row: i + 1,
                    expected: dimensions.len(),
                    found: row.len(),
                });
            }
            for (k, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(ForgeError::Cell {
                            row: i + 1,
                            column: dimensions[k].id.clone(),
                            message: format!("value {v} outside [0, 1]"),
                        });
                    }
                }
            }
        }
        Ok(VasDataSet {
            subjects,
            dimensions,
            values,
            subject_index,
            dimension_index,
        })
    }

    /// Builds a data set with ids `1..=n` for subjects and `d1..=dk` for dimensions.
    pub fn from_rows(values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_dims = values.first().map_or(0, Vec::len);
        let subjects = (1..=values.len())
            .map(|i| Subject {
                id: i.to_string(),
                label: i.to_string(),
            })
            .collect();
        let dimensions = (1..=n_dims).map(|k| Dimension::bare(format!("d{k}"))).collect();
        VasDataSet::new(subjects, dimensions, values)
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_dims(&self) -> usize {
        self.dimensions.len()
    }

    pub fn row(&self, subject: usize) -> &[Option<f64>] {
        &self.values[subject]
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn value(&self, subject: usize, dim: usize) -> Option<f64> {
        self.values[subject][dim]
    }

    pub fn subject_index(&self, id: &str) -> Option<usize> {
        self.subject_index.get(id).copied()
    }

    pub fn dimension_index(&self, id: &str) -> Option<usize> {
        self.dimension_index.get(id).copied()
    }

    pub fn require_subject(&self, id: &str) -> Result<usize> {
        self.subject_index(id).ok_or_else(|| ForgeError::UnknownId {
            kind: "subject",
            id: id.to_string(),
        })
    }

    /// Replaces labels and extremes for every dimension found in `catalog`.
    pub fn with_dimension_metadata(mut self, catalog: &[Dimension]) -> Self {
        for meta in catalog {
            if let Some(k) = self.dimension_index(&meta.id) {
                self.dimensions[k] = meta.clone();
            }
        }
        self
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn index_unique<'a>(
    ids: impl Iterator<Item = &'a str>,
    kind: &'static str,
) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id.to_string(), i).is_some() {
            return Err(ForgeError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_with_coordinates() {
        let err = VasDataSet::from_rows(vec![vec![Some(0.2), Some(1.2)]]).unwrap_err();
        match err {
            ForgeError::Cell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "d2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let subjects = vec![
            Subject { id: "a".into(), label: "a".into() },
            Subject { id: "a".into(), label: "b".into() },
        ];
        let err = VasDataSet::new(subjects, vec![Dimension::bare("d1")], vec![vec![None], vec![None]])
            .unwrap_err();
        assert!(matches!(err, ForgeError::DuplicateId { kind: "subject", .. }));
    }

    #[test]
    fn json_schema_shape() {
        let ds = VasDataSet::from_rows(vec![vec![Some(0.5), None]]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&ds.to_json().unwrap()).unwrap();
        assert_eq!(v["subjects"][0]["id"], "1");
        assert_eq!(v["dimensions"][1]["id"], "d2");
        assert!(v["dimensions"][0].get("left").is_some());
        assert_eq!(v["values"][0][0], 0.5);
        assert!(v["values"][0][1].is_null());
        let back = VasDataSet::from_json(&ds.to_json().unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn json_is_validated_on_load() {
        let bad = r#"{"subjects":[{"id":"1","label":"1"}],"dimensions":[{"id":"d1","label":"d1"}],"values":[[1.5]]}"#;
        assert!(VasDataSet::from_json(bad).is_err());
    }
}

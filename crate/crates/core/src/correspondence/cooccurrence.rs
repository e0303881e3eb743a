use serde::{Deserialize, Serialize};

use crate::doc::SubspaceCluster;
use crate::error::{ForgeError, Result};
use crate::ids::sort_natural;

/// How often two subjects share a cluster. The diagonal counts memberships.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceTable {
    pub subjects: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub excluded: Vec<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Counts co-membership over every cluster not listed in `exclude`. Subjects
/// default to the union of members in natural order; clusters naming a
/// subject outside an explicit list are an error.
pub fn cooccurrence(
    clusters: &[SubspaceCluster],
    exclude: &[String],
    subjects: Option<&[String]>,
) -> Result<CooccurrenceTable> {
    let mut warnings = Vec::new();
    for e in exclude {
        if !clusters.iter().any(|c| &c.id == e) {
            warnings.push(format!("excluded cluster {e} is not in the cluster list"));
        }
    }
    let subjects: Vec<String> = match subjects {
        Some(s) => s.to_vec(),
        None => {
            let mut all: Vec<String> = Vec::new();
            for c in clusters {
                for m in &c.members {
                    if !all.contains(m) {
                        all.push(m.clone());
                    }
                }
            }
            sort_natural(&mut all);
            all
        }
    };
    let n = subjects.len();
    let mut counts = vec![vec![0u64; n]; n];
    for c in clusters.iter().filter(|c| !exclude.contains(&c.id)) {
        let mut idx = Vec::with_capacity(c.members.len());
        for m in &c.members {
            let i = subjects.iter().position(|s| s == m).ok_or_else(|| ForgeError::UnknownId {
                kind: "subject",
                id: m.clone(),
            })?;
            idx.push(i);
        }
        for &i in &idx {
            for &j in &idx {
                counts[i][j] += 1;
            }
        }
    }
    let mut excluded = exclude.to_vec();
    excluded.sort();
    excluded.dedup();
    Ok(CooccurrenceTable {
        subjects,
        counts,
        excluded,
        warnings,
    })
}

impl CooccurrenceTable {
    pub fn as_f64(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64).collect())
            .collect()
    }

    /// Square table with an empty corner cell and subject ids along both edges.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.subjects.iter().cloned());
        w.write_record(&header)?;
        for (s, row) in self.subjects.iter().zip(&self.counts) {
            let mut rec = vec![s.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| ForgeError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }
}

/// A labelled numeric table read from CSV: the header's first cell is ignored,
/// the rest are column ids; each row starts with its id.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_labelled_matrix<R: std::io::Read>(reader: R) -> Result<LabelledMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let col_ids: Vec<String> = rdr.headers()?.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != col_ids.len() + 1 {
            return Err(ForgeError::RaggedRow {
                row: i + 1,
                expected: col_ids.len() + 1,
                found: rec.len(),
            });
        }
        row_ids.push(rec[0].trim().to_string());
        let mut row = Vec::with_capacity(col_ids.len());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| ForgeError::Cell {
                row: i + 1,
                column: col_ids[j].clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            row.push(v);
        }
        values.push(row);
    }
    Ok(LabelledMatrix {
        row_ids,
        col_ids,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn cluster(id: &str, members: &[&str]) -> SubspaceCluster {
        SubspaceCluster {
            id: id.into(),
            members: members.iter().map(|s| s.to_string()).collect(),
            subspace: vec!["d1".into()],
            means: IndexMap::from([("d1".to_string(), 0.5)]),
            quality: 1.0,
        }
    }

    #[test]
    fn counts_and_exclusion() {
        let cs = vec![cluster("A", &["1", "2"]), cluster("B", &["2", "3"]), cluster("C", &["1", "2"])];
        let t = cooccurrence(&cs, &["C".into(), "Z".into()], None).unwrap();
        assert_eq!(t.subjects, vec!["1", "2", "3"]);
        assert_eq!(t.counts, vec![vec![1, 1, 0], vec![1, 2, 1], vec![0, 1, 1]]);
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn empty_list_is_zero() {
        let subjects: Vec<String> = vec!["1".into(), "2".into()];
        let t = cooccurrence(&[], &[], Some(&subjects)).unwrap();
        assert_eq!(t.counts, vec![vec![0, 0], vec![0, 0]]);
    }

    #[test]
    fn csv_round_trip() {
        let t = cooccurrence(&[cluster("A", &["1", "2"])], &[], None).unwrap();
        let csv = t.to_csv_string().unwrap();
        assert!(csv.starts_with(",1,2\n"));
        let m = read_labelled_matrix(csv.as_bytes()).unwrap();
        assert_eq!(m.values, t.as_f64());
        assert_eq!(m.row_ids, t.subjects);
    }
}

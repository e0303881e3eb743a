use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dimension, VasDataSet};
use crate::error::{ForgeError, Result};

/// Share of present values that must sit in the outer thirds before a
/// dimension counts as polarized and gets two bins in auto mode.
pub const POLARIZATION_THRESHOLD: f64 = 0.8;

pub const MISSING_CATEGORY: &str = "missing";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinCount {
    Two,
    Three,
    #[default]
    Auto,
}

impl FromStr for BinCount {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" | "two" => Ok(BinCount::Two),
            "3" | "three" => Ok(BinCount::Three),
            "auto" => Ok(BinCount::Auto),
            other => Err(ForgeError::InvalidParameter(format!(
                "bin count must be 2, 3 or auto, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for BinCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinCount::Two => "2",
            BinCount::Three => "3",
            BinCount::Auto => "auto",
        })
    }
}

/// Bin count per dimension, with a default for dimensions not listed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinPolicy {
    #[serde(default)]
    pub default: BinCount,
    #[serde(default)]
    pub overrides: BTreeMap<String, BinCount>,
}

impl BinPolicy {
    pub fn uniform(count: BinCount) -> Self {
        BinPolicy {
            default: count,
            overrides: BTreeMap::new(),
        }
    }

    fn for_dimension(&self, id: &str) -> BinCount {
        self.overrides.get(id).copied().unwrap_or(self.default)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalVariable {
    pub dimension: String,
    pub categories: Vec<String>,
    /// Index of the MISSING category in `categories`, when the variable has one.
    pub missing: Option<usize>,
}

impl CategoricalVariable {
    pub fn substantive_count(&self) -> usize {
        self.categories.len() - usize::from(self.missing.is_some())
    }
}

/// Subjects × categorical variables; each cell is a category index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalTable {
    subjects: Vec<String>,
    variables: Vec<CategoricalVariable>,
    cells: Vec<Vec<usize>>,
}

impl CategoricalTable {
    /// Generic constructor; checks every cell indexes a category of its variable.
    pub fn new(
        subjects: Vec<String>,
        variables: Vec<CategoricalVariable>,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if cells.len() != subjects.len() {
            return Err(ForgeError::InvalidParameter(format!(
                "{} cell rows for {} subjects",
                cells.len(),
                subjects.len()
            )));
        }
        for (i, row) in cells.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(ForgeError::RaggedRow {
                    row: i + 1,
                    expected: variables.len(),
                    found: row.len(),
                });
            }
            for (v, &c) in row.iter().enumerate() {
                if c >= variables[v].categories.len() {
                    return Err(ForgeError::Cell {
                        row: i + 1,
                        column: variables[v].dimension.clone(),
                        message: format!("category index {c} out of range"),
                    });
                }
            }
        }
        Ok(CategoricalTable {
            subjects,
            variables,
            cells,
        })
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn variables(&self) -> &[CategoricalVariable] {
        &self.variables
    }

    pub fn cell(&self, subject: usize, variable: usize) -> usize {
        self.cells[subject][variable]
    }

    pub fn label(&self, subject: usize, variable: usize) -> &str {
        &self.variables[variable].categories[self.cells[subject][variable]]
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["subject".to_string()];
        header.extend(self.variables.iter().map(|v| v.dimension.clone()));
        w.write_record(&header)?;
        for (i, s) in self.subjects.iter().enumerate() {
            let mut rec = vec![s.clone()];
            rec.extend((0..self.variables.len()).map(|v| self.label(i, v).to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| ForgeError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }
}

pub fn bin_index(value: f64, bins: usize) -> usize {
    match bins {
        2 => usize::from(value >= 0.5),
        3 => ((3.0 * value).floor() as usize).min(2),
        _ => unreachable!("only two or three bins"),
    }
}

fn is_polarized(values: &[f64]) -> bool {
    if values.is_empty() {
        return true;
    }
    let outer = values
        .iter()
        .filter(|&&v| v < 1.0 / 3.0 || v > 2.0 / 3.0)
        .count();
    outer as f64 >= POLARIZATION_THRESHOLD * values.len() as f64
}

fn category_labels(dim: &Dimension, bins: usize) -> Vec<String> {
    let named = !dim.left_extreme.is_empty() && !dim.right_extreme.is_empty();
    match (bins, named) {
        (2, true) => vec![dim.left_extreme.clone(), dim.right_extreme.clone()],
        (3, true) => vec![dim.left_extreme.clone(), "mixed".into(), dim.right_extreme.clone()],
        (2, false) => vec!["low".into(), "high".into()],
        _ => vec!["low".into(), "mid".into(), "high".into()],
    }
}

/// Equal-width binning over [0, 1]. Missing values go to a per-variable
/// MISSING category, which is only created when the dimension has gaps.
pub fn bin_to_categories(data: &VasDataSet, policy: &BinPolicy) -> Result<CategoricalTable> {
    for id in policy.overrides.keys() {
        if data.dimension_index(id).is_none() {
            return Err(ForgeError::UnknownId {
                kind: "dimension",
                id: id.clone(),
            });
        }
    }
    let n = data.n_subjects();
    let mut variables = Vec::with_capacity(data.n_dims());
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(data.n_dims());
    for (k, dim) in data.dimensions().iter().enumerate() {
        let present: Vec<f64> = (0..n).filter_map(|i| data.value(i, k)).collect();
        let bins = match policy.for_dimension(&dim.id) {
            BinCount::Two => 2,
            BinCount::Three => 3,
            BinCount::Auto if is_polarized(&present) => 2,
            BinCount::Auto => 3,
        };
        let mut categories = category_labels(dim, bins);
        let missing = (present.len() < n).then(|| {
            categories.push(MISSING_CATEGORY.to_string());
            bins
        });
        let column = (0..n)
            .map(|i| match data.value(i, k) {
                Some(v) => bin_index(v, bins),
                None => bins,
            })
            .collect();
        variables.push(CategoricalVariable {
            dimension: dim.id.clone(),
            categories,
            missing,
        });
        columns.push(column);
    }
    let cells = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    CategoricalTable::new(
        data.subjects().iter().map(|s| s.id.clone()).collect(),
        variables,
        cells,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_dim(values: &[Option<f64>]) -> VasDataSet {
        VasDataSet::from_rows(values.iter().map(|v| vec![*v]).collect()).unwrap()
    }

    #[test]
    fn two_bin_boundaries() {
        let ds = one_dim(&[Some(0.0), Some(0.5), Some(1.0), Some(0.49)]);
        let t = bin_to_categories(&ds, &BinPolicy::uniform(BinCount::Two)).unwrap();
        let cats: Vec<usize> = (0..4).map(|i| t.cell(i, 0)).collect();
        assert_eq!(cats, [0, 1, 1, 0]);
    }

    #[test]
    fn three_bins_take_outgoing_label() {
        let ds = one_dim(&[Some(0.9), Some(0.1)]).with_dimension_metadata(&[Dimension {
            id: "d1".into(),
            label: "Activities outside the home".into(),
            left_extreme: "StaysAtHome".into(),
            right_extreme: "Outgoing".into(),
        }]);
        let t = bin_to_categories(&ds, &BinPolicy::uniform(BinCount::Three)).unwrap();
        assert_eq!(t.cell(0, 0), 2);
        assert_eq!(t.label(0, 0), "Outgoing");
        assert_eq!(t.label(1, 0), "StaysAtHome");
    }

    #[test]
    fn auto_picks_two_for_polarized() {
        let ds = one_dim(&[Some(0.05), Some(0.1), Some(0.9), Some(0.95)]);
        let t = bin_to_categories(&ds, &BinPolicy::default()).unwrap();
        assert_eq!(t.variables()[0].substantive_count(), 2);
    }

    #[test]
    fn auto_picks_three_for_spread() {
        // 3 of 5 outer = 60% < 80%
        let ds = one_dim(&[Some(0.05), Some(0.5), Some(0.6), Some(0.9), Some(0.95)]);
        let t = bin_to_categories(&ds, &BinPolicy::default()).unwrap();
        assert_eq!(t.variables()[0].substantive_count(), 3);
    }

    #[test]
    fn missing_gets_own_category() {
        let ds = one_dim(&[Some(0.2), None]);
        let t = bin_to_categories(&ds, &BinPolicy::uniform(BinCount::Two)).unwrap();
        assert_eq!(t.variables()[0].missing, Some(2));
        assert_eq!(t.label(1, 0), MISSING_CATEGORY);
    }

    #[test]
    fn unknown_override_rejected() {
        let ds = one_dim(&[Some(0.2)]);
        let mut p = BinPolicy::default();
        p.overrides.insert("d9".into(), BinCount::Two);
        assert!(bin_to_categories(&ds, &p).is_err());
    }

    #[test]
    fn bin_count_parses() {
        assert_eq!("2".parse::<BinCount>().unwrap(), BinCount::Two);
        assert_eq!("auto".parse::<BinCount>().unwrap(), BinCount::Auto);
        assert!("4".parse::<BinCount>().is_err());
    }
}

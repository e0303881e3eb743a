use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalTable;
use crate::error::{ForgeError, Result};

use super::ca::{correspondence_analysis, PerceptualMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McaResult {
    pub map: PerceptualMap,
    /// Dimensions of the variables that entered the indicator matrix.
    pub variables: Vec<String>,
    /// Observed categories across the kept variables.
    pub categories: usize,
}

/// Column id for one category of a variable in the indicator matrix.
pub fn indicator_id(dimension: &str, category: &str) -> String {
    format!("{dimension}:{category}")
}

/// Correspondence analysis of the complete disjunctive table. Missing values
/// are their own category. Variables with a single observed category carry
/// no information and are dropped with a warning; unobserved categories are
/// left out of the indicator matrix.
pub fn mca(table: &CategoricalTable) -> Result<McaResult> {
    let n = table.subjects().len();
    let q = table.variables().len();
    if n < 2 || q < 2 {
        return Err(ForgeError::InvalidParameter(format!(
            "multiple correspondence analysis needs at least 2 subjects and 2 variables, got {n} and {q}"
        )));
    }
    let mut warnings = Vec::new();
    let mut col_ids = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (v, var) in table.variables().iter().enumerate() {
        let used: Vec<usize> = (0..var.categories.len())
            .filter(|&c| (0..n).any(|s| table.cell(s, v) == c))
            .collect();
        if used.len() < 2 {
            warnings.push(format!(
                "dropped variable {} with a single observed category",
                var.dimension
            ));
            continue;
        }
        kept.push(var.dimension.clone());
        for c in used {
            col_ids.push(indicator_id(&var.dimension, &var.categories[c]));
            columns.push((0..n).map(|s| f64::from(u8::from(table.cell(s, v) == c))).collect());
        }
    }
    if kept.is_empty() {
        return Err(ForgeError::Empty(
            "every variable has a single observed category".into(),
        ));
    }
    let indicator: Vec<Vec<f64>> = (0..n).map(|s| columns.iter().map(|c| c[s]).collect()).collect();
    let mut map = correspondence_analysis(table.subjects(), &col_ids, &indicator)?;
    warnings.append(&mut map.warnings);
    map.warnings = warnings;
    Ok(McaResult {
        map,
        variables: kept,
        categories: col_ids.len(),
    })
}

/// Squared correlation ratios between each variable and the first `axes` axes
/// of the map, using the subjects' row coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSquared {
    pub variables: Vec<String>,
    pub axes: usize,
    pub values: Vec<Vec<f64>>,
}

impl EtaSquared {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["variable".to_string()];
        header.extend((1..=self.axes).map(|k| format!("dim{k}")));
        w.write_record(&header)?;
        for (v, row) in self.variables.iter().zip(&self.values) {
            let mut rec = vec![v.clone()];
            rec.extend(row.iter().map(|x| format!("{x:.6}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| ForgeError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }
}

/// Between-category variance over total variance of the coordinates.
pub fn eta_squared(coords: &[f64], categories: &[usize]) -> f64 {
    let n = coords.len() as f64;
    if coords.is_empty() {
        return 0.0;
    }
    let mean = coords.iter().sum::<f64>() / n;
    let total = coords.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if total <= 1e-15 {
        return 0.0;
    }
    let k = categories.iter().copied().max().unwrap_or(0) + 1;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&x, &c) in coords.iter().zip(categories) {
        sums[c] += x;
        counts[c] += 1;
    }
    let between = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| c as f64 * (s / c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (between / total).clamp(0.0, 1.0)
}

pub fn variable_axis_correlation(
    table: &CategoricalTable,
    map: &PerceptualMap,
    axes: usize,
) -> Result<EtaSquared> {
    let axes = axes.min(map.axes());
    let mut coords: Vec<&[f64]> = Vec::with_capacity(table.subjects().len());
    for s in table.subjects() {
        let p = map.row(s).ok_or_else(|| ForgeError::UnknownId {
            kind: "subject",
            id: s.clone(),
        })?;
        coords.push(&p.coords);
    }
    let mut values = Vec::with_capacity(table.variables().len());
    for v in 0..table.variables().len() {
        let cats: Vec<usize> = (0..coords.len()).map(|s| table.cell(s, v)).collect();
        let row = (0..axes)
            .map(|k| {
                let x: Vec<f64> = coords.iter().map(|c| c[k]).collect();
                eta_squared(&x, &cats)
            })
            .collect();
        values.push(row);
    }
    Ok(EtaSquared {
        variables: table.variables().iter().map(|v| v.dimension.clone()).collect(),
        axes,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CategoricalVariable;
    use approx::assert_abs_diff_eq;

    fn var(d: &str, cats: &[&str]) -> CategoricalVariable {
        CategoricalVariable {
            dimension: d.into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
            missing: None,
        }
    }

    fn toy() -> CategoricalTable {
        CategoricalTable::new(
            (1..=5).map(|i| i.to_string()).collect(),
            vec![var("a", &["x", "y"]), var("b", &["p", "q", "r"]), var("c", &["u", "v"])],
            vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 2, 1], vec![1, 2, 1], vec![0, 1, 1]],
        )
        .unwrap()
    }

    #[test]
    fn hand_eta() {
        assert_abs_diff_eq!(eta_squared(&[-1.0, 0.0, 1.0], &[0, 0, 1]), 0.75, epsilon = 1e-12);
        assert_eq!(eta_squared(&[1.0, 2.0], &[0, 0]), 0.0);
        assert_eq!(eta_squared(&[1.0, 1.0], &[0, 1]), 0.0);
        assert_abs_diff_eq!(eta_squared(&[1.0, 1.0, 3.0], &[0, 0, 1]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn total_inertia_identity() {
        let r = mca(&toy()).unwrap();
        let (j, q) = (r.categories as f64, r.variables.len() as f64);
        assert_abs_diff_eq!(r.map.total_inertia, (j - q) / q, epsilon = 1e-12);
    }

    #[test]
    fn identical_subjects_coincide() {
        let r = mca(&toy()).unwrap();
        let a = &r.map.row("3").unwrap().coords;
        let b = &r.map.row("4").unwrap().coords;
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_variable_dropped() {
        let t = CategoricalTable::new(
            vec!["1".into(), "2".into(), "3".into()],
            vec![var("a", &["x", "y"]), var("k", &["x", "y"]), var("b", &["x", "y"])],
            vec![vec![0, 1, 0], vec![1, 1, 1], vec![1, 1, 0]],
        )
        .unwrap();
        let r = mca(&t).unwrap();
        assert_eq!(r.variables, vec!["a", "b"]);
        assert!(r.map.warnings.iter().any(|w| w.contains("k")));
        let eta = variable_axis_correlation(&t, &r.map, 2).unwrap();
        assert!(eta.values[1].iter().all(|&v| v == 0.0));
    }
}

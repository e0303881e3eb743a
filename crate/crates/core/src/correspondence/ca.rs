use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

/// Eigenvalues (squared singular values) at or below this are treated as zero axes.
const AXIS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub id: String,
    pub mass: f64,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptualMap {
    pub rows: Vec<MapPoint>,
    pub cols: Vec<MapPoint>,
    pub eigenvalues: Vec<f64>,
    pub inertia_pct: Vec<f64>,
    pub total_inertia: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PerceptualMap {
    pub fn axes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn row(&self, id: &str) -> Option<&MapPoint> {
        self.rows.iter().find(|p| p.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Correspondence analysis with principal coordinates for rows and columns.
/// All-zero rows and columns are dropped with a warning. Each axis is signed
/// so that its largest-magnitude row loading is positive.
pub fn correspondence_analysis(
    row_ids: &[String],
    col_ids: &[String],
    table: &[Vec<f64>],
) -> Result<PerceptualMap> {
    if table.len() != row_ids.len() {
        return Err(ForgeError::InvalidParameter(format!(
            "{} rows for {} row ids",
            table.len(),
            row_ids.len()
        )));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != col_ids.len() {
            return Err(ForgeError::RaggedRow {
                row: i + 1,
                expected: col_ids.len(),
                found: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ForgeError::Cell {
                    row: i + 1,
                    column: col_ids[j].clone(),
                    message: format!("contingency entries must be finite and non-negative, got {v}"),
                });
            }
        }
    }

    let mut warnings = Vec::new();
    let keep_rows: Vec<usize> = (0..row_ids.len())
        .filter(|&i| {
            let nonzero = table[i].iter().any(|&v| v > 0.0);
            if !nonzero {
                warnings.push(format!("dropped all-zero row {}", row_ids[i]));
            }
            nonzero
        })
        .collect();
    let keep_cols: Vec<usize> = (0..col_ids.len())
        .filter(|&j| {
            let nonzero = table.iter().any(|r| r[j] > 0.0);
            if !nonzero {
                warnings.push(format!("dropped all-zero column {}", col_ids[j]));
            }
            nonzero
        })
        .collect();

    let (nr, nc) = (keep_rows.len(), keep_cols.len());
    let empty = |ids: &[String], keep: &[usize]| -> Vec<MapPoint> {
        keep.iter()
            .map(|&i| MapPoint {
                id: ids[i].clone(),
                mass: 0.0,
                coords: Vec::new(),
            })
            .collect()
    };
    if nr == 0 || nc == 0 {
        return Ok(PerceptualMap {
            rows: empty(row_ids, &keep_rows),
            cols: empty(col_ids, &keep_cols),
            eigenvalues: Vec::new(),
            inertia_pct: Vec::new(),
            total_inertia: 0.0,
            warnings,
        });
    }

    let total: f64 = keep_rows
        .iter()
        .map(|&i| keep_cols.iter().map(|&j| table[i][j]).sum::<f64>())
        .sum();
    let p = DMatrix::from_fn(nr, nc, |a, b| table[keep_rows[a]][keep_cols[b]] / total);
    let r: Vec<f64> = (0..nr).map(|a| p.row(a).sum()).collect();
    let c: Vec<f64> = (0..nc).map(|b| p.column(b).sum()).collect();
    let s = DMatrix::from_fn(nr, nc, |a, b| (p[(a, b)] - r[a] * c[b]) / (r[a] * c[b]).sqrt());
    let total_inertia: f64 = s.iter().map(|v| v * v).sum();

    let (u, v, sigmas) = singular_triplets(&s);

    let mut row_coords = vec![Vec::with_capacity(sigmas.len()); nr];
    let mut col_coords = vec![Vec::with_capacity(sigmas.len()); nc];
    let mut eigenvalues = Vec::with_capacity(sigmas.len());
    for (k, &sigma) in sigmas.iter().enumerate() {
        let mut pivot = 0;
        for a in 1..nr {
            if u[(a, k)].abs() > u[(pivot, k)].abs() + 1e-12 {
                pivot = a;
            }
        }
        let sign = if u[(pivot, k)] < 0.0 { -1.0 } else { 1.0 };
        for (a, coords) in row_coords.iter_mut().enumerate() {
            coords.push(sign * u[(a, k)] * sigma / r[a].sqrt());
        }
        for (b, coords) in col_coords.iter_mut().enumerate() {
            coords.push(sign * v[(b, k)] * sigma / c[b].sqrt());
        }
        eigenvalues.push(sigma * sigma);
    }
    let inertia_pct = eigenvalues
        .iter()
        .map(|e| if total_inertia > 0.0 { 100.0 * e / total_inertia } else { 0.0 })
        .collect();

    let points = |ids: &[String], keep: &[usize], mass: &[f64], coords: Vec<Vec<f64>>| {
        keep.iter()
            .zip(coords)
            .enumerate()
            .map(|(a, (&i, coords))| MapPoint {
                id: ids[i].clone(),
                mass: mass[a],
                coords,
            })
            .collect()
    };
    Ok(PerceptualMap {
        rows: points(row_ids, &keep_rows, &r, row_coords),
        cols: points(col_ids, &keep_cols, &c, col_coords),
        eigenvalues,
        inertia_pct,
        total_inertia,
        warnings,
    })
}

/// Nonzero singular triplets of `s`, largest first, from the symmetric
/// eigendecomposition of the smaller Gram matrix. nalgebra's bidiagonal SVD
/// loses accuracy on the rank-deficient residual matrices CA produces.
fn singular_triplets(s: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let wide = s.nrows() <= s.ncols();
    let gram = if wide { s * s.transpose() } else { s.transpose() * s };
    let dim = gram.nrows();
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.retain(|&k| eig.eigenvalues[k] > AXIS_TOL);
    let sigmas: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].sqrt()).collect();
    let small = DMatrix::from_fn(dim, order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    let mut other = if wide { s.transpose() * &small } else { s * &small };
    for (j, sigma) in sigmas.iter().enumerate() {
        other.column_mut(j).scale_mut(1.0 / sigma);
    }
    if wide {
        (small, other, sigmas)
    } else {
        (other, small, sigmas)
    }
}

/// Pearson chi-square statistic of a table divided by its grand total.
pub fn chi_square_over_n(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    if n == 0.0 {
        return 0.0;
    }
    let rs: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let ncol = table.first().map_or(0, Vec::len);
    let cs: Vec<f64> = (0..ncol).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rs[i] * cs[j] / n;
            if e > 0.0 {
                chi += (o - e).powi(2) / e;
            }
        }
    }
    chi / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn diagonal_two_by_two() {
        let t = vec![vec![10.0, 0.0], vec![0.0, 10.0]];
        let m = correspondence_analysis(&ids("r", 2), &ids("c", 2), &t).unwrap();
        assert_eq!(m.axes(), 1);
        assert_abs_diff_eq!(m.inertia_pct[0], 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.total_inertia, 1.0, epsilon = 1e-12);
        assert!(m.rows[0].coords[0] * m.rows[1].coords[0] < 0.0);
    }

    #[test]
    fn independence_has_no_axes() {
        let t = vec![vec![2.0, 4.0, 6.0], vec![1.0, 2.0, 3.0]];
        let m = correspondence_analysis(&ids("r", 2), &ids("c", 3), &t).unwrap();
        assert_eq!(m.axes(), 0);
        assert_abs_diff_eq!(m.total_inertia, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_rows_dropped() {
        let t = vec![vec![3.0, 1.0], vec![0.0, 0.0], vec![1.0, 3.0]];
        let m = correspondence_analysis(&ids("r", 3), &ids("c", 2), &t).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn rejects_negative() {
        let t = vec![vec![1.0, -1.0], vec![1.0, 1.0]];
        assert!(correspondence_analysis(&ids("r", 2), &ids("c", 2), &t).is_err());
    }

    #[test]
    fn inertia_matches_chi_square() {
        let t = vec![
            vec![5.0, 2.0, 1.0, 0.0],
            vec![1.0, 6.0, 2.0, 3.0],
            vec![0.0, 1.0, 7.0, 2.0],
        ];
        let m = correspondence_analysis(&ids("r", 3), &ids("c", 4), &t).unwrap();
        assert_abs_diff_eq!(m.total_inertia, chi_square_over_n(&t), epsilon = 1e-12);
        assert_abs_diff_eq!(m.eigenvalues.iter().sum::<f64>(), m.total_inertia, epsilon = 1e-12);
        for k in 0..m.axes() {
            let wm: f64 = m.rows.iter().map(|p| p.mass * p.coords[k]).sum();
            assert_abs_diff_eq!(wm, 0.0, epsilon = 1e-12);
        }
    }
}

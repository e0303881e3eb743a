use serde::{Deserialize, Serialize};

use crate::dataset::VasDataSet;
use crate::error::{ForgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    pub raw: f64,
    /// `raw` rounded to one decimal.
    pub suggested: f64,
}

/// Mean absolute per-dimension distance over dimensions both subjects have.
/// `None` when they share no present dimension.
pub fn mean_abs_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let (sum, n) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Average over subjects of the mean per-dimension distance to the nearest
/// neighbour.
pub fn estimate_w(data: &VasDataSet) -> Result<WEstimate> {
    let n = data.n_subjects();
    if n < 2 {
        return Err(ForgeError::InvalidParameter(
            "estimating w needs at least two subjects".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..n {
        let nearest = (0..n)
            .filter(|&j| j != i)
            .filter_map(|j| mean_abs_distance(data.row(i), data.row(j)))
            .fold(f64::INFINITY, f64::min);
        if !nearest.is_finite() {
            return Err(ForgeError::NoSharedDims {
                subject: data.subjects()[i].id.clone(),
            });
        }
        total += nearest;
    }
    let raw = total / n as f64;
    Ok(WEstimate {
        raw,
        suggested: (raw * 10.0).round() / 10.0,
    })
}

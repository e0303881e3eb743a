use crate::dataset::Dimension;
use crate::error::{ForgeError, Result};

use super::merge::ProtoPersona;

pub const LOW_BAND: f64 = 0.33;
pub const HIGH_BAND: f64 = 0.67;

fn lookup<'a>(labels: &'a [Dimension], id: &str) -> Result<&'a Dimension> {
    labels
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| ForgeError::MissingLabel(id.to_string()))
}

/// Phrase for one dimension at a given mean. Scores near 0 read as the left
/// extreme, near 1 as the right one.
pub fn clause(dim: &Dimension, mean: f64) -> String {
    let left = dim.left_extreme.trim();
    let right = dim.right_extreme.trim();
    let label = dim.label.trim();
    if mean <= LOW_BAND {
        if left.is_empty() {
            format!("low on {label}")
        } else {
            left.to_string()
        }
    } else if mean >= HIGH_BAND {
        if right.is_empty() {
            format!("high on {label}")
        } else {
            right.to_string()
        }
    } else if !left.is_empty() && !right.is_empty() {
        format!("mixed between {left} and {right}")
    } else {
        format!("moderate on {label}")
    }
}

pub fn describe(p: &ProtoPersona, labels: &[Dimension]) -> Result<String> {
    let name = if p.name.trim().is_empty() {
        p.sources.join("+")
    } else {
        p.name.trim().to_string()
    };
    if p.dims.is_empty() {
        return Ok(format!("{name}: no stable traits."));
    }
    let mut clauses = Vec::with_capacity(p.dims.len());
    for d in &p.dims {
        let meta = lookup(labels, &d.dim)?;
        clauses.push(format!("{} ({})", clause(meta, d.mean), d.dim));
    }
    Ok(format!("{name}: {}.", clauses.join("; ")))
}

use std::path::PathBuf;

use forge_core::dataset::BinPolicy;
use forge_core::persona::{Linkage, DEFAULT_CONFLICT_SD};
use forge_core::{ForgeError, Result};
use serde::{Deserialize, Serialize};

/// Fixed value or estimated from the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WSetting {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl WSetting {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(WSetting::Auto(AutoTag::Auto));
        }
        s.parse::<f64>()
            .map(WSetting::Value)
            .map_err(|_| ForgeError::InvalidParameter(format!("w must be a number or \"auto\", got {s:?}")))
    }
}

fn default_w() -> WSetting {
    WSetting::Value(0.3)
}
fn default_alpha() -> f64 {
    0.1
}
fn default_betas() -> Vec<f64> {
    vec![0.25, 0.45, 0.65, 0.85]
}
fn default_cut() -> f64 {
    0.5
}
fn default_conflict() -> f64 {
    DEFAULT_CONFLICT_SD
}
fn default_axes() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Optional CSV of dimension labels (id,label,left,right).
    #[serde(default)]
    pub dims: Option<PathBuf>,
    #[serde(default = "default_w")]
    pub w: WSetting,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub linkage: Linkage,
    #[serde(default = "default_cut")]
    pub cut: f64,
    #[serde(default = "default_conflict")]
    pub conflict_sd: f64,
    #[serde(default)]
    pub exclude: Vec<String>,
    #[serde(default)]
    pub bins: Option<BinPolicy>,
    #[serde(default = "default_axes")]
    pub axes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output_dir: None,
            dims: None,
            w: default_w(),
            alpha: default_alpha(),
            betas: default_betas(),
            seed: None,
            linkage: Linkage::default(),
            cut: default_cut(),
            conflict_sd: default_conflict(),
            exclude: Vec::new(),
            bins: None,
            axes: default_axes(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(ForgeError::InvalidParameter("beta list is empty".into()));
        }
        for &b in &self.betas {
            if !(b > 0.0 && b < 1.0) {
                return Err(ForgeError::InvalidParameter(format!("beta must be in (0, 1), got {b}")));
            }
        }
        if !(0.0..=1.0).contains(&self.cut) {
            return Err(ForgeError::InvalidParameter(format!("cut height must be in [0, 1], got {}", self.cut)));
        }
        if let WSetting::Value(w) = self.w {
            if !(w > 0.0) {
                return Err(ForgeError::InvalidParameter(format!("w must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| ForgeError::InvalidParameter(format!("bad {what} {x:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"w": "auto", "seed": 7}"#).unwrap();
        assert_eq!(c.w, WSetting::Auto(AutoTag::Auto));
        assert_eq!(c.betas, vec![0.25, 0.45, 0.65, 0.85]);
        assert_eq!(c.seed, Some(7));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_and_bad() {
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"betas": []}"#).unwrap();
        assert!(c.validate().is_err());
        assert!(WSetting::parse("x").is_err());
        assert_eq!(WSetting::parse("0.2").unwrap(), WSetting::Value(0.2));
    }
}

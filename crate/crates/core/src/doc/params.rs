use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

/// Default ceiling on the inner trial count `m`.
pub const DEFAULT_TRIAL_CAP: u64 = 10_000_000;

/// Above this, the approximation guarantee of the randomized search no
/// longer holds; runs are still allowed.
pub const BETA_GUARANTEE_LIMIT: f64 = 0.5;

const FLOOR_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocParams {
    /// Half-width of the hyper-rectangle on each subspace dimension.
    pub w: f64,
    /// Minimum cluster size as a fraction of the data set.
    pub alpha: f64,
    /// Trade-off between cluster size and subspace size.
    pub beta: f64,
    pub seed: u64,
    /// Subject the cluster search is anchored on. `None` for full coverage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl DocParams {
    pub fn new(w: f64, alpha: f64, beta: f64, seed: u64) -> Self {
        DocParams {
            w,
            alpha,
            beta,
            seed,
            target: None,
        }
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target = Some(target.into());
        self
    }

    /// Range checks that do not depend on the data set.
    pub fn check_ranges(&self) -> Result<()> {
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(ForgeError::InvalidParameter(format!("w must be > 0, got {}", self.w)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ForgeError::InvalidParameter(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ForgeError::InvalidParameter(format!(
                "beta must be in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Validates against a data set shape and resolves the derived sizes.
    /// Returns advisory warnings (e.g. beta above the guarantee limit).
    pub fn plan(&self, num_dims: usize, num_subjects: usize, trial_cap: u64) -> Result<SearchPlan> {
        self.check_ranges()?;
        if num_dims == 0 {
            return Err(ForgeError::InvalidParameter("data set has no dimensions".into()));
        }
        if num_subjects < 2 {
            return Err(ForgeError::InvalidParameter(
                "need at least two subjects to sample a discrimination set".into(),
            ));
        }
        let raw_r = raw_discrimination_set_size(num_dims, self.beta);
        if raw_r < 1.0 {
            return Err(ForgeError::InvalidParameter(format!(
                "beta {} with {} dimensions gives a discrimination set smaller than one subject; raise beta",
                self.beta, num_dims
            )));
        }
        let r = discrimination_set_size(num_dims, self.beta);
        let inner = inner_trial_count_capped(self.alpha, r, trial_cap)?;
        let mut warnings = Vec::new();
        if self.beta > BETA_GUARANTEE_LIMIT {
            warnings.push(format!(
                "beta {} exceeds {}: the approximation guarantee no longer holds; rerun with several seeds to check stability",
                self.beta, BETA_GUARANTEE_LIMIT
            ));
        }
        let effective_r = r.min(num_subjects - 1);
        if effective_r < r {
            warnings.push(format!(
                "discrimination set size {r} exceeds the {} other subjects; using {effective_r}",
                num_subjects - 1
            ));
        }
        Ok(SearchPlan {
            r: effective_r,
            outer: outer_iterations(self.alpha),
            inner,
            min_size: min_cluster_size(self.alpha, num_subjects),
            warnings,
        })
    }
}

/// Derived loop sizes for one anchored search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchPlan {
    pub r: usize,
    pub outer: u64,
    pub inner: u64,
    pub min_size: usize,
    pub warnings: Vec<String>,
}

impl SearchPlan {
    pub fn total_trials(&self) -> u64 {
        self.outer * self.inner
    }
}

fn raw_discrimination_set_size(num_dims: usize, beta: f64) -> f64 {
    ((2.0 * num_dims as f64).ln() / (2.0 / beta).ln() + FLOOR_SLACK).floor()
}

/// Number of subjects sampled per trial to induce a subspace:
/// `floor(ln(2|d|) / ln(2/beta))`, never below one.
pub fn discrimination_set_size(num_dims: usize, beta: f64) -> usize {
    raw_discrimination_set_size(num_dims.max(1), beta).max(1.0) as usize
}

/// Inverse of [`discrimination_set_size`]: the beta that yields set size `r`.
pub fn beta_for_set_size(num_dims: usize, r: usize) -> f64 {
    2.0 * (-(2.0 * num_dims as f64).ln() / r as f64).exp()
}

/// `alpha = |C_min| / |S|`.
pub fn alpha_for_min_size(min_size: usize, num_subjects: usize) -> f64 {
    min_size as f64 / num_subjects as f64
}

/// `(2/alpha)^r * ln 4` before rounding up.
pub fn inner_trial_count_exact(alpha: f64, r: usize) -> f64 {
    (2.0 / alpha).powi(r as i32) * 4f64.ln()
}

/// `ceil((2/alpha)^r * ln 4)`.
pub fn inner_trial_count(alpha: f64, r: usize) -> u64 {
    inner_trial_count_exact(alpha, r).ceil() as u64
}

pub fn inner_trial_count_capped(alpha: f64, r: usize, cap: u64) -> Result<u64> {
    let exact = inner_trial_count_exact(alpha, r);
    if !exact.is_finite() || exact.ceil() > cap as f64 {
        return Err(ForgeError::TrialCap {
            trials: if exact.is_finite() { exact.ceil() as u64 } else { u64::MAX },
            cap,
        });
    }
    Ok(exact.ceil() as u64)
}

pub fn outer_iterations(alpha: f64) -> u64 {
    ((2.0 / alpha) - FLOOR_SLACK).ceil().max(1.0) as u64
}

/// Smallest accepted cluster: `ceil(alpha * |S|)`.
pub fn min_cluster_size(alpha: f64, num_subjects: usize) -> usize {
    ((alpha * num_subjects as f64) - FLOOR_SLACK).ceil().max(1.0) as usize
}

/// `|C| * (1/beta)^|D|`.
pub fn quality(cluster_size: usize, subspace_size: usize, beta: f64) -> f64 {
    cluster_size as f64 * (1.0 / beta).powi(subspace_size as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_sizes_for_published_betas() {
        assert_eq!(discrimination_set_size(47, 0.25), 2);
        assert_eq!(discrimination_set_size(47, 0.45), 3);
        assert_eq!(discrimination_set_size(47, 0.65), 4);
        assert_eq!(discrimination_set_size(47, 0.85), 5);
    }

    #[test]
    fn set_size_clamps_and_evaluates() {
        assert_eq!(discrimination_set_size(1, 0.25), 1);
        // ln 94 / ln 4 = 3.277
        assert_eq!(discrimination_set_size(47, 0.5), 3);
    }

    #[test]
    fn trial_counts() {
        assert_eq!(inner_trial_count(0.1, 2), 555);
        assert_eq!(inner_trial_count(1.0, 1), 3);
        assert_eq!(inner_trial_count(0.1, 5), 4_436_142);
        assert!(inner_trial_count_capped(0.1, 5, 1_000_000).is_err());
        assert_eq!(inner_trial_count_capped(0.1, 5, DEFAULT_TRIAL_CAP).unwrap(), 4_436_142);
    }

    #[test]
    fn quality_values() {
        assert_eq!(quality(2, 3, 0.25), 128.0);
        assert_eq!(quality(0, 7, 0.45), 0.0);
        assert!(quality(3, 24, 0.45) > quality(3, 10, 0.45));
    }

    #[test]
    fn min_size_for_twenty_subjects() {
        assert_eq!(min_cluster_size(0.1, 20), 2);
        assert_eq!(min_cluster_size(0.25, 20), 5);
        assert_eq!(min_cluster_size(0.11, 20), 3);
        assert_eq!(outer_iterations(0.1), 20);
        assert_eq!(outer_iterations(0.3), 7);
    }

    #[test]
    fn plan_rejects_bad_ranges() {
        assert!(DocParams::new(0.0, 0.1, 0.4, 1).plan(47, 20, DEFAULT_TRIAL_CAP).is_err());
        assert!(DocParams::new(0.3, 0.0, 0.4, 1).plan(47, 20, DEFAULT_TRIAL_CAP).is_err());
        assert!(DocParams::new(0.3, 0.1, 1.0, 1).plan(47, 20, DEFAULT_TRIAL_CAP).is_err());
        // beta so small that r < 1
        assert!(DocParams::new(0.3, 0.1, 0.01, 1).plan(47, 20, DEFAULT_TRIAL_CAP).is_err());
    }

    #[test]
    fn plan_warns_above_half() {
        let plan = DocParams::new(0.3, 0.1, 0.85, 1).plan(47, 20, DEFAULT_TRIAL_CAP).unwrap();
        assert_eq!(plan.r, 5);
        assert_eq!(plan.outer, 20);
        assert_eq!(plan.min_size, 2);
        assert_eq!(plan.warnings.len(), 1);
        let plan = DocParams::new(0.3, 0.1, 0.45, 1).plan(47, 20, DEFAULT_TRIAL_CAP).unwrap();
        assert!(plan.warnings.is_empty());
    }
}

//! Anchored DOC search and the full-coverage driver.
//!
//! With the pivot fixed to the target subject `o`, the test
//! `|q_k - o_k| <= w` depends only on the pair `(q, o)`, so each subject gets
//! a precomputed bitmask of dimensions on which it is close to `o`. A trial's
//! subspace is the AND of the masks of its discrimination set, and a subject
//! is a member iff its mask contains that subspace.

use std::cmp::Ordering;

use rand::Rng;
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::dataset::VasDataSet;
use crate::error::{ForgeError, Result};

use super::cluster::{beta_tag, letter_label, ClusterRun, RunParams, SubspaceCluster};
use super::params::{DocParams, SearchPlan, DEFAULT_TRIAL_CAP};

const CHUNK: u64 = 1 << 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DocOptions {
    /// Ceiling on the inner trial count `m`.
    pub trial_cap: u64,
    /// Spread trials over the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for DocOptions {
    fn default() -> Self {
        DocOptions {
            trial_cap: DEFAULT_TRIAL_CAP,
            parallel: true,
        }
    }
}

/// Dimensions on which `p` and every row of `x` are present and within `w` of `p`.
pub fn induce_subspace(p: &[Option<f64>], x: &[&[Option<f64>]], w: f64) -> Vec<usize> {
    (0..p.len())
        .filter(|&k| match p[k] {
            Some(pk) => x.iter().all(|q| matches!(q[k], Some(qk) if (qk - pk).abs() <= w)),
            None => false,
        })
        .collect()
}

/// Subjects of `data` inside the hyper-rectangle of half-width `w` around `p` on `subspace`.
pub fn cluster_membership(
    data: &VasDataSet,
    p: &[Option<f64>],
    subspace: &[usize],
    w: f64,
) -> Vec<usize> {
    (0..data.n_subjects())
        .filter(|&s| {
            subspace.iter().all(|&k| match (data.value(s, k), p[k]) {
                (Some(sk), Some(pk)) => (sk - pk).abs() <= w,
                _ => false,
            })
        })
        .collect()
}

/// Per-subject masks of the dimensions close to one anchor subject.
struct AnchorMasks {
    words: usize,
    bits: Vec<u64>,
    n: usize,
}

impl AnchorMasks {
    fn new(data: &VasDataSet, anchor: usize, w: f64) -> Self {
        let n = data.n_subjects();
        let words = data.n_dims().div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        let p = data.row(anchor);
        for s in 0..n {
            let q = data.row(s);
            for k in 0..data.n_dims() {
                if let (Some(pk), Some(qk)) = (p[k], q[k]) {
                    if (qk - pk).abs() <= w {
                        bits[s * words + k / 64] |= 1 << (k % 64);
                    }
                }
            }
        }
        AnchorMasks { words, bits, n }
    }

    fn mask(&self, s: usize) -> &[u64] {
        &self.bits[s * self.words..(s + 1) * self.words]
    }

    fn contains(&self, s: usize, subspace: &[u64]) -> bool {
        self.mask(s).iter().zip(subspace).all(|(m, d)| m & d == *d)
    }

    fn count_members(&self, subspace: &[u64]) -> usize {
        (0..self.n).filter(|&s| self.contains(s, subspace)).count()
    }

    fn members(&self, subspace: &[u64]) -> Vec<usize> {
        (0..self.n).filter(|&s| self.contains(s, subspace)).collect()
    }
}

fn subspace_indices(mask: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (wi, &word) in mask.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            out.push(wi * 64 + b);
            bits &= bits - 1;
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Candidate {
    subspace: Vec<u64>,
    size: usize,
    quality: f64,
    trial: u64,
}

/// Total order on candidates; `Less` means better. Quality first, then larger
/// cluster, then smallest member set, then earliest trial.
fn rank(a: &Candidate, b: &Candidate, masks: &AnchorMasks) -> Ordering {
    b.quality
        .total_cmp(&a.quality)
        .then(b.size.cmp(&a.size))
        .then_with(|| {
            if a.subspace == b.subspace {
                Ordering::Equal
            } else {
                masks.members(&a.subspace).cmp(&masks.members(&b.subspace))
            }
        })
        .then(a.trial.cmp(&b.trial))
}

fn better(a: Option<Candidate>, b: Option<Candidate>, masks: &AnchorMasks) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if rank(&a, &b, masks) == Ordering::Greater { b } else { a }),
        (a, b) => a.or(b),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream per (seed, target, trial) so any schedule sees the same draws.
fn trial_rng(seed: u64, target: usize, trial: u64) -> Pcg64Mcg {
    let a = splitmix64(seed ^ splitmix64(target as u64));
    let b = splitmix64(a ^ splitmix64(trial));
    Pcg64Mcg::new(((splitmix64(b) as u128) << 64) | b as u128)
}

/// Floyd's algorithm: `r` distinct subjects other than `anchor`, uniformly.
fn sample_others(rng: &mut Pcg64Mcg, n: usize, anchor: usize, r: usize, out: &mut Vec<usize>) {
    out.clear();
    let pool = n - 1;
    for j in (pool - r)..pool {
        let t = rng.random_range(0..=j);
        out.push(if out.contains(&t) { j } else { t });
    }
    for x in out.iter_mut() {
        if *x >= anchor {
            *x += 1;
        }
    }
}

struct Search<'a> {
    masks: &'a AnchorMasks,
    anchor: usize,
    plan: &'a SearchPlan,
    seed: u64,
    inv_beta: f64,
}

impl Search<'_> {
    fn run_range(&self, start: u64, end: u64) -> Option<Candidate> {
        let words = self.masks.words;
        let mut best: Option<Candidate> = None;
        let mut picked = Vec::with_capacity(self.plan.r);
        let mut subspace = vec![0u64; words];
        for trial in start..end {
            let mut rng = trial_rng(self.seed, self.anchor, trial);
            sample_others(&mut rng, self.masks.n, self.anchor, self.plan.r, &mut picked);
            subspace.copy_from_slice(self.masks.mask(self.anchor));
            for &q in &picked {
                for (d, m) in subspace.iter_mut().zip(self.masks.mask(q)) {
                    *d &= m;
                }
            }
            let dims: u32 = subspace.iter().map(|w| w.count_ones()).sum();
            if dims == 0 {
                continue;
            }
            let size = self.masks.count_members(&subspace);
            if size < self.plan.min_size {
                continue;
            }
            let cand = Candidate {
                subspace: subspace.clone(),
                size,
                quality: size as f64 * self.inv_beta.powi(dims as i32),
                trial,
            };
            let keep = match &best {
                None => true,
                Some(b) => rank(&cand, b, self.masks) == Ordering::Less,
            };
            if keep {
                best = Some(cand);
            }
        }
        best
    }

    fn run(&self, parallel: bool) -> Option<Candidate> {
        let total = self.plan.total_trials();
        let chunks = total.div_ceil(CHUNK);
        let chunk = |c: u64| self.run_range(c * CHUNK, ((c + 1) * CHUNK).min(total));
        if parallel {
            (0..chunks)
                .into_par_iter()
                .map(chunk)
                .reduce(|| None, |a, b| better(a, b, self.masks))
        } else {
            (0..chunks).map(chunk).fold(None, |a, b| better(a, b, self.masks))
        }
    }
}

/// Runs the anchored search and returns (members, subspace) as index lists.
fn search_anchor(
    data: &VasDataSet,
    anchor: usize,
    params: &DocParams,
    plan: &SearchPlan,
    options: &DocOptions,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let masks = AnchorMasks::new(data, anchor, params.w);
    let search = Search {
        masks: &masks,
        anchor,
        plan,
        seed: params.seed,
        inv_beta: 1.0 / params.beta,
    };
    search
        .run(options.parallel)
        .map(|best| (masks.members(&best.subspace), subspace_indices(&best.subspace)))
}

/// Best cluster containing `params.target`, searched over `ceil(2/alpha)`
/// outer iterations of `m` trials each.
pub fn doc_for_target(
    data: &VasDataSet,
    params: &DocParams,
    options: &DocOptions,
) -> Result<SubspaceCluster> {
    let target = params
        .target
        .as_deref()
        .ok_or_else(|| ForgeError::InvalidParameter("doc_for_target needs a target subject".into()))?;
    let anchor = data.require_subject(target)?;
    let plan = params.plan(data.n_dims(), data.n_subjects(), options.trial_cap)?;
    let (members, subspace) = search_anchor(data, anchor, params, &plan, options)
        .ok_or_else(|| ForgeError::NoClusterFound {
            subject: target.to_string(),
        })?;
    Ok(SubspaceCluster::from_indices(
        format!("A{}", beta_tag(params.beta)),
        data,
        &members,
        &subspace,
        params.beta,
    ))
}

/// One anchored search per subject; identical (members, subspace) results
/// are merged and the rest labelled A, B, C… by descending quality with the
/// beta tag appended.
pub fn doc_full_coverage(
    data: &VasDataSet,
    params: &DocParams,
    options: &DocOptions,
) -> Result<ClusterRun> {
    let plan = params.plan(data.n_dims(), data.n_subjects(), options.trial_cap)?;
    let mut warnings = plan.warnings.clone();
    let mut found: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for anchor in 0..data.n_subjects() {
        match search_anchor(data, anchor, params, &plan, options) {
            Some(hit) => {
                if !found.contains(&hit) {
                    found.push(hit);
                }
            }
            None => warnings.push(
                ForgeError::NoClusterFound {
                    subject: data.subjects()[anchor].id.clone(),
                }
                .to_string(),
            ),
        }
    }
    let mut clusters: Vec<(f64, Vec<usize>, Vec<usize>)> = found
        .into_iter()
        .map(|(m, d)| (super::params::quality(m.len(), d.len(), params.beta), m, d))
        .collect();
    clusters.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.len().cmp(&a.1.len()))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let tag = beta_tag(params.beta);
    let clusters: Vec<SubspaceCluster> = clusters
        .iter()
        .enumerate()
        .map(|(i, (_, m, d))| {
            SubspaceCluster::from_indices(format!("{}{tag}", letter_label(i)), data, m, d, params.beta)
        })
        .collect();

    let mut covered = vec![false; data.n_subjects()];
    for c in &clusters {
        for m in &c.members {
            covered[data.subject_index(m).expect("member ids come from data")] = true;
        }
    }
    for (i, ok) in covered.iter().enumerate() {
        if !ok {
            warnings.push(format!("subject {:?} is not covered by any cluster", data.subjects()[i].id));
        }
    }
    Ok(ClusterRun {
        params: RunParams {
            w: params.w,
            alpha: params.alpha,
            beta: params.beta,
            seed: Some(params.seed),
        },
        clusters,
        warnings,
    })
}

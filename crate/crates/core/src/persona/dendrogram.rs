use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::similarity::SimilarityMatrix;
use crate::error::{ForgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

impl FromStr for Linkage {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(ForgeError::InvalidParameter(format!("unknown linkage {other:?}"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        })
    }
}

/// One agglomeration step. Node ids below `leaves.len()` are leaves; merge
/// `i` creates node `leaves.len() + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    #[serde(default)]
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

/// Agglomerative clustering on `1 - similarity`. Among equally close pairs the
/// one with the smallest (lower, higher) node-id pair merges first.
pub fn build_dendrogram(sims: &SimilarityMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = sims.len();
    if n < 2 {
        return Err(ForgeError::InvalidParameter(
            "a dendrogram needs at least two clusters".into(),
        ));
    }
    let total = 2 * n - 1;
    let mut dist = vec![vec![0.0f64; total]; total];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = 1.0 - sims.get(i, j);
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a][b];
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => d < bd || (d == bd && (a, b) < (ba, bb)),
                };
                if better {
                    best = Some((d, a, b));
                }
            }
        }
        let (height, a, b) = best.expect("at least two active nodes");
        let node = n + step;
        size[node] = size[a] + size[b];
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let d = match linkage {
                Linkage::Single => dist[a][k].min(dist[b][k]),
                Linkage::Complete => dist[a][k].max(dist[b][k]),
                Linkage::Average => {
                    (size[a] as f64 * dist[a][k] + size[b] as f64 * dist[b][k])
                        / (size[a] + size[b]) as f64
                }
            };
            dist[node][k] = d;
            dist[k][node] = d;
        }
        active.retain(|&k| k != a && k != b);
        active.push(node);
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[node],
        });
    }
    Ok(Dendrogram {
        leaves: sims.ids.clone(),
        linkage,
        merges,
    })
}

impl Dendrogram {
    pub fn root_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.height)
    }

    /// Leaves in left-to-right drawing order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.leaves.len();
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(node) = stack.pop() {
            if node < n {
                out.push(node);
            } else {
                let m = &self.merges[node - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }

    /// Partition of the leaves obtained by keeping only merges at or below
    /// `height`. Sets are ordered by their first leaf; leaves keep input order.
    pub fn cut(&self, height: f64) -> Vec<Vec<String>> {
        let n = self.leaves.len();
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().enumerate() {
            if m.height <= height {
                let node = n + i;
                let l = find(&mut parent, m.left);
                let r = find(&mut parent, m.right);
                parent[l] = node;
                parent[r] = node;
            }
        }
        let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            match groups.iter_mut().find(|(r, _)| *r == root) {
                Some((_, g)) => g.push(self.leaves[leaf].clone()),
                None => groups.push((root, vec![self.leaves[leaf].clone()])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn cut_dendrogram(dend: &Dendrogram, height: f64) -> Result<Vec<Vec<String>>> {
    if !(0.0..=1.0).contains(&height) {
        return Err(ForgeError::InvalidParameter(format!(
            "cut height must be in [0, 1], got {height}"
        )));
    }
    Ok(dend.cut(height))
}

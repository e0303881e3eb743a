//! Seeded synthetic datasets for tests and demos.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::dataset::VasDataSet;
use crate::error::Result;

/// Dataset with one planted cluster: `members` subjects agree within `width`
/// on `dims` dimensions; every other value is uniform on [0, 1].
#[derive(Clone, Debug)]
pub struct Planted {
    pub data: VasDataSet,
    pub members: Vec<String>,
    pub dims: Vec<String>,
}

pub fn planted_cluster(
    seed: u64,
    subjects: usize,
    num_dims: usize,
    members: usize,
    dims: usize,
    width: f64,
) -> Result<Planted> {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut rows: Vec<Vec<Option<f64>>> = (0..subjects)
        .map(|_| (0..num_dims).map(|_| Some(rng.random::<f64>())).collect())
        .collect();
    let member_idx = rand::seq::index::sample(&mut rng, subjects, members).into_vec();
    let dim_idx = rand::seq::index::sample(&mut rng, num_dims, dims).into_vec();
    for &k in &dim_idx {
        let lo = rng.random_range(0.0..=1.0 - width);
        for &s in &member_idx {
            rows[s][k] = Some(lo + width * rng.random::<f64>());
        }
    }
    let data = VasDataSet::from_rows(rows)?;
    let mut member_idx = member_idx;
    let mut dim_idx = dim_idx;
    member_idx.sort_unstable();
    dim_idx.sort_unstable();
    Ok(Planted {
        members: member_idx.iter().map(|&i| data.subjects()[i].id.clone()).collect(),
        dims: dim_idx.iter().map(|&k| data.dimensions()[k].id.clone()).collect(),
        data,
    })
}

/// Uniform random dataset with roughly `missing_rate` of the cells missing.
pub fn uniform(seed: u64, subjects: usize, num_dims: usize, missing_rate: f64) -> Result<VasDataSet> {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let rows = (0..subjects)
        .map(|_| {
            (0..num_dims)
                .map(|_| {
                    let v: f64 = rng.random();
                    (rng.random::<f64>() >= missing_rate).then_some(v)
                })
                .collect()
        })
        .collect();
    VasDataSet::from_rows(rows)
}

/// Interview-like ratings: two subject groups that lean to opposite extremes
/// on a subset of dimensions, a weaker second trait, polarized answers and a
/// few gaps.
pub fn interview_like(seed: u64, subjects: usize, num_dims: usize) -> Result<VasDataSet> {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let group: Vec<f64> = (0..subjects).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let trait2: Vec<f64> = (0..subjects).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loadings: Vec<(f64, f64)> = (0..num_dims)
        .map(|_| {
            let a = if rng.random::<f64>() < 0.5 { rng.random_range(-1.0..1.0) } else { 0.0 };
            let b = if rng.random::<f64>() < 0.4 { rng.random_range(-1.0..1.0) } else { 0.0 };
            (a, b)
        })
        .collect();
    let rows = (0..subjects)
        .map(|s| {
            loadings
                .iter()
                .map(|&(a, b)| {
                    if rng.random::<f64>() < 0.05 {
                        return None;
                    }
                    let z = 2.5 * (a * group[s] + b * trait2[s]) + rng.random_range(-1.2..1.2);
                    let v = 1.0 / (1.0 + (-2.0 * z).exp());
                    Some((v * 100.0).round() / 100.0)
                })
                .collect()
        })
        .collect();
    VasDataSet::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_members_agree() {
        let p = planted_cluster(7, 20, 47, 4, 12, 0.1).unwrap();
        assert_eq!(p.members.len(), 4);
        assert_eq!(p.dims.len(), 12);
        for d in &p.dims {
            let k = p.data.dimension_index(d).unwrap();
            let vals: Vec<f64> = p
                .members
                .iter()
                .map(|m| p.data.value(p.data.subject_index(m).unwrap(), k).unwrap())
                .collect();
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread <= 0.1);
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(
            interview_like(3, 20, 47).unwrap().rows(),
            interview_like(3, 20, 47).unwrap().rows()
        );
    }
}

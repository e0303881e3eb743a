use forge_core::correspondence::{chi_square_over_n, correspondence_analysis, mca};
use forge_core::dataset::{bin_to_categories, BinCount, BinPolicy};
use forge_core::doc::{doc_for_target, doc_full_coverage, min_cluster_size, DocOptions, DocParams, SubspaceCluster};
use forge_core::persona::{build_dendrogram, merge_clusters, similarity, Linkage, SimilarityMatrix};
use forge_core::VasDataSet;
use indexmap::IndexMap;
use proptest::prelude::*;

fn cluster_strategy() -> impl Strategy<Value = SubspaceCluster> {
    (
        proptest::collection::btree_map(0usize..12, 0.0f64..=1.0, 1..8),
        proptest::collection::btree_set(1usize..20, 2..6),
    )
        .prop_map(|(dims, members)| {
            let means: IndexMap<String, f64> = dims.into_iter().map(|(k, v)| (format!("d{k}"), v)).collect();
            SubspaceCluster {
                id: "X".into(),
                members: members.into_iter().map(|m| m.to_string()).collect(),
                subspace: means.keys().cloned().collect(),
                means,
                quality: 1.0,
            }
        })
}

fn table_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..7, 2usize..7).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0u32..20, c), r)
            .prop_map(|t| t.into_iter().map(|row| row.into_iter().map(f64::from).collect()).collect())
    })
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

proptest! {
    #[test]
    fn similarity_is_symmetric_and_bounded(a in cluster_strategy(), b in cluster_strategy()) {
        let s = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, similarity(&b, &a));
        prop_assert!((similarity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_ignores_members(a in cluster_strategy(), b in cluster_strategy()) {
        let mut relabelled = a.clone();
        relabelled.members = relabelled.members.iter().map(|m| format!("x{m}")).collect();
        prop_assert_eq!(similarity(&a, &b), similarity(&relabelled, &b));
    }

    #[test]
    fn dendrogram_cuts_refine(cs in proptest::collection::vec(cluster_strategy(), 2..9), h1 in 0.0f64..1.0, h2 in 0.0f64..1.0) {
        let cs: Vec<SubspaceCluster> = cs.into_iter().enumerate().map(|(i, mut c)| { c.id = format!("C{i}"); c }).collect();
        let d = build_dendrogram(&SimilarityMatrix::compute(&cs), Linkage::Average).unwrap();
        for w in d.merges.windows(2) {
            prop_assert!(w[1].height >= w[0].height - 1e-12);
        }
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let fine = d.cut(lo);
        let coarse = d.cut(hi);
        for set in &fine {
            prop_assert!(coarse.iter().any(|c| set.iter().all(|id| c.contains(id))));
        }
        prop_assert_eq!(d.cut(1.0).len(), 1);
    }

    #[test]
    fn merging_copies_keeps_means(c in cluster_strategy(), n in 1usize..6) {
        let set = vec![c.clone(); n];
        let p = merge_clusters(&set, 0.15).unwrap();
        prop_assert_eq!(p.dims.len(), c.subspace.len());
        for d in &p.dims {
            prop_assert!((d.mean - c.means[d.dim.as_str()]).abs() < 1e-12);
            prop_assert!(d.std_dev < 1e-12);
        }
    }

    #[test]
    fn ca_inertia_and_duality(t in table_strategy()) {
        let map = correspondence_analysis(&ids("r", t.len()), &ids("c", t[0].len()), &t).unwrap();
        let kept: Vec<Vec<f64>> = t.iter().filter(|r| r.iter().any(|&v| v > 0.0)).cloned().collect();
        let cols: Vec<usize> = (0..t[0].len()).filter(|&j| t.iter().any(|r| r[j] > 0.0)).collect();
        let kept: Vec<Vec<f64>> = kept.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
        if kept.is_empty() {
            prop_assert_eq!(map.axes(), 0);
            return Ok(());
        }
        prop_assert!((map.total_inertia - chi_square_over_n(&kept)).abs() < 1e-9);
        let pct: f64 = map.inertia_pct.iter().sum();
        if map.axes() > 0 {
            prop_assert!((pct - 100.0).abs() < 1e-6);
        }
        for w in map.inertia_pct.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (k, &eig) in map.eigenvalues.iter().enumerate() {
            let sigma = eig.sqrt();
            let wm: f64 = map.rows.iter().map(|p| p.mass * p.coords[k]).sum();
            prop_assert!(wm.abs() < 1e-9);
            for (i, row) in kept.iter().enumerate() {
                let total: f64 = row.iter().sum();
                let avg: f64 = row.iter().zip(&map.cols).map(|(v, c)| v / total * c.coords[k]).sum();
                prop_assert!((map.rows[i].coords[k] - avg / sigma).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ca_permutation_equivariance(t in table_strategy(), shift in 1usize..6) {
        let n = t.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let row_ids = ids("r", n);
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| t[i].clone()).collect();
        let permuted_ids: Vec<String> = perm.iter().map(|&i| row_ids[i].clone()).collect();
        let a = correspondence_analysis(&row_ids, &ids("c", t[0].len()), &t).unwrap();
        let b = correspondence_analysis(&permuted_ids, &ids("c", t[0].len()), &permuted).unwrap();
        prop_assert_eq!(a.axes(), b.axes());
        for (k, (ea, eb)) in a.eigenvalues.iter().zip(&b.eigenvalues).enumerate() {
            prop_assert!((ea - eb).abs() < 1e-9);
            // Axes with repeated eigenvalues have no unique basis.
            let distinct = a.eigenvalues.iter().enumerate().all(|(j, e)| j == k || (e - ea).abs() > 1e-6);
            if !distinct { continue; }
            let sign = {
                let pa = &a.rows[0];
                let pb = b.row(&pa.id).unwrap();
                if pa.coords[k].abs() < 1e-9 { 1.0 } else { (pa.coords[k] * pb.coords[k]).signum() }
            };
            for p in &a.rows {
                let q = b.row(&p.id).unwrap();
                prop_assert!((p.coords[k].abs() - q.coords[k].abs()).abs() < 1e-9);
                prop_assert!((p.coords[k] - sign * q.coords[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn doc_clusters_are_sound(seed in 0u64..1000) {
        let data = forge_core::synth::uniform(seed, 8, 6, 0.1).unwrap();
        let params = DocParams::new(0.3, 0.25, 0.65, seed);
        let run = doc_full_coverage(&data, &params, &DocOptions::default()).unwrap();
        let min = min_cluster_size(0.25, 8);
        for c in &run.clusters {
            prop_assert!(c.check_against(&data, 0.3, min).is_ok());
        }
        for s in data.subjects() {
            let covered = run.clusters.iter().any(|c| c.members.contains(&s.id));
            let reported = run.warnings.iter().any(|w| w.contains(&format!("{:?}", s.id)) || w.contains(&s.id));
            prop_assert!(covered || reported);
        }
    }
}

#[test]
fn mca_inertia_identity_on_look_alike() {
    let data = forge_core::synth::interview_like(11, 20, 47).unwrap();
    let t = bin_to_categories(&data, &BinPolicy::uniform(BinCount::Auto)).unwrap();
    let r = mca(&t).unwrap();
    let (j, q) = (r.categories as f64, r.variables.len() as f64);
    assert!((r.map.total_inertia - (j - q) / q).abs() < 1e-9);
}

#[test]
fn target_is_always_a_member() {
    let data = forge_core::synth::uniform(5, 12, 10, 0.0).unwrap();
    for s in data.subjects() {
        let params = DocParams::new(0.3, 0.2, 0.65, 9).with_target(s.id.clone());
        let c = doc_for_target(&data, &params, &DocOptions::default()).unwrap();
        assert!(c.members.contains(&s.id));
    }
}

#[test]
fn duplicate_pair_is_one_cluster() {
    let data = VasDataSet::from_rows(vec![vec![Some(0.2), Some(0.7)], vec![Some(0.2), Some(0.7)]]).unwrap();
    let run = doc_full_coverage(&data, &DocParams::new(0.3, 0.1, 0.65, 1), &DocOptions::default()).unwrap();
    assert_eq!(run.clusters.len(), 1);
    assert_eq!(run.clusters[0].members, vec!["1", "2"]);
}

mod common;

use mshf::evaluation::{fitting_error, generate_scene, SceneSpec};
use mshf::sampling::{sample_hypotheses, SamplerConfig};
use mshf::{DataSet, ModelKind};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_labels(r: &mut impl Rng, n: usize, clusters: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..=clusters)).collect()
}

#[test]
fn fitting_error_matches_permutation_oracle() {
    let mut r = common::rng(14);
    for trial in 0..200 {
        let n = r.random_range(1..60);
        let (ke, kt) = (r.random_range(0..=5), r.random_range(0..=5));
        let est = random_labels(&mut r, n, ke);
        let mut truth = random_labels(&mut r, n, kt);
        // Make some pairs strongly correlated so the optimum is non-trivial.
        if trial % 2 == 0 {
            for (t, e) in truth.iter_mut().zip(&est) {
                if r.random::<f64>() < 0.7 {
                    *t = (*e * 7) % 6;
                }
            }
        }
        assert_eq!(fitting_error(&est, &truth).unwrap(), common::permutation_error(&est, &truth), "trial {trial}");
    }
}

proptest! {
    #[test]
    fn fitting_error_is_invariant_to_relabelling(
        est in proptest::collection::vec(0usize..6, 1..80),
        truth_seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        let mut r = common::rng(truth_seed);
        let truth = random_labels(&mut r, est.len(), 5);
        let mut ids: Vec<usize> = (1..=5).map(|k| 10 * k + 3).collect();
        ids.shuffle(&mut common::rng(perm_seed));
        let renamed: Vec<usize> = est.iter().map(|&l| if l == 0 { 0 } else { ids[l - 1] }).collect();
        let e = fitting_error(&est, &truth).unwrap();
        prop_assert_eq!(e, fitting_error(&renamed, &truth).unwrap());
        prop_assert_eq!(e, fitting_error(&truth, &est).unwrap());
        prop_assert!((0.0..=100.0).contains(&e));
        prop_assert_eq!(fitting_error(&est, &est).unwrap(), 0.0);
    }
}

#[test]
fn scenes_have_requested_counts() {
    for spec in SceneSpec::catalog() {
        let s = generate_scene(spec, 1).unwrap();
        let (inliers, outliers) = spec.counts();
        for (k, &count) in inliers.iter().enumerate() {
            assert_eq!(s.true_labels.iter().filter(|&&l| l == k + 1).count(), count, "{spec}");
        }
        assert_eq!(s.true_labels.iter().filter(|&&l| l == 0).count(), outliers, "{spec}");
        assert_eq!(s.data.len(), s.true_labels.len());
        assert_eq!(generate_scene(spec, 1).unwrap(), s);
    }
    let (inl, _) = SceneSpec::UnbalancedLines(8.0).counts();
    assert_eq!(inl[0], 8 * inl[2]);
    assert_eq!(generate_scene(SceneSpec::Lines3D(3), 0).unwrap().data.len(), 700);
}

#[test]
fn proximity_sampling_favours_same_cluster_subsets() {
    let mut r = common::rng(21);
    let mut rows = Vec::new();
    for c in [0.0, 1000.0] {
        for _ in 0..200 {
            rows.push([c + r.random_range(0.0..50.0), r.random_range(0.0..50.0)]);
        }
    }
    let data = DataSet::from_rows(2, &rows).unwrap();
    let cfg = SamplerConfig { hypothesis_count: 10_000, proximity_sigma: Some(100.0), rng_seed: 4, ..Default::default() };
    let pool = sample_hypotheses(&data, ModelKind::Circle2D, &cfg).unwrap();
    let same = pool.hypotheses.iter().filter(|h| h.subset.iter().all(|&i| (i < 200) == (h.subset[0] < 200))).count();
    let frac = same as f64 / pool.hypotheses.len() as f64;
    // Uniform draws of three distinct points: 2 · C(200,3) / C(400,3) ≈ 0.248.
    let uniform = 2.0 * (200.0 * 199.0 * 198.0) / (400.0 * 399.0 * 398.0);
    let sd = (uniform * (1.0 - uniform) / pool.hypotheses.len() as f64).sqrt();
    assert!(frac > uniform + 10.0 * sd, "{frac} vs {uniform}");
    assert!(frac > 0.99);
}

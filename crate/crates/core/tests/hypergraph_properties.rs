mod common;

use mshf::evaluation::{generate_scene, SceneSpec};
use mshf::hypergraph::{build_hypergraph, reduce_hypergraph, vertex_weight, Hypergraph, Vertex};
use mshf::sampling::{sample_hypotheses, SamplerConfig};
use mshf::scale::{ScaleConfig, INLIER_BAND};
use mshf::{ModelKind, ModelParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn weighted_graph(weights: &[f64]) -> Hypergraph {
    let vertices = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Vertex {
            params: ModelParams::Line2D([1.0, 0.0, -(i as f64)]),
            scale: 1.0,
            incidence: vec![0],
            inlier_residuals: vec![0.0],
            weight: w,
            bandwidth: 1.0,
            source: i,
        })
        .collect();
    Hypergraph::from_vertices(ModelKind::Line2D, 1, vertices)
}

/// Retention decided from a prior and entropy computed here, not by the library.
fn oracle_retained(weights: &[f64], xi: f64) -> Vec<usize> {
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let positive: f64 = weights.iter().map(|w| mean - w).filter(|q| *q > 0.0).sum();
    if positive <= 0.0 {
        return (0..weights.len()).collect();
    }
    let p: Vec<f64> = weights.iter().map(|w| if mean - w > 0.0 { (mean - w) / positive } else { xi }).collect();
    let e: f64 = -p.iter().map(|x| x * x.ln()).sum::<f64>();
    (0..weights.len()).filter(|&i| -p[i].ln() > e).collect()
}

#[test]
fn reduction_keeps_every_above_mean_vertex_on_random_weight_sets() {
    let mut r = common::rng(7);
    for trial in 0..1000 {
        let m = r.random_range(1..300);
        let weights: Vec<f64> = (0..m)
            .map(|_| match r.random_range(0..3) {
                0 => r.random_range(0.0..1.0),
                1 => r.random_range(0.0f64..8.0).exp(),
                _ => f64::from(r.random_range(0..5u8)),
            })
            .collect();
        let xi = [1e-12, 1e-9, 1e-6][trial % 3];
        let g = weighted_graph(&weights);
        let (reduced, report) = reduce_hypergraph(&g, xi);
        let mean = weights.iter().sum::<f64>() / m as f64;
        for (i, w) in weights.iter().enumerate() {
            if *w > mean {
                assert!(report.retained.contains(&i), "trial {trial}: vertex {i} above mean dropped");
            }
        }
        assert_eq!(report.retained, oracle_retained(&weights, xi), "trial {trial}");
        assert_eq!(reduced.len(), report.retained.len());
        assert_eq!(reduced.num_hyperedges(), g.num_hyperedges());
    }
}

proptest! {
    #[test]
    fn weight_ignores_non_incident_residuals(
        res in proptest::collection::vec(0.0f64..5.0, 5..60),
        noise in proptest::collection::vec(0.0f64..1e6, 60),
        scale in 0.1f64..3.0,
    ) {
        let inc: Vec<usize> = (0..res.len()).filter(|&e| res[e] <= INLIER_BAND * scale).collect();
        prop_assume!(!inc.is_empty());
        let mut perturbed = res.clone();
        for (e, r) in perturbed.iter_mut().enumerate() {
            if !inc.contains(&e) {
                *r = noise[e];
            }
        }
        prop_assert_eq!(vertex_weight(&res, &inc, scale, 0.7), vertex_weight(&perturbed, &inc, scale, 0.7));

        // Pushing outliers further out does not change a vertex built from residuals.
        let far: Vec<f64> = res.iter().map(|&r| if r > INLIER_BAND * scale { r + noise[0] } else { r }).collect();
        let p = ModelParams::Line2D([1.0, 0.0, 0.0]);
        let a = Vertex::from_residuals(p, scale, &res, 0);
        let b = Vertex::from_residuals(p, scale, &far, 0);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn build_is_deterministic_and_order_independent() {
    let scene = generate_scene(SceneSpec::Lines2D(3), 5).unwrap();
    let cfg = SamplerConfig { hypothesis_count: 400, rng_seed: 9, ..SamplerConfig::default() };
    let params = sample_hypotheses(&scene.data, ModelKind::Line2D, &cfg).unwrap().params();
    let sc = ScaleConfig::default();
    let g = build_hypergraph(&scene.data, &params, &sc).unwrap();
    assert_eq!(g, build_hypergraph(&scene.data, &params, &sc).unwrap());

    let mut perm: Vec<usize> = (0..params.len()).collect();
    perm.shuffle(&mut common::rng(3));
    let shuffled: Vec<ModelParams> = perm.iter().map(|&i| params[i]).collect();
    let h = build_hypergraph(&scene.data, &shuffled, &sc).unwrap();
    assert_eq!(g.len(), h.len());
    assert_eq!(g.stats(), h.stats());
    for v in h.vertices() {
        let original = perm[v.source];
        let u = g.vertices().iter().find(|u| u.source == original).expect("same vertex kept");
        assert_eq!(Vertex { source: original, ..v.clone() }, *u);
    }
}

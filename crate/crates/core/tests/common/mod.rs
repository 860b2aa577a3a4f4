//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use mshf::hypergraph::{Hypergraph, Vertex};
use mshf::mode_seeking::{NeighborOverlap, PeakRule, Variant};
use mshf::{ModelKind, ModelParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random hypergraph whose vertices perturb a few shared "structures", so that
/// highly overlapping incidence sets (and hence neighbours) are common.
/// Weights are drawn from a small grid with probability `tie_rate` to create ties.
pub fn random_hypergraph(seed: u64, m: usize, n: usize, tie_rate: f64) -> Hypergraph {
    let mut r = rng(seed);
    let structures: Vec<Vec<usize>> = (0..r.random_range(1..=5))
        .map(|_| {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut r);
            let size = r.random_range(3..=n.min(40).max(3));
            let mut s = all[..size.min(n)].to_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let vertices = (0..m)
        .map(|i| {
            let base = &structures[r.random_range(0..structures.len())];
            let mut inc: Vec<usize> = base.iter().copied().filter(|_| r.random::<f64>() > 0.1).collect();
            for _ in 0..r.random_range(0..3) {
                inc.push(r.random_range(0..n));
            }
            if r.random::<f64>() < 0.05 {
                inc.clear();
            }
            inc.sort_unstable();
            inc.dedup();
            let scale = r.random_range(0.1..3.0);
            let inlier_residuals = inc.iter().map(|_| r.random_range(0.0..2.5 * scale)).collect();
            let weight = if r.random::<f64>() < tie_rate {
                f64::from(r.random_range(0..4u8))
            } else {
                r.random_range(0.0..10.0)
            };
            Vertex {
                params: ModelParams::Line2D([1.0, 0.0, -(i as f64)]),
                scale,
                incidence: inc,
                inlier_residuals,
                weight,
                bandwidth: 1.0,
                source: i,
            }
        })
        .collect();
    Hypergraph::from_vertices(ModelKind::Line2D, n, vertices)
}

fn dense_preference(v: &Vertex, n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    for (&e, &r) in v.incidence.iter().zip(&v.inlier_residuals) {
        p[e] = (-r / v.scale).exp();
    }
    p
}

/// Tanimoto distance on dense vectors; two zero vectors are at distance 1.
pub fn tanimoto(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    let denom = na + nb - dot;
    if denom <= 0.0 {
        1.0
    } else {
        (1.0 - dot / denom).clamp(0.0, 1.0)
    }
}

fn overlap_ratio(overlap: NeighborOverlap, a: &[usize], b: &[usize]) -> f64 {
    let c = a.iter().filter(|e| b.contains(e)).count() as f64;
    let (x, y) = (a.len() as f64, b.len() as f64);
    if x + y == 0.0 {
        return 0.0;
    }
    match overlap {
        NeighborOverlap::Dice => 2.0 * c / (x + y),
        NeighborOverlap::Jaccard => c / (x + y - c),
        NeighborOverlap::SumRatio => c / (x + y),
        NeighborOverlap::Overlap => c / x.min(y).max(1.0),
    }
}

/// `j` outranks `i`: heavier, or equally heavy with a smaller index.
pub fn heavier(w: &[f64], j: usize, i: usize) -> bool {
    w[j] > w[i] || (w[j] == w[i] && j < i)
}

/// Double-loop minimum T-distance.
pub fn brute_mtd(
    g: &Hypergraph,
    variant: Variant,
    epsilon: f64,
    overlap: NeighborOverlap,
    peak: PeakRule,
) -> Vec<(f64, bool)> {
    let n = g.num_hyperedges();
    let vs = g.vertices();
    let m = vs.len();
    let w: Vec<f64> = vs.iter().map(|v| v.weight).collect();
    let prefs: Vec<Vec<f64>> = vs.iter().map(|v| dense_preference(v, n)).collect();
    let t = |i: usize, j: usize| tanimoto(&prefs[i], &prefs[j]);
    let nb = |i: usize, j: usize| overlap_ratio(overlap, &vs[i].incidence, &vs[j].incidence) > epsilon;
    (0..m)
        .map(|i| {
            let mut omega = Vec::new();
            for j in 0..m {
                if j != i && heavier(&w, j, i) && (variant == Variant::Mshf1 || nb(i, j)) {
                    omega.push(j);
                }
            }
            if !omega.is_empty() {
                return (omega.iter().map(|&j| t(i, j)).fold(f64::INFINITY, f64::min), false);
            }
            let peak_value = match (variant, peak) {
                (Variant::Mshf2, PeakRule::NeighborMax) => {
                    (0..m).filter(|&j| j != i && nb(i, j)).map(|j| t(i, j)).fold(f64::NEG_INFINITY, f64::max)
                }
                _ => {
                    let heavier_any: Vec<usize> = (0..m).filter(|&j| j != i && heavier(&w, j, i)).collect();
                    if heavier_any.is_empty() {
                        (0..m).filter(|&j| j != i).map(|j| t(i, j)).fold(f64::NEG_INFINITY, f64::max)
                    } else {
                        heavier_any.iter().map(|&j| t(i, j)).fold(f64::INFINITY, f64::min)
                    }
                }
            };
            (if peak_value.is_finite() { peak_value } else { 1.0 }, true)
        })
        .collect()
}

/// Mislabelled percentage by trying every injective map from estimated
/// clusters to true clusters (and to "unmatched").
pub fn permutation_error(est: &[usize], truth: &[usize]) -> f64 {
    let ids = |l: &[usize]| {
        let mut v: Vec<usize> = l.iter().copied().filter(|&x| x != 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (ei, ti) = (ids(est), ids(truth));
    let mut best = 0usize;
    // assign[k] = index into ti, or None.
    fn search(
        k: usize,
        ei: &[usize],
        ti: &[usize],
        used: &mut Vec<bool>,
        assign: &mut Vec<Option<usize>>,
        est: &[usize],
        truth: &[usize],
        best: &mut usize,
    ) {
        if k == ei.len() {
            let agree = est
                .iter()
                .zip(truth)
                .filter(|(&e, &t)| {
                    if e == 0 || t == 0 {
                        return e == t;
                    }
                    let pos = ei.iter().position(|&x| x == e).unwrap();
                    assign[pos].is_some_and(|c| ti[c] == t)
                })
                .count();
            *best = (*best).max(agree);
            return;
        }
        assign.push(None);
        search(k + 1, ei, ti, used, assign, est, truth, best);
        assign.pop();
        for c in 0..ti.len() {
            if !used[c] {
                used[c] = true;
                assign.push(Some(c));
                search(k + 1, ei, ti, used, assign, est, truth, best);
                assign.pop();
                used[c] = false;
            }
        }
    }
    search(0, &ei, &ti, &mut vec![false; ti.len()], &mut Vec::new(), est, truth, &mut best);
    if truth.is_empty() {
        return 0.0;
    }
    (truth.len() - best) as f64 / truth.len() as f64 * 100.0
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

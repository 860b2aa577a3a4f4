//! Mode seeking on the reduced hypergraph.
//!
//! Each vertex is described by a sparse preference vector over hyperedges
//! (`exp(−r/ŝ)` on its inliers). The minimum Tanimoto distance (MTD) of a
//! vertex is its distance to the closest vertex of higher weight; modes are the
//! vertices that precede the largest drop in the MTD values sorted in
//! non-increasing order.
//!
//! "Higher weight" is a strict total order: ties in weight are broken by vertex
//! index, the lower index ranking higher.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hypergraph::{Hypergraph, Vertex};
use crate::scale::INLIER_BAND;

/// Default overlap threshold of the neighbour relation.
pub const DEFAULT_EPSILON: f64 = 0.8;

/// Mode-seeking variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Compares each vertex with every heavier vertex.
    #[serde(rename = "mshf1")]
    Mshf1,
    /// Restricts the comparison to heavier vertices in the neighbour set.
    #[serde(rename = "mshf2")]
    Mshf2,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Mshf1 => "mshf1",
            Variant::Mshf2 => "mshf2",
        })
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mshf1" | "1" => Ok(Variant::Mshf1),
            "mshf2" | "2" => Ok(Variant::Mshf2),
            _ => Err(format!("unknown variant `{s}` (expected mshf1 or mshf2)")),
        }
    }
}

/// Overlap ratio used to decide whether two vertices are neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeighborOverlap {
    /// `2|A∩B| / (|A|+|B|)`; 1 for identical incidence sets.
    #[serde(rename = "dice")]
    Dice,
    /// `|A∩B| / |A∪B|`.
    #[serde(rename = "jaccard")]
    Jaccard,
    /// `|A∩B| / (|A|+|B|)`, bounded by 0.5.
    #[serde(rename = "sum-ratio")]
    SumRatio,
    /// `|A∩B| / min(|A|, |B|)`: the smaller set shares that fraction of its
    /// hyperedges with the other, so nested incidence sets are neighbours.
    #[serde(rename = "overlap")]
    Overlap,
}

impl NeighborOverlap {
    #[inline]
    pub fn ratio(self, common: usize, a: usize, b: usize) -> f64 {
        if a + b == 0 {
            return 0.0;
        }
        let (c, a, b) = (common as f64, a as f64, b as f64);
        match self {
            NeighborOverlap::Dice => 2.0 * c / (a + b),
            NeighborOverlap::Jaccard => c / (a + b - c),
            NeighborOverlap::SumRatio => c / (a + b),
            NeighborOverlap::Overlap => c / a.min(b).max(1.0),
        }
    }
}

impl fmt::Display for NeighborOverlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborOverlap::Dice => "dice",
            NeighborOverlap::Jaccard => "jaccard",
            NeighborOverlap::SumRatio => "sum-ratio",
            NeighborOverlap::Overlap => "overlap",
        })
    }
}

impl FromStr for NeighborOverlap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dice" => Ok(NeighborOverlap::Dice),
            "jaccard" => Ok(NeighborOverlap::Jaccard),
            "sum-ratio" => Ok(NeighborOverlap::SumRatio),
            "overlap" => Ok(NeighborOverlap::Overlap),
            _ => Err(format!("unknown neighbor overlap `{s}` (expected dice, jaccard, sum-ratio or overlap)")),
        }
    }
}

/// MTD of a vertex with no heavier neighbour under [`Variant::Mshf2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeakRule {
    /// Fall back to the unrestricted comparison: the minimum distance to any
    /// heavier vertex, or for the heaviest vertex the maximum distance to any other.
    #[serde(rename = "unrestricted")]
    Unrestricted,
    /// Maximum distance over the neighbour set, 1 when it is empty.
    #[serde(rename = "neighbor-max")]
    NeighborMax,
}

impl fmt::Display for PeakRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeakRule::Unrestricted => "unrestricted",
            PeakRule::NeighborMax => "neighbor-max",
        })
    }
}

impl FromStr for PeakRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "unrestricted" => Ok(PeakRule::Unrestricted),
            "neighbor-max" => Ok(PeakRule::NeighborMax),
            _ => Err(format!("unknown peak rule `{s}` (expected unrestricted or neighbor-max)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSeekingConfig {
    pub variant: Variant,
    pub epsilon: f64,
    pub overlap: NeighborOverlap,
    pub peak_rule: PeakRule,
}

impl Default for ModeSeekingConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Mshf2,
            epsilon: DEFAULT_EPSILON,
            overlap: NeighborOverlap::Dice,
            peak_rule: PeakRule::Unrestricted,
        }
    }
}

/// Sparse preference of a vertex towards the hyperedges.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    len: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    norm2: f64,
}

impl PreferenceVector {
    /// Builds a preference vector from `(index, value)` pairs with ascending indices.
    /// Zero values are dropped from the support.
    pub fn from_sparse(len: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let (support, values): (Vec<usize>, Vec<f64>) = entries.into_iter().filter(|(_, v)| *v > 0.0).unzip();
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(support.last().is_none_or(|&e| e < len));
        let norm2 = values.iter().map(|v| v * v).sum();
        Self { len, support, values, norm2 }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_sparse(values.len(), values.iter().copied().enumerate())
    }

    /// Preference of a hypergraph vertex, from its stored inlier residuals.
    pub fn of_vertex(v: &Vertex, num_hyperedges: usize) -> Self {
        Self::from_sparse(
            num_hyperedges,
            v.incidence.iter().zip(&v.inlier_residuals).map(|(&e, &r)| (e, (-r / v.scale).exp())),
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (&e, &v) in self.support.iter().zip(&self.values) {
            out[e] = v;
        }
        out
    }

    pub fn dot(&self, other: &PreferenceVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.support, &other.support);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Preference vector of `vertex` given the residuals of all hyperedges.
///
/// Entry `e` is `exp(−r_e/ŝ)` when `r_e ≤ 2.5 ŝ` and zero otherwise.
pub fn preference_vector(vertex: &Vertex, residuals: &[f64]) -> PreferenceVector {
    let limit = INLIER_BAND * vertex.scale;
    PreferenceVector::from_sparse(
        residuals.len(),
        residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| **r <= limit)
            .map(|(e, r)| (e, (-r / vertex.scale).exp())),
    )
}

/// Tanimoto distance `1 − ⟨a,b⟩ / (‖a‖² + ‖b‖² − ⟨a,b⟩)`.
///
/// Two zero vectors are treated as maximally dissimilar (distance 1).
pub fn tanimoto_distance(a: &PreferenceVector, b: &PreferenceVector) -> f64 {
    tanimoto_from_parts(a.dot(b), a.norm2, b.norm2)
}

#[inline]
fn tanimoto_from_parts(dot: f64, na: f64, nb: f64) -> f64 {
    let denom = na + nb - dot;
    if !(denom > 0.0) {
        return 1.0;
    }
    (1.0 - dot / denom).clamp(0.0, 1.0)
}

/// Number of hyperedges shared by two sorted incidence lists.
pub fn common_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Vertices whose incidence overlap with vertex `i` exceeds `epsilon`.
pub fn neighbor_set(g: &Hypergraph, i: usize, epsilon: f64, overlap: NeighborOverlap) -> Vec<usize> {
    let vi = &g.vertices()[i].incidence;
    g.vertices()
        .iter()
        .enumerate()
        .filter(|(j, vj)| {
            *j != i && overlap.ratio(common_count(vi, &vj.incidence), vi.len(), vj.incidence.len()) > epsilon
        })
        .map(|(j, _)| j)
        .collect()
}

/// One point of the decision graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionGraphEntry {
    pub vertex_index: usize,
    pub weight: f64,
    /// Minimum T-distance η in `[0, 1]`.
    pub mtd: f64,
    /// Set when the vertex had no heavier vertex in its comparison set and the
    /// peak rule supplied its value.
    pub omega_empty: bool,
}

/// Vertex indices sorted from heaviest to lightest, ties by index.
pub fn weight_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order
}

/// Largest `vertices × hyperedges` product for which preference vectors are
/// stored densely (8 bytes per entry).
const DENSE_LIMIT: usize = 1 << 24;

/// Bytes of preference rows per side of a distance tile.
const TILE_BYTES: usize = 128 * 1024;

#[inline]
fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Preference vectors laid out for repeated pairwise distances.
enum Rows {
    Dense { n: usize, values: Vec<f64> },
    Sparse,
}

/// Per-thread buffer holding vertex `i`'s preference scattered over the
/// hyperedges (sparse layout only).
struct Scratch {
    dense: Vec<f64>,
}

struct Distances<'a> {
    prefs: &'a [PreferenceVector],
    rows: Rows,
}

impl<'a> Distances<'a> {
    fn new(prefs: &'a [PreferenceVector], n: usize) -> Self {
        let rows = if prefs.len().saturating_mul(n) <= DENSE_LIMIT {
            let mut values = vec![0.0; prefs.len() * n];
            for (row, p) in values.chunks_exact_mut(n.max(1)).zip(prefs) {
                for (&e, &v) in p.support.iter().zip(&p.values) {
                    row[e] = v;
                }
            }
            Rows::Dense { n, values }
        } else {
            Rows::Sparse
        };
        Self { prefs, rows }
    }

    fn scratch(&self, n: usize) -> Scratch {
        match self.rows {
            Rows::Dense { .. } => Scratch { dense: Vec::new() },
            Rows::Sparse => Scratch { dense: vec![0.0; n] },
        }
    }

    fn load(&self, s: &mut Scratch, i: usize) {
        if let Rows::Sparse = self.rows {
            let p = &self.prefs[i];
            for (&e, &v) in p.support.iter().zip(&p.values) {
                s.dense[e] = v;
            }
        }
    }

    fn unload(&self, s: &mut Scratch, i: usize) {
        if let Rows::Sparse = self.rows {
            for &e in &self.prefs[i].support {
                s.dense[e] = 0.0;
            }
        }
    }

    /// T-distance between the loaded vertex `i` and vertex `j`.
    #[inline]
    fn get(&self, s: &Scratch, i: usize, j: usize) -> f64 {
        let dot = match &self.rows {
            Rows::Dense { n, values } => dense_dot(&values[i * n..(i + 1) * n], &values[j * n..(j + 1) * n]),
            Rows::Sparse => {
                let p = &self.prefs[j];
                p.support.iter().zip(&p.values).map(|(&e, &v)| v * s.dense[e]).sum()
            }
        };
        tanimoto_from_parts(dot, self.prefs[i].norm2, self.prefs[j].norm2)
    }
}

/// Incidence sets as bit rows for fast overlap counts.
struct IncidenceBits {
    words: usize,
    bits: Vec<u64>,
    degree: Vec<usize>,
}

impl IncidenceBits {
    fn new(g: &Hypergraph) -> Self {
        let words = g.num_hyperedges().div_ceil(64).max(1);
        let mut bits = vec![0u64; g.len() * words];
        for (row, v) in bits.chunks_exact_mut(words).zip(g.vertices()) {
            for &e in &v.incidence {
                row[e / 64] |= 1 << (e % 64);
            }
        }
        Self { words, bits, degree: g.vertices().iter().map(Vertex::degree).collect() }
    }

    #[inline]
    fn common(&self, i: usize, j: usize) -> usize {
        let w = self.words;
        let (a, b) = (&self.bits[i * w..(i + 1) * w], &self.bits[j * w..(j + 1) * w]);
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
    }

    #[inline]
    fn neighbors(&self, i: usize, j: usize, overlap: NeighborOverlap, epsilon: f64) -> bool {
        let (a, b) = (self.degree[i], self.degree[j]);
        overlap.ratio(a.min(b), a, b) > epsilon && overlap.ratio(self.common(i, j), a, b) > epsilon
    }
}

/// Minimum T-distance of every vertex of `g`.
pub fn minimum_t_distance(g: &Hypergraph, cfg: &ModeSeekingConfig) -> Vec<DecisionGraphEntry> {
    let m = g.len();
    if m == 0 {
        return Vec::new();
    }
    let weights = g.weights();
    if m == 1 {
        return vec![DecisionGraphEntry { vertex_index: 0, weight: weights[0], mtd: 1.0, omega_empty: true }];
    }
    let n = g.num_hyperedges();
    let prefs: Vec<PreferenceVector> = g.vertices().par_iter().map(|v| PreferenceVector::of_vertex(v, n)).collect();
    let dist = Distances::new(&prefs, n);
    let order = weight_order(&weights);
    let mut rank = vec![0; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let unrestricted = |i: usize, s: &Scratch| -> f64 {
        let r = rank[i];
        if r == 0 {
            order[1..].iter().map(|&j| dist.get(s, i, j)).fold(0.0, f64::max)
        } else {
            order[..r].iter().map(|&j| dist.get(s, i, j)).fold(1.0, f64::min)
        }
    };

    let bits = (cfg.variant == Variant::Mshf2).then(|| IncidenceBits::new(g));
    let nearest = match &bits {
        None => heavier_minima(&dist, &order, n, |_, _| true),
        Some(bits) => heavier_minima(&dist, &order, n, |i, j| bits.neighbors(i, j, cfg.overlap, cfg.epsilon)),
    };
    (0..m)
        .into_par_iter()
        .map_init(
            || dist.scratch(n),
            |s, i| {
                let best = nearest[rank[i]];
                let (mtd, omega_empty) = if best.is_finite() {
                    (best, false)
                } else {
                    dist.load(s, i);
                    let v = match (&bits, cfg.peak_rule) {
                        (None, _) | (Some(_), PeakRule::Unrestricted) => unrestricted(i, s),
                        (Some(bits), PeakRule::NeighborMax) => order[rank[i] + 1..]
                            .iter()
                            .filter(|&&j| bits.neighbors(i, j, cfg.overlap, cfg.epsilon))
                            .map(|&j| dist.get(s, i, j))
                            .fold(f64::NEG_INFINITY, f64::max),
                    };
                    dist.unload(s, i);
                    (if v.is_finite() { v } else { 1.0 }, true)
                };
                DecisionGraphEntry { vertex_index: i, weight: weights[i], mtd, omega_empty }
            },
        )
        .collect()
}

/// For every weight rank `p`, the smallest distance from `order[p]` to an
/// admitted heavier vertex, or infinity when none is admitted.
///
/// Dense rows are visited in square tiles of ranks so that both sides stay in
/// cache; the minimum does not depend on the visiting order.
fn heavier_minima<F>(dist: &Distances<'_>, order: &[usize], n: usize, admit: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let m = order.len();
    let mut best = vec![f64::INFINITY; m];
    match dist.rows {
        Rows::Dense { .. } => {
            let tile = (TILE_BYTES / (8 * n.max(1))).clamp(8, 256);
            best.par_chunks_mut(tile).enumerate().for_each(|(b, out)| {
                let p0 = b * tile;
                let s = dist.scratch(n);
                for q0 in (0..p0 + out.len()).step_by(tile) {
                    for (k, slot) in out.iter_mut().enumerate() {
                        let (p, i) = (p0 + k, order[p0 + k]);
                        for &j in &order[q0..(q0 + tile).min(p)] {
                            if admit(i, j) {
                                let t = dist.get(&s, i, j);
                                if t < *slot {
                                    *slot = t;
                                }
                            }
                        }
                    }
                }
            });
        }
        Rows::Sparse => {
            best.par_iter_mut().enumerate().for_each_init(
                || dist.scratch(n),
                |s, (p, slot)| {
                    let i = order[p];
                    dist.load(s, i);
                    for &j in &order[..p] {
                        if admit(i, j) {
                            *slot = slot.min(dist.get(s, i, j));
                        }
                    }
                    dist.unload(s, i);
                },
            );
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSelection {
    /// Selected vertices, in decision-graph order.
    pub modes: Vec<usize>,
    /// Number of leading entries kept.
    pub drop_position: usize,
    /// Vertices sorted by MTD, non-increasing.
    pub sorted_vertices: Vec<usize>,
    pub sorted_mtd: Vec<f64>,
    /// Set when every MTD was equal and the heaviest vertex was returned alone.
    pub degenerate: bool,
}

/// Cuts the MTD-sorted vertices at the largest consecutive drop.
///
/// Entries are sorted by MTD (non-increasing), then weight (non-increasing),
/// then vertex index, so the result does not depend on input order. Equal
/// drops resolve to the earliest position.
pub fn select_modes(entries: &[DecisionGraphEntry]) -> ModeSelection {
    let mut sorted: Vec<&DecisionGraphEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        b.mtd
            .total_cmp(&a.mtd)
            .then(b.weight.total_cmp(&a.weight))
            .then(a.vertex_index.cmp(&b.vertex_index))
    });
    let sorted_vertices: Vec<usize> = sorted.iter().map(|e| e.vertex_index).collect();
    let sorted_mtd: Vec<f64> = sorted.iter().map(|e| e.mtd).collect();
    if sorted.len() <= 1 {
        return ModeSelection {
            modes: sorted_vertices.clone(),
            drop_position: sorted.len(),
            sorted_vertices,
            sorted_mtd,
            degenerate: false,
        };
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..sorted_mtd.len() - 1 {
        let drop = sorted_mtd[k] - sorted_mtd[k + 1];
        if drop > best.1 {
            best = (k, drop);
        }
    }
    if best.1 <= 0.0 {
        let top = entries
            .iter()
            .min_by(|a, b| b.weight.total_cmp(&a.weight).then(a.vertex_index.cmp(&b.vertex_index)))
            .map(|e| e.vertex_index)
            .expect("non-empty");
        return ModeSelection { modes: vec![top], drop_position: 1, sorted_vertices, sorted_mtd, degenerate: true };
    }
    let drop_position = best.0 + 1;
    ModeSelection {
        modes: sorted_vertices[..drop_position].to_vec(),
        drop_position,
        sorted_vertices,
        sorted_mtd,
        degenerate: false,
    }
}

/// Labels every hyperedge with the mode that claims it (`1..`, in `modes`
/// order) or 0 when no mode contains it. A point claimed by several modes goes
/// to the one with the smallest normalized residual `r/ŝ`.
pub fn derive_labels(g: &Hypergraph, modes: &[usize]) -> Vec<usize> {
    let n = g.num_hyperedges();
    let mut labels = vec![0usize; n];
    let mut best = vec![f64::INFINITY; n];
    for (k, &m) in modes.iter().enumerate() {
        let v = &g.vertices()[m];
        for (&e, &r) in v.incidence.iter().zip(&v.inlier_residuals) {
            let z = r / v.scale;
            if z < best[e] {
                best[e] = z;
                labels[e] = k + 1;
            }
        }
    }
    labels
}

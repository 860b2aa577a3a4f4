//! Hypergraph construction, kernel-density vertex weighting and entropy-based reduction.
//!
//! Vertices are model hypotheses and hyperedges are data points. A vertex is
//! incident to a hyperedge when the point's residual lies within
//! [`INLIER_BAND`] estimated scales of the hypothesis.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::DataSet;
use crate::error::GraphError;
use crate::model::{residual, ModelKind, ModelParams};
use crate::scale::{ikose_sorted, ScaleConfig, INLIER_BAND};

/// `∫Ψ²` for the Epanechnikov kernel `Ψ(λ) = 0.75 (1 − λ²)` on `[−1, 1]`.
pub const EPANECHNIKOV_SQUARED_INTEGRAL: f64 = 0.6;
/// `∫λ²Ψ` for the Epanechnikov kernel.
pub const EPANECHNIKOV_SECOND_MOMENT: f64 = 0.2;

/// Default probability assigned to vertices at or above the mean weight.
pub const DEFAULT_XI: f64 = 1e-12;

#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Kernel bandwidth for a hypothesis with inlier scale `scale` over `n` hyperedges.
pub fn epanechnikov_bandwidth(scale: f64, n: usize) -> f64 {
    let ratio = 243.0 * EPANECHNIKOV_SQUARED_INTEGRAL / (35.0 * n as f64 * EPANECHNIKOV_SECOND_MOMENT);
    ratio.powf(0.2) * scale
}

/// Incidence-masked density weight of a vertex.
///
/// `residuals` holds the residuals of all hyperedges; only the entries listed in
/// `incidence` contribute.
pub fn vertex_weight(residuals: &[f64], incidence: &[usize], scale: f64, bandwidth: f64) -> f64 {
    if incidence.is_empty() {
        return 0.0;
    }
    weight_from_inliers(incidence.iter().map(|&e| residuals[e]), incidence.len(), scale, bandwidth)
}

fn weight_from_inliers(inlier_residuals: impl Iterator<Item = f64>, degree: usize, scale: f64, bandwidth: f64) -> f64 {
    let norm = scale * bandwidth;
    let sum: f64 = inlier_residuals.map(|r| epanechnikov(r / bandwidth) / norm).sum();
    sum / degree as f64
}

/// One hypothesis in the hypergraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vertex {
    pub params: ModelParams,
    /// Inlier noise scale ŝ.
    pub scale: f64,
    /// Sorted indices of incident hyperedges.
    pub incidence: Vec<usize>,
    /// Residuals of the incident hyperedges, aligned with `incidence`.
    pub inlier_residuals: Vec<f64>,
    pub weight: f64,
    pub bandwidth: f64,
    /// Position of the generating hypothesis in the input sequence.
    pub source: usize,
}

impl Vertex {
    pub fn degree(&self) -> usize {
        self.incidence.len()
    }

    /// Builds a vertex from the full residual vector of a hypothesis.
    pub fn from_residuals(params: ModelParams, scale: f64, residuals: &[f64], source: usize) -> Self {
        let limit = INLIER_BAND * scale;
        let (incidence, inlier_residuals): (Vec<usize>, Vec<f64>) = residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| **r <= limit)
            .map(|(e, r)| (e, *r))
            .unzip();
        let bandwidth = epanechnikov_bandwidth(scale, residuals.len());
        let weight = weight_from_inliers(inlier_residuals.iter().copied(), incidence.len().max(1), scale, bandwidth);
        Self { params, scale, incidence, inlier_residuals, weight, bandwidth, source }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub hypotheses: usize,
    pub dropped_low_degree: usize,
    pub dropped_scale_failure: usize,
}

/// Hypotheses connected to the data points they explain. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    kind: ModelKind,
    num_hyperedges: usize,
    vertices: Vec<Vertex>,
    stats: BuildStats,
}

impl Hypergraph {
    /// Assembles a hypergraph from prepared vertices.
    ///
    /// Panics if an incidence index is out of range or an incidence list is unsorted.
    pub fn from_vertices(kind: ModelKind, num_hyperedges: usize, vertices: Vec<Vertex>) -> Self {
        for v in &vertices {
            assert!(v.incidence.windows(2).all(|w| w[0] < w[1]), "incidence must be strictly increasing");
            assert!(v.incidence.last().is_none_or(|&e| e < num_hyperedges), "incidence index out of range");
            assert_eq!(v.incidence.len(), v.inlier_residuals.len());
        }
        let stats = BuildStats { hypotheses: vertices.len(), ..Default::default() };
        Self { kind, num_hyperedges, vertices, stats }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_hyperedges(&self) -> usize {
        self.num_hyperedges
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn weights(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.weight).collect()
    }

    /// Sub-hypergraph over `keep` (indices into this graph, in the given order).
    pub fn subgraph(&self, keep: &[usize]) -> Self {
        Self {
            kind: self.kind,
            num_hyperedges: self.num_hyperedges,
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
            stats: self.stats,
        }
    }

    /// For each hyperedge, the vertices incident to it (ascending).
    pub fn hyperedge_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_hyperedges];
        for (i, v) in self.vertices.iter().enumerate() {
            for &e in &v.incidence {
                members[e].push(i);
            }
        }
        members
    }
}

/// Builds the hypergraph of `hypotheses` over `data`.
///
/// Each hypothesis gets residuals against all points, an IKOSE scale, the
/// incidence `r ≤ 2.5 ŝ`, a bandwidth and a weight. Hypotheses whose degree is
/// below the minimal subset size, or whose scale estimate diverges, are dropped.
pub fn build_hypergraph(
    data: &DataSet,
    hypotheses: &[ModelParams],
    scale_cfg: &ScaleConfig,
) -> Result<Hypergraph, GraphError> {
    if hypotheses.is_empty() {
        return Err(GraphError::NoHypotheses);
    }
    if data.is_empty() {
        return Err(GraphError::EmptyData);
    }
    scale_cfg.validate()?;
    let kind = hypotheses[0].kind();
    if let Some(h) = hypotheses.iter().find(|h| h.kind() != kind) {
        return Err(GraphError::KindMismatch { expected: kind, found: h.kind() });
    }
    if data.dim() != kind.dimension() {
        return Err(GraphError::Dimension { kind, expected: kind.dimension(), found: data.dim() });
    }
    let min_degree = kind.minimal_subset_size();

    enum Outcome {
        Kept(Vertex),
        LowDegree,
        ScaleFailure,
    }

    let outcomes: Vec<Outcome> = hypotheses
        .par_iter()
        .enumerate()
        .map_init(
            || (Vec::with_capacity(data.len()), Vec::with_capacity(data.len())),
            |(res, sorted), (source, params)| {
                res.clear();
                res.extend(data.points().map(|p| residual(params, p)));
                sorted.clear();
                sorted.extend_from_slice(res);
                sorted.sort_unstable_by(f64::total_cmp);
                let Ok(est) = ikose_sorted(sorted, scale_cfg) else {
                    return Outcome::ScaleFailure;
                };
                let v = Vertex::from_residuals(*params, est.scale, res, source);
                if v.degree() < min_degree {
                    Outcome::LowDegree
                } else {
                    Outcome::Kept(v)
                }
            },
        )
        .collect();

    let mut stats = BuildStats { hypotheses: hypotheses.len(), ..Default::default() };
    let mut vertices = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Outcome::Kept(v) => vertices.push(v),
            Outcome::LowDegree => stats.dropped_low_degree += 1,
            Outcome::ScaleFailure => stats.dropped_scale_failure += 1,
        }
    }
    if vertices.is_empty() {
        return Err(GraphError::EmptyHypergraph);
    }
    Ok(Hypergraph { kind, num_hyperedges: data.len(), vertices, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// Prior probability of each input vertex.
    pub prior: Vec<f64>,
    pub entropy: f64,
    /// Indices (into the input graph) of retained vertices, ascending.
    pub retained: Vec<usize>,
    pub xi: f64,
    /// Set when no vertex lies strictly below the mean weight; nothing is removed.
    pub vacuous: bool,
}

/// Removes vertices whose information content `−ln p_i` does not exceed the
/// entropy of the prior over weight gaps to the mean.
///
/// The gaps `q_i = mean(w) − w_i` are normalized over the positive gaps only;
/// every vertex at or above the mean receives `xi`.
pub fn reduce_hypergraph(g: &Hypergraph, xi: f64) -> (Hypergraph, ReductionReport) {
    let weights = g.weights();
    let (prior, vacuous) = reduction_prior(&weights, xi);
    if vacuous {
        let report = ReductionReport {
            prior,
            entropy: 0.0,
            retained: (0..g.len()).collect(),
            xi,
            vacuous: true,
        };
        return (g.clone(), report);
    }
    let entropy = -prior.iter().map(|p| p * p.ln()).sum::<f64>();
    let retained: Vec<usize> = prior
        .iter()
        .enumerate()
        .filter(|(_, p)| -p.ln() > entropy)
        .map(|(i, _)| i)
        .collect();
    let reduced = g.subgraph(&retained);
    (reduced, ReductionReport { prior, entropy, retained, xi, vacuous: false })
}

fn reduction_prior(weights: &[f64], xi: f64) -> (Vec<f64>, bool) {
    let (lo, hi) = weights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), w| (l.min(*w), h.max(*w)));
    if weights.is_empty() || lo == hi {
        return (vec![xi; weights.len()], true);
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let gaps: Vec<f64> = weights.iter().map(|w| mean - w).collect();
    let positive: f64 = gaps.iter().filter(|q| **q > 0.0).sum();
    if !(positive > 0.0) {
        return (vec![xi; weights.len()], true);
    }
    let prior = gaps.iter().map(|&q| if q > 0.0 { q / positive } else { xi }).collect();
    (prior, false)
}

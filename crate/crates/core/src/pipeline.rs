//! End-to-end fitting: sampling, hypergraph construction, reduction, mode
//! seeking and labelling.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::PipelineError;
use crate::hypergraph::{build_hypergraph, reduce_hypergraph, Hypergraph, ReductionReport, DEFAULT_XI};
use crate::mode_seeking::{
    derive_labels, minimum_t_distance, select_modes, DecisionGraphEntry, ModeSeekingConfig, ModeSelection,
    NeighborOverlap, PeakRule, Variant, DEFAULT_EPSILON,
};
use crate::model::{ModelKind, ModelParams};
use crate::sampling::{sample_hypotheses, SamplerConfig};
use crate::scale::ScaleConfig;

/// Every tunable of a fitting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub hypothesis_count: usize,
    pub k_fraction: f64,
    pub epsilon: f64,
    pub variant: Variant,
    pub xi: f64,
    /// `None` means 10% of the data's bounding-box diagonal.
    pub proximity_sigma: Option<f64>,
    pub rng_seed: u64,
    pub neighbor_overlap: NeighborOverlap,
    pub peak_rule: PeakRule,
}

impl RunConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            hypothesis_count: 5000,
            k_fraction: 0.10,
            epsilon: DEFAULT_EPSILON,
            variant: Variant::Mshf2,
            xi: DEFAULT_XI,
            proximity_sigma: None,
            rng_seed: 0,
            neighbor_overlap: NeighborOverlap::Dice,
            peak_rule: PeakRule::Unrestricted,
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            hypothesis_count: self.hypothesis_count,
            proximity_sigma: self.proximity_sigma,
            rng_seed: self.rng_seed,
            ..SamplerConfig::default()
        }
    }

    pub fn scale(&self) -> ScaleConfig {
        ScaleConfig { k_fraction: self.k_fraction, ..ScaleConfig::default() }
    }

    pub fn mode_seeking(&self) -> ModeSeekingConfig {
        ModeSeekingConfig {
            variant: self.variant,
            epsilon: self.epsilon,
            overlap: self.neighbor_overlap,
            peak_rule: self.peak_rule,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.hypothesis_count == 0 {
            return bad("hypothesis_count must be at least 1");
        }
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return bad("k_fraction must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return bad("xi must lie in (0, 1)");
        }
        if let Some(s) = self.proximity_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad("proximity_sigma must be positive");
            }
        }
        Ok(())
    }

    /// `key = value` lines in a fixed order, the same keys accepted by the
    /// configuration file parser.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kind", self.kind.to_string()),
            ("hypothesis_count", self.hypothesis_count.to_string()),
            ("k_fraction", self.k_fraction.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("variant", self.variant.to_string()),
            ("xi", self.xi.to_string()),
            ("proximity_sigma", self.proximity_sigma.map_or_else(|| "auto".to_string(), |s| s.to_string())),
            ("rng_seed", self.rng_seed.to_string()),
            ("neighbor_overlap", self.neighbor_overlap.to_string()),
            ("peak_rule", self.peak_rule.to_string()),
        ]
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for {key}"))
        }
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "kind" => self.kind = value.parse().map_err(|e: crate::error::ModelError| e.to_string())?,
            "hypothesis_count" => self.hypothesis_count = num(&key, value)?,
            "k_fraction" => self.k_fraction = num(&key, value)?,
            "epsilon" => self.epsilon = num(&key, value)?,
            "variant" => self.variant = value.parse()?,
            "xi" => self.xi = num(&key, value)?,
            "proximity_sigma" => {
                self.proximity_sigma =
                    if value.eq_ignore_ascii_case("auto") { None } else { Some(num(&key, value)?) }
            }
            "rng_seed" | "seed" => self.rng_seed = num(&key, value)?,
            "neighbor_overlap" => self.neighbor_overlap = value.parse()?,
            "peak_rule" => self.peak_rule = value.parse()?,
            _ => return Err(format!("unknown configuration key `{key}`")),
        }
        Ok(())
    }
}

/// One estimated model instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedMode {
    /// Label given to this instance's points.
    pub label: usize,
    pub params: ModelParams,
    pub scale: f64,
    pub weight: f64,
    pub mtd: f64,
    /// Vertex index in the reduced hypergraph.
    pub vertex: usize,
    /// Index of the generating hypothesis.
    pub hypothesis: usize,
    pub inliers: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub sampling: Duration,
    pub construction: Duration,
    pub reduction: Duration,
    pub mode_seeking: Duration,
    pub labelling: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.sampling + self.construction + self.reduction + self.mode_seeking + self.labelling
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub config: RunConfig,
    pub hypergraph: Hypergraph,
    pub reduced: Hypergraph,
    pub reduction: ReductionReport,
    /// Decision graph over the reduced hypergraph, indexed by its vertices.
    pub decision: Vec<DecisionGraphEntry>,
    pub selection: ModeSelection,
    pub modes: Vec<FittedMode>,
    pub labels: Vec<usize>,
    pub timings: StageTimings,
}

/// Runs the full pipeline on `data`.
pub fn fit(data: &DataSet, cfg: &RunConfig) -> Result<FitResult, PipelineError> {
    cfg.validate()?;
    let t = Instant::now();
    let pool = sample_hypotheses(data, cfg.kind, &cfg.sampler())?;
    let sampling = t.elapsed();

    let t = Instant::now();
    let hypergraph = build_hypergraph(data, &pool.params(), &cfg.scale())?;
    let construction = t.elapsed();

    let t = Instant::now();
    let (reduced, reduction) = reduce_hypergraph(&hypergraph, cfg.xi);
    let reduction_time = t.elapsed();

    let t = Instant::now();
    let decision = minimum_t_distance(&reduced, &cfg.mode_seeking());
    let selection = select_modes(&decision);
    let mode_seeking = t.elapsed();

    let t = Instant::now();
    let labels = derive_labels(&reduced, &selection.modes);
    let modes = selection
        .modes
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let v = &reduced.vertices()[m];
            FittedMode {
                label: k + 1,
                params: v.params,
                scale: v.scale,
                weight: v.weight,
                mtd: decision[m].mtd,
                vertex: m,
                hypothesis: v.source,
                inliers: v.incidence.clone(),
            }
        })
        .collect();
    let labelling = t.elapsed();

    Ok(FitResult {
        config: *cfg,
        hypergraph,
        reduced,
        reduction,
        decision,
        selection,
        modes,
        labels,
        timings: StageTimings { sampling, construction, reduction: reduction_time, mode_seeking, labelling },
    })
}

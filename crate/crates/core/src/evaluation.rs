//! Synthetic scenes, the mislabelling error and repeated trials.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::DataSet;
use crate::error::{EvalError, TrialError};
use crate::model::{ModelKind, ModelParams};
use crate::pipeline::{fit, RunConfig};

/// Edge length of the cube holding 3D line scenes. With σ = 1 a smaller cube
/// packs enough outliers around a sparse line that its scale estimate never
/// leaves the all-points fixed point.
const BOX_3D: f64 = 400.0;

/// 3D layouts below are in percent of the cube edge.
fn to_box(p: &[f64; 3]) -> [f64; 3] {
    p.map(|x| x * BOX_3D / 100.0)
}

/// Three pairwise well separated segments.
const LINES_3D_SEPARATE: [([f64; 3], [f64; 3]); 3] = [
    ([10.0, 15.0, 20.0], [90.0, 35.0, 75.0]),
    ([15.0, 85.0, 25.0], [85.0, 65.0, 15.0]),
    ([25.0, 45.0, 90.0], [75.0, 90.0, 55.0]),
];

/// Four segments through the centre of the box.
const LINES_3D_STAR: [([f64; 3], [f64; 3]); 4] = [
    ([15.0, 15.0, 15.0], [85.0, 85.0, 85.0]),
    ([15.0, 85.0, 50.0], [85.0, 15.0, 50.0]),
    ([50.0, 15.0, 85.0], [50.0, 85.0, 15.0]),
    ([15.0, 50.0, 80.0], [85.0, 50.0, 20.0]),
];

/// Two crossing pairs (at `(35, 40, 35)` and `(65, 60, 65)`) followed by
/// segments that meet nothing.
const LINES_3D_CROSSING: [([f64; 3], [f64; 3]); 7] = [
    ([60.0, 60.0, 50.0], [10.0, 20.0, 20.0]),
    ([55.0, 15.0, 55.0], [15.0, 65.0, 15.0]),
    ([90.0, 40.0, 80.0], [40.0, 80.0, 50.0]),
    ([45.0, 40.0, 90.0], [85.0, 80.0, 40.0]),
    ([10.0, 85.0, 80.0], [60.0, 95.0, 90.0]),
    ([75.0, 10.0, 15.0], [90.0, 70.0, 30.0]),
    ([10.0, 60.0, 60.0], [30.0, 95.0, 20.0]),
];

fn line3d_layout(k: usize) -> &'static [([f64; 3], [f64; 3])] {
    match k {
        3 => &LINES_3D_SEPARATE,
        4 => &LINES_3D_STAR,
        _ => &LINES_3D_CROSSING[..k],
    }
}

/// Side of the square holding planar line scenes (σ = 1).
const BOX_2D: f64 = 400.0;

/// Side of the square holding circle scenes (σ = 0.5).
const BOX_CIRCLES: f64 = 200.0;

/// Line segments with pairwise crossings inside the square, in percent of
/// its side.
const LINES_2D: [([f64; 2], [f64; 2]); 7] = [
    ([5.0, 10.0], [95.0, 90.0]),
    ([5.0, 85.0], [95.0, 20.0]),
    ([10.0, 50.0], [90.0, 55.0]),
    ([50.0, 5.0], [45.0, 95.0]),
    ([20.0, 95.0], [95.0, 60.0]),
    ([5.0, 30.0], [60.0, 5.0]),
    ([70.0, 5.0], [95.0, 95.0]),
];

/// Circles `(cx, cy, r)` in percent of the square side, for up to seven
/// instances. Consecutive
/// circles among the first four cross at close to right angles, so no pair
/// shares a long stretch of arc.
const CIRCLES: [[f64; 3]; 7] = [
    [30.0, 35.0, 12.0],
    [46.0, 38.0, 11.0],
    [50.0, 53.0, 10.0],
    [64.0, 60.0, 11.0],
    [22.0, 70.0, 9.0],
    [75.0, 28.0, 10.0],
    [45.0, 82.0, 9.0],
];

const IMAGE_WIDTH: f64 = 640.0;
const IMAGE_HEIGHT: f64 = 480.0;

/// A named synthetic scene family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneSpec {
    /// `k` lines in 3D, `k` in 3..=7: σ = 1, 100 inliers per line, 400 outliers.
    /// Three lines are mutually separated, four meet at one point, five or
    /// more contain two crossings.
    Lines3D(usize),
    /// `k` lines in the plane, `k` in 3..=7, same counts as the 3D family.
    Lines2D(usize),
    /// Five lines forming a pentagram.
    Star5,
    /// `k` circles, `k` in 3..=16: σ = 0.5, 100 inliers per circle, 400 outliers.
    /// Up to seven use a fixed overlapping layout, more use a 4×4 grid of
    /// intersecting circles.
    Circles(usize),
    /// The three 3D lines with inlier counts in ratio `ratio : ratio : 1`.
    UnbalancedLines(f64),
    /// Three planar structures seen in two views, 120 outliers.
    Homography,
    /// Three rigid motions between two views, 100 outliers.
    TwoView,
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneSpec::Lines3D(k) => write!(f, "{k}-lines-3d"),
            SceneSpec::Lines2D(k) => write!(f, "{k}-lines-2d"),
            SceneSpec::Star5 => f.write_str("star5"),
            SceneSpec::Circles(k) => write!(f, "{k}-circles"),
            SceneSpec::UnbalancedLines(r) => write!(f, "unbalanced-3-lines:{r:?}"),
            SceneSpec::Homography => f.write_str("homography"),
            SceneSpec::TwoView => f.write_str("two-view"),
        }
    }
}

impl FromStr for SceneSpec {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        let unknown = || EvalError::UnknownTemplate(s.to_string());
        let t = s.trim().to_ascii_lowercase();
        if let Some(rest) = t.strip_prefix("unbalanced-3-lines") {
            let ratio = match rest.strip_prefix(':') {
                Some(r) => r.parse::<f64>().map_err(|_| unknown())?,
                None if rest.is_empty() => 1.0,
                None => return Err(unknown()),
            };
            if !(ratio >= 1.0 && ratio.is_finite()) {
                return Err(unknown());
            }
            return Ok(SceneSpec::UnbalancedLines(ratio));
        }
        match t.as_str() {
            "star5" => return Ok(SceneSpec::Star5),
            "homography" | "planar-homography" => return Ok(SceneSpec::Homography),
            "two-view" | "two-view-motion" | "motion" => return Ok(SceneSpec::TwoView),
            _ => {}
        }
        let (k, family) = t.split_once('-').ok_or_else(unknown)?;
        let k: usize = k.parse().map_err(|_| unknown())?;
        let spec = match family {
            "lines" | "lines-3d" => SceneSpec::Lines3D(k),
            "lines-2d" => SceneSpec::Lines2D(k),
            "circles" => SceneSpec::Circles(k),
            _ => return Err(unknown()),
        };
        spec.validate().map_err(|_| unknown())?;
        Ok(spec)
    }
}

impl SceneSpec {
    fn validate(&self) -> Result<(), EvalError> {
        let ok = match *self {
            SceneSpec::Lines3D(k) | SceneSpec::Lines2D(k) => (3..=7).contains(&k),
            SceneSpec::Circles(k) => (3..=16).contains(&k),
            SceneSpec::UnbalancedLines(r) => r >= 1.0 && r.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(EvalError::UnknownTemplate(self.to_string()))
        }
    }

    /// One representative of every family and parameter.
    pub fn catalog() -> Vec<SceneSpec> {
        let mut out = Vec::new();
        out.extend((3..=7).map(SceneSpec::Lines3D));
        out.extend((3..=7).map(SceneSpec::Lines2D));
        out.push(SceneSpec::Star5);
        out.extend((3..=16).map(SceneSpec::Circles));
        out.extend([1.0, 2.0, 4.0, 8.0].map(SceneSpec::UnbalancedLines));
        out.push(SceneSpec::Homography);
        out.push(SceneSpec::TwoView);
        out
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            SceneSpec::Lines3D(_) | SceneSpec::UnbalancedLines(_) => ModelKind::Line3D,
            SceneSpec::Lines2D(_) | SceneSpec::Star5 => ModelKind::Line2D,
            SceneSpec::Circles(_) => ModelKind::Circle2D,
            SceneSpec::Homography => ModelKind::Homography,
            SceneSpec::TwoView => ModelKind::Fundamental,
        }
    }

    /// Number of model instances in the scene.
    pub fn instances(&self) -> usize {
        match *self {
            SceneSpec::Lines3D(k) | SceneSpec::Lines2D(k) | SceneSpec::Circles(k) => k,
            SceneSpec::Star5 => 5,
            SceneSpec::UnbalancedLines(_) | SceneSpec::Homography | SceneSpec::TwoView => 3,
        }
    }

    /// Inlier counts per instance and the outlier count.
    pub fn counts(&self) -> (Vec<usize>, usize) {
        match *self {
            SceneSpec::UnbalancedLines(ratio) => {
                let small = (300.0 / (2.0 * ratio + 1.0)).round() as usize;
                let large = (ratio * small as f64).round() as usize;
                (vec![large, large, small], 400)
            }
            SceneSpec::Homography => (vec![80; 3], 120),
            SceneSpec::TwoView => (vec![80; 3], 100),
            _ => (vec![100; self.instances()], 400),
        }
    }

    /// Pipeline settings used for this scene in the trials.
    ///
    /// K is 10% of n unless the smallest structure holds fewer than 10% of the
    /// points, in which case it drops to 80% of that structure's share.
    pub fn recommended_config(&self) -> RunConfig {
        let (inliers, outliers) = self.counts();
        let n = inliers.iter().sum::<usize>() + outliers;
        let smallest = *inliers.iter().min().expect("at least one instance") as f64 / n as f64;
        let k_fraction = if smallest < 0.10 { 0.8 * smallest } else { 0.10 };
        let hypothesis_count = match self {
            SceneSpec::Homography => 10_000,
            SceneSpec::TwoView => 20_000,
            _ => 5000,
        };
        RunConfig { hypothesis_count, k_fraction, ..RunConfig::new(self.kind()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub data: DataSet,
    /// 0 for outliers, `k` for inliers of `true_params[k - 1]`.
    pub true_labels: Vec<usize>,
    pub kind: ModelKind,
    pub true_params: Vec<ModelParams>,
    pub inlier_sigma: f64,
    pub outlier_count: usize,
}

/// Generates a labelled scene, deterministic in `seed`.
pub fn generate_scene(spec: SceneSpec, seed: u64) -> Result<SyntheticScene, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inliers, outliers) = spec.counts();
    let mut b = SceneBuilder::default();
    let sigma = match spec {
        SceneSpec::Lines3D(k) => {
            for (i, (a, e)) in line3d_layout(k).iter().enumerate() {
                b.line(&mut rng, &to_box(a), &to_box(e), inliers[i], 1.0);
            }
            b.uniform_box(&mut rng, &[BOX_3D; 3], outliers);
            1.0
        }
        SceneSpec::UnbalancedLines(_) => {
            for (i, (a, e)) in LINES_3D_SEPARATE.iter().enumerate() {
                b.line(&mut rng, &to_box(a), &to_box(e), inliers[i], 1.0);
            }
            b.uniform_box(&mut rng, &[BOX_3D; 3], outliers);
            1.0
        }
        SceneSpec::Lines2D(k) => {
            let f = BOX_2D / 100.0;
            for (i, (a, e)) in LINES_2D[..k].iter().enumerate() {
                b.line(&mut rng, &a.map(|x| x * f), &e.map(|x| x * f), inliers[i], 1.0);
            }
            b.uniform_box(&mut rng, &[BOX_2D; 2], outliers);
            1.0
        }
        SceneSpec::Star5 => {
            let f = BOX_2D / 100.0;
            let corner = |i: usize| {
                let t = std::f64::consts::FRAC_PI_2 + i as f64 * 2.0 * std::f64::consts::PI / 5.0;
                [f * (50.0 + 45.0 * t.cos()), f * (50.0 + 45.0 * t.sin())]
            };
            for i in 0..5 {
                b.line(&mut rng, &corner(i), &corner((i + 2) % 5), inliers[i], 1.0);
            }
            b.uniform_box(&mut rng, &[BOX_2D; 2], outliers);
            1.0
        }
        SceneSpec::Circles(k) => {
            let f = BOX_CIRCLES / 100.0;
            for (i, c) in circle_layout(k).iter().enumerate() {
                b.circle(&mut rng, &c.map(|x| x * f), inliers[i], 0.5);
            }
            b.uniform_box(&mut rng, &[BOX_CIRCLES; 2], outliers);
            0.5
        }
        SceneSpec::Homography => {
            b.homographies(&mut rng, &inliers, 0.5);
            b.uniform_pairs(&mut rng, outliers);
            0.5
        }
        SceneSpec::TwoView => {
            b.motions(&mut rng, &inliers, 0.5);
            b.uniform_pairs(&mut rng, outliers);
            0.5
        }
    };
    let dim = spec.kind().dimension();
    let data = DataSet::new(dim, b.coords).expect("generated coordinates are finite");
    Ok(SyntheticScene {
        spec,
        data,
        true_labels: b.labels,
        kind: spec.kind(),
        true_params: b.params,
        inlier_sigma: sigma,
        outlier_count: outliers,
    })
}

fn circle_layout(k: usize) -> Vec<[f64; 3]> {
    if k <= CIRCLES.len() {
        return CIRCLES[..k].to_vec();
    }
    (0..k).map(|i| [25.0 + 16.5 * (i % 4) as f64, 25.0 + 16.5 * (i / 4) as f64, 10.0]).collect()
}

#[derive(Default)]
struct SceneBuilder {
    coords: Vec<f64>,
    labels: Vec<usize>,
    params: Vec<ModelParams>,
}

impl SceneBuilder {
    fn next_label(&self) -> usize {
        self.params.len() + 1
    }

    fn line<const D: usize>(&mut self, rng: &mut ChaCha8Rng, a: &[f64; D], e: &[f64; D], count: usize, sigma: f64) {
        let noise = Normal::new(0.0, sigma).expect("positive sigma");
        let dir: Vec<f64> = a.iter().zip(e).map(|(p, q)| q - p).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = dir.iter().map(|v| v / len).collect();
        let label = self.next_label();
        for _ in 0..count {
            let t: f64 = rng.random();
            let mut g: Vec<f64> = (0..D).map(|_| noise.sample(rng)).collect();
            let along: f64 = g.iter().zip(&u).map(|(x, y)| x * y).sum();
            for (gi, ui) in g.iter_mut().zip(&u) {
                *gi -= along * ui;
            }
            for d in 0..D {
                self.coords.push(a[d] + t * dir[d] + g[d]);
            }
            self.labels.push(label);
        }
        let pts: [&[f64]; 2] = [a, e];
        let kind = if D == 2 { ModelKind::Line2D } else { ModelKind::Line3D };
        let p = crate::model::fit_minimal(kind, &pts).expect("distinct endpoints")[0];
        self.params.push(p);
    }

    fn circle(&mut self, rng: &mut ChaCha8Rng, c: &[f64; 3], count: usize, sigma: f64) {
        let noise = Normal::new(0.0, sigma).expect("positive sigma");
        let label = self.next_label();
        for _ in 0..count {
            let t = rng.random::<f64>() * std::f64::consts::TAU;
            let r = c[2] + noise.sample(rng);
            self.coords.extend([c[0] + r * t.cos(), c[1] + r * t.sin()]);
            self.labels.push(label);
        }
        self.params.push(ModelParams::Circle2D(*c));
    }

    fn uniform_box(&mut self, rng: &mut ChaCha8Rng, extent: &[f64], count: usize) {
        for _ in 0..count {
            for &e in extent {
                self.coords.push(rng.random::<f64>() * e);
            }
            self.labels.push(0);
        }
    }

    fn uniform_pairs(&mut self, rng: &mut ChaCha8Rng, count: usize) {
        self.uniform_box(rng, &[IMAGE_WIDTH, IMAGE_HEIGHT, IMAGE_WIDTH, IMAGE_HEIGHT], count);
    }

    fn push_pair(&mut self, rng: &mut ChaCha8Rng, noise: &Normal<f64>, x: [f64; 2], xp: [f64; 2], label: usize) {
        self.coords.extend([
            x[0] + noise.sample(rng),
            x[1] + noise.sample(rng),
            xp[0] + noise.sample(rng),
            xp[1] + noise.sample(rng),
        ]);
        self.labels.push(label);
    }

    /// Three planes seen by two calibrated cameras; each plane occupies one
    /// vertical band of the first image.
    fn homographies(&mut self, rng: &mut ChaCha8Rng, counts: &[usize], sigma: f64) {
        let noise = Normal::new(0.0, sigma).expect("positive sigma");
        let k = intrinsics();
        let k_inv = k.try_inverse().expect("invertible intrinsics");
        let r = *Rotation3::from_euler_angles(0.02, 0.12, 0.01).matrix();
        let t = Vector3::new(-1.0, 0.1, 0.15);
        let planes = [(Vector3::new(0.6, 0.0, 1.0), 6.0), (Vector3::new(0.0, 0.1, 1.0), 5.0), (Vector3::new(-0.6, 0.0, 1.0), 6.0)];
        let bands = [(20.0, 200.0), (230.0, 410.0), (440.0, 620.0)];
        for (i, &count) in counts.iter().enumerate() {
            let (n, d) = planes[i % planes.len()];
            let h = k * (r + t * n.transpose() / d) * k_inv;
            let (x0, x1) = bands[i % bands.len()];
            let label = self.next_label();
            for _ in 0..count {
                let x = [x0 + rng.random::<f64>() * (x1 - x0), 40.0 + rng.random::<f64>() * 400.0];
                let m = h * Vector3::new(x[0], x[1], 1.0);
                self.push_pair(rng, &noise, x, [m.x / m.z, m.y / m.z], label);
            }
            self.params.push(ModelParams::from_values(ModelKind::Homography, h.transpose().as_slice()).expect("finite"));
        }
    }

    /// Three rigid cubes of edge 3, each moving differently between the two
    /// views.
    fn motions(&mut self, rng: &mut ChaCha8Rng, counts: &[usize], sigma: f64) {
        let noise = Normal::new(0.0, sigma).expect("positive sigma");
        let k = intrinsics();
        let k_inv = k.try_inverse().expect("invertible intrinsics");
        let motions = [
            (Rotation3::from_euler_angles(0.0, 0.08, 0.0), Vector3::new(-0.8, 0.0, 0.1)),
            (Rotation3::from_euler_angles(0.1, -0.05, 0.05), Vector3::new(0.2, 0.7, -0.2)),
            (Rotation3::from_euler_angles(-0.05, 0.0, -0.12), Vector3::new(0.5, -0.3, 0.6)),
        ];
        let centres = [Vector3::new(-1.8, 0.0, 7.0), Vector3::new(0.3, -1.2, 8.0), Vector3::new(1.9, 0.9, 6.5)];
        let project = |p: Vector3<f64>| {
            let m = k * p;
            [m.x / m.z, m.y / m.z]
        };
        for (i, &count) in counts.iter().enumerate() {
            let (rot, t) = motions[i % motions.len()];
            let c = centres[i % centres.len()];
            let label = self.next_label();
            for _ in 0..count {
                let offset = Vector3::new(
                    1.5 * (rng.random::<f64>() * 2.0 - 1.0),
                    1.5 * (rng.random::<f64>() * 2.0 - 1.0),
                    1.5 * (rng.random::<f64>() * 2.0 - 1.0),
                );
                let p = c + offset;
                let q = rot * p + t;
                self.push_pair(rng, &noise, project(p), project(q), label);
            }
            let tx = Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0);
            let f = k_inv.transpose() * tx * rot.matrix() * k_inv;
            self.params.push(ModelParams::from_values(ModelKind::Fundamental, f.transpose().as_slice()).expect("finite"));
        }
    }
}

fn intrinsics() -> Matrix3<f64> {
    Matrix3::new(500.0, 0.0, IMAGE_WIDTH / 2.0, 0.0, 500.0, IMAGE_HEIGHT / 2.0, 0.0, 0.0, 1.0)
}

/// Percentage of points whose label disagrees with the truth after matching
/// estimated clusters to true clusters one-to-one so that agreement is
/// maximal. Label 0 (outlier) only matches 0; unmatched clusters count as
/// mislabelled.
pub fn fitting_error(estimated: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if estimated.len() != truth.len() {
        return Err(EvalError::LengthMismatch(estimated.len(), truth.len()));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let n = truth.len();
    let correct = n - mislabeled(estimated, truth);
    Ok((n - correct) as f64 / n as f64 * 100.0)
}

/// Number of mislabelled points under the optimal matching.
pub fn mislabeled(estimated: &[usize], truth: &[usize]) -> usize {
    let est_ids = compact_ids(estimated);
    let true_ids = compact_ids(truth);
    let mut table = vec![vec![0i64; true_ids.len()]; est_ids.len()];
    let mut outliers_agree = 0;
    for (&e, &t) in estimated.iter().zip(truth) {
        match (e, t) {
            (0, 0) => outliers_agree += 1,
            (0, _) | (_, 0) => {}
            _ => table[est_ids[&e]][true_ids[&t]] += 1,
        }
    }
    let assignment = max_weight_assignment(&table);
    let matched: i64 = assignment.iter().enumerate().filter_map(|(r, c)| c.map(|c| table[r][c])).sum();
    truth.len() - outliers_agree - matched as usize
}

fn compact_ids(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut ids = BTreeMap::new();
    for &l in labels {
        if l != 0 {
            let next = ids.len();
            ids.entry(l).or_insert(next);
        }
    }
    ids
}

/// Maximum-weight one-to-one assignment of rows to columns (Hungarian method).
///
/// Returns, for every row, the matched column or `None` when there are more
/// rows than columns.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let size = rows.max(cols);
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max - weights[i][j]
        } else {
            max
        }
    };
    // Shortest augmenting path formulation with potentials, 1-based.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=size {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub template: String,
    pub trials: usize,
    pub base_seed: u64,
    pub config: RunConfig,
    /// Population standard deviation of the error.
    pub std: f64,
    pub avg: f64,
    pub min: f64,
    pub avg_time_s: f64,
    pub errors: Vec<f64>,
    pub instance_counts: Vec<usize>,
    /// Estimated instance count → number of trials.
    pub instance_histogram: BTreeMap<usize, usize>,
    pub expected_instances: usize,
}

impl TrialReport {
    /// Fraction of trials that recovered the true number of instances.
    pub fn correct_count_rate(&self) -> f64 {
        let hits = self.instance_counts.iter().filter(|&&c| c == self.expected_instances).count();
        hits as f64 / self.trials as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned `Std. / Avg. / Min. / Time` rows.
    pub fn to_text(&self) -> String {
        let hist: Vec<String> = self.instance_histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        format!(
            "{:<24} Std. {:>8.2}\n{:<24} Avg. {:>8.2}\n{:<24} Min. {:>8.2}\n{:<24} Time {:>8.3}\n{:<24} Inst {}\n",
            self.template,
            self.std,
            "",
            self.avg,
            "",
            self.min,
            "",
            self.avg_time_s,
            "",
            hist.join(" ")
        )
    }
}

/// Runs the pipeline on `trials` scenes with seeds `base_seed..base_seed + trials`.
///
/// The scene seed also seeds the sampler, overriding `cfg.rng_seed`.
pub fn run_trials(spec: SceneSpec, cfg: &RunConfig, trials: usize, base_seed: u64) -> Result<TrialReport, TrialError> {
    if trials == 0 {
        return Err(EvalError::NoTrials.into());
    }
    let mut errors = Vec::with_capacity(trials);
    let mut instance_counts = Vec::with_capacity(trials);
    let mut total_time = 0.0;
    for t in 0..trials as u64 {
        let seed = base_seed + t;
        let scene = generate_scene(spec, seed)?;
        let run_cfg = RunConfig { kind: scene.kind, rng_seed: seed, ..*cfg };
        let start = Instant::now();
        let result = fit(&scene.data, &run_cfg)?;
        total_time += start.elapsed().as_secs_f64();
        errors.push(fitting_error(&result.labels, &scene.true_labels)?);
        instance_counts.push(result.modes.len());
    }
    let n = trials as f64;
    let avg = errors.iter().sum::<f64>() / n;
    let std = (errors.iter().map(|e| (e - avg) * (e - avg)).sum::<f64>() / n).sqrt();
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let mut instance_histogram = BTreeMap::new();
    for &c in &instance_counts {
        *instance_histogram.entry(c).or_insert(0) += 1;
    }
    Ok(TrialReport {
        template: spec.to_string(),
        trials,
        base_seed,
        config: RunConfig { kind: spec.kind(), ..*cfg },
        std,
        avg,
        min,
        avg_time_s: total_time / n,
        errors,
        instance_counts,
        instance_histogram,
        expected_instances: spec.instances(),
    })
}

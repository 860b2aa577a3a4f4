//! Geometric model families: minimal solvers, residuals and degeneracy tests.
//!
//! Every family maps a minimal subset of observations to one or more exact
//! parameter vectors and measures the absolute geometric residual of an
//! observation against a parameter vector. Homographies and fundamental
//! matrices use the first-order (Sampson) approximation of the geometric
//! error; lines and circles use exact point distances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Systems whose condition number exceeds this cap are rejected as degenerate.
pub const CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "line2d")]
    Line2D,
    #[serde(rename = "line3d")]
    Line3D,
    #[serde(rename = "circle2d")]
    Circle2D,
    #[serde(rename = "homography")]
    Homography,
    #[serde(rename = "fundamental")]
    Fundamental,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Line2D,
        ModelKind::Line3D,
        ModelKind::Circle2D,
        ModelKind::Homography,
        ModelKind::Fundamental,
    ];

    /// Number of observations that determine a model exactly.
    pub fn minimal_subset_size(self) -> usize {
        match self {
            ModelKind::Line2D | ModelKind::Line3D => 2,
            ModelKind::Circle2D => 3,
            ModelKind::Homography => 4,
            ModelKind::Fundamental => 7,
        }
    }

    /// Coordinates per observation.
    pub fn dimension(self) -> usize {
        match self {
            ModelKind::Line2D | ModelKind::Circle2D => 2,
            ModelKind::Line3D => 3,
            ModelKind::Homography | ModelKind::Fundamental => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Line2D => "line2d",
            ModelKind::Line3D => "line3d",
            ModelKind::Circle2D => "circle2d",
            ModelKind::Homography => "homography",
            ModelKind::Fundamental => "fundamental",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "line2d" | "line" => Ok(ModelKind::Line2D),
            "line3d" => Ok(ModelKind::Line3D),
            "circle2d" | "circle" => Ok(ModelKind::Circle2D),
            "homography" => Ok(ModelKind::Homography),
            "fundamental" => Ok(ModelKind::Fundamental),
            _ => Err(ModelError::UnknownKind(s.to_string())),
        }
    }
}

/// Parameters of one model instance.
///
/// * `Line2D`: `[a, b, c]` with `a x + b y + c = 0` and `a² + b² = 1`.
/// * `Line3D`: `[px, py, pz, dx, dy, dz]`, a point and a unit direction.
/// * `Circle2D`: `[cx, cy, r]` with `r > 0`.
/// * `Homography`: row-major 3×3 matrix mapping `(x, y)` to `(x', y')`, unit Frobenius norm.
/// * `Fundamental`: row-major 3×3 matrix with `x'ᵀ F x = 0`, unit Frobenius norm, rank 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values")]
pub enum ModelParams {
    #[serde(rename = "line2d")]
    Line2D([f64; 3]),
    #[serde(rename = "line3d")]
    Line3D([f64; 6]),
    #[serde(rename = "circle2d")]
    Circle2D([f64; 3]),
    #[serde(rename = "homography")]
    Homography([f64; 9]),
    #[serde(rename = "fundamental")]
    Fundamental([f64; 9]),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Line2D(_) => ModelKind::Line2D,
            ModelParams::Line3D(_) => ModelKind::Line3D,
            ModelParams::Circle2D(_) => ModelKind::Circle2D,
            ModelParams::Homography(_) => ModelKind::Homography,
            ModelParams::Fundamental(_) => ModelKind::Fundamental,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            ModelParams::Line2D(v) | ModelParams::Circle2D(v) => v,
            ModelParams::Line3D(v) => v,
            ModelParams::Homography(v) | ModelParams::Fundamental(v) => v,
        }
    }

    /// Builds parameters from raw values, applying the family's normalization.
    pub fn from_values(kind: ModelKind, values: &[f64]) -> Option<Self> {
        let params = match kind {
            ModelKind::Line2D => {
                let v: [f64; 3] = values.try_into().ok()?;
                let norm = v[0].hypot(v[1]);
                if norm == 0.0 {
                    return None;
                }
                ModelParams::Line2D(canonical_line2d([v[0] / norm, v[1] / norm, v[2] / norm]))
            }
            ModelKind::Line3D => {
                let v: [f64; 6] = values.try_into().ok()?;
                let d = Vector3::new(v[3], v[4], v[5]);
                let norm = d.norm();
                if norm == 0.0 {
                    return None;
                }
                let d = canonical_direction(d / norm);
                ModelParams::Line3D([v[0], v[1], v[2], d.x, d.y, d.z])
            }
            ModelKind::Circle2D => {
                let v: [f64; 3] = values.try_into().ok()?;
                if v[2] <= 0.0 {
                    return None;
                }
                ModelParams::Circle2D(v)
            }
            ModelKind::Homography => {
                let v: [f64; 9] = values.try_into().ok()?;
                ModelParams::Homography(matrix_to_array(&normalize_frobenius(&array_to_matrix(&v))?))
            }
            ModelKind::Fundamental => {
                let v: [f64; 9] = values.try_into().ok()?;
                let f = enforce_rank2(&array_to_matrix(&v));
                ModelParams::Fundamental(matrix_to_array(&normalize_frobenius(&f)?))
            }
        };
        params.values().iter().all(|x| x.is_finite()).then_some(params)
    }
}

/// Minimum observation count for an exact fit of `kind`.
pub fn minimal_subset_size(kind: ModelKind) -> usize {
    kind.minimal_subset_size()
}

/// Fits `kind` exactly to a minimal subset.
///
/// Returns one parameter vector for every family except `Fundamental`, whose
/// seven-point solver yields one to three rank-2 solutions.
pub fn fit_minimal(kind: ModelKind, subset: &[&[f64]]) -> Result<Vec<ModelParams>, ModelError> {
    let expected = kind.minimal_subset_size();
    if subset.len() != expected {
        return Err(ModelError::SubsetSize { kind, expected, found: subset.len() });
    }
    if let Some(bad) = subset.iter().find(|p| p.len() != kind.dimension()) {
        return Err(ModelError::Dimension { kind, expected: kind.dimension(), found: bad.len() });
    }
    let degenerate = || ModelError::DegenerateSubset(kind);
    match kind {
        ModelKind::Line2D => fit_line2d(subset[0], subset[1]).map(|p| vec![p]).ok_or_else(degenerate),
        ModelKind::Line3D => fit_line3d(subset[0], subset[1]).map(|p| vec![p]).ok_or_else(degenerate),
        ModelKind::Circle2D => fit_circle(subset[0], subset[1], subset[2])
            .map(|p| vec![p])
            .ok_or_else(degenerate),
        ModelKind::Homography => fit_homography(subset).map(|p| vec![p]).ok_or_else(degenerate),
        ModelKind::Fundamental => {
            let sols = fit_fundamental_7pt(subset);
            if sols.is_empty() {
                Err(degenerate())
            } else {
                Ok(sols)
            }
        }
    }
}

/// Absolute geometric residual of `obs` with respect to `params`.
///
/// `obs` must have the dimensionality of the parameter family.
#[inline]
pub fn residual(params: &ModelParams, obs: &[f64]) -> f64 {
    match params {
        ModelParams::Line2D([a, b, c]) => (a * obs[0] + b * obs[1] + c).abs(),
        ModelParams::Line3D([px, py, pz, dx, dy, dz]) => {
            let (vx, vy, vz) = (obs[0] - px, obs[1] - py, obs[2] - pz);
            let cx = vy * dz - vz * dy;
            let cy = vz * dx - vx * dz;
            let cz = vx * dy - vy * dx;
            (cx * cx + cy * cy + cz * cz).sqrt()
        }
        ModelParams::Circle2D([cx, cy, r]) => ((obs[0] - cx).hypot(obs[1] - cy) - r).abs(),
        ModelParams::Homography(h) => sampson_homography(h, obs),
        ModelParams::Fundamental(f) => sampson_fundamental(f, obs),
    }
}

/// Residuals of every observation in `data` against `params`.
pub fn residuals(params: &ModelParams, data: &crate::DataSet) -> Vec<f64> {
    data.points().map(|p| residual(params, p)).collect()
}

fn relative_tolerance(points: &[&[f64]]) -> f64 {
    let mag = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0_f64, |m, c| m.max(c.abs()));
    mag / CONDITION_CAP
}

fn canonical_line2d(v: [f64; 3]) -> [f64; 3] {
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

fn canonical_direction(d: Vector3<f64>) -> Vector3<f64> {
    let first = d.iter().copied().find(|c| *c != 0.0).unwrap_or(1.0);
    if first < 0.0 {
        -d
    } else {
        d
    }
}

fn fit_line2d(p: &[f64], q: &[f64]) -> Option<ModelParams> {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let len = dx.hypot(dy);
    if len <= relative_tolerance(&[p, q]) {
        return None;
    }
    let (a, b) = (-dy / len, dx / len);
    let c = -(a * p[0] + b * p[1]);
    Some(ModelParams::Line2D(canonical_line2d([a, b, c])))
}

fn fit_line3d(p: &[f64], q: &[f64]) -> Option<ModelParams> {
    let d = Vector3::new(q[0] - p[0], q[1] - p[1], q[2] - p[2]);
    let len = d.norm();
    if len <= relative_tolerance(&[p, q]) {
        return None;
    }
    let d = canonical_direction(d / len);
    Some(ModelParams::Line3D([p[0], p[1], p[2], d.x, d.y, d.z]))
}

fn fit_circle(p1: &[f64], p2: &[f64], p3: &[f64]) -> Option<ModelParams> {
    // Work relative to p1 so the system is well conditioned far from the origin.
    let (ax, ay) = (p2[0] - p1[0], p2[1] - p1[1]);
    let (bx, by) = (p3[0] - p1[0], p3[1] - p1[1]);
    let m = nalgebra::Matrix2::new(2.0 * ax, 2.0 * ay, 2.0 * bx, 2.0 * by);
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smax == 0.0 || smin <= smax / CONDITION_CAP {
        return None;
    }
    let rhs = nalgebra::Vector2::new(ax * ax + ay * ay, bx * bx + by * by);
    let c = m.lu().solve(&rhs)?;
    let r = c.norm();
    let (cx, cy) = (c.x + p1[0], c.y + p1[1]);
    (r > 0.0 && r.is_finite()).then_some(ModelParams::Circle2D([cx, cy, r]))
}

/// Similarity transform taking points to zero centroid and mean distance √2.
fn hartley_transform(points: impl Iterator<Item = (f64, f64)> + Clone) -> Option<Matrix3<f64>> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let mean_dist = points.map(|(x, y)| (x - mx).hypot(y - my)).sum::<f64>() / n;
    if mean_dist <= 0.0 || !mean_dist.is_finite() {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Some(Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, x: f64, y: f64) -> (f64, f64) {
    let v = t * Vector3::new(x, y, 1.0);
    (v.x / v.z, v.y / v.z)
}

/// Right singular vectors of `rows` (≤ 9 rows of 9), ordered by increasing singular value,
/// together with the singular values normalized by the largest.
fn nullspace_basis(rows: &[[f64; 9]]) -> Option<(Vec<[f64; 9]>, [f64; 9])> {
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let mut rel = [0.0; 9];
    let mut basis = Vec::with_capacity(9);
    for (k, &i) in order.iter().enumerate() {
        rel[k] = svd.singular_values[i] / smax;
        let mut v = [0.0; 9];
        for c in 0..9 {
            v[c] = v_t[(i, c)];
        }
        basis.push(v);
    }
    Some((basis, rel))
}

fn array_to_matrix(v: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

fn matrix_to_array(m: &Matrix3<f64>) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

/// Scales to unit Frobenius norm with the largest-magnitude entry positive.
fn normalize_frobenius(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let norm = m.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let pivot = m.iter().copied().fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
    Some(if pivot < 0.0 { -m / norm } else { m / norm })
}

fn enforce_rank2(f: &Matrix3<f64>) -> Matrix3<f64> {
    let mut svd = f.svd(true, true);
    let imin = svd.singular_values.imin();
    svd.singular_values[imin] = 0.0;
    svd.recompose().unwrap_or(*f)
}

/// Three points (in one image) closer to collinear than the condition cap allows.
fn has_collinear_triple(pts: &[(f64, f64)]) -> bool {
    let scale = pts.iter().fold(1.0_f64, |m, (x, y)| m.max(x.abs()).max(y.abs()));
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for k in j + 1..pts.len() {
                let (a, b, c) = (pts[i], pts[j], pts[k]);
                let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                if cross.abs() <= scale * scale / CONDITION_CAP {
                    return true;
                }
            }
        }
    }
    false
}

fn fit_homography(subset: &[&[f64]]) -> Option<ModelParams> {
    let src: Vec<(f64, f64)> = subset.iter().map(|p| (p[0], p[1])).collect();
    let dst: Vec<(f64, f64)> = subset.iter().map(|p| (p[2], p[3])).collect();
    if has_collinear_triple(&src) || has_collinear_triple(&dst) {
        return None;
    }
    let t1 = hartley_transform(src.iter().copied())?;
    let t2 = hartley_transform(dst.iter().copied())?;
    let mut rows = Vec::with_capacity(8);
    for (s, d) in src.iter().zip(&dst) {
        let (x, y) = apply(&t1, s.0, s.1);
        let (u, v) = apply(&t2, d.0, d.1);
        rows.push([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]);
        rows.push([0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v]);
    }
    let (basis, rel) = nullspace_basis(&rows)?;
    // rel[0] is the padding row's zero; a second near-zero value means a 2-D nullspace.
    if rel[1] <= 1.0 / CONDITION_CAP {
        return None;
    }
    let hn = array_to_matrix(&basis[0]);
    let h = t2.try_inverse()? * hn * t1;
    let h = normalize_frobenius(&h)?;
    Some(ModelParams::Homography(matrix_to_array(&h)))
}

/// Real roots of `a3 x³ + a2 x² + a1 x + a0`, ascending. The flag is set when the
/// leading coefficient vanishes, i.e. one root sits at infinity.
fn real_cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> (Vec<f64>, bool) {
    let scale = [a3, a2, a1, a0].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return (Vec::new(), false);
    }
    let poly = |x: f64| ((a3 * x + a2) * x + a1) * x + a0;
    let dpoly = |x: f64| (3.0 * a3 * x + 2.0 * a2) * x + a1;
    let mut roots = Vec::with_capacity(3);
    let mut at_infinity = false;
    if a3.abs() <= scale * 1e-12 {
        at_infinity = true;
        if a2.abs() > scale * 1e-12 {
            let disc = a1 * a1 - 4.0 * a2 * a0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -0.5 * (a1 + a1.signum() * sq);
                roots.push(q / a2);
                if q != 0.0 {
                    roots.push(a0 / q);
                }
            }
        } else if a1.abs() > scale * 1e-12 {
            roots.push(-a0 / a1);
        }
    } else {
        let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
        let p = c - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc > 0.0 {
            let sq = disc.sqrt();
            let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
            roots.push(t - b / 3.0);
        } else {
            let r = (-p / 3.0).sqrt();
            let phi = if r > 0.0 { (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0).acos() } else { 0.0 };
            for k in 0..3 {
                let t = 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
                roots.push(t - b / 3.0);
            }
        }
    }
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let d = dpoly(*x);
            if d == 0.0 {
                break;
            }
            let step = poly(*x) / d;
            if !step.is_finite() {
                break;
            }
            *x -= step;
        }
    }
    roots.retain(|x| x.is_finite());
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));
    (roots, at_infinity)
}

fn fit_fundamental_7pt(subset: &[&[f64]]) -> Vec<ModelParams> {
    let src: Vec<(f64, f64)> = subset.iter().map(|p| (p[0], p[1])).collect();
    let dst: Vec<(f64, f64)> = subset.iter().map(|p| (p[2], p[3])).collect();
    let (Some(t1), Some(t2)) = (
        hartley_transform(src.iter().copied()),
        hartley_transform(dst.iter().copied()),
    ) else {
        return Vec::new();
    };
    let rows: Vec<[f64; 9]> = src
        .iter()
        .zip(&dst)
        .map(|(s, d)| {
            let (x, y) = apply(&t1, s.0, s.1);
            let (u, v) = apply(&t2, d.0, d.1);
            [u * x, u * y, u, v * x, v * y, v, x, y, 1.0]
        })
        .collect();
    let Some((basis, rel)) = nullspace_basis(&rows) else {
        return Vec::new();
    };
    // Two padding zeros plus the genuine two-dimensional nullspace.
    if rel[2] <= 1.0 / CONDITION_CAP {
        return Vec::new();
    }
    let f1 = array_to_matrix(&basis[0]);
    let f2 = array_to_matrix(&basis[1]);
    let det_at = |a: f64| (f1 * a + f2 * (1.0 - a)).determinant();
    let (d0, d1, dm, d2) = (det_at(0.0), det_at(1.0), det_at(-1.0), det_at(2.0));
    let c0 = d0;
    let c2 = (d1 + dm) / 2.0 - c0;
    let c3 = (d2 - 4.0 * c2 - c0 - (d1 - dm)) / 6.0;
    let c1 = (d1 - dm) / 2.0 - c3;
    let (alphas, at_infinity) = real_cubic_roots(c3, c2, c1, c0);

    let mut candidates: Vec<Matrix3<f64>> = alphas.iter().map(|&a| f1 * a + f2 * (1.0 - a)).collect();
    if at_infinity {
        candidates.push(f1 - f2);
    }
    let mut out = Vec::with_capacity(3);
    for fhat in candidates {
        let f = t2.transpose() * enforce_rank2(&fhat) * t1;
        let Some(f) = normalize_frobenius(&enforce_rank2(&f)) else {
            continue;
        };
        let params = ModelParams::Fundamental(matrix_to_array(&f));
        if params.values().iter().all(|v| v.is_finite()) {
            out.push(params);
        }
    }
    out
}

fn sampson_homography(h: &[f64; 9], obs: &[f64]) -> f64 {
    let (x, y, xp, yp) = (obs[0], obs[1], obs[2], obs[3]);
    let w = h[6] * x + h[7] * y + h[8];
    let e1 = h[0] * x + h[1] * y + h[2] - xp * w;
    let e2 = h[3] * x + h[4] * y + h[5] - yp * w;
    // Jacobian of (e1, e2) with respect to (x, y, x', y').
    let j1 = [h[0] - xp * h[6], h[1] - xp * h[7], -w, 0.0];
    let j2 = [h[3] - yp * h[6], h[4] - yp * h[7], 0.0, -w];
    let a = j1.iter().map(|v| v * v).sum::<f64>();
    let b = j1.iter().zip(&j2).map(|(p, q)| p * q).sum::<f64>();
    let c = j2.iter().map(|v| v * v).sum::<f64>();
    let det = a * c - b * b;
    let e_norm2 = e1 * e1 + e2 * e2;
    if det <= (a + c) * (a + c) * f64::EPSILON {
        let trace = a + c;
        return if trace > 0.0 { (e_norm2 / trace).sqrt() } else { e_norm2.sqrt() };
    }
    // eᵀ (J Jᵀ)⁻¹ e
    let d2 = (c * e1 * e1 - 2.0 * b * e1 * e2 + a * e2 * e2) / det;
    d2.max(0.0).sqrt()
}

fn sampson_fundamental(f: &[f64; 9], obs: &[f64]) -> f64 {
    let (x, y, xp, yp) = (obs[0], obs[1], obs[2], obs[3]);
    let fx0 = f[0] * x + f[1] * y + f[2];
    let fx1 = f[3] * x + f[4] * y + f[5];
    let fx2 = f[6] * x + f[7] * y + f[8];
    let ftx0 = f[0] * xp + f[3] * yp + f[6];
    let ftx1 = f[1] * xp + f[4] * yp + f[7];
    let algebraic = xp * fx0 + yp * fx1 + fx2;
    let denom = fx0 * fx0 + fx1 * fx1 + ftx0 * ftx0 + ftx1 * ftx1;
    if denom <= f64::MIN_POSITIVE {
        return algebraic.abs();
    }
    algebraic.abs() / denom.sqrt()
}

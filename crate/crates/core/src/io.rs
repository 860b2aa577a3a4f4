//! Text formats: point files, AdelaideRMF correspondences, `key = value`
//! configuration, result files and the decision-graph picture.
//!
//! Point file grammar (fields separated by whitespace and/or commas, `#`
//! starts a comment that runs to the end of the line):
//!
//! ```text
//! file   := header row*
//! header := "points" kind dim ["labeled"]
//! row    := real{dim} [label]
//! ```
//!
//! `kind` is one of `line2d`, `line3d`, `circle2d`, `homography`,
//! `fundamental`; `dim` must match it. Labels are non-negative integers with 0
//! meaning outlier.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::data::DataSet;
use crate::error::{IoError, ModelError};
use crate::model::{ModelKind, ModelParams};
use crate::pipeline::{FitResult, RunConfig};

/// Observations of one model family, optionally with ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFile {
    pub kind: ModelKind,
    pub data: DataSet,
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect()
}

/// Non-blank lines with comments removed, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn real(line: usize, s: &str) -> Result<f64, IoError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::parse(line, format!("`{s}` is not a finite number"))),
    }
}

fn label(line: usize, s: &str) -> Result<usize, IoError> {
    s.parse().map_err(|_| IoError::parse(line, format!("label `{s}` is not a non-negative integer")))
}

impl PointFile {
    pub fn new(kind: ModelKind, data: DataSet) -> Self {
        Self { kind, data }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut lines = content_lines(text);
        let (ln, header) = lines.next().ok_or(IoError::Empty)?;
        let h = fields(header);
        if h.first() != Some(&"points") || !(3..=4).contains(&h.len()) {
            return Err(IoError::parse(ln, "expected header `points <kind> <dim> [labeled]`"));
        }
        let kind: ModelKind = h[1].parse().map_err(|e: ModelError| IoError::parse(ln, e.to_string()))?;
        let dim: usize = h[2].parse().map_err(|_| IoError::parse(ln, format!("bad dimension `{}`", h[2])))?;
        if dim != kind.dimension() {
            return Err(IoError::parse(ln, format!("{kind} observations have {} coordinates, not {dim}", kind.dimension())));
        }
        let labeled = match h.get(3) {
            None => false,
            Some(&"labeled") => true,
            Some(other) => return Err(IoError::parse(ln, format!("unexpected header field `{other}`"))),
        };

        let arity = dim + usize::from(labeled);
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        for (ln, line) in lines {
            let f = fields(line);
            if f.len() != arity {
                return Err(IoError::parse(ln, format!("expected {arity} values, found {}", f.len())));
            }
            for s in &f[..dim] {
                coords.push(real(ln, s)?);
            }
            if labeled {
                labels.push(label(ln, f[dim])?);
            }
        }
        if coords.is_empty() {
            return Err(IoError::Empty);
        }
        let mut data = DataSet::new(dim, coords)?;
        if labeled {
            data = data.with_labels(labels)?;
        }
        Ok(Self { kind, data })
    }

    /// Serializes with `comments` as leading `#` lines. Coordinates use the
    /// shortest representation that parses back to the same value.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let labels = self.data.labels();
        let _ = writeln!(
            out,
            "points {} {}{}",
            self.kind,
            self.data.dim(),
            if labels.is_some() { " labeled" } else { "" }
        );
        for (i, p) in self.data.points().enumerate() {
            for (k, v) in p.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            if let Some(l) = labels {
                let _ = write!(out, " {}", l[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses AdelaideRMF-style correspondences, one match per row: either
/// `x y x' y' label` or homogeneous `x y w x' y' w' label`. Label 0 marks an
/// outlier.
pub fn parse_adelaide(text: &str) -> Result<DataSet, IoError> {
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in content_lines(text) {
        let f = fields(line);
        let v: Vec<f64> = f[..f.len().saturating_sub(1)].iter().map(|s| real(ln, s)).collect::<Result<_, _>>()?;
        match v.len() {
            4 => coords.extend_from_slice(&v),
            6 => {
                if v[2] == 0.0 || v[5] == 0.0 {
                    return Err(IoError::parse(ln, "homogeneous coordinate is zero"));
                }
                coords.extend_from_slice(&[v[0] / v[2], v[1] / v[2], v[3] / v[5], v[4] / v[5]]);
            }
            _ => return Err(IoError::parse(ln, format!("expected 5 or 7 values, found {}", f.len()))),
        }
        labels.push(label(ln, f[f.len() - 1])?);
    }
    if coords.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(DataSet::new(4, coords)?.with_labels(labels)?)
}

/// Applies `key = value` lines to `cfg`. Blank lines and `#` comments are
/// ignored; keys are those of [`RunConfig::to_key_values`].
pub fn apply_config_text(cfg: &mut RunConfig, text: &str) -> Result<(), IoError> {
    for (ln, line) in content_lines(text) {
        let (k, v) = line.split_once('=').ok_or_else(|| IoError::parse(ln, "expected `key = value`"))?;
        cfg.set(k, v).map_err(|m| IoError::parse(ln, m))?;
    }
    Ok(())
}

/// `key = value` lines for every field of `cfg`.
pub fn config_text(cfg: &RunConfig) -> String {
    cfg.to_key_values().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn config_comments(cfg: &RunConfig) -> String {
    cfg.to_key_values().into_iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

/// Labels file: the configuration as comments, then one label per point.
pub fn labels_text(labels: &[usize], cfg: &RunConfig) -> String {
    let mut out = config_comments(cfg);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

/// Reads labels from a labels file or from a labelled point file.
pub fn parse_labels(text: &str) -> Result<Vec<usize>, IoError> {
    let mut lines = content_lines(text).peekable();
    match lines.peek() {
        None => Err(IoError::Empty),
        Some((_, first)) if first.starts_with("points") => {
            let pf = PointFile::parse(text)?;
            pf.data.labels().map(<[usize]>::to_vec).ok_or_else(|| IoError::parse(1, "point file carries no labels"))
        }
        Some(_) => lines
            .map(|(ln, line)| match fields(line).as_slice() {
                [one] => label(ln, one),
                f => Err(IoError::parse(ln, format!("expected one label, found {} fields", f.len()))),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct ModesDoc<'a> {
    config: &'a RunConfig,
    num_points: usize,
    num_vertices: usize,
    num_retained: usize,
    entropy: f64,
    drop_position: usize,
    modes: Vec<ModeDoc<'a>>,
}

#[derive(Serialize)]
struct ModeDoc<'a> {
    label: usize,
    params: &'a ModelParams,
    scale: f64,
    weight: f64,
    mtd: f64,
    /// Index in the unreduced hypergraph, as in the decision-graph file.
    vertex_index: usize,
    hypothesis: usize,
    inliers: &'a [usize],
}

/// Modes file: configuration, summary counts and every fitted instance.
pub fn modes_json(result: &FitResult) -> Result<String, IoError> {
    let doc = ModesDoc {
        config: &result.config,
        num_points: result.labels.len(),
        num_vertices: result.hypergraph.len(),
        num_retained: result.reduced.len(),
        entropy: result.reduction.entropy,
        drop_position: result.selection.drop_position,
        modes: result
            .modes
            .iter()
            .map(|m| ModeDoc {
                label: m.label,
                params: &m.params,
                scale: m.scale,
                weight: m.weight,
                mtd: m.mtd,
                vertex_index: result.reduction.retained[m.vertex],
                hypothesis: m.hypothesis,
                inliers: &m.inliers,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// One row of the decision-graph file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRow {
    /// Index in the unreduced hypergraph.
    pub vertex_index: usize,
    pub weight: f64,
    /// Present for retained vertices only.
    pub mtd: Option<f64>,
    pub retained: bool,
    pub mode: bool,
}

const DECISION_HEADER: &str = "vertex_index,weight,mtd,retained,mode";

/// Every vertex of the unreduced hypergraph, sorted by weight non-decreasing
/// (ties by index).
pub fn decision_rows(result: &FitResult) -> Vec<DecisionRow> {
    let g = &result.hypergraph;
    let mut rows: Vec<DecisionRow> = g
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| DecisionRow { vertex_index: i, weight: v.weight, mtd: None, retained: false, mode: false })
        .collect();
    for (k, &i) in result.reduction.retained.iter().enumerate() {
        rows[i].retained = true;
        rows[i].mtd = Some(result.decision[k].mtd);
    }
    for &m in &result.selection.modes {
        rows[result.reduction.retained[m]].mode = true;
    }
    rows.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.vertex_index.cmp(&b.vertex_index)));
    rows
}

/// Decision-graph CSV with the configuration as leading comments.
pub fn decision_csv(result: &FitResult) -> String {
    let mut out = config_comments(&result.config);
    out.push_str(DECISION_HEADER);
    out.push('\n');
    for r in decision_rows(result) {
        let mtd = r.mtd.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.vertex_index, r.weight, mtd, u8::from(r.retained), u8::from(r.mode));
    }
    out
}

pub fn parse_decision_csv(text: &str) -> Result<Vec<DecisionRow>, IoError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or(IoError::Empty)?;
    if header != DECISION_HEADER {
        return Err(IoError::parse(ln, format!("expected header `{DECISION_HEADER}`")));
    }
    let flag = |ln: usize, s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(IoError::parse(ln, format!("flag `{s}` is not 0 or 1"))),
    };
    let rows = lines
        .map(|(ln, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(IoError::parse(ln, format!("expected 5 columns, found {}", f.len())));
            }
            let mtd = if f[2].is_empty() { None } else { Some(real(ln, f[2])?) };
            Ok(DecisionRow {
                vertex_index: f[0].parse().map_err(|_| IoError::parse(ln, "bad vertex index"))?,
                weight: real(ln, f[1])?,
                mtd,
                retained: flag(ln, f[3])?,
                mode: flag(ln, f[4])?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(rows)
}

/// Scatter plot of MTD against weight rank (non-decreasing weight, left to
/// right) over the vertices that carry an MTD. Modes are drawn larger and in
/// red.
pub fn decision_graph_svg(rows: &[DecisionRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 16.0;
    const TOP: f64 = 16.0;
    const BOTTOM: f64 = 44.0;

    let mut pts: Vec<&DecisionRow> = rows.iter().filter(|r| r.mtd.is_some()).collect();
    pts.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.vertex_index.cmp(&b.vertex_index)));
    let span = pts.len().saturating_sub(1).max(1) as f64;
    let x = |k: usize| LEFT + (W - LEFT - RIGHT) * k as f64 / span;
    let y = |m: f64| TOP + (H - TOP - BOTTOM) * (1.0 - m.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for t in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{t:.1}</text>"#,
            LEFT - 6.0,
            y(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">vertices by weight (non-decreasing)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">minimum T-distance</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    );
    let _ = writeln!(s, r##"<g fill="#6b7c93">"##);
    for (k, r) in pts.iter().enumerate().filter(|(_, r)| !r.mode) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, x(k), y(r.mtd.unwrap_or(0.0)));
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r##"<g fill="#d62728" stroke="black" stroke-width="0.5">"##);
    for (k, r) in pts.iter().enumerate().filter(|(_, r)| r.mode) {
        let _ = writeln!(
            s,
            r#"<circle class="mode" cx="{:.2}" cy="{:.2}" r="5"><title>vertex {}</title></circle>"#,
            x(k),
            y(r.mtd.unwrap_or(0.0)),
            r.vertex_index
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(bytes).map_err(file_err)?;
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

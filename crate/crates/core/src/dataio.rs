//! File formats, run configuration, reports and plots.
//!
//! Prediction matrix (CSV): `row_id`, `y`, one or more `attr:<name>` columns
//! with 0/1 values, one or more `model:<id>` score columns and an optional
//! `split` column (`train`, `ensemble`, `test`).
//!
//! Model metrics (CSV): `id`, `fairness`, `accuracy`.
//!
//! Frontier report: `taf_points.csv` (`id, fairness, accuracy, pareto`) and
//! `report.json`. Reals are written in shortest round-trip form, so parsing
//! a written file reproduces the values bit for bit.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frontier::{CurvePoint, ModelRecord, TafCurve, TafiCurve, WeightFunction};
use crate::linalg::Matrix;
use crate::metrics::{ContrastKind, ContrastSpec, EvaluationSet, GroupAssignment};
use crate::stacker::{log_grid, FairnessAxis, LossKind, Task};

pub const ATTR_PREFIX: &str = "attr:";
pub const MODEL_PREFIX: &str = "model:";
pub const TAF_POINTS_FILE: &str = "taf_points.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Ensemble,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Ensemble, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Ensemble => "ensemble",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Split::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

/// 50/25/25 train/ensemble/test assignment from a seeded shuffle.
pub fn assign_splits(n: usize, seed: u64) -> Vec<Split> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, ens) = (n / 2, n / 4);
    let mut out = vec![Split::Test; n];
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = if pos < train {
            Split::Train
        } else if pos < train + ens {
            Split::Ensemble
        } else {
            Split::Test
        };
    }
    out
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_error(path: &Path, row: usize, column: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file_label(path),
        row,
        column: column.to_string(),
        msg: msg.into(),
    }
}

fn parse_finite(path: &Path, row: usize, column: &str, raw: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(parse_error(path, row, column, format!("non-finite value `{raw}`"))),
        Err(_) => Err(parse_error(path, row, column, format!("expected a number, got `{raw}`"))),
    }
}

/// Rows of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub row_ids: Vec<String>,
    pub eval: EvaluationSet<f64>,
    pub scores: Matrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionData {
    pub model_ids: Vec<String>,
    pub attributes: Vec<String>,
    pub train: SplitData,
    pub ensemble: SplitData,
    pub test: SplitData,
    /// Whether assignments came from a `split` column.
    pub explicit_split: bool,
}

impl PredictionData {
    pub fn split(&self, s: Split) -> &SplitData {
        match s {
            Split::Train => &self.train,
            Split::Ensemble => &self.ensemble,
            Split::Test => &self.test,
        }
    }
}

/// Parses a prediction matrix. Without a `split` column rows are assigned
/// by [`assign_splits`] with `seed`. Error rows are 1-based data rows.
pub fn parse_prediction_matrix(path: &Path, seed: u64) -> Result<PredictionData> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let missing = |name: &str| Error::Format {
        file: file_label(path),
        msg: format!("missing required column `{name}`"),
    };
    let row_id_col = find("row_id").ok_or_else(|| missing("row_id"))?;
    let y_col = find("y").ok_or_else(|| missing("y"))?;
    let split_col = find("split");
    let attr_cols: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with(ATTR_PREFIX))
        .collect();
    let model_cols: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with(MODEL_PREFIX))
        .collect();
    if attr_cols.is_empty() {
        return Err(missing("attr:<name>"));
    }
    if model_cols.is_empty() {
        return Err(missing("model:<id>"));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h) {
            return Err(Error::Format {
                file: file_label(path),
                msg: format!("duplicate column `{h}`"),
            });
        }
    }
    for (i, h) in header.iter().enumerate() {
        let known = i == row_id_col
            || i == y_col
            || Some(i) == split_col
            || attr_cols.contains(&i)
            || model_cols.contains(&i);
        if !known {
            return Err(Error::Format {
                file: file_label(path),
                msg: format!("unknown column `{h}`"),
            });
        }
    }
    let strip = |cols: &[usize], prefix: &str| -> Result<Vec<String>> {
        cols.iter()
            .map(|&i| {
                let name = header[i][prefix.len()..].to_string();
                if name.is_empty() {
                    return Err(Error::Format {
                        file: file_label(path),
                        msg: format!("column `{}` has an empty name", header[i]),
                    });
                }
                Ok(name)
            })
            .collect()
    };
    let attributes = strip(&attr_cols, ATTR_PREFIX)?;
    let model_ids = strip(&model_cols, MODEL_PREFIX)?;

    let mut row_ids = Vec::new();
    let mut labels = Vec::new();
    let mut attrs: Vec<Vec<u8>> = vec![Vec::new(); attr_cols.len()];
    let mut scores: Vec<f64> = Vec::new();
    let mut splits = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        row_ids.push(rec[row_id_col].to_string());
        labels.push(parse_finite(path, row, "y", &rec[y_col])?);
        for (a, &c) in attr_cols.iter().enumerate() {
            let v = match &rec[c] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(parse_error(
                        path,
                        row,
                        &header[c],
                        format!("protected attribute must be 0 or 1, got `{other}`"),
                    ))
                }
            };
            attrs[a].push(v);
        }
        for &c in &model_cols {
            scores.push(parse_finite(path, row, &header[c], &rec[c])?);
        }
        if let Some(c) = split_col {
            let s = Split::parse(&rec[c]).ok_or_else(|| {
                parse_error(
                    path,
                    row,
                    "split",
                    format!("expected train, ensemble or test, got `{}`", &rec[c]),
                )
            })?;
            splits.push(s);
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Format {
            file: file_label(path),
            msg: "no data rows".into(),
        });
    }
    let explicit_split = split_col.is_some();
    if !explicit_split {
        splits = assign_splits(n, seed);
    }
    let k = model_cols.len();
    let mut parts = Vec::with_capacity(3);
    for s in Split::ALL {
        let idx: Vec<usize> = (0..n).filter(|&i| splits[i] == s).collect();
        if idx.len() < 2 {
            return Err(Error::Format {
                file: file_label(path),
                msg: format!("split `{}` has {} rows; at least 2 are required", s.as_str(), idx.len()),
            });
        }
        let groups = attributes
            .iter()
            .zip(&attrs)
            .map(|(name, vals)| GroupAssignment::new(name.clone(), idx.iter().map(|&i| vals[i]).collect()))
            .collect::<Result<Vec<_>>>()?;
        let eval = EvaluationSet::new(idx.iter().map(|&i| labels[i]).collect(), groups)?;
        let data: Vec<f64> = idx
            .iter()
            .flat_map(|&i| scores[i * k..(i + 1) * k].iter().copied())
            .collect();
        parts.push(SplitData {
            row_ids: idx.iter().map(|&i| row_ids[i].clone()).collect(),
            eval,
            scores: Matrix::from_row_major(idx.len(), k, data)?,
        });
    }
    let test = parts.pop().expect("three splits");
    let ensemble = parts.pop().expect("three splits");
    let train = parts.pop().expect("three splits");
    Ok(PredictionData {
        model_ids,
        attributes,
        train,
        ensemble,
        test,
        explicit_split,
    })
}

/// Writes a prediction matrix; `splits`, when given, fills the `split`
/// column.
pub fn write_prediction_matrix(
    path: &Path,
    row_ids: &[String],
    eval: &EvaluationSet<f64>,
    scores: &Matrix<f64>,
    model_ids: &[String],
    splits: Option<&[Split]>,
) -> Result<()> {
    let n = eval.len();
    crate::error::check_len("row ids vs rows", row_ids.len(), n)?;
    crate::error::check_len("score rows vs rows", scores.rows(), n)?;
    crate::error::check_len("model ids vs score columns", model_ids.len(), scores.cols())?;
    if let Some(s) = splits {
        crate::error::check_len("splits vs rows", s.len(), n)?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row_id".to_string(), "y".to_string()];
    header.extend(eval.groups().iter().map(|g| format!("{ATTR_PREFIX}{}", g.name())));
    header.extend(model_ids.iter().map(|m| format!("{MODEL_PREFIX}{m}")));
    if splits.is_some() {
        header.push("split".into());
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for i in 0..n {
        let mut rec = vec![row_ids[i].clone(), eval.labels()[i].to_string()];
        rec.extend(eval.groups().iter().map(|g| g.members()[i].to_string()));
        rec.extend(scores.row(i).iter().map(f64::to_string));
        if let Some(s) = splits {
            rec.push(s[i].as_str().to_string());
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Rounds to `decimals` decimal places.
pub fn round_to(v: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (v * scale).round() / scale
}

/// Parses a model-metrics file, optionally rounding both metrics.
pub fn parse_model_metrics(path: &Path, round_decimals: Option<u32>) -> Result<Vec<ModelRecord<f64>>> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Format {
            file: file_label(path),
            msg: format!("missing required column `{name}`"),
        })
    };
    let (id_col, f_col, a_col) = (col("id")?, col("fairness")?, col("accuracy")?);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let id = rec[id_col].to_string();
        if id.is_empty() {
            return Err(parse_error(path, row, "id", "empty model id"));
        }
        if !seen.insert(id.clone()) {
            return Err(parse_error(path, row, "id", format!("duplicate model id `{id}`")));
        }
        let mut values = [0.0; 2];
        for (slot, (c, name)) in values.iter_mut().zip([(f_col, "fairness"), (a_col, "accuracy")]) {
            let mut v = parse_finite(path, row, name, &rec[c])?;
            if let Some(d) = round_decimals {
                v = round_to(v, d);
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(parse_error(path, row, name, format!("{v} is outside [0, 1]")));
            }
            *slot = v;
        }
        out.push(ModelRecord::new(id, values[0], values[1])?);
    }
    if out.is_empty() {
        return Err(Error::Format {
            file: file_label(path),
            msg: "no models".into(),
        });
    }
    Ok(out)
}

pub fn write_model_metrics(path: &Path, records: &[ModelRecord<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "fairness", "accuracy"])
        .map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([r.id.clone(), r.fairness.to_string(), r.accuracy.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

/// SHA-256 over the contents of `paths`, each prefixed by its length.
pub fn input_digest(paths: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| Error::io(*p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightScore {
    pub kind: &'static str,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub label: String,
    pub fauc: f64,
    pub fauci: f64,
}

impl WeightScore {
    pub fn new(w: &WeightFunction<f64>, fauc: f64, fauci: f64) -> Self {
        let (kind, alpha, beta) = match *w {
            WeightFunction::Uniform => ("uniform", None, None),
            WeightFunction::Step { beta } => ("step", None, Some(beta)),
            WeightFunction::Power { alpha, beta } => ("power", Some(alpha), Some(beta)),
            WeightFunction::PointMassZero => ("point_mass_zero", None, None),
        };
        Self {
            kind,
            alpha,
            beta,
            label: w.label(),
            fauc,
            fauci,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

pub const SOFTWARE: Software = Software {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointOut {
    pub id: String,
    pub fairness: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierReport {
    pub software: Software,
    pub input_digest: String,
    pub settings: BTreeMap<String, String>,
    pub n_models: usize,
    pub weights: Vec<WeightScore>,
    pub taf_points: Vec<PointOut>,
    pub tafi_vertices: Vec<CurvePoint<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl FrontierReport {
    pub fn new(
        records: &[ModelRecord<f64>],
        curve: &TafCurve<f64>,
        tafi: &TafiCurve<f64>,
        weights: Vec<WeightScore>,
        settings: BTreeMap<String, String>,
        input_digest: String,
        timestamp: Option<String>,
    ) -> Self {
        Self {
            software: SOFTWARE,
            input_digest,
            settings,
            n_models: records.len(),
            weights,
            taf_points: curve
                .points()
                .iter()
                .zip(curve.source_ids())
                .map(|(p, id)| PointOut {
                    id: id.clone(),
                    fairness: p.fairness,
                    accuracy: p.accuracy,
                })
                .collect(),
            tafi_vertices: tafi.vertices().to_vec(),
            timestamp,
        }
    }
}

/// Marks which records are the curve's Pareto points. Each curve point
/// claims the first unclaimed record with the same id and values.
pub fn pareto_flags(records: &[ModelRecord<f64>], curve: &TafCurve<f64>) -> Vec<bool> {
    let mut flags = vec![false; records.len()];
    for (p, id) in curve.points().iter().zip(curve.source_ids()) {
        if let Some(i) = (0..records.len()).find(|&i| {
            !flags[i]
                && records[i].id == *id
                && records[i].fairness == p.fairness
                && records[i].accuracy == p.accuracy
        }) {
            flags[i] = true;
        }
    }
    flags
}

/// Writes `taf_points.csv` and `report.json` into `dir`, creating it if
/// needed.
pub fn write_frontier_report(
    dir: &Path,
    records: &[ModelRecord<f64>],
    curve: &TafCurve<f64>,
    report: &FrontierReport,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let points_path = dir.join(TAF_POINTS_FILE);
    let flags = pareto_flags(records, curve);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "fairness", "accuracy", "pareto"])
        .map_err(|e| csv_err(&points_path, e))?;
    for (r, &flag) in records.iter().zip(&flags) {
        w.write_record([
            r.id.clone(),
            r.fairness.to_string(),
            r.accuracy.to_string(),
            flag.to_string(),
        ])
        .map_err(|e| csv_err(&points_path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(&points_path, e.into_error()))?;
    write_bytes(&points_path, &bytes)?;

    let report_path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_bytes(&report_path, json.as_bytes())?;
    Ok((points_path, report_path))
}

/// Reads the Pareto rows of a `taf_points.csv` back into a curve.
pub fn read_taf_points(path: &Path) -> Result<TafCurve<f64>> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["id", "fairness", "accuracy", "pareto"] {
        return Err(Error::Format {
            file: file_label(path),
            msg: "expected header id,fairness,accuracy,pareto".into(),
        });
    }
    let mut pts = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let pareto = match &rec[3] {
            "true" => true,
            "false" => false,
            other => return Err(parse_error(path, row, "pareto", format!("expected true or false, got `{other}`"))),
        };
        if pareto {
            pts.push((
                rec[0].to_string(),
                parse_finite(path, row, "fairness", &rec[1])?,
                parse_finite(path, row, "accuracy", &rec[2])?,
            ));
        }
    }
    pts.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (ids, points) = pts
        .into_iter()
        .map(|(id, fairness, accuracy)| (id, CurvePoint { fairness, accuracy }))
        .unzip();
    TafCurve::from_points(points, ids)
}

/// A named curve to plot.
#[derive(Debug, Clone, Copy)]
pub enum PlotCurve<'a> {
    Taf(&'a str, &'a TafCurve<f64>),
    Tafi(&'a str, &'a TafiCurve<f64>),
}

impl PlotCurve<'_> {
    fn name(&self) -> &str {
        match self {
            PlotCurve::Taf(n, _) | PlotCurve::Tafi(n, _) => n,
        }
    }

    /// Polyline vertices in (fairness, accuracy) coordinates.
    fn polyline(&self) -> Vec<(f64, f64)> {
        match self {
            PlotCurve::Taf(_, c) => {
                // walk from fairness 0 rightwards: horizontal run, then drop
                let pts = c.points();
                let mut out = Vec::with_capacity(2 * pts.len());
                let last = pts[pts.len() - 1];
                out.push((0.0, last.accuracy));
                for i in (1..pts.len()).rev() {
                    out.push((pts[i].fairness, pts[i].accuracy));
                    out.push((pts[i].fairness, pts[i - 1].accuracy));
                }
                out.push((1.0, pts[0].accuracy));
                out.dedup();
                out
            }
            PlotCurve::Tafi(_, t) => t.vertices().iter().map(|v| (v.fairness, v.accuracy)).collect(),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Renders curves on fairness × accuracy axes spanning [0, 1]². Output
/// depends only on the inputs.
pub fn render_svg(curves: &[PlotCurve<'_>], title: &str) -> String {
    let pw = SVG_W - 2.0 * MARGIN;
    let ph = SVG_H - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x * pw;
    let sy = |y: f64| SVG_H - MARGIN - y * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        SVG_W / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{:.3}" y="{:.3}" width="{pw:.3}" height="{ph:.3}" fill="none" stroke="black"/>"#,
        sx(0.0),
        sy(1.0)
    );
    for i in 0..=5 {
        let t = f64::from(i) / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="11">{t:.1}</text>"#,
            sx(t),
            sy(0.0) + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{t:.1}</text>"#,
            sx(0.0) - 6.0,
            sy(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="13">fairness</text>"#,
        SVG_W / 2.0,
        SVG_H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {:.3})">accuracy</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = match c {
            PlotCurve::Taf(..) => "",
            PlotCurve::Tafi(..) => r#" stroke-dasharray="6 3""#,
        };
        let pts: Vec<String> = c
            .polyline()
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 + 18.0 * i as f64;
        let lx = SVG_W - MARGIN - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="2"{dash}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.3}" y="{ly:.3}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 26.0,
            escape(c.name())
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn write_svg(path: &Path, curves: &[PlotCurve<'_>], title: &str) -> Result<()> {
    write_bytes(path, render_svg(curves, title).as_bytes())
}

/// How the ridge strength is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSetting {
    Fixed(f64),
    Cv,
}

/// Run configuration read from `key = value` lines. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub fairness_metric: ContrastKind,
    /// Protected attributes; empty means every attribute in the input.
    pub contrast: Vec<String>,
    pub fairness_axis: Option<FairnessAxis>,
    pub weights: Vec<WeightFunction<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub lambda_count: usize,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub alpha: AlphaSetting,
    pub alpha_count: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub cv_folds: usize,
    pub seed: u64,
    pub threshold: f64,
    pub append_constant_model: bool,
    /// Accuracy given to the appended fairness-1 record by `frontier`.
    pub constant_accuracy: f64,
    pub loss: LossKind,
    pub round_decimals: Option<u32>,
    pub workers: Option<usize>,
    pub timestamp: bool,
    pub synth_n: usize,
    pub synth_k: usize,
    pub synth_group_fraction: f64,
    pub synth_shift: f64,
    pub synth_noise: f64,
    pub synth_bias_spread: f64,
    pub synth_attribute: String,
    pub synth_offsets: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Classification,
            fairness_metric: ContrastKind::DemographicParity,
            contrast: Vec::new(),
            fairness_axis: None,
            weights: vec![WeightFunction::Step { beta: 0.8 }],
            lambda_grid: None,
            lambda_count: 20,
            lambda_lo: 1.0,
            lambda_hi: 1e6,
            alpha: AlphaSetting::Cv,
            alpha_count: 6,
            alpha_lo: 1e2,
            alpha_hi: 1e7,
            cv_folds: 5,
            seed: 0,
            threshold: 0.5,
            append_constant_model: true,
            constant_accuracy: 0.0,
            loss: LossKind::Squared,
            round_decimals: None,
            workers: None,
            timestamp: false,
            synth_n: 2000,
            synth_k: 10,
            synth_group_fraction: 0.4,
            synth_shift: 0.5,
            synth_noise: 0.3,
            synth_bias_spread: 0.2,
            synth_attribute: "group".into(),
            synth_offsets: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "task",
    "fairness_metric",
    "contrast",
    "fairness_axis",
    "weights",
    "lambda_grid",
    "lambda_count",
    "lambda_lo",
    "lambda_hi",
    "alpha",
    "alpha_count",
    "alpha_lo",
    "alpha_hi",
    "cv_folds",
    "seed",
    "threshold",
    "append_constant_model",
    "constant_accuracy",
    "loss",
    "round_decimals",
    "workers",
    "timestamp",
    "synth_n",
    "synth_k",
    "synth_group_fraction",
    "synth_shift",
    "synth_noise",
    "synth_bias_spread",
    "synth_attribute",
    "synth_offsets",
];

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(config_err(key, format!("expected a finite number, got `{v}`"))),
    }
}

fn parse_nonneg(key: &str, v: &str) -> Result<f64> {
    let x = parse_num(key, v)?;
    if x < 0.0 {
        return Err(config_err(key, format!("must be >= 0, got `{v}`")));
    }
    Ok(x)
}

fn parse_positive(key: &str, v: &str) -> Result<f64> {
    let x = parse_num(key, v)?;
    if x <= 0.0 {
        return Err(config_err(key, format!("must be > 0, got `{v}`")));
    }
    Ok(x)
}

fn parse_count(key: &str, v: &str, min: usize) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(x) if x >= min => Ok(x),
        _ => Err(config_err(key, format!("expected an integer >= {min}, got `{v}`"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_choice<T: Copy>(key: &str, v: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|&(_, t)| t)
        .ok_or_else(|| {
            let allowed: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            config_err(key, format!("expected one of {}, got `{v}`", allowed.join("|")))
        })
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Parses `uniform`, `step:<beta>`, `power:<alpha>:<beta>` or
/// `point_mass_zero`.
pub fn parse_weight(key: &str, spec: &str) -> Result<WeightFunction<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let w = match parts.as_slice() {
        ["uniform"] => Ok(WeightFunction::Uniform),
        ["point_mass_zero"] => Ok(WeightFunction::PointMassZero),
        ["step", beta] => WeightFunction::step(parse_num(key, beta)?),
        ["power", alpha, beta] => WeightFunction::power(parse_num(key, alpha)?, parse_num(key, beta)?),
        _ => {
            return Err(config_err(
                key,
                format!("expected uniform|step:<beta>|power:<alpha>:<beta>|point_mass_zero, got `{spec}`"),
            ))
        }
    }
    .map_err(|e| config_err(key, e.to_string()))?;
    if w != WeightFunction::PointMassZero {
        crate::frontier::weight_mass(&w, 0.0, 1.0)
            .ok()
            .filter(|&m| m > 0.0)
            .ok_or_else(|| config_err(key, format!("weight `{spec}` has zero total mass")))?;
    }
    Ok(w)
}

impl RunConfig {
    /// Parses config text and then applies `overrides` in order.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(config_err(key, format!("set twice (line {})", lineno + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        for (k, v) in overrides {
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "task" => {
                self.task = parse_choice(
                    key,
                    v,
                    &[("classification", Task::Classification), ("regression", Task::Regression)],
                )?
            }
            "fairness_metric" => {
                self.fairness_metric = parse_choice(
                    key,
                    v,
                    &[
                        ("dp", ContrastKind::DemographicParity),
                        ("eo", ContrastKind::EqualityOfOpportunity),
                    ],
                )?
            }
            "contrast" => self.contrast = split_list(v).into_iter().map(str::to_string).collect(),
            "fairness_axis" => {
                self.fairness_axis = Some(parse_choice(
                    key,
                    v,
                    &[("decision", FairnessAxis::Decision), ("score", FairnessAxis::Score)],
                )?)
            }
            "weights" => {
                let specs = split_list(v);
                if specs.is_empty() {
                    return Err(config_err(key, "at least one weight is required"));
                }
                self.weights = specs
                    .into_iter()
                    .map(|s| parse_weight(key, s))
                    .collect::<Result<_>>()?;
            }
            "lambda_grid" => {
                let values = split_list(v)
                    .into_iter()
                    .map(|s| parse_nonneg(key, s))
                    .collect::<Result<Vec<_>>>()?;
                if values.is_empty() {
                    return Err(config_err(key, "empty list"));
                }
                self.lambda_grid = Some(values);
            }
            "lambda_count" => self.lambda_count = parse_count(key, v, 1)?,
            "lambda_lo" => self.lambda_lo = parse_positive(key, v)?,
            "lambda_hi" => self.lambda_hi = parse_positive(key, v)?,
            "alpha" => {
                self.alpha = if v == "cv" {
                    AlphaSetting::Cv
                } else {
                    AlphaSetting::Fixed(parse_nonneg(key, v).map_err(|_| {
                        config_err(key, format!("expected `cv` or a number >= 0, got `{v}`"))
                    })?)
                }
            }
            "alpha_count" => self.alpha_count = parse_count(key, v, 1)?,
            "alpha_lo" => self.alpha_lo = parse_positive(key, v)?,
            "alpha_hi" => self.alpha_hi = parse_positive(key, v)?,
            "cv_folds" => self.cv_folds = parse_count(key, v, 2)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| config_err(key, format!("expected a non-negative integer, got `{v}`")))?
            }
            "threshold" => self.threshold = parse_num(key, v)?,
            "append_constant_model" => self.append_constant_model = parse_bool(key, v)?,
            "constant_accuracy" => {
                let x = parse_num(key, v)?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(config_err(key, format!("must be in [0, 1], got `{v}`")));
                }
                self.constant_accuracy = x;
            }
            "loss" => {
                self.loss = parse_choice(
                    key,
                    v,
                    &[("squared", LossKind::Squared), ("logistic", LossKind::Logistic)],
                )?
            }
            "round_decimals" => {
                self.round_decimals = if v == "none" {
                    None
                } else {
                    Some(
                        v.parse::<u32>()
                            .ok()
                            .filter(|&d| d <= 15)
                            .ok_or_else(|| config_err(key, format!("expected none or 0..15, got `{v}`")))?,
                    )
                }
            }
            "workers" => self.workers = Some(parse_count(key, v, 1)?),
            "timestamp" => self.timestamp = parse_bool(key, v)?,
            "synth_n" => self.synth_n = parse_count(key, v, 10)?,
            "synth_k" => self.synth_k = parse_count(key, v, 1)?,
            "synth_group_fraction" => {
                let x = parse_num(key, v)?;
                if !(x > 0.0 && x < 1.0) {
                    return Err(config_err(key, format!("must be in (0, 1), got `{v}`")));
                }
                self.synth_group_fraction = x;
            }
            "synth_shift" => self.synth_shift = parse_num(key, v)?,
            "synth_noise" => self.synth_noise = parse_nonneg(key, v)?,
            "synth_bias_spread" => self.synth_bias_spread = parse_nonneg(key, v)?,
            "synth_attribute" => {
                if v.is_empty() || v.contains(',') {
                    return Err(config_err(key, "expected a non-empty name without commas"));
                }
                self.synth_attribute = v.to_string();
            }
            "synth_offsets" => {
                self.synth_offsets = Some(
                    split_list(v)
                        .into_iter()
                        .map(|s| parse_num(key, s))
                        .collect::<Result<_>>()?,
                )
            }
            _ => {
                return Err(config_err(
                    key,
                    format!("unknown key; allowed keys: {}", CONFIG_KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_none() && self.lambda_lo > self.lambda_hi {
            return Err(config_err("lambda_lo", "must not exceed lambda_hi"));
        }
        if self.alpha == AlphaSetting::Cv && self.alpha_lo > self.alpha_hi {
            return Err(config_err("alpha_lo", "must not exceed alpha_hi"));
        }
        if self.task == Task::Regression && self.fairness_metric == ContrastKind::EqualityOfOpportunity {
            return Err(config_err(
                "fairness_metric",
                "equality of opportunity (eo) is undefined for continuous labels; use dp with task = regression",
            ));
        }
        if self.task == Task::Regression && self.fairness_axis == Some(FairnessAxis::Decision) {
            return Err(config_err("fairness_axis", "regression supports only the score axis"));
        }
        if self.task == Task::Regression && self.loss == LossKind::Logistic {
            return Err(config_err("loss", "logistic loss needs task = classification"));
        }
        if let Some(o) = &self.synth_offsets {
            if o.len() != self.synth_k {
                return Err(config_err(
                    "synth_offsets",
                    format!("has {} values but synth_k = {}", o.len(), self.synth_k),
                ));
            }
        }
        Ok(())
    }

    /// λ values in increasing order, duplicates removed.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut g = self
            .lambda_grid
            .clone()
            .unwrap_or_else(|| log_grid(self.lambda_count, self.lambda_lo, self.lambda_hi));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        log_grid(self.alpha_count, self.alpha_lo, self.alpha_hi)
    }

    pub fn axis(&self) -> FairnessAxis {
        match self.task {
            Task::Regression => FairnessAxis::Score,
            Task::Classification => self.fairness_axis.unwrap_or(FairnessAxis::Decision),
        }
    }

    /// Contrast specs for the given attributes (all of `available` when the
    /// config lists none).
    pub fn contrasts(&self, available: &[String]) -> Result<Vec<ContrastSpec>> {
        let names: Vec<String> = if self.contrast.is_empty() {
            available.to_vec()
        } else {
            for a in &self.contrast {
                if !available.contains(a) {
                    return Err(config_err(
                        "contrast",
                        format!("attribute `{a}` not in input (have: {})", available.join(", ")),
                    ));
                }
            }
            self.contrast.clone()
        };
        Ok(names
            .into_iter()
            .map(|attribute| ContrastSpec {
                kind: self.fairness_metric,
                attribute,
            })
            .collect())
    }

    /// Resolved settings as sorted key/value strings, for reports.
    pub fn settings(&self) -> BTreeMap<String, String> {
        let task = match self.task {
            Task::Classification => "classification",
            Task::Regression => "regression",
        };
        let axis = match self.axis() {
            FairnessAxis::Decision => "decision",
            FairnessAxis::Score => "score",
        };
        let loss = match self.loss {
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
        };
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("task", task.into());
        put("fairness_metric", self.fairness_metric.as_str().into());
        put("contrast", self.contrast.join(","));
        put("fairness_axis", axis.into());
        put(
            "weights",
            self.weights.iter().map(WeightFunction::label).collect::<Vec<_>>().join(","),
        );
        put("lambda_grid", join(&self.lambdas()));
        put(
            "alpha",
            match self.alpha {
                AlphaSetting::Fixed(a) => a.to_string(),
                AlphaSetting::Cv => format!("cv:{}", join(&self.alpha_grid())),
            },
        );
        put("cv_folds", self.cv_folds.to_string());
        put("seed", self.seed.to_string());
        put("threshold", self.threshold.to_string());
        put("append_constant_model", self.append_constant_model.to_string());
        put("constant_accuracy", self.constant_accuracy.to_string());
        put("loss", loss.into());
        put(
            "round_decimals",
            self.round_decimals.map_or("none".into(), |d| d.to_string()),
        );
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn explicit_splits_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.csv",
            "row_id,y,attr:race,model:a,model:b,split\n\
             r1,1,1,0.9,0.8,train\nr2,0,0,0.1,0.3,train\nr3,1,0,0.7,0.6,ensemble\n\
             r4,0,1,0.2,0.4,ensemble\nr5,1,1,0.8,0.5,test\nr6,0,0,0.3,0.2,test\nr7,1,0,0.6,0.9,train\n",
        );
        let d = parse_prediction_matrix(&p, 0).unwrap();
        assert!(d.explicit_split);
        assert_eq!(d.model_ids, vec!["a", "b"]);
        assert_eq!(d.attributes, vec!["race"]);
        assert_eq!(d.train.row_ids, vec!["r1", "r2", "r7"]);
        assert_eq!(d.ensemble.eval.len(), 2);
        assert_eq!(d.test.scores.row(1), &[0.3, 0.2]);
    }

    #[test]
    fn bad_attribute_cites_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("row_id,y,attr:race,model:a\n");
        for i in 1..=8 {
            let a = if i == 7 { 2 } else { i % 2 };
            text.push_str(&format!("r{i},{},{a},0.5\n", i % 2));
        }
        let p = write(dir.path(), "m.csv", &text);
        let e = parse_prediction_matrix(&p, 0).unwrap_err();
        assert!(e.to_string().contains("row 7, column attr:race"), "{e}");
    }

    #[test]
    fn missing_columns_and_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.csv", "row_id,attr:g,model:a\nr,1,0.5\n");
        assert!(parse_prediction_matrix(&p, 0).unwrap_err().to_string().contains("`y`"));
        let p = write(dir.path(), "n.csv", "row_id,y,attr:g,model:a\nr,1,1,inf\n");
        let e = parse_prediction_matrix(&p, 0).unwrap_err();
        assert!(e.to_string().contains("row 1, column model:a"), "{e}");
        let p = write(dir.path(), "s.csv", "row_id,y,attr:g,model:a,split\nr,1,1,0.2,train\nq,0,0,0.1,test\n");
        assert!(parse_prediction_matrix(&p, 0).unwrap_err().to_string().contains("split `train`"));
    }

    #[test]
    fn implicit_split_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("row_id,y,attr:g,model:a\n");
        for i in 0..40 {
            text.push_str(&format!("r{i},{},{},{}\n", i % 2, (i / 2) % 2, f64::from(i) / 40.0));
        }
        let p = write(dir.path(), "m.csv", &text);
        let a = parse_prediction_matrix(&p, 5).unwrap();
        let b = parse_prediction_matrix(&p, 5).unwrap();
        assert_eq!(a, b);
        assert!(!a.explicit_split);
        assert_eq!((a.train.eval.len(), a.ensemble.eval.len(), a.test.eval.len()), (20, 10, 10));
    }

    #[test]
    fn prediction_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let eval = EvaluationSet::new(
            vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            vec![GroupAssignment::new("g", vec![1, 0, 1, 0, 0, 1, 1, 0]).unwrap()],
        )
        .unwrap();
        let scores = Matrix::from_columns(&[(0..8).map(|i| 0.1 * f64::from(i) + 1e-17).collect()]).unwrap();
        let ids: Vec<String> = (0..8).map(|i| format!("r{i}")).collect();
        let splits = assign_splits(8, 1);
        let p = dir.path().join("m.csv");
        write_prediction_matrix(&p, &ids, &eval, &scores, &["a".into()], Some(&splits)).unwrap();
        let d = parse_prediction_matrix(&p, 99).unwrap();
        let q = dir.path().join("q.csv");
        let all: Vec<&SplitData> = Split::ALL.iter().map(|&s| d.split(s)).collect();
        assert_eq!(all.iter().map(|s| s.eval.len()).sum::<usize>(), 8);
        // re-serialize and compare bytes
        let order: Vec<usize> = (0..8).collect();
        write_prediction_matrix(&q, &ids, &eval.subset(&order).unwrap(), &scores, &["a".into()], Some(&splits))
            .unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
        for s in all {
            for (i, id) in s.row_ids.iter().enumerate() {
                let r: usize = id[1..].parse().unwrap();
                assert_eq!(s.scores[(i, 0)], scores[(r, 0)]);
            }
        }
    }

    #[test]
    fn metrics_file_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "id,fairness,accuracy\nm1,1.0,0.5\nm2,0.8,0.9\n");
        assert_eq!(parse_model_metrics(&p, None).unwrap().len(), 2);
        let p = write(dir.path(), "b.csv", "id,fairness,accuracy\nm1,1.2,0.5\n");
        assert!(parse_model_metrics(&p, None).unwrap_err().to_string().contains("row 1, column fairness"));
        let p = write(dir.path(), "c.csv", "id,fairness,accuracy\n");
        assert!(parse_model_metrics(&p, None).unwrap_err().to_string().contains("no models"));
        let p = write(dir.path(), "d.csv", "id,fairness,accuracy\nm,1,0.5\nm,0.5,0.6\n");
        assert!(parse_model_metrics(&p, None).unwrap_err().to_string().contains("duplicate"));
        let p = write(dir.path(), "e.csv", "id,fairness,accuracy\nm,0.99996,0.123456\n");
        let r = parse_model_metrics(&p, Some(4)).unwrap();
        assert_eq!((r[0].fairness, r[0].accuracy), (1.0, 0.1235));
    }

    #[test]
    fn report_round_trip_and_digest() {
        use crate::frontier::{build_tafi, pareto_filter};
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![
            ModelRecord::new("c", 1.0, 0.5).unwrap(),
            ModelRecord::new("x", 0.85, 0.6).unwrap(),
            ModelRecord::new("y", 0.9, 0.7).unwrap(),
            ModelRecord::new("z", 0.8 + 1e-16, 0.9 - 1e-16).unwrap(),
        ];
        let curve = pareto_filter(&recs).unwrap();
        let tafi = build_tafi(&curve);
        let weights = vec![
            WeightScore::new(&WeightFunction::step(0.8).unwrap(), 0.6, 0.7),
            WeightScore::new(&WeightFunction::Uniform, 0.8, 0.86),
        ];
        let input = write(dir.path(), "in.csv", "abc");
        let digest = input_digest(&[&input]).unwrap();
        let report = FrontierReport::new(&recs, &curve, &tafi, weights, BTreeMap::new(), digest.clone(), None);
        let out = dir.path().join("out");
        let (pts, json) = write_frontier_report(&out, &recs, &curve, &report).unwrap();
        assert_eq!(read_taf_points(&pts).unwrap(), curve);
        let v: serde_json::Value = serde_json::from_slice(&fs::read(json).unwrap()).unwrap();
        assert_eq!(v["weights"].as_array().unwrap().len(), 2);
        assert_eq!(v["weights"][0]["kind"], "step");
        assert!(v.get("timestamp").is_none());
        fs::write(&input, "abd").unwrap();
        assert_ne!(input_digest(&[&input]).unwrap(), digest);
        let flags = pareto_flags(&recs, &curve);
        assert_eq!(flags, vec![true, false, true, true]);
    }

    #[test]
    fn svg_is_deterministic() {
        use crate::frontier::{build_tafi, pareto_filter};
        let single = pareto_filter(&[ModelRecord::new("c", 1.0, 0.5).unwrap()]).unwrap();
        let svg = render_svg(&[PlotCurve::Taf("only", &single)], "t");
        assert_eq!(svg, render_svg(&[PlotCurve::Taf("only", &single)], "t"));
        let poly = PlotCurve::Taf("only", &single).polyline();
        assert_eq!(poly, vec![(0.0, 0.5), (1.0, 0.5)]);
        let tafi = build_tafi(&single);
        let two = render_svg(&[PlotCurve::Taf("a", &single), PlotCurve::Tafi("b <i>", &tafi)], "t");
        assert_eq!(two.matches("class=\"legend\"").count(), 2);
        assert!(two.contains("b &lt;i&gt;"));
    }

    #[test]
    fn step_polyline_shape() {
        use crate::frontier::pareto_filter;
        let c = pareto_filter(&[
            ModelRecord::new("a", 1.0, 0.5).unwrap(),
            ModelRecord::new("b", 0.9, 0.7).unwrap(),
            ModelRecord::new("c", 0.8, 0.9).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            PlotCurve::Taf("x", &c).polyline(),
            vec![(0.0, 0.9), (0.8, 0.9), (0.8, 0.7), (0.9, 0.7), (0.9, 0.5), (1.0, 0.5)]
        );
    }

    #[test]
    fn config_parsing() {
        let text = "# run\ntask = classification\nfairness_metric = eo\ncontrast = race, sex\n\
                    weights = step:0.8, uniform, power:2:0.5, point_mass_zero\nlambda_grid = 10, 1, 1\n\
                    alpha = 3\n";
        let cfg = RunConfig::parse(text, &[("seed".into(), "7".into())]).unwrap();
        assert_eq!(cfg.fairness_metric, ContrastKind::EqualityOfOpportunity);
        assert_eq!(cfg.contrast, vec!["race", "sex"]);
        assert_eq!(cfg.weights.len(), 4);
        assert_eq!(cfg.lambdas(), vec![1.0, 10.0]);
        assert_eq!(cfg.alpha, AlphaSetting::Fixed(3.0));
        assert_eq!(cfg.seed, 7);
        assert_eq!(RunConfig::parse("", &[]).unwrap().lambdas().len(), 20);

        let err = |t: &str| RunConfig::parse(t, &[]).unwrap_err().to_string();
        assert!(err("colour = red").contains("`colour`"));
        assert!(err("task = ranking").contains("classification|regression"));
        assert!(err("weights = step:1").contains("zero total mass"));
        assert!(err("weights = power:0.5:0").contains("`weights`"));
        assert!(err("task = regression\nfairness_metric = eo").contains("fairness_metric"));
        assert!(err("seed = 1\nseed = 2").contains("set twice"));
        assert!(err("cv_folds = 1").contains("cv_folds"));
        assert!(err("no equals sign").contains("line 1"));
    }

    #[test]
    fn contrasts_resolve_attributes() {
        let cfg = RunConfig::default();
        let attrs = vec!["a".to_string(), "b".to_string()];
        assert_eq!(cfg.contrasts(&attrs).unwrap().len(), 2);
        let cfg = RunConfig::parse("contrast = c", &[]).unwrap();
        assert!(cfg.contrasts(&attrs).unwrap_err().to_string().contains("`c`"));
    }
}

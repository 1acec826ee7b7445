use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fairfront::dataio::{
    assign_splits, input_digest, parse_model_metrics, parse_prediction_matrix, read_taf_points,
    write_frontier_report, write_model_metrics, write_prediction_matrix, write_svg, AlphaSetting,
    FrontierReport, PlotCurve, RunConfig, WeightScore,
};
use fairfront::frontier::{
    build_tafi, fauc, fauci, pareto_filter, taf_eval, tafi_eval, weight_mass, ModelRecord,
    TafCurve, TafiCurve, WeightFunction,
};
use fairfront::linalg::Matrix;
use fairfront::metrics::ContrastSpec;
use fairfront::stacker::{
    base_records, build_problem, fit_path, monotonicity_audit, path_to_records, score_record,
    AuditReport, EnsembleSolution, LossKind, PenaltyConfig, RecordSettings, RidgeSpec, Task,
    CONSTANT_MODEL_ID,
};
use fairfront::synth_oracle::{
    generate, linear_interpolation_oracle, midpoint_fauc, pareto_oracle, StepEvaluator,
    SynthConfig,
};
use fairfront::{Error, Result};

pub const MODELS_FILE: &str = "models.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const PLOT_FILE: &str = "frontier.svg";
pub const AUDIT_FILE: &str = "audit.csv";
pub const AUDIT_SUMMARY_FILE: &str = "audit.json";
pub const SYNTH_FILE: &str = "predictions.csv";

/// Grid size of the `--oracle` integration check.
const ORACLE_GRID: usize = 1_000_000;

/// Splits a `key=value` override.
pub fn parse_override(raw: &str) -> Result<(String, String)> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config {
            key: raw.to_string(),
            msg: "override must look like key=value".into(),
        })
}

/// Reads the config file (if any) and applies `--set` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => String::new(),
    };
    let pairs = overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    RunConfig::parse(&text, &pairs)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn timestamp(cfg: &RunConfig, flag: bool) -> Option<String> {
    (cfg.timestamp || flag).then(|| {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        format!("unix:{secs}")
    })
}

#[derive(Debug, Clone)]
pub struct FrontierOutcome {
    pub records: Vec<ModelRecord<f64>>,
    pub curve: TafCurve<f64>,
    pub tafi: TafiCurve<f64>,
    pub scores: Vec<WeightScore>,
    pub report_path: PathBuf,
}

struct Frontier {
    curve: TafCurve<f64>,
    tafi: TafiCurve<f64>,
    scores: Vec<WeightScore>,
}

fn compute_frontier(records: &[ModelRecord<f64>], weights: &[WeightFunction<f64>]) -> Result<Frontier> {
    let curve = pareto_filter(records)?;
    let tafi = build_tafi(&curve);
    let scores = weights
        .iter()
        .map(|w| Ok(WeightScore::new(w, fauc(&curve, w)?, fauci(&tafi, w)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Frontier { curve, tafi, scores })
}

/// Reruns the frontier computations through the reference oracles.
fn verify_frontier(records: &[ModelRecord<f64>], fr: &Frontier, weights: &[WeightFunction<f64>]) -> Result<()> {
    let mismatch = |msg: String| Err(Error::OracleMismatch(msg));
    let mut oracle = pareto_oracle(records);
    oracle.sort_by(|a, b| b.fairness.total_cmp(&a.fairness));
    let same = oracle.len() == fr.curve.len()
        && oracle
            .iter()
            .zip(fr.curve.points())
            .all(|(o, p)| o.fairness == p.fairness && o.accuracy == p.accuracy);
    if !same {
        return mismatch(format!(
            "pareto filter kept {} points, dominance scan kept {}",
            fr.curve.len(),
            oracle.len()
        ));
    }
    let step = StepEvaluator::new(records);
    let verts: Vec<(f64, f64)> = fr.tafi.vertices().iter().map(|v| (v.fairness, v.accuracy)).collect();
    for i in 0..=100 {
        let f = f64::from(i) / 100.0;
        let (t, ti) = (taf_eval(&fr.curve, f)?, tafi_eval(&fr.tafi, f)?);
        if t != step.eval(f) {
            return mismatch(format!("taf({f}) = {t}, scan gives {}", step.eval(f)));
        }
        if ti < t - 1e-12 {
            return mismatch(format!("tafi({f}) = {ti} below taf = {t}"));
        }
    }
    for (w, s) in weights.iter().zip(&fr.scores) {
        if *w == WeightFunction::PointMassZero {
            let t0 = taf_eval(&fr.curve, 0.0)?;
            if s.fauc != t0 {
                return mismatch(format!("point-mass fauc {} differs from taf(0) = {t0}", s.fauc));
            }
            continue;
        }
        // midpoint error: each jump of the integrand inside a cell costs at
        // most one cell of weight, and the curve plus the weight cutoff
        // contribute at most 2 in total jump height
        let mass = weight_mass(w, 0.0, 1.0)?;
        let tol = 1e-6 + 2.0 / (ORACLE_GRID as f64 * mass);
        let o = midpoint_fauc(|f| step.eval(f), w, ORACLE_GRID)?;
        if (o - s.fauc).abs() > tol {
            return mismatch(format!("fauc[{}] = {} vs oracle {o} (tol {tol:e})", s.label, s.fauc));
        }
        let oi = midpoint_fauc(|f| linear_interpolation_oracle(&verts, f), w, ORACLE_GRID)?;
        if (oi - s.fauci).abs() > tol {
            return mismatch(format!("fauci[{}] = {} vs oracle {oi} (tol {tol:e})", s.label, s.fauci));
        }
        if s.fauci < s.fauc - 1e-12 {
            return mismatch(format!("fauci[{}] below fauc", s.label));
        }
    }
    log::info!("oracle checks passed for {} models and {} weights", records.len(), weights.len());
    Ok(())
}

fn emit_frontier(
    records: Vec<ModelRecord<f64>>,
    cfg: &RunConfig,
    mut settings: std::collections::BTreeMap<String, String>,
    digest: String,
    out: &Path,
    oracle: bool,
    stamp: Option<String>,
) -> Result<FrontierOutcome> {
    let fr = compute_frontier(&records, &cfg.weights)?;
    if oracle {
        verify_frontier(&records, &fr, &cfg.weights)?;
    }
    settings.extend(cfg.settings());
    let report = FrontierReport::new(&records, &fr.curve, &fr.tafi, fr.scores.clone(), settings, digest, stamp);
    let (_, report_path) = write_frontier_report(out, &records, &fr.curve, &report)?;
    Ok(FrontierOutcome {
        records,
        curve: fr.curve,
        tafi: fr.tafi,
        scores: fr.scores,
        report_path,
    })
}

/// Pareto frontier, envelope and weighted areas of a model-metrics file.
pub fn cmd_frontier(input: &Path, out: &Path, cfg: &RunConfig, oracle: bool, stamp_flag: bool) -> Result<FrontierOutcome> {
    create_dir(out)?;
    let mut records = parse_model_metrics(input, cfg.round_decimals)?;
    if !records.iter().any(|r| r.fairness == 1.0) {
        if !cfg.append_constant_model {
            return Err(Error::NoPerfectlyFairModel);
        }
        log::warn!(
            "no model with fairness 1; appending `{CONSTANT_MODEL_ID}` with accuracy {}",
            cfg.constant_accuracy
        );
        records.push(ModelRecord::new(CONSTANT_MODEL_ID, 1.0, cfg.constant_accuracy)?);
    }
    let digest = input_digest(&[input])?;
    let outcome = emit_frontier(
        records,
        cfg,
        Default::default(),
        digest,
        out,
        oracle,
        timestamp(cfg, stamp_flag),
    )?;
    let name = "TAF";
    write_svg(
        &out.join(PLOT_FILE),
        &[PlotCurve::Taf(name, &outcome.curve), PlotCurve::Tafi("TAFI", &outcome.tafi)],
        "fairness-accuracy frontier",
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub alpha: f64,
    pub path: Vec<EnsembleSolution<f64>>,
    pub base_records: Vec<ModelRecord<f64>>,
    pub path_records: Vec<ModelRecord<f64>>,
    pub base_curve: TafCurve<f64>,
    pub frontier: FrontierOutcome,
}

struct Fitted {
    alpha: f64,
    path: Vec<EnsembleSolution<f64>>,
    model_ids: Vec<String>,
    test: fairfront::dataio::SplitData,
    test_scores: Matrix<f64>,
    contrasts: Vec<ContrastSpec>,
    settings: RecordSettings<f64>,
}

fn fit(input: &Path, cfg: &RunConfig) -> Result<Fitted> {
    let data = parse_prediction_matrix(input, cfg.seed)?;
    let contrasts = cfg.contrasts(&data.attributes)?;
    if cfg.task == Task::Classification {
        data.ensemble.eval.binary_labels()?;
        data.test.eval.binary_labels()?;
    }
    let settings = RecordSettings {
        task: cfg.task,
        axis: cfg.axis(),
        contrast: contrasts[0].clone(),
        threshold: cfg.threshold,
    };
    let ens = &data.ensemble;
    let problem = build_problem(
        &ens.eval,
        &ens.scores,
        &data.model_ids,
        &contrasts,
        cfg.loss,
        cfg.append_constant_model,
    )?;
    let penalty = PenaltyConfig {
        lambda_grid: cfg.lambdas(),
        ridge: match cfg.alpha {
            AlphaSetting::Fixed(a) => RidgeSpec::Fixed(a),
            AlphaSetting::Cv => RidgeSpec::CrossValidated(cfg.alpha_grid()),
        },
        cv_folds: cfg.cv_folds,
        seed: cfg.seed,
    };
    let (alpha, path) = fit_path(&problem, &penalty, &cfg.weights[0], &settings)?;
    if problem.loss() == LossKind::Squared {
        let bound = 1e-8 * (1.0 + problem.normal_rhs().iter().map(|v| v * v).sum::<f64>().sqrt());
        for s in &path {
            // rounding when evaluating λ² b (bᵀw) sets a floor under the residual
            let floor: f64 = problem
                .bias_vectors()
                .iter()
                .map(|b| {
                    let spread: f64 = b.iter().zip(&s.weights).map(|(x, w)| (x * w).abs()).sum();
                    let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                    16.0 * f64::EPSILON * s.lambda * s.lambda * norm * spread
                })
                .sum();
            if s.residual > bound + floor {
                log::warn!("normal-equation residual {:e} above {:e} at λ={}", s.residual, bound + floor, s.lambda);
            }
        }
    }
    for s in path.iter().filter(|s| !s.converged) {
        log::warn!("solver stopped before tolerance at λ={} after {} iterations", s.lambda, s.newton_iters);
    }
    let mut test_scores = data.test.scores.clone();
    if problem.constant_appended() {
        let c = problem.constant_column().expect("appended constant column");
        let value = problem.scores()[(0, c)];
        test_scores.push_column(&vec![value; test_scores.rows()])?;
    }
    Ok(Fitted {
        alpha,
        path,
        model_ids: problem.model_ids().to_vec(),
        test: data.test,
        test_scores,
        contrasts,
        settings,
    })
}

fn write_weights_csv(path: &Path, f: &Fitted) -> Result<()> {
    let mut s = String::from("lambda,alpha");
    for id in &f.model_ids {
        s.push_str(&format!(",w:{id}"));
    }
    for c in &f.contrasts {
        s.push_str(&format!(",bias:{}:{}", c.kind.as_str(), c.attribute));
    }
    s.push_str(",converged,iterations\n");
    for sol in &f.path {
        s.push_str(&format!("{},{}", sol.lambda, sol.alpha));
        for w in &sol.weights {
            s.push_str(&format!(",{w}"));
        }
        for b in &sol.achieved_bias {
            s.push_str(&format!(",{b}"));
        }
        s.push_str(&format!(",{},{}\n", sol.converged, sol.newton_iters));
    }
    write_text(path, &s)
}

/// Fits the fairness-penalized stacking path on the ensemble split and
/// reports the frontier over base and path models on the test split.
pub fn cmd_path(input: &Path, out: &Path, cfg: &RunConfig, oracle: bool, stamp_flag: bool) -> Result<PathOutcome> {
    create_dir(out)?;
    let f = fit(input, cfg)?;
    let mut base = base_records(&f.test.scores, &f.model_ids[..f.test.scores.cols()], &f.test.eval, &f.settings)?;
    if f.test_scores.cols() > f.test.scores.cols() {
        let c = f.test_scores.cols() - 1;
        base.push(score_record(CONSTANT_MODEL_ID, &f.test_scores.column(c), &f.test.eval, &f.settings)?);
    }
    let path_records = path_to_records(&f.path, &f.test_scores, &f.test.eval, &f.settings)?;
    write_weights_csv(&out.join(WEIGHTS_FILE), &f)?;

    let mut all = base.clone();
    all.extend(path_records.iter().cloned());
    write_model_metrics(&out.join(MODELS_FILE), &all)?;

    let base_curve = pareto_filter(&base)?;
    let base_tafi = build_tafi(&base_curve);
    let mut settings = std::collections::BTreeMap::new();
    settings.insert("alpha_selected".to_string(), f.alpha.to_string());
    let digest = input_digest(&[input])?;
    let frontier = emit_frontier(all, cfg, settings, digest, out, oracle, timestamp(cfg, stamp_flag))?;
    write_svg(
        &out.join(PLOT_FILE),
        &[
            PlotCurve::Taf("base models", &base_curve),
            PlotCurve::Tafi("base models (interpolated)", &base_tafi),
            PlotCurve::Taf("base + stacking path", &frontier.curve),
            PlotCurve::Tafi("base + stacking path (interpolated)", &frontier.tafi),
        ],
        "fairness-accuracy frontier",
    )?;
    Ok(PathOutcome {
        alpha: f.alpha,
        path: f.path,
        base_records: base,
        path_records,
        base_curve,
        frontier,
    })
}

/// Decision-bias monotonicity along the stacking path, per contrast.
pub fn cmd_audit(input: &Path, out: &Path, cfg: &RunConfig) -> Result<Vec<AuditReport>> {
    if cfg.task != Task::Classification {
        return Err(Error::Config {
            key: "task".into(),
            msg: "the audit needs thresholded decisions; use task = classification".into(),
        });
    }
    create_dir(out)?;
    let f = fit(input, cfg)?;
    let mut csv = String::from("contrast,lambda,score_bias,decision_bias,inversion\n");
    let mut reports = Vec::new();
    for c in &f.contrasts {
        let r = monotonicity_audit(&f.path, &f.test_scores, &f.test.eval, c, cfg.threshold)?;
        for row in &r.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.contrast, row.lambda, row.score_bias, row.decision_bias, row.inversion
            ));
        }
        if r.max_inversion > 0.02 {
            log::warn!(
                "decision bias for {} rises by up to {} along the path ({} inversions)",
                r.contrast,
                r.max_inversion,
                r.inversions
            );
        }
        reports.push(r);
    }
    write_text(&out.join(AUDIT_FILE), &csv)?;
    let summary: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "contrast": r.contrast,
                "points": r.rows.len(),
                "inversions": r.inversions,
                "max_inversion": r.max_inversion,
                "total_inversion": r.total_inversion,
            })
        })
        .collect();
    let mut json = serde_json::to_string_pretty(&serde_json::json!({ "alpha": f.alpha, "audits": summary }))?;
    json.push('\n');
    write_text(&out.join(AUDIT_SUMMARY_FILE), &json)?;
    Ok(reports)
}

/// Plots one or more `taf_points.csv` files, each with its envelope.
pub fn cmd_plot(inputs: &[PathBuf], out: &Path) -> Result<PathBuf> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("plot needs at least one --input taf_points.csv".into()));
    }
    create_dir(out)?;
    let curves = inputs
        .iter()
        .map(|p| read_taf_points(p))
        .collect::<Result<Vec<_>>>()?;
    let tafis: Vec<TafiCurve<f64>> = curves.iter().map(build_tafi).collect();
    let names: Vec<String> = inputs
        .iter()
        .map(|p| {
            p.parent()
                .and_then(Path::file_name)
                .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
        })
        .collect();
    let tafi_names: Vec<String> = names.iter().map(|n| format!("{n} (interpolated)")).collect();
    let mut plot = Vec::new();
    for i in 0..curves.len() {
        plot.push(PlotCurve::Taf(&names[i], &curves[i]));
        plot.push(PlotCurve::Tafi(&tafi_names[i], &tafis[i]));
    }
    let path = out.join(PLOT_FILE);
    write_svg(&path, &plot, "fairness-accuracy frontier")?;
    Ok(path)
}

/// Writes a synthetic prediction matrix with a populated `split` column.
pub fn cmd_synth(out: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    create_dir(out)?;
    let sc = SynthConfig {
        n: cfg.synth_n,
        k: cfg.synth_k,
        group_fraction: cfg.synth_group_fraction,
        group_mean_shift: cfg.synth_shift,
        model_noise: cfg.synth_noise,
        bias_spread: cfg.synth_bias_spread,
        seed: cfg.seed,
        task: cfg.task,
        attribute: cfg.synth_attribute.clone(),
        offsets: cfg.synth_offsets.clone(),
    };
    let data = generate::<f64>(&sc)?;
    let splits = assign_splits(sc.n, cfg.seed);
    let row_ids: Vec<String> = (0..sc.n).map(|i| format!("r{i}")).collect();
    let path = out.join(SYNTH_FILE);
    write_prediction_matrix(&path, &row_ids, &data.eval, &data.scores, &data.model_ids, Some(&splits))?;
    log::info!(
        "wrote {} rows, {} models; injected offsets {:?}",
        sc.n,
        sc.k,
        data.offsets
    );
    Ok(path)
}

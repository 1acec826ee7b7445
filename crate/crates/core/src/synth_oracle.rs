//! Seeded synthetic data and independent reference implementations.
//!
//! The oracles here deliberately avoid the production code paths: they work
//! in `f64`, use brute force where possible and bring their own linear
//! algebra. They are slow and meant for verification only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{ModelRecord, WeightFunction};
use crate::linalg::Matrix;
use crate::metrics::{EvaluationSet, GroupAssignment};
use crate::scalar::{lit, to_f64, Scalar};
use crate::stacker::{LossKind, StackingProblem, Task};

/// Attempts at drawing a group vector with both groups present.
const GROUP_REJECTION_CAP: usize = 1000;

/// Center and scale of classification scores around the 0.5 threshold.
const CLASSIFICATION_CENTER: f64 = 0.5;
const CLASSIFICATION_SCALE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    /// Probability of membership in group 1.
    pub group_fraction: f64,
    /// Difference of latent means between group 1 and group 0.
    pub group_mean_shift: f64,
    pub model_noise: f64,
    /// Standard deviation of the per-model group offsets.
    pub bias_spread: f64,
    pub seed: u64,
    pub task: Task,
    /// Name of the protected attribute.
    pub attribute: String,
    /// Explicit per-model group offsets, overriding `bias_spread` draws.
    pub offsets: Option<Vec<f64>>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            k: 10,
            group_fraction: 0.4,
            group_mean_shift: 0.5,
            model_noise: 0.3,
            bias_spread: 0.2,
            seed: 0,
            task: Task::Classification,
            attribute: "group".into(),
            offsets: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::out_of_range("synth n", self.n as f64, "[10, inf)"));
        }
        if self.k < 1 {
            return Err(Error::out_of_range("synth k", self.k as f64, "[1, inf)"));
        }
        if !(self.group_fraction > 0.0 && self.group_fraction < 1.0) {
            return Err(Error::out_of_range("synth group_fraction", self.group_fraction, "(0, 1)"));
        }
        for (name, v) in [("synth noise", self.model_noise), ("synth bias_spread", self.bias_spread)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::out_of_range(name, v, "[0, inf)"));
            }
        }
        if !self.group_mean_shift.is_finite() {
            return Err(Error::out_of_range("synth shift", self.group_mean_shift, "finite"));
        }
        if let Some(o) = &self.offsets {
            if o.len() != self.k {
                return Err(Error::LengthMismatch {
                    what: "synth offsets vs k".into(),
                    left: o.len(),
                    right: self.k,
                });
            }
            if let Some(i) = o.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "synth offsets".into(),
                    index: i,
                });
            }
        }
        if self.attribute.is_empty() {
            return Err(Error::InvalidInput("synth attribute name is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData<T> {
    pub eval: EvaluationSet<T>,
    pub scores: Matrix<T>,
    pub model_ids: Vec<String>,
    /// Group offset added to each column.
    pub offsets: Vec<f64>,
    /// Exact group-mean gap of the latent score shared by all columns.
    pub latent_gap: f64,
    /// Population score bias of each column: `latent_gap + offset`.
    pub expected_bias: Vec<f64>,
}

/// Draws a synthetic dataset.
///
/// Group membership `z ~ Bernoulli(group_fraction)` (redrawn until both
/// groups occur). A standard-normal latent `u` is centered within each group
/// and shifted by `group_mean_shift * z`, giving `eta`. Classification labels
/// are `1{eta + e > 0}` with standard-normal `e`; regression labels are `eta`.
/// Column `i` is the latent score (`0.5 + 0.3 eta` for classification,
/// `eta` for regression) plus `offset_i * z` plus Gaussian noise with scale
/// `model_noise * (0.5 + U(0,1))`.
pub fn generate<T: Scalar>(cfg: &SynthConfig) -> Result<SyntheticData<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;

    let mut z = Vec::new();
    for attempt in 0.. {
        if attempt == GROUP_REJECTION_CAP {
            return Err(Error::InvalidInput(format!(
                "synthetic group draw left a group empty {GROUP_REJECTION_CAP} times; \
                 use a group_fraction further from 0 and 1 or a larger n"
            )));
        }
        z = (0..n).map(|_| u8::from(rng.random_bool(cfg.group_fraction))).collect();
        let ones = z.iter().filter(|&&v| v == 1).count();
        if ones > 0 && ones < n {
            break;
        }
    }

    let mut u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    for g in [0u8, 1] {
        let idx: Vec<usize> = (0..n).filter(|&i| z[i] == g).collect();
        let m = idx.iter().map(|&i| u[i]).sum::<f64>() / idx.len() as f64;
        for &i in &idx {
            u[i] -= m;
        }
    }
    let eta: Vec<f64> = (0..n)
        .map(|i| u[i] + cfg.group_mean_shift * f64::from(z[i]))
        .collect();

    let (labels, latent, latent_gap): (Vec<f64>, Vec<f64>, f64) = match cfg.task {
        Task::Classification => {
            let labels = eta
                .iter()
                .map(|&e| {
                    let eps: f64 = rng.sample(StandardNormal);
                    if e + eps > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let latent = eta
                .iter()
                .map(|&e| CLASSIFICATION_CENTER + CLASSIFICATION_SCALE * e)
                .collect();
            (labels, latent, CLASSIFICATION_SCALE * cfg.group_mean_shift)
        }
        Task::Regression => (eta.clone(), eta, cfg.group_mean_shift),
    };

    let offsets: Vec<f64> = match &cfg.offsets {
        Some(o) => o.clone(),
        None => (0..cfg.k)
            .map(|_| cfg.bias_spread * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    };
    let mut columns = Vec::with_capacity(cfg.k);
    for &offset in &offsets {
        let scale = cfg.model_noise * (0.5 + rng.random::<f64>());
        let col: Vec<T> = (0..n)
            .map(|i| {
                let noise: f64 = rng.sample(StandardNormal);
                lit(latent[i] + offset * f64::from(z[i]) + scale * noise)
            })
            .collect();
        columns.push(col);
    }

    let eval = EvaluationSet::new(
        labels.into_iter().map(lit).collect(),
        vec![GroupAssignment::new(cfg.attribute.clone(), z)?],
    )?;
    Ok(SyntheticData {
        eval,
        scores: Matrix::from_columns(&columns)?,
        model_ids: (0..cfg.k).map(|i| format!("m{i}")).collect(),
        expected_bias: offsets.iter().map(|o| latent_gap + o).collect(),
        offsets,
        latent_gap,
    })
}

/// Non-dominated records by a pairwise scan. Of several records with the
/// same (fairness, accuracy) only the first is kept. Output follows input
/// order.
pub fn pareto_oracle<T: Scalar>(models: &[ModelRecord<T>]) -> Vec<ModelRecord<T>> {
    let mut keep = Vec::new();
    'outer: for (i, m) in models.iter().enumerate() {
        for (j, other) in models.iter().enumerate() {
            let (fo, ao, fm, am) = (
                to_f64(other.fairness),
                to_f64(other.accuracy),
                to_f64(m.fairness),
                to_f64(m.accuracy),
            );
            let dominated = fo >= fm && ao >= am && (fo > fm || ao > am);
            let earlier_duplicate = j < i && fo == fm && ao == am;
            if dominated || earlier_duplicate {
                continue 'outer;
            }
        }
        keep.push(m.clone());
    }
    keep
}

/// Reference TAF evaluator: best accuracy among records with
/// `fairness >= f`, or the overall best when none qualify.
pub fn taf_oracle<T: Scalar>(models: &[ModelRecord<T>], f: f64) -> f64 {
    let best = |filter: &dyn Fn(f64) -> bool| {
        models
            .iter()
            .filter(|m| filter(to_f64(m.fairness)))
            .map(|m| to_f64(m.accuracy))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let v = best(&|fair| fair >= f);
    if v.is_finite() {
        v
    } else {
        best(&|_| true)
    }
}

/// Step-function evaluator over (fairness, accuracy) points, precomputed for
/// fast repeated queries. Same semantics as [`taf_oracle`].
pub struct StepEvaluator {
    // (fairness, best accuracy among points with at least this fairness),
    // by increasing fairness
    knots: Vec<(f64, f64)>,
    max_accuracy: f64,
}

impl StepEvaluator {
    pub fn new<T: Scalar>(models: &[ModelRecord<T>]) -> Self {
        let mut pts: Vec<(f64, f64)> = models
            .iter()
            .map(|m| (to_f64(m.fairness), to_f64(m.accuracy)))
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut knots: Vec<(f64, f64)> = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for (f, a) in pts {
            running = running.max(a);
            match knots.last_mut() {
                Some(last) if last.0 == f => last.1 = running,
                _ => knots.push((f, running)),
            }
        }
        knots.reverse();
        Self {
            knots,
            max_accuracy: running,
        }
    }

    pub fn eval(&self, f: f64) -> f64 {
        // first knot with fairness >= f carries the answer
        let (mut lo, mut hi) = (0usize, self.knots.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.knots[mid].0 < f {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            self.max_accuracy
        } else {
            self.knots.get(lo).map_or(f64::NEG_INFINITY, |k| k.1)
        }
    }
}

/// Density of a weight function evaluated independently of the frontier
/// module.
fn weight_density<T: Scalar>(w: &WeightFunction<T>, x: f64) -> Option<f64> {
    match *w {
        WeightFunction::Uniform => Some(1.0),
        WeightFunction::Step { beta } => Some(if x > to_f64(beta) { 1.0 } else { 0.0 }),
        WeightFunction::Power { alpha, beta } => Some(if x > to_f64(beta) {
            x.powf(to_f64(alpha))
        } else {
            0.0
        }),
        WeightFunction::PointMassZero => None,
    }
}

fn riemann_sum<T: Scalar>(
    curve: impl Fn(f64) -> f64,
    w: &WeightFunction<T>,
    grid_points: usize,
    offset: f64,
) -> Result<f64> {
    if grid_points < 1000 {
        return Err(Error::out_of_range("riemann grid_points", grid_points as f64, "[1000, inf)"));
    }
    let n = grid_points as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    // Neumaier-compensated sums: 10^6 terms would otherwise lose ~1e-10
    let (mut cn, mut cd) = (0.0, 0.0);
    for i in 1..=grid_points {
        let x = (i as f64 - offset) / n;
        let d = weight_density(w, x).ok_or(Error::PointMassSegment)?;
        if d == 0.0 {
            continue;
        }
        let t = d * curve(x);
        neumaier(&mut num, &mut cn, t);
        neumaier(&mut den, &mut cd, d);
    }
    let (num, den) = (num + cn, den + cd);
    if den <= 0.0 {
        return Err(Error::ZeroNormalizer);
    }
    Ok(num / den)
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// Right-endpoint Riemann sum of the normalized weighted integral of
/// `curve` over [0, 1] with `grid_points` cells.
///
/// Exact (up to rounding) for step curves and step/uniform weights whose
/// knots sit on the grid; otherwise the error is O(1/grid_points).
pub fn riemann_fauc<T: Scalar>(
    curve: impl Fn(f64) -> f64,
    w: &WeightFunction<T>,
    grid_points: usize,
) -> Result<f64> {
    riemann_sum(curve, w, grid_points, 0.0)
}

/// Midpoint-rule counterpart of [`riemann_fauc`], O(1/grid_points²) on
/// piecewise-smooth integrands with knots on the grid.
pub fn midpoint_fauc<T: Scalar>(
    curve: impl Fn(f64) -> f64,
    w: &WeightFunction<T>,
    grid_points: usize,
) -> Result<f64> {
    riemann_sum(curve, w, grid_points, 0.5)
}

/// Piecewise-linear interpolation through vertices sorted by fairness.
pub fn linear_interpolation_oracle(vertices: &[(f64, f64)], f: f64) -> f64 {
    for pair in vertices.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if f >= x0 && f <= x1 {
            if x1 == x0 {
                return y0.max(y1);
            }
            return y0 + (y1 - y0) * (f - x0) / (x1 - x0);
        }
    }
    vertices.last().map_or(f64::NAN, |v| v.1)
}

/// Upper hull by brute force: keeps every point that is not strictly below
/// the segment joining two other points, nor collinear between them.
pub fn hull_oracle(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut out = Vec::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let mut keep = true;
        'pairs: for &(x0, y0) in &pts[..i] {
            for &(x1, y1) in &pts[i + 1..] {
                let on_segment = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                if y <= on_segment + 1e-12 {
                    keep = false;
                    break 'pairs;
                }
            }
        }
        if keep {
            out.push((x, y));
        }
    }
    out
}

/// Problem data copied to `f64` for the stacking oracles.
struct Dense {
    n: usize,
    k: usize,
    h: Vec<f64>,
    y: Vec<f64>,
    b: Vec<Vec<f64>>,
    loss: LossKind,
}

impl Dense {
    fn new<T: Scalar>(p: &StackingProblem<T>) -> Self {
        Self {
            n: p.n_rows(),
            k: p.n_models(),
            h: p.scores().as_slice().iter().map(|&v| to_f64(v)).collect(),
            y: p.labels().iter().map(|&v| to_f64(v)).collect(),
            b: p
                .bias_vectors()
                .iter()
                .map(|b| b.iter().map(|&v| to_f64(v)).collect())
                .collect(),
            loss: p.loss(),
        }
    }

    fn margins(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.k).map(|i| self.h[j * self.k + i] * w[i]).sum())
            .collect()
    }

    fn objective(&self, w: &[f64], lambda: f64, alpha: f64) -> f64 {
        let m = self.margins(w);
        let data: f64 = match self.loss {
            LossKind::Squared => m.iter().zip(&self.y).map(|(s, y)| (s - y).powi(2)).sum(),
            LossKind::Logistic => m
                .iter()
                .zip(&self.y)
                .map(|(s, y)| {
                    let t = -(2.0 * y - 1.0) * s;
                    t.max(0.0) + (-t.abs()).exp().ln_1p()
                })
                .sum(),
        };
        let fair: f64 = self
            .b
            .iter()
            .map(|b| b.iter().zip(w).map(|(x, y)| x * y).sum::<f64>().powi(2))
            .sum();
        data + lambda * lambda * fair + 0.5 * alpha * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, w: &[f64], lambda: f64, alpha: f64) -> Vec<f64> {
        let m = self.margins(w);
        let mut g: Vec<f64> = w.iter().map(|v| alpha * v).collect();
        for j in 0..self.n {
            let r = match self.loss {
                LossKind::Squared => 2.0 * (m[j] - self.y[j]),
                LossKind::Logistic => 1.0 / (1.0 + (-m[j]).exp()) - self.y[j],
            };
            for (i, gi) in g.iter_mut().enumerate() {
                *gi += r * self.h[j * self.k + i];
            }
        }
        for b in &self.b {
            let d: f64 = b.iter().zip(w).map(|(x, y)| x * y).sum();
            for (gi, bi) in g.iter_mut().zip(b) {
                *gi += 2.0 * lambda * lambda * d * bi;
            }
        }
        g
    }

    /// Upper bound on the Hessian's largest eigenvalue.
    fn lipschitz(&self, lambda: f64, alpha: f64) -> f64 {
        let frob: f64 = self.h.iter().map(|v| v * v).sum();
        let data = match self.loss {
            LossKind::Squared => 2.0 * frob,
            LossKind::Logistic => 0.25 * frob,
        };
        let fair: f64 = self.b.iter().flatten().map(|v| v * v).sum();
        data + 2.0 * lambda * lambda * fair + alpha
    }
}

/// Minimizes the stacking objective by plain gradient descent from `w = 0`.
///
/// `step` defaults to `1/L` with `L = 2‖H‖_F² + 2λ²Σ‖b_c‖² + α` (`‖H‖_F²/4`
/// in place of `2‖H‖_F²` for logistic loss). Stops early once the gradient
/// ∞-norm falls below `1e-13 · (1 + L)`. An objective increase is reported as
/// [`Error::Diverged`].
pub fn descent_stack_oracle<T: Scalar>(
    p: &StackingProblem<T>,
    lambda: f64,
    alpha: f64,
    iters: usize,
    step: Option<f64>,
) -> Result<Vec<f64>> {
    let d = Dense::new(p);
    let lip = d.lipschitz(lambda, alpha);
    let step = step.unwrap_or(1.0 / lip);
    let stop = 1e-13 * (1.0 + lip);
    let mut w = vec![0.0; d.k];
    let mut f = d.objective(&w, lambda, alpha);
    for it in 0..iters {
        let g = d.gradient(&w, lambda, alpha);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= stop {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        let next = d.objective(&w, lambda, alpha);
        if next > f + 1e-12 * f.abs().max(1.0) {
            return Err(Error::Diverged { iteration: it });
        }
        f = next;
    }
    Ok(w)
}

/// Ridge logistic regression by iteratively reweighted least squares, with
/// the fairness penalty included as a fixed quadratic term.
pub fn irls_oracle<T: Scalar>(
    p: &StackingProblem<T>,
    lambda: f64,
    alpha: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let d = Dense::new(p);
    if d.loss != LossKind::Logistic {
        return Err(Error::InvalidInput("irls_oracle needs logistic loss".into()));
    }
    let k = d.k;
    let mut w = vec![0.0; k];
    for _ in 0..max_iters {
        let m = d.margins(&w);
        let mut a = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for j in 0..d.n {
            let q = 1.0 / (1.0 + (-m[j]).exp());
            let wt = (q * (1.0 - q)).max(1e-300);
            // working response
            let z = m[j] + (d.y[j] - q) / wt;
            let row = &d.h[j * k..(j + 1) * k];
            for r in 0..k {
                rhs[r] += wt * row[r] * z;
                for c in 0..k {
                    a[r * k + c] += wt * row[r] * row[c];
                }
            }
        }
        for b in &d.b {
            for r in 0..k {
                for c in 0..k {
                    a[r * k + c] += 2.0 * lambda * lambda * b[r] * b[c];
                }
            }
        }
        for r in 0..k {
            a[r * k + r] += alpha;
        }
        let next = gauss_solve(a, rhs, k)?;
        let change = next
            .iter()
            .zip(&w)
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        w = next;
        if change <= 1e-14 * (1.0 + w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))) {
            break;
        }
    }
    Ok(w)
}

/// Gaussian elimination with partial pivoting on a row-major k×k system.
fn gauss_solve(mut a: Vec<f64>, mut b: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .expect("non-empty range");
        if a[piv * k + col] == 0.0 {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            b.swap(piv, col);
        }
        for r in col + 1..k {
            let factor = a[r * k + col] / a[col * k + col];
            for c in col..k {
                a[r * k + c] -= factor * a[col * k + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r * k + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * k + r];
    }
    Ok(x)
}

/// Ordinary least squares `argmin ‖Hw − y‖²` by Householder QR.
pub fn ols_qr_oracle<T: Scalar>(h: &Matrix<T>, y: &[T]) -> Result<Vec<f64>> {
    let (n, k) = (h.rows(), h.cols());
    if n < k {
        return Err(Error::InvalidInput("QR oracle needs n >= k".into()));
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|i| to_f64(h[(i, j)])).collect())
        .collect();
    let mut qty: Vec<f64> = y.iter().map(|&v| to_f64(v)).collect();
    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Singular(format!("column {j} is rank deficient")));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let apply = |col: &mut [f64]| {
                let s: f64 = v.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
                let f = 2.0 * s / vnorm2;
                for (c, x) in col.iter_mut().zip(&v) {
                    *c -= f * x;
                }
            };
            for col in a.iter_mut().skip(j) {
                apply(&mut col[j..]);
            }
            apply(&mut qty[j..]);
        }
    }
    let mut w = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[c][r] * w[c]).sum();
        if a[r][r] == 0.0 {
            return Err(Error::Singular(format!("zero diagonal at {r}")));
        }
        w[r] = (qty[r] - s) / a[r][r];
    }
    Ok(w)
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Stacking objective evaluated independently of the stacker module.
pub fn objective_oracle<T: Scalar>(p: &StackingProblem<T>, w: &[f64], lambda: f64, alpha: f64) -> f64 {
    Dense::new(p).objective(w, lambda, alpha)
}

/// Random model set for frontier checks: `size` records with uniform
/// fairness and accuracy plus one perfectly fair record at a random
/// position. With `lattice = Some(m)` both coordinates are multiples of
/// `1/m`.
pub fn random_model_set(rng: &mut impl Rng, size: usize, lattice: Option<u32>) -> Vec<ModelRecord<f64>> {
    let draw = |rng: &mut dyn rand::RngCore| -> f64 {
        match lattice {
            Some(m) => f64::from(rng.random_range(0..=m)) / f64::from(m),
            None => rng.random::<f64>(),
        }
    };
    let mut out: Vec<ModelRecord<f64>> = (0..size.saturating_sub(1))
        .map(|i| ModelRecord {
            id: format!("r{i}"),
            fairness: draw(rng),
            accuracy: draw(rng),
        })
        .collect();
    let pos = rng.random_range(0..=out.len());
    let fair_acc = draw(rng);
    out.insert(
        pos,
        ModelRecord {
            id: "fair".into(),
            fairness: 1.0,
            accuracy: fair_acc,
        },
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{score_bias, ContrastSpec};
    use crate::stacker::{build_problem, solve_squared};

    fn rec(f: f64, a: f64) -> ModelRecord<f64> {
        ModelRecord::new(format!("{f}/{a}"), f, a).unwrap()
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = SynthConfig {
            n: 200,
            k: 3,
            seed: 9,
            ..SynthConfig::default()
        };
        let a = generate::<f64>(&cfg).unwrap();
        let b = generate::<f64>(&cfg).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.eval, b.eval);
        assert_eq!(a.offsets, b.offsets);
        let c = generate::<f64>(&SynthConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.scores, c.scores);
    }

    #[test]
    fn no_injected_bias_gives_zero_score_bias() {
        let cfg = SynthConfig {
            n: 500,
            k: 1,
            bias_spread: 0.0,
            model_noise: 0.0,
            group_mean_shift: 0.0,
            seed: 3,
            ..SynthConfig::default()
        };
        for task in [Task::Classification, Task::Regression] {
            let d = generate::<f64>(&SynthConfig { task, ..cfg.clone() }).unwrap();
            let c = ContrastSpec::demographic_parity("group");
            let b = score_bias(&d.scores.column(0), &c, &d.eval).unwrap();
            assert!(b.abs() <= 1e-12, "{b}");
        }
    }

    #[test]
    fn degenerate_group_fraction_is_rejected() {
        let cfg = SynthConfig {
            n: 10,
            group_fraction: 1e-9,
            ..SynthConfig::default()
        };
        assert!(generate::<f64>(&cfg).is_err());
        assert!(generate::<f64>(&SynthConfig { n: 5, ..SynthConfig::default() }).is_err());
    }

    #[test]
    fn pareto_oracle_small_cases() {
        assert_eq!(pareto_oracle(&[rec(1.0, 0.5)]), vec![rec(1.0, 0.5)]);
        let both = vec![rec(1.0, 0.5), rec(0.5, 0.9)];
        assert_eq!(pareto_oracle(&both), both);
        let dup = vec![
            ModelRecord::new("a", 1.0, 0.5).unwrap(),
            ModelRecord::new("b", 1.0, 0.5).unwrap(),
        ];
        assert_eq!(pareto_oracle(&dup)[0].id, "a");
        assert_eq!(pareto_oracle(&dup).len(), 1);
    }

    #[test]
    fn step_evaluator_matches_scan() {
        let m = vec![rec(1.0, 0.5), rec(0.9, 0.7), rec(0.8, 0.9), rec(0.85, 0.6)];
        let e = StepEvaluator::new(&m);
        for i in 0..=100 {
            let f = f64::from(i) / 100.0;
            assert_eq!(e.eval(f), taf_oracle(&m, f));
        }
        assert_eq!(e.eval(0.9), 0.7);
        assert_eq!(e.eval(0.901), 0.5);
    }

    #[test]
    fn riemann_constant_curve() {
        let w = WeightFunction::<f64>::power(2.0, 0.3).unwrap();
        let v = riemann_fauc(|_| 0.42, &w, 1000).unwrap();
        assert!((v - 0.42).abs() < 1e-14);
        assert!(riemann_fauc(|_| 0.4, &WeightFunction::<f64>::PointMassZero, 1000).is_err());
        assert!(riemann_fauc(|_| 0.4, &WeightFunction::<f64>::Uniform, 10).is_err());
    }

    #[test]
    fn riemann_refinement_reduces_error() {
        // step curve with knot off every grid used below
        let curve = |f: f64| if f > 0.3337 { 0.2 } else { 0.8 };
        let exact = 0.3337 * 0.8 + (1.0 - 0.3337) * 0.2;
        let w = WeightFunction::<f64>::Uniform;
        let e1 = (riemann_fauc(curve, &w, 1000).unwrap() - exact).abs();
        let e2 = (riemann_fauc(curve, &w, 2000).unwrap() - exact).abs();
        assert!(e2 < e1);
    }

    #[test]
    fn hand_curve_integrals() {
        let m = vec![rec(1.0, 0.5), rec(0.9, 0.7), rec(0.8, 0.9)];
        let e = StepEvaluator::new(&m);
        let step = WeightFunction::step(0.8).unwrap();
        let v = riemann_fauc(|f| e.eval(f), &step, 1_000_000).unwrap();
        assert!((v - 0.6).abs() < 1e-6);
        let verts = [(0.0, 0.9), (0.8, 0.9), (1.0, 0.5)];
        let u = midpoint_fauc(|f| linear_interpolation_oracle(&verts, f), &WeightFunction::<f64>::Uniform, 1_000_000)
            .unwrap();
        assert!((u - 0.86).abs() < 1e-9);
    }

    #[test]
    fn hull_oracle_drops_collinear() {
        let pts = [(0.0, 0.9), (1.0, 0.5), (0.9, 0.7), (0.8, 0.9)];
        assert_eq!(hull_oracle(&pts), vec![(0.0, 0.9), (0.8, 0.9), (1.0, 0.5)]);
    }

    #[test]
    fn stacking_oracles_agree_on_interpolation() {
        let y = vec![0.3, 1.2, -0.4, 2.0, 0.9];
        let e = EvaluationSet::new(y.clone(), vec![GroupAssignment::new("g", vec![1, 0, 1, 0, 1]).unwrap()])
            .unwrap();
        let h = Matrix::from_columns(&[y.clone()]).unwrap();
        let c = vec![ContrastSpec::demographic_parity("g")];
        let p = build_problem(&e, &h, &["m".to_string()], &c, LossKind::Squared, false).unwrap();
        let w = descent_stack_oracle(&p, 0.0, 0.0, 1_000_000, None).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-6);
        let q = ols_qr_oracle(&h, &y).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-14);
        let s = solve_squared(&p, 0.0, 0.0).unwrap();
        assert!((s.weights[0] - q[0]).abs() < 1e-12);
    }

    #[test]
    fn descent_reports_divergence() {
        let y = vec![0.3, 1.2, -0.4, 2.0, 0.9];
        let e = EvaluationSet::new(y.clone(), vec![GroupAssignment::new("g", vec![1, 0, 1, 0, 1]).unwrap()])
            .unwrap();
        let h = Matrix::from_columns(&[y]).unwrap();
        let c = vec![ContrastSpec::demographic_parity("g")];
        let p = build_problem(&e, &h, &["m".to_string()], &c, LossKind::Squared, false).unwrap();
        assert!(matches!(
            descent_stack_oracle(&p, 0.0, 0.0, 100, Some(10.0)),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn finite_difference_of_quadratic() {
        let g = finite_difference_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0], 1e-6);
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
    }
}

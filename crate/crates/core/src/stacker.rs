//! Fairness-penalized model stacking.
//!
//! For base-learner scores `H` (n×k), targets `y` and per-model score biases
//! `b_c` (one vector per contrast) the stacker minimizes
//!
//! ```text
//! Σ_j loss(wᵀh_j, y_j) + λ² Σ_c (b_cᵀw)² + (α/2)‖w‖²
//! ```
//!
//! For squared loss the minimizer solves
//! `(HᵀH + λ² Σ_c b_c b_cᵀ + (α/2) I) w = Hᵀy`; for logistic loss a damped
//! Newton method with Armijo backtracking is used. Because score bias is
//! linear in `w`, the achieved ensemble bias is `b_cᵀw`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{fauc, pareto_filter, ModelRecord, WeightFunction};
use crate::linalg::{Cholesky, Matrix};
use crate::metrics::{
    classification_accuracy, contrast_groups, decision_bias, dp_fairness, eo_fairness,
    regression_accuracy, score_bias, threshold_decisions, ContrastKind, ContrastSpec, EvaluationSet,
};
use crate::scalar::{dot, lit, mean, to_f64, Scalar};

pub const NEWTON_GRADIENT_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITERS: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 50;
const ARMIJO_C: f64 = 1e-4;
const HESSIAN_JITTER: f64 = 1e-12;

/// Id given to the appended intercept-only column.
pub const CONSTANT_MODEL_ID: &str = "constant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Which fairness goes on the TAF abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessAxis {
    /// Fairness of thresholded decisions (classification only).
    Decision,
    /// `1 - |score bias|`, clamped to [0, 1].
    Score,
}

/// How stacked scores are turned into a (fairness, accuracy) record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSettings<T> {
    pub task: Task,
    pub axis: FairnessAxis,
    pub contrast: ContrastSpec,
    pub threshold: T,
}

/// Ridge strength: fixed, or chosen by cross-validated FAUC over a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum RidgeSpec<T> {
    Fixed(T),
    CrossValidated(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig<T> {
    pub lambda_grid: Vec<T>,
    pub ridge: RidgeSpec<T>,
    pub cv_folds: usize,
    pub seed: u64,
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(count: usize, lo: T, hi: T) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let steps = lit::<T>((count - 1) as f64);
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else if i == 0 {
                        lo
                    } else {
                        (a + (b - a) * lit::<T>(i as f64) / steps).exp()
                    }
                })
                .collect()
        }
    }
}

impl<T: Scalar> Default for PenaltyConfig<T> {
    fn default() -> Self {
        Self {
            lambda_grid: log_grid(20, T::one(), lit(1e6)),
            ridge: RidgeSpec::CrossValidated(log_grid(6, lit(1e2), lit(1e7))),
            cv_folds: 5,
            seed: 0,
        }
    }
}

impl<T: Scalar> PenaltyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidInput("empty λ grid".into()));
        }
        check_penalties("λ", &self.lambda_grid)?;
        match &self.ridge {
            RidgeSpec::Fixed(a) => check_penalties("α", std::slice::from_ref(a))?,
            RidgeSpec::CrossValidated(grid) => {
                if grid.is_empty() {
                    return Err(Error::InvalidInput("empty α grid".into()));
                }
                check_penalties("α", grid)?;
                if self.cv_folds < 2 {
                    return Err(Error::out_of_range("cv_folds", self.cv_folds as f64, "[2, inf)"));
                }
            }
        }
        Ok(())
    }
}

fn check_penalties<T: Scalar>(what: &str, values: &[T]) -> Result<()> {
    for &v in values {
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::out_of_range(what, to_f64(v), "[0, inf)"));
        }
    }
    Ok(())
}

/// Base-learner scores, targets, contrasts and per-model score biases.
#[derive(Debug, Clone)]
pub struct StackingProblem<T> {
    scores: Matrix<T>,
    eval: EvaluationSet<T>,
    contrasts: Vec<ContrastSpec>,
    bias_vectors: Vec<Vec<T>>,
    loss: LossKind,
    model_ids: Vec<String>,
    constant_column: Option<usize>,
    constant_appended: bool,
    gram: Matrix<T>,
    hty: Vec<T>,
}

/// Builds a stacking problem.
///
/// With `append_constant`, a column equal to `mean(y)` is added unless some
/// column is already constant, so the ensemble family contains a perfectly
/// fair member.
pub fn build_problem<T: Scalar>(
    eval: &EvaluationSet<T>,
    base_scores: &Matrix<T>,
    model_ids: &[String],
    contrasts: &[ContrastSpec],
    loss: LossKind,
    append_constant: bool,
) -> Result<StackingProblem<T>> {
    if base_scores.rows() != eval.len() {
        return Err(Error::LengthMismatch {
            what: "score matrix rows vs evaluation set".into(),
            left: base_scores.rows(),
            right: eval.len(),
        });
    }
    if model_ids.len() != base_scores.cols() {
        return Err(Error::LengthMismatch {
            what: "model ids vs score matrix columns".into(),
            left: model_ids.len(),
            right: base_scores.cols(),
        });
    }
    if base_scores.cols() == 0 {
        return Err(Error::InvalidInput("no base models".into()));
    }
    if contrasts.is_empty() {
        return Err(Error::InvalidInput("at least one contrast is required".into()));
    }
    if let Some((r, c)) = base_scores.first_non_finite() {
        return Err(Error::NonFinite {
            what: format!("score matrix column `{}`", model_ids[c]),
            index: r,
        });
    }
    if loss == LossKind::Logistic {
        eval.binary_labels()?;
    }

    let mut scores = base_scores.clone();
    let mut ids = model_ids.to_vec();
    let mut constant_column = (0..scores.cols()).find(|&j| {
        let col = scores.column(j);
        col.iter().all(|&v| v == col[0])
    });
    let mut constant_appended = false;
    if append_constant && constant_column.is_none() {
        let m = mean(eval.labels().iter().copied()).unwrap_or(T::zero());
        constant_column = Some(scores.push_column(&vec![m; eval.len()])?);
        ids.push(CONSTANT_MODEL_ID.to_string());
        constant_appended = true;
    }

    StackingProblem::assemble(
        scores,
        eval.clone(),
        contrasts.to_vec(),
        loss,
        ids,
        constant_column,
        constant_appended,
    )
}

impl<T: Scalar> StackingProblem<T> {
    fn assemble(
        scores: Matrix<T>,
        eval: EvaluationSet<T>,
        contrasts: Vec<ContrastSpec>,
        loss: LossKind,
        model_ids: Vec<String>,
        constant_column: Option<usize>,
        constant_appended: bool,
    ) -> Result<Self> {
        if scores.rows() < scores.cols() {
            log::warn!(
                "stacking problem has fewer rows ({}) than base models ({}); consider a larger ridge penalty",
                scores.rows(),
                scores.cols()
            );
        }
        let contrast_index = contrasts
            .iter()
            .map(|c| contrast_groups(c, &eval))
            .collect::<Result<Vec<_>>>()?;
        let columns: Vec<Vec<T>> = (0..scores.cols()).map(|j| scores.column(j)).collect();
        let bias_vectors = contrast_index
            .iter()
            .map(|g| columns.iter().map(|col| g.gap(col)).collect())
            .collect();
        let gram = scores.weighted_gram(None);
        let hty = scores.tr_mul_vec(eval.labels());
        Ok(Self {
            scores,
            eval,
            contrasts,
            bias_vectors,
            loss,
            model_ids,
            constant_column,
            constant_appended,
            gram,
            hty,
        })
    }

    /// Same problem restricted to a subset of rows; biases are recomputed on
    /// the subset.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Self::assemble(
            self.scores.select_rows(rows),
            self.eval.subset(rows)?,
            self.contrasts.clone(),
            self.loss,
            self.model_ids.clone(),
            self.constant_column,
            self.constant_appended,
        )
    }

    pub fn scores(&self) -> &Matrix<T> {
        &self.scores
    }

    pub fn eval(&self) -> &EvaluationSet<T> {
        &self.eval
    }

    pub fn labels(&self) -> &[T] {
        self.eval.labels()
    }

    pub fn contrasts(&self) -> &[ContrastSpec] {
        &self.contrasts
    }

    pub fn bias_vectors(&self) -> &[Vec<T>] {
        &self.bias_vectors
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn n_models(&self) -> usize {
        self.scores.cols()
    }

    pub fn n_rows(&self) -> usize {
        self.scores.rows()
    }

    pub fn constant_column(&self) -> Option<usize> {
        self.constant_column
    }

    pub fn constant_appended(&self) -> bool {
        self.constant_appended
    }

    /// Largest discrepancy between the stored bias vectors and a fresh
    /// per-column `score_bias` computation.
    pub fn bias_recompute_error(&self) -> Result<T> {
        let mut worst = T::zero();
        for (c, contrast) in self.contrasts.iter().enumerate() {
            for j in 0..self.n_models() {
                let fresh = score_bias(&self.scores.column(j), contrast, &self.eval)?;
                worst = worst.max((fresh - self.bias_vectors[c][j]).abs());
            }
        }
        Ok(worst)
    }

    /// `b_cᵀw` for every contrast.
    pub fn achieved_bias(&self, w: &[T]) -> Vec<T> {
        self.bias_vectors.iter().map(|b| dot(b, w)).collect()
    }

    fn penalty(&self, w: &[T], lambda: T, alpha: T) -> T {
        let lam2 = lambda * lambda;
        let fair: T = self
            .bias_vectors
            .iter()
            .map(|b| {
                let d = dot(b, w);
                d * d
            })
            .sum();
        lam2 * fair + alpha * lit(0.5) * dot(w, w)
    }

    /// Data-fit term of the objective.
    pub fn loss_value(&self, w: &[T]) -> T {
        let m = self.scores.mul_vec(w);
        match self.loss {
            LossKind::Squared => m
                .iter()
                .zip(self.labels())
                .map(|(&s, &y)| (s - y) * (s - y))
                .sum(),
            LossKind::Logistic => m
                .iter()
                .zip(self.labels())
                .map(|(&s, &y)| softplus(-signed(y) * s))
                .sum(),
        }
    }

    /// Full penalized objective.
    pub fn objective(&self, w: &[T], lambda: T, alpha: T) -> T {
        self.loss_value(w) + self.penalty(w, lambda, alpha)
    }

    /// Gradient of [`Self::objective`].
    pub fn gradient(&self, w: &[T], lambda: T, alpha: T) -> Vec<T> {
        let m = self.scores.mul_vec(w);
        let resid: Vec<T> = match self.loss {
            LossKind::Squared => m
                .iter()
                .zip(self.labels())
                .map(|(&s, &y)| lit::<T>(2.0) * (s - y))
                .collect(),
            LossKind::Logistic => m
                .iter()
                .zip(self.labels())
                .map(|(&s, &y)| sigmoid(s) - y)
                .collect(),
        };
        let mut g = self.scores.tr_mul_vec(&resid);
        self.add_penalty_gradient(&mut g, w, lambda, alpha);
        g
    }

    fn add_penalty_gradient(&self, g: &mut [T], w: &[T], lambda: T, alpha: T) {
        let two_lam2 = lit::<T>(2.0) * lambda * lambda;
        for b in &self.bias_vectors {
            let d = dot(b, w) * two_lam2;
            for (gi, &bi) in g.iter_mut().zip(b) {
                *gi = *gi + d * bi;
            }
        }
        for (gi, &wi) in g.iter_mut().zip(w) {
            *gi = *gi + alpha * wi;
        }
    }

    /// `HᵀH + λ² Σ_c b_c b_cᵀ + (α/2) I`.
    pub fn normal_matrix(&self, lambda: T, alpha: T) -> Matrix<T> {
        let mut a = self.gram.clone();
        for b in &self.bias_vectors {
            a.add_outer(b, lambda * lambda);
        }
        a.add_diagonal(alpha * lit(0.5));
        a
    }

    /// `Hᵀy`.
    pub fn normal_rhs(&self) -> &[T] {
        &self.hty
    }

    /// `(HᵀH + λ² Σ bbᵀ + (α/2)I) w` in factored form. Multiplying by the
    /// assembled matrix would cancel entries of size λ² and leave rounding
    /// noise in every direction; here it stays along the bias vectors.
    pub fn normal_apply(&self, w: &[T], lambda: T, alpha: T) -> Vec<T> {
        let mut out = self.gram.mul_vec(w);
        let half_alpha = alpha * lit(0.5);
        for (o, &wi) in out.iter_mut().zip(w) {
            *o = *o + half_alpha * wi;
        }
        for b in &self.bias_vectors {
            let s = lambda * lambda * dot(b, w);
            for (o, &bi) in out.iter_mut().zip(b) {
                *o = *o + s * bi;
            }
        }
        out
    }

    /// Euclidean residual of the squared-loss normal equations at `w`.
    pub fn normal_residual(&self, w: &[T], lambda: T, alpha: T) -> T {
        let aw = self.normal_apply(w, lambda, alpha);
        norm2(&aw.iter().zip(&self.hty).map(|(&u, &v)| u - v).collect::<Vec<_>>())
    }
}

fn signed<T: Scalar>(y: T) -> T {
    lit::<T>(2.0) * y - T::one()
}

/// `log(1 + exp(x))` without overflow.
fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn norm2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// One stacking fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSolution<T> {
    pub weights: Vec<T>,
    pub lambda: T,
    pub alpha: T,
    /// `b_cᵀw` per contrast, signed.
    pub achieved_bias: Vec<T>,
    /// Data-fit term at `weights`.
    pub train_loss: T,
    pub objective: T,
    pub converged: bool,
    pub newton_iters: usize,
    /// Normal-equation residual (squared loss) or final gradient ∞-norm
    /// (logistic loss).
    pub residual: T,
}

impl<T: Scalar> EnsembleSolution<T> {
    /// Largest |b_cᵀw| over contrasts.
    pub fn max_abs_bias(&self) -> T {
        norm_inf(&self.achieved_bias)
    }

    fn finish(p: &StackingProblem<T>, weights: Vec<T>, lambda: T, alpha: T) -> Self {
        Self {
            achieved_bias: p.achieved_bias(&weights),
            train_loss: p.loss_value(&weights),
            objective: p.objective(&weights, lambda, alpha),
            weights,
            lambda,
            alpha,
            converged: true,
            newton_iters: 0,
            residual: T::zero(),
        }
    }
}

fn check_lambda_alpha<T: Scalar>(lambda: T, alpha: T) -> Result<()> {
    check_penalties("λ", &[lambda])?;
    check_penalties("α", &[alpha])
}

/// Inverse of the squared-loss normal matrix `A + λ² Σ bbᵀ`, where
/// `A = HᵀH + (α/2)I`.
///
/// Factoring the sum directly loses the directions orthogonal to the bias
/// vectors once λ² dwarfs `A`, so when `A` factors on its own the penalty is
/// applied through the Woodbury identity with an m×m capacitance matrix.
enum NormalInverse<T> {
    Direct(Cholesky<T>),
    Woodbury {
        base: Cholesky<T>,
        bias: Vec<Vec<T>>,
        base_inv_bias: Vec<Vec<T>>,
        capacitance: Cholesky<T>,
    },
}

impl<T: Scalar> NormalInverse<T> {
    fn new(p: &StackingProblem<T>, lambda: T, alpha: T) -> Result<Self> {
        let tol = T::epsilon() * lit(1024.0);
        let mut a = p.gram.clone();
        a.add_diagonal(alpha * lit(0.5));
        if lambda > T::zero() && !p.bias_vectors.is_empty() {
            if let Ok(base) = Cholesky::new(&a, tol) {
                let base_inv_bias: Vec<Vec<T>> = p.bias_vectors.iter().map(|b| base.solve(b)).collect();
                let m = p.bias_vectors.len();
                let mut c = Matrix::identity(m);
                let inv_l2 = T::one() / (lambda * lambda);
                for i in 0..m {
                    for j in 0..m {
                        c[(i, j)] = c[(i, j)] * inv_l2 + dot(&p.bias_vectors[i], &base_inv_bias[j]);
                    }
                }
                if let Ok(capacitance) = Cholesky::new(&c, tol) {
                    return Ok(Self::Woodbury {
                        base,
                        bias: p.bias_vectors.clone(),
                        base_inv_bias,
                        capacitance,
                    });
                }
            }
        }
        let full = p.normal_matrix(lambda, alpha);
        match Cholesky::new(&full, tol) {
            Ok(c) => Ok(Self::Direct(c)),
            Err(e) if alpha == T::zero() => Err(Error::Singular(format!(
                "{e}; the base-model scores are rank deficient, use a ridge penalty α > 0"
            ))),
            Err(_) => Ok(Self::Direct(Cholesky::with_jitter(&full, lit(HESSIAN_JITTER))?)),
        }
    }

    fn solve(&self, rhs: &[T]) -> Vec<T> {
        match self {
            Self::Direct(c) => c.solve(rhs),
            Self::Woodbury {
                base,
                bias,
                base_inv_bias,
                capacitance,
            } => {
                let mut z = base.solve(rhs);
                let t: Vec<T> = bias.iter().map(|b| dot(b, &z)).collect();
                for (u, s) in base_inv_bias.iter().zip(capacitance.solve(&t)) {
                    for (zi, &ui) in z.iter_mut().zip(u) {
                        *zi = *zi - ui * s;
                    }
                }
                z
            }
        }
    }
}

/// Direct solve of the squared-loss normal equations.
pub fn solve_squared<T: Scalar>(
    p: &StackingProblem<T>,
    lambda: T,
    alpha: T,
) -> Result<EnsembleSolution<T>> {
    if p.loss != LossKind::Squared {
        return Err(Error::InvalidInput("solve_squared needs squared loss".into()));
    }
    check_lambda_alpha(lambda, alpha)?;
    let inv = NormalInverse::new(p, lambda, alpha)?;
    let mut w = inv.solve(&p.hty);
    // two rounds of iterative refinement
    for _ in 0..2 {
        let aw = p.normal_apply(&w, lambda, alpha);
        let r: Vec<T> = p.hty.iter().zip(&aw).map(|(&u, &v)| u - v).collect();
        let d = inv.solve(&r);
        for (wi, di) in w.iter_mut().zip(d) {
            *wi = *wi + di;
        }
    }
    let mut sol = EnsembleSolution::finish(p, w, lambda, alpha);
    sol.residual = p.normal_residual(&sol.weights, lambda, alpha);
    Ok(sol)
}

/// Damped Newton minimization of the logistic stacking objective.
///
/// Stops when the gradient ∞-norm reaches [`NEWTON_GRADIENT_TOL`] or after
/// [`NEWTON_MAX_ITERS`] iterations; a failed line search ends the run with
/// `converged = false` rather than an error.
pub fn solve_newton<T: Scalar>(
    p: &StackingProblem<T>,
    lambda: T,
    alpha: T,
    warm_start: Option<&[T]>,
) -> Result<EnsembleSolution<T>> {
    if p.loss != LossKind::Logistic {
        return Err(Error::InvalidInput("solve_newton needs logistic loss".into()));
    }
    check_lambda_alpha(lambda, alpha)?;
    let k = p.n_models();
    let mut w = match warm_start {
        Some(w0) if w0.len() == k => w0.to_vec(),
        Some(w0) => {
            return Err(Error::LengthMismatch {
                what: "warm start vs models".into(),
                left: w0.len(),
                right: k,
            })
        }
        None => vec![T::zero(); k],
    };
    let tol = lit::<T>(NEWTON_GRADIENT_TOL);
    let mut f = p.objective(&w, lambda, alpha);
    let mut g = p.gradient(&w, lambda, alpha);
    let mut iters = 0;
    let mut converged = norm_inf(&g) <= tol;

    while !converged && iters < NEWTON_MAX_ITERS {
        iters += 1;
        let m = p.scores.mul_vec(&w);
        let curv: Vec<T> = m
            .iter()
            .map(|&s| {
                let q = sigmoid(s);
                q * (T::one() - q)
            })
            .collect();
        let mut hess = p.scores.weighted_gram(Some(&curv));
        for b in &p.bias_vectors {
            hess.add_outer(b, lit::<T>(2.0) * lambda * lambda);
        }
        hess.add_diagonal(alpha);
        let chol = Cholesky::with_jitter(&hess, lit(HESSIAN_JITTER))?;
        let step: Vec<T> = chol.solve(&g).into_iter().map(|v| -v).collect();
        let slope = dot(&g, &step);

        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<T> = w.iter().zip(&step).map(|(&a, &d)| a + t * d).collect();
            let ft = p.objective(&trial, lambda, alpha);
            if ft <= f + lit::<T>(ARMIJO_C) * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            if t == T::one() {
                // objective differences below rounding: accept a full step
                // that still shrinks the gradient
                let gt = p.gradient(&trial, lambda, alpha);
                if ft <= f + f.abs() * T::epsilon() * lit(64.0) && norm_inf(&gt) < norm_inf(&g) {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t = t * lit(0.5);
        }
        match accepted {
            Some((trial, ft)) => {
                w = trial;
                f = ft;
                g = p.gradient(&w, lambda, alpha);
                converged = norm_inf(&g) <= tol;
            }
            None => {
                log::warn!(
                    "newton line search failed after {NEWTON_MAX_HALVINGS} halvings at λ={} α={} (iteration {iters}, |grad|∞={})",
                    to_f64(lambda),
                    to_f64(alpha),
                    to_f64(norm_inf(&g))
                );
                break;
            }
        }
    }

    let mut sol = EnsembleSolution::finish(p, w, lambda, alpha);
    sol.converged = converged;
    sol.newton_iters = iters;
    sol.residual = norm_inf(&g);
    Ok(sol)
}

/// Dispatches on the problem's loss.
pub fn solve<T: Scalar>(
    p: &StackingProblem<T>,
    lambda: T,
    alpha: T,
    warm_start: Option<&[T]>,
) -> Result<EnsembleSolution<T>> {
    match p.loss {
        LossKind::Squared => solve_squared(p, lambda, alpha),
        LossKind::Logistic => solve_newton(p, lambda, alpha, warm_start),
    }
}

/// One solution per λ, ordered by increasing λ, each warm-started from the
/// previous one.
pub fn lambda_path<T: Scalar>(
    p: &StackingProblem<T>,
    lambdas: &[T],
    alpha: T,
) -> Result<Vec<EnsembleSolution<T>>> {
    check_penalties("λ", lambdas)?;
    let mut grid = lambdas.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut path: Vec<EnsembleSolution<T>> = Vec::with_capacity(grid.len());
    for lambda in grid {
        let warm = path.last().map(|s| s.weights.as_slice());
        let sol = solve(p, lambda, alpha, warm)?;
        if !sol.converged {
            log::warn!("solver did not converge at λ={}", to_f64(lambda));
        }
        path.push(sol);
    }
    Ok(path)
}

/// Evaluates one score vector as a model record.
pub fn score_record<T: Scalar>(
    id: impl Into<String>,
    scores: &[T],
    eval: &EvaluationSet<T>,
    settings: &RecordSettings<T>,
) -> Result<ModelRecord<T>> {
    let (fairness, accuracy) = match settings.task {
        Task::Classification => {
            let truth = eval.binary_labels()?;
            let pred = threshold_decisions(scores, settings.threshold)?;
            let accuracy = classification_accuracy(&pred, &truth)?;
            let fairness = match settings.axis {
                FairnessAxis::Decision => {
                    let group = eval.group(&settings.contrast.attribute)?;
                    match settings.contrast.kind {
                        ContrastKind::DemographicParity => dp_fairness(&pred, group)?,
                        ContrastKind::EqualityOfOpportunity => eo_fairness(&pred, &truth, group)?,
                    }
                }
                FairnessAxis::Score => score_fairness(scores, eval, settings)?,
            };
            (fairness, accuracy)
        }
        Task::Regression => {
            if settings.contrast.kind == ContrastKind::EqualityOfOpportunity {
                return Err(Error::InvalidInput(
                    "equality of opportunity is undefined for continuous labels".into(),
                ));
            }
            (
                score_fairness(scores, eval, settings)?,
                regression_accuracy(scores, eval.labels())?,
            )
        }
    };
    ModelRecord::new(id, fairness, accuracy)
}

fn score_fairness<T: Scalar>(
    scores: &[T],
    eval: &EvaluationSet<T>,
    settings: &RecordSettings<T>,
) -> Result<T> {
    let b = score_bias(scores, &settings.contrast, eval)?;
    Ok((T::one() - b.abs()).max(T::zero()).min(T::one()))
}

/// Record id of a path solution.
pub fn path_record_id<T: Scalar>(lambda: T) -> String {
    format!("fs:λ={}", to_f64(lambda))
}

/// Evaluates every path solution on `scores` (rows of the evaluation split,
/// same columns as the fitted problem).
pub fn path_to_records<T: Scalar>(
    path: &[EnsembleSolution<T>],
    scores: &Matrix<T>,
    eval: &EvaluationSet<T>,
    settings: &RecordSettings<T>,
) -> Result<Vec<ModelRecord<T>>> {
    path.iter()
        .map(|sol| {
            if sol.weights.len() != scores.cols() {
                return Err(Error::LengthMismatch {
                    what: "solution weights vs evaluation columns".into(),
                    left: sol.weights.len(),
                    right: scores.cols(),
                });
            }
            score_record(
                path_record_id(sol.lambda),
                &scores.mul_vec(&sol.weights),
                eval,
                settings,
            )
        })
        .collect()
}

/// Records for each base column of `scores`.
pub fn base_records<T: Scalar>(
    scores: &Matrix<T>,
    model_ids: &[String],
    eval: &EvaluationSet<T>,
    settings: &RecordSettings<T>,
) -> Result<Vec<ModelRecord<T>>> {
    (0..scores.cols())
        .map(|j| score_record(model_ids[j].clone(), &scores.column(j), eval, settings))
        .collect()
}

/// Row indices of each of `folds` folds: a seeded shuffle cut into
/// contiguous blocks whose sizes differ by at most one.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

fn held_out_fauc<T: Scalar>(
    p: &StackingProblem<T>,
    train: &[usize],
    test: &[usize],
    lambdas: &[T],
    alpha: T,
    weight: &WeightFunction<T>,
    settings: &RecordSettings<T>,
) -> Result<Option<T>> {
    let skip = |e: &Error| matches!(e, Error::EmptyGroup { .. } | Error::InvalidInput(_));
    let sub = match p.subset(train) {
        Ok(s) => s,
        Err(e) if skip(&e) => {
            log::warn!("cv fold skipped (training rows): {e}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let held_eval = match p.eval.subset(test) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("cv fold skipped (held-out rows): {e}");
            return Ok(None);
        }
    };
    let held_scores = p.scores.select_rows(test);
    let path = lambda_path(&sub, lambdas, alpha)?;
    let mut records = match path_to_records(&path, &held_scores, &held_eval, settings) {
        Ok(r) => r,
        Err(e) if skip(&e) => {
            log::warn!("cv fold skipped (held-out evaluation): {e}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    // intercept-only anchor: constant scores are perfectly fair
    let m = mean(train.iter().map(|&i| p.labels()[i])).unwrap_or(T::zero());
    let mut anchor = score_record(CONSTANT_MODEL_ID, &vec![m; test.len()], &held_eval, settings)?;
    anchor.fairness = T::one();
    records.push(anchor);
    let curve = pareto_filter(&records)?;
    Ok(Some(fauc(&curve, weight)?))
}

/// Picks the ridge strength maximizing mean held-out FAUC across folds.
/// Ties go to the larger α.
pub fn cv_select_alpha<T: Scalar>(
    p: &StackingProblem<T>,
    cfg: &PenaltyConfig<T>,
    weight: &WeightFunction<T>,
    settings: &RecordSettings<T>,
) -> Result<T> {
    cfg.validate()?;
    let mut candidates = match &cfg.ridge {
        RidgeSpec::Fixed(a) => return Ok(*a),
        RidgeSpec::CrossValidated(grid) => grid.clone(),
    };
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    candidates.dedup();
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    if p.n_rows() < cfg.cv_folds {
        return Err(Error::InvalidInput(format!(
            "{} rows cannot be split into {} folds",
            p.n_rows(),
            cfg.cv_folds
        )));
    }
    let folds = kfold_indices(p.n_rows(), cfg.cv_folds, cfg.seed);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds.len())
        .map(|f| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            (train, folds[f].clone())
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|a| (0..splits.len()).map(move |f| (a, f)))
        .collect();
    let scores: Vec<Result<Option<T>>> = jobs
        .par_iter()
        .map(|&(a, f)| {
            held_out_fauc(
                p,
                &splits[f].0,
                &splits[f].1,
                &cfg.lambda_grid,
                candidates[a],
                weight,
                settings,
            )
        })
        .collect();

    let mut best: Option<(T, T)> = None;
    for (a, &alpha) in candidates.iter().enumerate() {
        let mut total = T::zero();
        let mut used = 0usize;
        for f in 0..splits.len() {
            match &scores[a * splits.len() + f] {
                Ok(Some(v)) => {
                    total = total + *v;
                    used += 1;
                }
                Ok(None) => {}
                Err(e) => return Err(Error::InvalidInput(format!("cv at α={}: {e}", to_f64(alpha)))),
            }
        }
        if used == 0 {
            continue;
        }
        let score = total / lit(used as f64);
        log::debug!("cv α={} mean held-out fauc={}", to_f64(alpha), to_f64(score));
        if best.is_none_or(|(_, s)| score >= s) {
            best = Some((alpha, score));
        }
    }
    best.map(|(a, _)| a).ok_or_else(|| {
        Error::AllFoldsSkipped("every fold lacked one of the contrast groups".into())
    })
}

/// Picks α (fixed or cross-validated) and runs the λ path with it.
pub fn fit_path<T: Scalar>(
    p: &StackingProblem<T>,
    cfg: &PenaltyConfig<T>,
    weight: &WeightFunction<T>,
    settings: &RecordSettings<T>,
) -> Result<(T, Vec<EnsembleSolution<T>>)> {
    cfg.validate()?;
    let alpha = cv_select_alpha(p, cfg, weight, settings)?;
    Ok((alpha, lambda_path(p, &cfg.lambda_grid, alpha)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub lambda: f64,
    pub score_bias: f64,
    pub decision_bias: f64,
    /// Rise of |decision bias| above its running minimum over smaller λ.
    pub inversion: f64,
}

/// Decision bias along a λ path, with inversions of the expected
/// non-increasing trend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub contrast: String,
    pub rows: Vec<AuditRow>,
    pub inversions: usize,
    pub max_inversion: f64,
    pub total_inversion: f64,
}

/// Tracks |decision bias| as λ grows. An inversion is a solution whose
/// |decision bias| exceeds the smallest value seen at any smaller λ. These
/// are diagnostics: small finite-sample inversions are expected.
pub fn monotonicity_audit<T: Scalar>(
    path: &[EnsembleSolution<T>],
    scores: &Matrix<T>,
    eval: &EvaluationSet<T>,
    contrast: &ContrastSpec,
    threshold: T,
) -> Result<AuditReport> {
    let mut ordered: Vec<&EnsembleSolution<T>> = path.iter().collect();
    ordered.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).expect("finite"));
    let mut rows = Vec::with_capacity(ordered.len());
    let mut running_min = f64::INFINITY;
    for sol in ordered {
        let s = scores.mul_vec(&sol.weights);
        let sb = to_f64(score_bias(&s, contrast, eval)?).abs();
        let pred = threshold_decisions(&s, threshold)?;
        let db = to_f64(decision_bias(&pred, contrast, eval)?).abs();
        let inversion = if db > running_min { db - running_min } else { 0.0 };
        running_min = running_min.min(db);
        rows.push(AuditRow {
            lambda: to_f64(sol.lambda),
            score_bias: sb,
            decision_bias: db,
            inversion,
        });
    }
    let inversions = rows.iter().filter(|r| r.inversion > 0.0).count();
    let max_inversion = rows.iter().fold(0.0f64, |m, r| m.max(r.inversion));
    let total_inversion = rows.iter().map(|r| r.inversion).sum();
    Ok(AuditReport {
        contrast: format!("{}:{}", contrast.kind.as_str(), contrast.attribute),
        rows,
        inversions,
        max_inversion,
        total_inversion,
    })
}

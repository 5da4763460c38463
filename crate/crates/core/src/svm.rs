//! Soft-margin RBF-kernel SVM.
//!
//! The binary dual
//!
//! ```text
//! max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum(a_i y_i) = 0
//! ```
//!
//! is solved by sequential two-variable optimization with second-order
//! working-set selection. Multiclass problems are split one-vs-one.

use log::debug;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heuristics::SvmParams;
use crate::kernel::sq_dist;

/// Upper bound on cached kernel rows.
pub const MAX_CACHED_ROWS: usize = 4000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-3, max_passes: 10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_passes < 1 {
            return Err(Error::InvalidArgument("solver tolerance must be > 0 and max_passes >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub support_vectors: Array2<f64>,
    /// `a_i y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Class reported for a positive decision value.
    pub positive_class: usize,
    /// Class reported for a non-positive decision value.
    pub negative_class: usize,
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryModel {
    pub fn decision_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.support_vectors.ncols() {
            return Err(Error::DimensionMismatch { expected: self.support_vectors.ncols(), found: x.len() });
        }
        Ok(self.decision_unchecked(x))
    }

    fn decision_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        self.support_vectors.outer_iter().zip(&self.coefficients).map(|(sv, coef)| coef * (-self.gamma * sq_dist(sv, x)).exp()).sum::<f64>()
            + self.bias
    }

    /// `sum(a_i y_i)`; zero at a feasible dual point.
    pub fn equality_residual(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }
}

pub fn decision_value(model: &BinaryModel, x: ArrayView1<f64>) -> Result<f64> {
    model.decision_value(x)
}

/// LRU cache of RBF kernel rows.
struct KernelRows<'a> {
    x: ArrayView2<'a, f64>,
    gamma: f64,
    rows: Vec<Option<Box<[f64]>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: ArrayView2<'a, f64>, gamma: f64, capacity: usize) -> Self {
        let m = x.nrows();
        KernelRows { x, gamma, rows: vec![None; m], last_used: vec![0; m], clock: 0, cached: 0, capacity: capacity.max(2) }
    }

    fn ensure(&mut self, i: usize) {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows[i].is_some() {
            return;
        }
        if self.cached >= self.capacity {
            let victim =
                (0..self.rows.len()).filter(|&t| self.rows[t].is_some()).min_by_key(|&t| self.last_used[t]).expect("cache is non-empty");
            self.rows[victim] = None;
            self.cached -= 1;
        }
        let xi = self.x.row(i);
        let row: Box<[f64]> = self.x.outer_iter().map(|xt| (-self.gamma * sq_dist(xi, xt)).exp()).collect();
        self.rows[i] = Some(row);
        self.cached += 1;
    }

    fn row(&self, i: usize) -> &[f64] {
        self.rows[i].as_deref().expect("row was ensured")
    }
}

struct DualSolution {
    alpha: Vec<f64>,
    bias: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // grad = Q a - e, so a'Qa/2 - e'a = sum a_i (grad_i - 1) / 2.
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

fn solve_dual(
    x: ArrayView2<f64>,
    y: &[f64],
    c: f64,
    gamma: f64,
    config: &SolverConfig,
    cache_rows: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> DualSolution {
    let m = y.len();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let mut cache = KernelRows::new(x, gamma, cache_rows);
    let max_iter = config.max_passes.saturating_mul(m).max(1);
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        cache.ensure(i);
        let ki = cache.row(i);

        // j: second-order choice in I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..m {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                let a = (2.0 - 2.0 * ki[t]).max(TAU);
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < config.tolerance || j == usize::MAX {
            converged = true;
            break;
        }

        cache.ensure(j);
        let (ki, kj) = (cache.row(i), cache.row(j));
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let quad = (2.0 - 2.0 * ki[j]).max(TAU);

        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = (alpha[i] - old_ai) * y[i];
        let daj = (alpha[j] - old_aj) * y[j];
        for t in 0..m {
            grad[t] += y[t] * (ki[t] * dai + kj[t] * daj);
        }
        iterations += 1;
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(dual_objective(&alpha, &grad));
        }
    }

    let bias = -rho(&alpha, &grad, y, c);
    let objective = dual_objective(&alpha, &grad);
    DualSolution { alpha, bias, objective, iterations, converged }
}

/// Offset from the KKT conditions: mean of `y_i grad_i` over free vectors,
/// or the midpoint of the bound-derived interval when none is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

fn check_signs(signs: &[f64], m: usize) -> Result<()> {
    if signs.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: signs.len() });
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
    }
    if !signs.contains(&1.0) || !signs.contains(&-1.0) {
        return Err(Error::InvalidArgument("both signs must be present".into()));
    }
    Ok(())
}

/// Trains a binary model on `signs` in {+1, -1}. Positive decisions map to
/// class 0 and negative ones to class 1 unless trained through `train_ovo`.
pub fn train_binary(features: ArrayView2<f64>, signs: &[f64], params: SvmParams, config: &SolverConfig) -> Result<BinaryModel> {
    train_binary_inner(features, signs, params, config, None)
}

/// Like `train_binary`, also returning the dual objective after every
/// solver iteration.
pub fn train_binary_traced(
    features: ArrayView2<f64>,
    signs: &[f64],
    params: SvmParams,
    config: &SolverConfig,
) -> Result<(BinaryModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = train_binary_inner(features, signs, params, config, Some(&mut trace))?;
    Ok((model, trace))
}

fn train_binary_inner(
    features: ArrayView2<f64>,
    signs: &[f64],
    params: SvmParams,
    config: &SolverConfig,
    trace: Option<&mut Vec<f64>>,
) -> Result<BinaryModel> {
    params.validate()?;
    config.validate()?;
    check_signs(signs, features.nrows())?;

    let cache_rows = features.nrows().min(MAX_CACHED_ROWS);
    let sol = solve_dual(features, signs, params.c, params.gamma, config, cache_rows, trace);
    if !sol.converged {
        debug!(
            "solver stopped after {} iterations without reaching tolerance {} (C={}, gamma={})",
            sol.iterations, config.tolerance, params.c, params.gamma
        );
    }
    let support: Vec<usize> = (0..sol.alpha.len()).filter(|&t| sol.alpha[t] > 0.0).collect();
    Ok(BinaryModel {
        support_vectors: features.select(Axis(0), &support),
        coefficients: support.iter().map(|&t| sol.alpha[t] * signs[t]).collect(),
        bias: sol.bias,
        gamma: params.gamma,
        c: params.c,
        positive_class: 0,
        negative_class: 1,
        dual_objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    /// One model per class pair `(p, q)`, `p < q`, in lexicographic order.
    pub binaries: Vec<BinaryModel>,
    pub n_classes: usize,
    pub params: SvmParams,
}

impl MulticlassModel {
    pub fn all_converged(&self) -> bool {
        self.binaries.iter().all(|b| b.converged)
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<usize> {
        let dim = self.binaries[0].support_vectors.ncols();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        let decisions: Vec<f64> = self.binaries.iter().map(|b| b.decision_unchecked(x)).collect();
        Ok(vote(&self.binaries, &decisions, self.n_classes))
    }

    pub fn predict_many(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        x.outer_iter().map(|row| self.predict(row)).collect()
    }
}

/// One vote per binary; ties go to the tied class whose winning votes carry
/// the largest summed |decision value|, then to the lowest class index.
fn vote(binaries: &[BinaryModel], decisions: &[f64], n_classes: usize) -> usize {
    let mut votes = vec![0usize; n_classes];
    let mut confidence = vec![0.0f64; n_classes];
    for (b, &d) in binaries.iter().zip(decisions) {
        let winner = if d > 0.0 { b.positive_class } else { b.negative_class };
        votes[winner] += 1;
        confidence[winner] += d.abs();
    }
    let top = *votes.iter().max().expect("at least one class");
    let mut best = usize::MAX;
    for c in (0..n_classes).filter(|&c| votes[c] == top) {
        if best == usize::MAX || confidence[c] > confidence[best] {
            best = c;
        }
    }
    best
}

pub fn predict(model: &MulticlassModel, x: ArrayView1<f64>) -> Result<usize> {
    model.predict(x)
}

/// Trains one binary per class pair on that pair's rows; the lower class
/// index is the +1 side.
pub fn train_ovo(
    features: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    params: SvmParams,
    config: &SolverConfig,
) -> Result<MulticlassModel> {
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch { expected: features.nrows(), found: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside {n_classes} classes")));
    }
    let counts = crate::data::class_counts(labels, n_classes);
    if n_classes < 2 || counts.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "one-vs-one training needs every one of {n_classes} classes present, counts {counts:?}"
        )));
    }

    let pairs: Vec<(usize, usize)> = (0..n_classes).flat_map(|p| ((p + 1)..n_classes).map(move |q| (p, q))).collect();
    let binaries = pairs
        .par_iter()
        .map(|&(p, q)| {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == p || labels[i] == q).collect();
            let signs: Vec<f64> = rows.iter().map(|&i| if labels[i] == p { 1.0 } else { -1.0 }).collect();
            let sub = features.select(Axis(0), &rows);
            let mut model = train_binary(sub.view(), &signs, params, config)?;
            model.positive_class = p;
            model.negative_class = q;
            Ok(model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel { binaries, n_classes, params })
}

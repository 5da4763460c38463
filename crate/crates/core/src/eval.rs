//! Nested cross-validation harness.
//!
//! Every repetition `r` draws stratified external folds under seed
//! `base_seed + r`. On each external training fold the features are
//! standardized with statistics of that fold alone, SVM parameters are
//! obtained from the method under test (a heuristic, a grid search around
//! `(1, 1)`, or a grid search around the heuristic's estimate) and a
//! one-vs-one model is scored on the held-out fold. Internal folds, distance
//! samples and labelled subsets use seeds derived from the repetition seed
//! and the fold index.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{class_counts, stratified_kfold, subsample_labeled, Dataset, Scaler};
use crate::error::{Error, Result};
use crate::heuristics::{estimate, HeuristicId, HeuristicInput, SvmParams};
use crate::kernel::DEFAULT_PAIR_BUDGET;
use crate::rng::derive_seed;
use crate::svm::{train_ovo, SolverConfig};

/// The multiplier range `<1e-5, ..., 1e0, ..., 1e5>`.
pub const GRID_MULTIPLIERS: [f64; 11] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5];

/// Significance level of the one-sided rank-sum comparisons.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Largest per-sample size handled by exact enumeration.
pub const MWW_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub seed_params: SvmParams,
    pub multipliers: Vec<f64>,
    /// Gamma-major: all C values for the smallest gamma first.
    pub points: Vec<SvmParams>,
}

impl GridSpec {
    /// A grid with explicit points, e.g. for tests or denser searches.
    pub fn from_points(seed_params: SvmParams, points: Vec<SvmParams>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty parameter grid".into()));
        }
        for p in &points {
            p.validate()?;
        }
        Ok(GridSpec { seed_params, multipliers: Vec::new(), points })
    }

    pub fn contains(&self, params: &SvmParams) -> bool {
        self.points.contains(params)
    }
}

/// `{r * gamma} x {r * C}` for every multiplier `r`.
pub fn build_grid(seed_params: SvmParams) -> GridSpec {
    let points = GRID_MULTIPLIERS
        .iter()
        .flat_map(|&rg| GRID_MULTIPLIERS.iter().map(move |&rc| SvmParams { c: rc * seed_params.c, gamma: rg * seed_params.gamma }))
        .collect();
    GridSpec { seed_params, multipliers: GRID_MULTIPLIERS.to_vec(), points }
}

fn check_lengths(predicted: &[usize], truth: &[usize]) -> Result<()> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len() });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty sequence".into()));
    }
    Ok(())
}

/// Percentage of matching positions.
pub fn overall_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

/// Mean per-class recall in percent, over the classes that occur in `truth`.
pub fn average_accuracy(predicted: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let mut total = vec![0usize; n_classes];
    let mut hits = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if t >= n_classes {
            return Err(Error::InvalidArgument(format!("class {t} outside {n_classes} classes")));
        }
        total[t] += 1;
        if p == t {
            hits[t] += 1;
        }
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| total[c] > 0).collect();
    if let Some((num, den)) = exact_mean_recall(&present, &hits, &total) {
        return Ok(100.0 * num as f64 / den as f64);
    }
    let recalls = present.iter().map(|&c| hits[c] as f64 / total[c] as f64);
    Ok(100.0 * recalls.sum::<f64>() / present.len() as f64)
}

/// Mean recall as one integer fraction over the lcm of the class sizes, so a
/// single rounding step happens (matching `overall_accuracy` on balanced
/// folds). `None` once the integers stop being exact in f64.
fn exact_mean_recall(present: &[usize], hits: &[usize], total: &[usize]) -> Option<(u64, u64)> {
    const EXACT: u128 = 1 << 53;
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut lcm: u128 = 1;
    for &c in present {
        let t = total[c] as u128;
        lcm = (lcm / gcd(lcm, t)).checked_mul(t).filter(|&l| l < EXACT)?;
    }
    let num: u128 = present.iter().map(|&c| hits[c] as u128 * (lcm / total[c] as u128)).sum();
    let den = lcm.checked_mul(present.len() as u128).filter(|&d| d < EXACT)?;
    Some((u64::try_from(num).ok()?, den as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub k_external: usize,
    pub k_internal: usize,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k_external: 5, k_internal: 3, repetitions: 10, base_seed: 0 }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_external < 2 || self.k_internal < 2 || self.repetitions < 1 {
            return Err(Error::InvalidArgument(format!(
                "need k_external >= 2, k_internal >= 2, repetitions >= 1; got {}, {}, {}",
                self.k_external, self.k_internal, self.repetitions
            )));
        }
        Ok(())
    }
}

/// Size of the labelled part of each training fold in the semi-supervised
/// scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsampleConfig {
    pub fraction: f64,
    pub min_per_class: usize,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        SubsampleConfig { fraction: 0.1, min_per_class: 5 }
    }
}

/// How a method obtains its SVM parameters on a training fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Heuristic(HeuristicId),
    GridDefault,
    GridSeeded(HeuristicId),
}

impl Strategy {
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            Strategy::Heuristic(_) => Scenario::Heuristic,
            Strategy::GridDefault => Scenario::GscvDefault,
            Strategy::GridSeeded(_) => Scenario::GscvSeeded,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Heuristic(h) => write!(f, "{h}"),
            Strategy::GridDefault => f.write_str("gscv_default"),
            Strategy::GridSeeded(h) => write!(f, "gscv_seeded:{h}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "gscv_default" {
            return Ok(Strategy::GridDefault);
        }
        if let Some(h) = s.strip_prefix("gscv_seeded:") {
            return Ok(Strategy::GridSeeded(h.parse()?));
        }
        Ok(Strategy::Heuristic(s.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Heuristic,
    GscvDefault,
    GscvSeeded,
    SemiSupervised,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Heuristic => "heuristic",
            Scenario::GscvDefault => "gscv_default",
            Scenario::GscvSeeded => "gscv_seeded",
            Scenario::SemiSupervised => "semi_supervised",
        })
    }
}

/// Where a fold's parameters came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSource {
    Heuristic,
    Grid,
    /// The heuristic failed on this fold and `(1, 1)` was used instead.
    Fallback,
    /// Grid search was impossible on the labelled subset; seed params used.
    GridSkipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub repetition: usize,
    pub fold: usize,
    pub params: SvmParams,
    pub source: ParamSource,
    /// Number of grid points evaluated by the internal CV (0 without search).
    pub grid_points: usize,
    /// Internal fold count actually used (0 without search).
    pub k_internal: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Dataset rows the classifier was trained on.
    pub labeled_rows: Vec<usize>,
    pub scaler: Scaler,
    pub oa: f64,
    pub aa: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunScores {
    pub method: String,
    pub scenario: Scenario,
    pub per_repetition_oa: Vec<f64>,
    pub per_repetition_aa: Vec<f64>,
    pub mean_oa: f64,
    pub mean_aa: f64,
    pub folds: Vec<FoldRecord>,
}

impl RunScores {
    /// Aggregates per-repetition scores; means are plain arithmetic means.
    pub fn from_repetitions(method: impl Into<String>, scenario: Scenario, oa: Vec<f64>, aa: Vec<f64>, folds: Vec<FoldRecord>) -> Self {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        RunScores {
            method: method.into(),
            scenario,
            mean_oa: mean(&oa),
            mean_aa: mean(&aa),
            per_repetition_oa: oa,
            per_repetition_aa: aa,
            folds,
        }
    }

    /// Chosen parameters per repetition and fold.
    pub fn chosen_params_log(&self) -> Vec<(usize, usize, SvmParams)> {
        self.folds.iter().map(|f| (f.repetition, f.fold, f.params)).collect()
    }
}

/// Result of the internal grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSelection {
    pub params: SvmParams,
    pub mean_oa: f64,
    /// Mean internal OA for each grid point, in grid order.
    pub scores: Vec<f64>,
}

/// Scores every grid point by mean OA over `k_internal` stratified folds of
/// the (unstandardized) training slice, refitting the scaler per internal
/// fold. Ties go to the lower C, then the lower gamma.
pub fn inner_cv_select(
    features: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    grid: &GridSpec,
    k_internal: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<GridSelection> {
    if grid.points.len() == 1 {
        return Ok(GridSelection { params: grid.points[0], mean_oa: f64::NAN, scores: vec![f64::NAN] });
    }
    let plan = stratified_kfold(labels, k_internal, seed)?;
    let folds = (0..k_internal)
        .map(|f| {
            let (train, test) = plan.split(f);
            let xtr = features.select(Axis(0), &train);
            let scaler = Scaler::fit(xtr.view())?;
            let ztr = scaler.transform(xtr.view())?;
            let zte = scaler.transform(features.select(Axis(0), &test).view())?;
            let ytr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let yte: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            Ok((ztr, ytr, zte, yte))
        })
        .collect::<Result<Vec<_>>>()?;

    let scores = grid
        .points
        .par_iter()
        .map(|&params| {
            let mut total = 0.0;
            for (ztr, ytr, zte, yte) in &folds {
                let model = train_ovo(ztr.view(), ytr, n_classes, params, solver)?;
                total += overall_accuracy(&model.predict_many(zte.view())?, yte)?;
            }
            Ok(total / folds.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (idx, (&score, p)) in scores.iter().zip(&grid.points).enumerate().skip(1) {
        let b = &grid.points[best];
        let better = score > scores[best] || (score == scores[best] && (p.c < b.c || (p.c == b.c && p.gamma < b.gamma)));
        if better {
            best = idx;
        }
    }
    Ok(GridSelection { params: grid.points[best], mean_oa: scores[best], scores })
}

struct FoldOutcome {
    record: FoldRecord,
}

fn heuristic_params(
    id: HeuristicId,
    z_train: ArrayView2<f64>,
    y_train: &[usize],
    labeled: &[usize],
    n_classes: usize,
    seed: u64,
) -> (SvmParams, ParamSource) {
    if id == HeuristicId::Default {
        return (SvmParams::DEFAULT, ParamSource::Heuristic);
    }
    let result = if id.is_supervised() {
        let x = z_train.select(Axis(0), labeled);
        let y: Vec<usize> = labeled.iter().map(|&i| y_train[i]).collect();
        HeuristicInput::prepare(x.view(), Some(&y), n_classes, DEFAULT_PAIR_BUDGET, seed).and_then(|input| estimate(id, &input))
    } else {
        HeuristicInput::prepare(z_train, None, n_classes, DEFAULT_PAIR_BUDGET, seed).and_then(|input| estimate(id, &input))
    };
    match result {
        Ok(p) => (p, ParamSource::Heuristic),
        Err(e) => {
            warn!("heuristic {id} failed on a training fold ({e}); using C=1 gamma=1");
            (SvmParams::DEFAULT, ParamSource::Fallback)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    dataset: &Dataset,
    strategy: Strategy,
    cv: &CvConfig,
    solver: &SolverConfig,
    subsample: Option<SubsampleConfig>,
    repetition: usize,
    fold: usize,
    rep_seed: u64,
    train: Vec<usize>,
    test: Vec<usize>,
) -> Result<FoldOutcome> {
    let n_classes = dataset.n_classes();
    let (x_train, y_train) = dataset.subset(&train);
    let (x_test, y_test) = dataset.subset(&test);
    let scaler = Scaler::fit(x_train.view())?;
    let z_train = scaler.transform(x_train.view())?;
    let z_test = scaler.transform(x_test.view())?;

    // Positions within the training fold that carry labels.
    let labeled: Vec<usize> = match subsample {
        None => (0..train.len()).collect(),
        Some(s) => subsample_labeled(&y_train, s.fraction, s.min_per_class, derive_seed(rep_seed, &[fold as u64, 3]))?.labeled_indices,
    };
    let y_labeled: Vec<usize> = labeled.iter().map(|&i| y_train[i]).collect();

    let heuristic_seed = derive_seed(rep_seed, &[fold as u64, 1]);
    let inner_seed = derive_seed(rep_seed, &[fold as u64, 2]);
    let (params, source, grid_points, k_used) = match strategy {
        Strategy::Heuristic(id) => {
            let (p, s) = heuristic_params(id, z_train.view(), &y_train, &labeled, n_classes, heuristic_seed);
            (p, s, 0, 0)
        }
        Strategy::GridDefault | Strategy::GridSeeded(_) => {
            let seed_params = match strategy {
                Strategy::GridSeeded(id) => heuristic_params(id, z_train.view(), &y_train, &labeled, n_classes, heuristic_seed).0,
                _ => SvmParams::DEFAULT,
            };
            let grid = build_grid(seed_params);
            let k = match subsample {
                None => Some(cv.k_internal),
                Some(_) => {
                    let smallest = class_counts(&y_labeled, n_classes).into_iter().min().unwrap_or(0);
                    let k = cv.k_internal.min(smallest);
                    (k >= 2).then_some(k)
                }
            };
            match k {
                Some(k) => {
                    if k < cv.k_internal {
                        warn!("labelled subset too small for {} internal folds, using {k}", cv.k_internal);
                    }
                    let x_raw = x_train.select(Axis(0), &labeled);
                    let sel = inner_cv_select(x_raw.view(), &y_labeled, n_classes, &grid, k, inner_seed, solver)?;
                    (sel.params, ParamSource::Grid, grid.points.len(), k)
                }
                None => {
                    warn!("labelled subset cannot be stratified for grid search; using seed parameters");
                    (seed_params, ParamSource::GridSkipped, 0, 0)
                }
            }
        }
    };

    let z_labeled: Array2<f64> = z_train.select(Axis(0), &labeled);
    let model = train_ovo(z_labeled.view(), &y_labeled, n_classes, params, solver)?;
    let predicted = model.predict_many(z_test.view())?;
    let oa = overall_accuracy(&predicted, &y_test)?;
    let aa = average_accuracy(&predicted, &y_test, n_classes)?;

    let labeled_rows = labeled.iter().map(|&i| train[i]).collect();
    Ok(FoldOutcome {
        record: FoldRecord {
            repetition,
            fold,
            params,
            source,
            grid_points,
            k_internal: k_used,
            train_rows: train,
            test_rows: test,
            labeled_rows,
            scaler,
            oa,
            aa,
            converged: model.all_converged(),
        },
    })
}

fn run_protocol(
    dataset: &Dataset,
    strategy: Strategy,
    cv: &CvConfig,
    solver: &SolverConfig,
    subsample: Option<SubsampleConfig>,
) -> Result<RunScores> {
    cv.validate()?;
    solver.validate()?;
    let mut oa = Vec::with_capacity(cv.repetitions);
    let mut aa = Vec::with_capacity(cv.repetitions);
    let mut folds = Vec::with_capacity(cv.repetitions * cv.k_external);
    for r in 0..cv.repetitions {
        let rep_seed = cv.base_seed.wrapping_add(r as u64);
        let plan = stratified_kfold(&dataset.labels, cv.k_external, rep_seed)?;
        let (mut sum_oa, mut sum_aa) = (0.0, 0.0);
        for f in 0..cv.k_external {
            let (train, test) = plan.split(f);
            let outcome = run_fold(dataset, strategy, cv, solver, subsample, r, f, rep_seed, train, test)
                .map_err(|e| Error::Degenerate(format!("{} repetition {r} fold {f} ({strategy}): {e}", dataset.name)))?;
            sum_oa += outcome.record.oa;
            sum_aa += outcome.record.aa;
            folds.push(outcome.record);
        }
        oa.push(sum_oa / cv.k_external as f64);
        aa.push(sum_aa / cv.k_external as f64);
    }
    let scenario = if subsample.is_some() { Scenario::SemiSupervised } else { strategy.scenario() };
    Ok(RunScores::from_repetitions(strategy.label(), scenario, oa, aa, folds))
}

/// Fully supervised nested CV.
pub fn run_external_cv(dataset: &Dataset, strategy: Strategy, cv: &CvConfig, solver: &SolverConfig) -> Result<RunScores> {
    run_protocol(dataset, strategy, cv, solver, None)
}

/// Nested CV where the classifier and the grid search see only a labelled
/// subset of each training fold, while the scaler and the unsupervised
/// heuristics use all training features.
pub fn run_semi_supervised(
    dataset: &Dataset,
    strategy: Strategy,
    cv: &CvConfig,
    subsample: SubsampleConfig,
    solver: &SolverConfig,
) -> Result<RunScores> {
    run_protocol(dataset, strategy, cv, solver, Some(subsample))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The first sample tends to be larger.
    Greater,
    /// The first sample tends to be smaller.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwwResult {
    /// U of the first sample.
    pub u_statistic: f64,
    pub p_value: f64,
    pub direction: Direction,
    pub significant: bool,
    pub exact: bool,
}

/// Midranks of the pooled sample, doubled so they are integers.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && pooled[order[end + 1]] == pooled[order[start]] {
            end += 1;
        }
        // Ranks start..=end (1-based start+1..=end+1) share their mean.
        let doubled = (start + 1 + end + 1) as u64;
        for &idx in &order[start..=end] {
            ranks[idx] = doubled;
        }
        start = end + 1;
    }
    ranks
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("rank-sum test needs finite values".into()));
    }
    Ok(())
}

fn u_from_doubled_sum(doubled_sum: u64, na: usize) -> f64 {
    doubled_sum as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0
}

fn finish(u: f64, p: f64, direction: Direction, exact: bool) -> MwwResult {
    let p_value = p.clamp(0.0, 1.0);
    MwwResult { u_statistic: u, p_value, direction, significant: p_value < SIGNIFICANCE_LEVEL, exact }
}

/// Exact one-sided p-value from the permutation distribution of the rank
/// sum over all `C(na + nb, na)` label assignments, ties kept as midranks.
pub fn mww_exact(a: &[f64], b: &[f64], direction: Direction) -> Result<MwwResult> {
    check_samples(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let na = a.len();
    let observed: u64 = ranks[..na].iter().sum();
    let max_sum: usize = ranks.iter().sum::<u64>() as usize;

    // counts[k][s]: number of k-subsets of the items seen so far with doubled rank sum s.
    let mut counts = vec![vec![0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &counts[na];
    let total: f64 = dist.iter().sum();
    let tail: f64 = match direction {
        Direction::Greater => dist[observed as usize..].iter().sum(),
        Direction::Less => dist[..=observed as usize].iter().sum(),
    };
    Ok(finish(u_from_doubled_sum(observed, na), tail / total, direction, true))
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn mww_normal(a: &[f64], b: &[f64], direction: Direction) -> Result<MwwResult> {
    check_samples(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = u_from_doubled_sum(ranks[..a.len()].iter().sum(), a.len());

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mean = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var.is_nan() || var <= 0.0 {
        return Ok(finish(u, 1.0, direction, false));
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p = match direction {
        Direction::Greater => normal.sf((u - mean - 0.5) / sd),
        Direction::Less => normal.cdf((u - mean + 0.5) / sd),
    };
    Ok(finish(u, p, direction, false))
}

/// One-sided Mann-Whitney-Wilcoxon test of `a` against `b`: exact when both
/// samples have at most 12 values, normal approximation otherwise.
pub fn mww_one_sided(a: &[f64], b: &[f64], direction: Direction) -> Result<MwwResult> {
    if a.len() <= MWW_EXACT_MAX && b.len() <= MWW_EXACT_MAX {
        mww_exact(a, b, direction)
    } else {
        mww_normal(a, b, direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    HigherSignificant,
    NotSignificant,
    LowerSignificant,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::HigherSignificant => "higher, significant",
            Verdict::NotSignificant => "not significant",
            Verdict::LowerSignificant => "lower, significant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricComparison {
    /// Method mean minus reference mean.
    pub mean_difference: f64,
    pub p_greater: f64,
    pub p_less: f64,
    pub verdict: Verdict,
}

fn compare_metric(method: &[f64], reference: &[f64]) -> Result<MetricComparison> {
    let greater = mww_one_sided(method, reference, Direction::Greater)?;
    let less = mww_one_sided(method, reference, Direction::Less)?;
    let verdict = if greater.significant {
        Verdict::HigherSignificant
    } else if less.significant {
        Verdict::LowerSignificant
    } else {
        Verdict::NotSignificant
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(MetricComparison { mean_difference: mean(method) - mean(reference), p_greater: greater.p_value, p_less: less.p_value, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub method: String,
    pub reference: String,
    pub oa: MetricComparison,
    pub aa: MetricComparison,
}

/// Compares every method's per-repetition OA and AA with the reference
/// method's by one-sided rank-sum tests in both directions.
pub fn compare_methods(runs: &[RunScores], reference: &str) -> Result<Vec<Comparison>> {
    let base = runs
        .iter()
        .find(|r| r.method == reference)
        .ok_or_else(|| Error::InvalidArgument(format!("reference method `{reference}` not among the runs")))?;
    runs.iter()
        .map(|run| {
            if run.per_repetition_oa.len() != base.per_repetition_oa.len() {
                return Err(Error::InvalidArgument(format!(
                    "method `{}` has {} repetitions, reference has {}",
                    run.method,
                    run.per_repetition_oa.len(),
                    base.per_repetition_oa.len()
                )));
            }
            Ok(Comparison {
                method: run.method.clone(),
                reference: reference.to_string(),
                oa: compare_metric(&run.per_repetition_oa, &base.per_repetition_oa)?,
                aa: compare_metric(&run.per_repetition_aa, &base.per_repetition_aa)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset: String,
    pub semi_supervised: bool,
    pub runs: Vec<RunScores>,
    pub reference: Option<String>,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn run(&self, method: &str) -> Option<&RunScores> {
        self.runs.iter().find(|r| r.method == method)
    }

    pub fn comparison(&self, method: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.method == method)
    }
}

/// Runs every strategy on one dataset (same folds for all of them) and
/// compares them with `reference` when it is one of the strategies.
pub fn run_experiment(
    dataset: &Dataset,
    strategies: &[Strategy],
    cv: &CvConfig,
    solver: &SolverConfig,
    subsample: Option<SubsampleConfig>,
    reference: Option<&str>,
) -> Result<ExperimentReport> {
    let runs = strategies.iter().map(|&s| run_protocol(dataset, s, cv, solver, subsample)).collect::<Result<Vec<_>>>()?;
    let reference = reference.filter(|r| runs.iter().any(|run| run.method == *r)).map(str::to_string);
    let comparisons = match &reference {
        Some(r) => compare_methods(&runs, r)?,
        None => Vec::new(),
    };
    Ok(ExperimentReport { dataset: dataset.name.clone(), semi_supervised: subsample.is_some(), runs, reference, comparisons })
}

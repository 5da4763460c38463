//! Closed-form estimators of the RBF-SVM parameters `(C, gamma)`.
//!
//! All estimators expect features that are already standardized; none of
//! them re-standardizes. Only `Jaakkola` looks at class labels, and only
//! `Chapelle` uses the class count.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::kernel::{pairwise_distances, quantile, quantile_sorted, sq_dist, DistanceSample};

/// `s^2` at or below this is treated as a degenerate kernel variance.
pub const MIN_KERNEL_VARIANCE: f64 = 1e-12;

/// Soft-margin penalty `C` and RBF scaling `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
}

impl SvmParams {
    pub const DEFAULT: SvmParams = SvmParams { c: 1.0, gamma: 1.0 };

    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        let p = SvmParams { c, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c > 0.0 && self.c.is_finite() && self.gamma > 0.0 && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("C={} gamma={} must both be positive and finite", self.c, self.gamma)))
        }
    }
}

impl fmt::Display for SvmParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C={} gamma={}", self.c, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeuristicId {
    Default,
    Covtrace,
    CovtraceC,
    CovtraceMc,
    Gelbart,
    Smola10,
    Smola50,
    Smola90,
    Chapelle,
    Soares,
    SoaresMed,
    Jaakkola,
}

impl HeuristicId {
    pub const ALL: [HeuristicId; 12] = [
        HeuristicId::Default,
        HeuristicId::Covtrace,
        HeuristicId::CovtraceC,
        HeuristicId::CovtraceMc,
        HeuristicId::Gelbart,
        HeuristicId::Smola10,
        HeuristicId::Smola50,
        HeuristicId::Smola90,
        HeuristicId::Chapelle,
        HeuristicId::Soares,
        HeuristicId::SoaresMed,
        HeuristicId::Jaakkola,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicId::Default => "default",
            HeuristicId::Covtrace => "covtrace",
            HeuristicId::CovtraceC => "covtrace+C",
            HeuristicId::CovtraceMc => "covtrace+MC",
            HeuristicId::Gelbart => "Gelbart",
            HeuristicId::Smola10 => "Smola_10",
            HeuristicId::Smola50 => "Smola_50",
            HeuristicId::Smola90 => "Smola_90",
            HeuristicId::Chapelle => "Chapelle",
            HeuristicId::Soares => "Soares",
            HeuristicId::SoaresMed => "Soares_med",
            HeuristicId::Jaakkola => "Jaakkola",
        }
    }

    /// Whether the estimator reads class labels.
    pub fn is_supervised(self) -> bool {
        self == HeuristicId::Jaakkola
    }
}

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeuristicId::ALL.into_iter().find(|h| h.name() == s).ok_or_else(|| Error::UnknownHeuristic(s.to_string()))
    }
}

/// Everything an estimator may look at for one training set.
#[derive(Debug, Clone)]
pub struct HeuristicInput<'a> {
    pub features: ArrayView2<'a, f64>,
    pub labels: Option<&'a [usize]>,
    pub n_classes: usize,
    pub distance_sample: DistanceSample,
    pub seed: u64,
}

impl<'a> HeuristicInput<'a> {
    /// Draws the distance sample (at most `pair_budget` pairs) under `seed`.
    pub fn prepare(
        features: ArrayView2<'a, f64>,
        labels: Option<&'a [usize]>,
        n_classes: usize,
        pair_budget: usize,
        seed: u64,
    ) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        if let Some(l) = labels {
            if l.len() != features.nrows() {
                return Err(Error::DimensionMismatch { expected: features.nrows(), found: l.len() });
            }
        }
        let distance_sample = pairwise_distances(features, pair_budget, seed)?;
        Ok(HeuristicInput { features, labels, n_classes, distance_sample, seed })
    }
}

fn need_rows(features: ArrayView2<f64>, min: usize) -> Result<()> {
    if features.nrows() < min {
        return Err(Error::InvalidArgument(format!("need at least {min} examples, got {}", features.nrows())));
    }
    Ok(())
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Degenerate(format!("{what} is {value}")))
    }
}

/// `gamma = 1 / (2 tr(Cov X))` with population covariance.
pub fn covtrace_gamma(features: ArrayView2<f64>) -> Result<f64> {
    need_rows(features, 2)?;
    let m = features.nrows() as f64;
    let trace: f64 = features
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / m;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m
        })
        .sum();
    Ok(1.0 / (2.0 * positive(trace, "covariance trace")?))
}

/// `gamma = 1 / (n Var(X))`, the variance pooled over every matrix element.
pub fn gelbart_gamma(features: ArrayView2<f64>) -> Result<f64> {
    need_rows(features, 1)?;
    let count = features.len() as f64;
    let mean = features.sum() / count;
    let var = features.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    Ok(1.0 / (features.ncols() as f64 * positive(var, "pooled variance")?))
}

/// `lambda = 1 / quantile_q(D)`, `gamma = lambda^2`.
pub fn smola_gamma(distances: &DistanceSample, q: f64) -> Result<f64> {
    let d = positive(quantile(&distances.values, q)?, "distance quantile")?;
    Ok((1.0 / d).powi(2))
}

/// `gamma = 1 / (2 quantile_{1/n_c}(D))`.
pub fn chapelle_gamma(distances: &DistanceSample, n_classes: usize) -> Result<f64> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument(format!("Chapelle gamma needs at least 2 classes, got {n_classes}")));
    }
    let d = positive(quantile(&distances.values, 1.0 / n_classes as f64)?, "distance quantile")?;
    Ok(1.0 / (2.0 * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    Median,
}

fn nearest_neighbour_distances(features: ArrayView2<f64>, admissible: impl Fn(usize, usize) -> bool) -> Vec<f64> {
    let m = features.nrows();
    (0..m)
        .map(|i| {
            let xi = features.row(i);
            (0..m).filter(|&j| j != i && admissible(i, j)).map(|j| sq_dist(xi, features.row(j))).fold(f64::INFINITY, f64::min).sqrt()
        })
        .collect()
}

/// Nearest-neighbour heuristic: `gamma = 1 / (2 agg(D))`, D the distance of
/// every point to its nearest other point.
pub fn soares_gamma(features: ArrayView2<f64>, aggregate: Aggregate) -> Result<f64> {
    need_rows(features, 2)?;
    let d = nearest_neighbour_distances(features, |_, _| true);
    let agg = match aggregate {
        Aggregate::Mean => d.iter().sum::<f64>() / d.len() as f64,
        Aggregate::Median => quantile(&d, 0.5)?,
    };
    Ok(1.0 / (2.0 * positive(agg, "nearest-neighbour distance aggregate")?))
}

/// Supervised reference: `sigma = median` of each point's distance to the
/// nearest point of another class, `gamma = 1 / (2 sigma^2)`.
pub fn jaakkola_gamma(features: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch { expected: features.nrows(), found: labels.len() });
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::InvalidArgument("Jaakkola gamma needs at least 2 classes".into()));
    }
    let d = nearest_neighbour_distances(features, |i, j| labels[i] != labels[j]);
    let sigma = positive(quantile(&d, 0.5)?, "median inter-class distance")?;
    Ok(1.0 / (2.0 * sigma * sigma))
}

fn c_from_kernel_mean(a: f64) -> Result<f64> {
    let s2 = 1.0 - a;
    if s2 <= MIN_KERNEL_VARIANCE {
        return Err(Error::DegenerateKernelVariance(s2));
    }
    Ok(1.0 / s2)
}

/// `C = 1 / (1 - a)`, `a` the mean kernel value over all ordered pairs
/// including `i = j`.
pub fn chapelle_c(features: ArrayView2<f64>, gamma: f64) -> Result<f64> {
    need_rows(features, 2)?;
    positive(gamma, "gamma")?;
    let m = features.nrows();
    let mut off_diagonal = 0.0;
    for i in 0..m {
        let xi = features.row(i);
        for j in (i + 1)..m {
            off_diagonal += (-gamma * sq_dist(xi, features.row(j))).exp();
        }
    }
    let a = (m as f64 + 2.0 * off_diagonal) / (m * m) as f64;
    c_from_kernel_mean(a)
}

/// Distances over the ordered pair universe `i, j <= m` (self pairs
/// included) built from a sample of unordered-pair distances. An exhaustive
/// sample maps exactly; a partial one gets self pairs in the same proportion
/// they hold among all `m^2` ordered pairs.
fn ordered_pair_distances(sample: &DistanceSample, m: usize) -> Vec<f64> {
    let mut all = Vec::with_capacity(2 * sample.len() + m);
    if sample.exhaustive {
        all.resize(m, 0.0);
        for &d in &sample.values {
            all.push(d);
            all.push(d);
        }
    } else {
        let zeros = (sample.len() as f64 / (m.max(2) - 1) as f64).round() as usize;
        all.resize(zeros, 0.0);
        all.extend_from_slice(&sample.values);
    }
    all
}

/// Kernel mean restricted to close pairs: pairs whose distance is at most
/// the `1/n` quantile of all pair distances. `C = 1 / (1 - a')`, `a'` the
/// arithmetic mean of `K` over that set.
pub fn modified_chapelle_c(sample: &DistanceSample, n_examples: usize, n_features: usize, gamma: f64) -> Result<f64> {
    if n_examples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 examples, got {n_examples}")));
    }
    if n_features < 1 {
        return Err(Error::InvalidArgument("need at least one feature".into()));
    }
    positive(gamma, "gamma")?;
    let mut all = ordered_pair_distances(sample, n_examples);
    if all.is_empty() {
        return Err(Error::Degenerate("empty distance sample".into()));
    }
    all.sort_by(f64::total_cmp);
    let threshold = quantile_sorted(&all, 1.0 / n_features as f64);
    let close: Vec<f64> = all.iter().copied().take_while(|&d| d <= threshold).collect();
    if close.is_empty() {
        return Err(Error::Degenerate("no pair below the distance threshold".into()));
    }
    let a_close = close.iter().map(|d| (-gamma * d * d).exp()).sum::<f64>() / close.len() as f64;
    c_from_kernel_mean(a_close)
}

/// `modified_chapelle_c` over every pair of `features`.
pub fn modified_chapelle_c_exact(features: ArrayView2<f64>, gamma: f64) -> Result<f64> {
    need_rows(features, 2)?;
    let sample = crate::kernel::all_pairwise_distances(features)?;
    modified_chapelle_c(&sample, features.nrows(), features.ncols(), gamma)
}

/// Evaluates the `(C, gamma)` composition named by `id`.
pub fn estimate(id: HeuristicId, input: &HeuristicInput) -> Result<SvmParams> {
    let x = input.features;
    let gamma_only = |gamma: f64| SvmParams::new(1.0, gamma);
    match id {
        HeuristicId::Default => Ok(SvmParams::DEFAULT),
        HeuristicId::Covtrace => gamma_only(covtrace_gamma(x)?),
        HeuristicId::CovtraceC => {
            let gamma = covtrace_gamma(x)?;
            SvmParams::new(chapelle_c(x, gamma)?, gamma)
        }
        HeuristicId::CovtraceMc => {
            let gamma = covtrace_gamma(x)?;
            let c = modified_chapelle_c(&input.distance_sample, x.nrows(), x.ncols(), gamma)?;
            SvmParams::new(c, gamma)
        }
        HeuristicId::Gelbart => gamma_only(gelbart_gamma(x)?),
        HeuristicId::Smola10 => gamma_only(smola_gamma(&input.distance_sample, 0.1)?),
        HeuristicId::Smola50 => gamma_only(smola_gamma(&input.distance_sample, 0.5)?),
        HeuristicId::Smola90 => gamma_only(smola_gamma(&input.distance_sample, 0.9)?),
        HeuristicId::Chapelle => {
            let gamma = chapelle_gamma(&input.distance_sample, input.n_classes)?;
            SvmParams::new(chapelle_c(x, gamma)?, gamma)
        }
        HeuristicId::Soares => gamma_only(soares_gamma(x, Aggregate::Mean)?),
        HeuristicId::SoaresMed => gamma_only(soares_gamma(x, Aggregate::Median)?),
        HeuristicId::Jaakkola => {
            let labels = input.labels.ok_or_else(|| Error::InvalidArgument("Jaakkola gamma needs class labels".into()))?;
            gamma_only(jaakkola_gamma(x, labels)?)
        }
    }
}

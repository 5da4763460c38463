//! Euclidean distances, the Gaussian RBF kernel, pair sampling and quantiles.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Pair budget used when sampling distances for quantile heuristics.
pub const DEFAULT_PAIR_BUDGET: usize = 1000;

pub fn squared_euclidean(x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(sq_dist(x, y))
}

#[inline]
pub(crate) fn sq_dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rbf_kernel(x: ArrayView1<f64>, y: ArrayView1<f64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-gamma * squared_euclidean(x, y)?).exp())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be positive and finite, got {gamma}")))
    }
}

/// Entry `(i, j)` is `K(a_i, b_j)`.
pub fn kernel_matrix(a: ArrayView2<f64>, b: ArrayView2<f64>, gamma: f64) -> Result<Array2<f64>> {
    check_gamma(gamma)?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: b.ncols() });
    }
    Ok(Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| (-gamma * sq_dist(a.row(i), b.row(j))).exp()))
}

/// Euclidean distances over unordered example pairs, either all of them or a
/// uniform sample without replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSample {
    pub values: Vec<f64>,
    pub exhaustive: bool,
    pub pair_budget: usize,
    pub seed: u64,
}

impl DistanceSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps a linear index in `[0, m(m-1)/2)` to the pair `(i, j)`, `i < j`,
/// enumerating row by row: (0,1), (0,2), ..., (0,m-1), (1,2), ...
pub(crate) fn pair_from_index(k: usize, m: usize) -> (usize, usize) {
    // Row i starts at offset(i) = i*m - i*(i+1)/2. Solve for the largest i
    // with offset(i) <= k in floating point, then fix up by stepping.
    let mf = m as f64;
    let kf = k as f64;
    let disc = (2.0 * mf - 1.0).powi(2) - 8.0 * kf;
    let mut i = ((2.0 * mf - 1.0 - disc.max(0.0).sqrt()) / 2.0).floor().max(0.0) as usize;
    let offset = |i: usize| i * m - i * (i + 1) / 2;
    while i > 0 && offset(i) > k {
        i -= 1;
    }
    while i + 1 < m && offset(i + 1) <= k {
        i += 1;
    }
    let j = k - offset(i) + i + 1;
    (i, j)
}

pub fn pairwise_distances(features: ArrayView2<f64>, pair_budget: usize, seed: u64) -> Result<DistanceSample> {
    let m = features.nrows();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 examples for pairwise distances, got {m}")));
    }
    if pair_budget < 1 {
        return Err(Error::InvalidArgument("pair budget must be at least 1".into()));
    }
    let total = m * (m - 1) / 2;
    let dist = |i: usize, j: usize| sq_dist(features.row(i), features.row(j)).sqrt();

    if total <= pair_budget {
        let mut values = Vec::with_capacity(total);
        for i in 0..m {
            for j in (i + 1)..m {
                values.push(dist(i, j));
            }
        }
        return Ok(DistanceSample { values, exhaustive: true, pair_budget, seed });
    }

    let mut rng = rng_from_seed(seed);
    let mut picks = index::sample(&mut rng, total, pair_budget).into_vec();
    picks.sort_unstable();
    let values = picks
        .into_iter()
        .map(|k| {
            let (i, j) = pair_from_index(k, m);
            dist(i, j)
        })
        .collect();
    Ok(DistanceSample { values, exhaustive: false, pair_budget, seed })
}

/// All unordered-pair distances, regardless of size.
pub fn all_pairwise_distances(features: ArrayView2<f64>) -> Result<DistanceSample> {
    let m = features.nrows();
    pairwise_distances(features, (m * m.saturating_sub(1) / 2).max(1), 0)
}

/// Linear-interpolation quantile on sorted order statistics:
/// `v[floor(h)] + (h - floor(h)) * (v[ceil(h)] - v[floor(h)])`, `h = (len-1) q`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty sequence".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

//! Test-only reference implementations, written as plain loops without
//! reusing library internals.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svm_heuristics::data::{clean, parse_keel};
use svm_heuristics::{Dataset, HeuristicId};

pub fn keel_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/keel").join(format!("{name}.dat"))
}

pub fn load_keel(name: &str) -> Dataset {
    clean(&parse_keel(keel_path(name)).expect("fixture parses"), name).expect("fixture cleans")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.random_range(-3.0..3.0))
}

pub fn random_labels(rng: &mut ChaCha8Rng, m: usize, n_classes: usize) -> Vec<usize> {
    // First n_classes rows cover every class.
    (0..m).map(|i| if i < n_classes { i } else { rng.random_range(0..n_classes) }).collect()
}

pub fn dist(x: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..x.ncols() {
        let d = x[[i, k]] - x[[j, k]];
        s += d * d;
    }
    s.sqrt()
}

/// Type-7 sample quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() as f64 - 1.0);
    let below = pos.floor() as usize;
    if below + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[below] * (1.0 - (pos - below as f64)) + v[below + 1] * (pos - below as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn covtrace_gamma(x: ArrayView2<f64>) -> f64 {
    let (m, n) = x.dim();
    let mut cov = vec![vec![0.0; n]; n];
    let means: Vec<f64> = (0..n).map(|k| (0..m).map(|i| x[[i, k]]).sum::<f64>() / m as f64).collect();
    for a in 0..n {
        for b in 0..n {
            for i in 0..m {
                cov[a][b] += (x[[i, a]] - means[a]) * (x[[i, b]] - means[b]);
            }
            cov[a][b] /= m as f64;
        }
    }
    let trace: f64 = (0..n).map(|k| cov[k][k]).sum();
    1.0 / (2.0 * trace)
}

pub fn gelbart_gamma(x: ArrayView2<f64>) -> f64 {
    let (m, n) = x.dim();
    let mut sum = 0.0;
    for i in 0..m {
        for k in 0..n {
            sum += x[[i, k]];
        }
    }
    let mean = sum / (m * n) as f64;
    let mut ss = 0.0;
    for i in 0..m {
        for k in 0..n {
            ss += (x[[i, k]] - mean) * (x[[i, k]] - mean);
        }
    }
    1.0 / (n as f64 * ss / (m * n) as f64)
}

pub fn unordered_distances(x: ArrayView2<f64>) -> Vec<f64> {
    let m = x.nrows();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i < j {
                out.push(dist(x, i, j));
            }
        }
    }
    out
}

pub fn smola_gamma(x: ArrayView2<f64>, q: f64) -> f64 {
    let d = quantile(&unordered_distances(x), q);
    1.0 / (d * d)
}

pub fn chapelle_gamma(x: ArrayView2<f64>, n_classes: usize) -> f64 {
    1.0 / (2.0 * quantile(&unordered_distances(x), 1.0 / n_classes as f64))
}

fn nearest(x: ArrayView2<f64>, i: usize, ok: impl Fn(usize) -> bool) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..x.nrows() {
        if j != i && ok(j) {
            best = best.min(dist(x, i, j));
        }
    }
    best
}

pub fn soares_gamma(x: ArrayView2<f64>, use_median: bool) -> f64 {
    let d: Vec<f64> = (0..x.nrows()).map(|i| nearest(x, i, |_| true)).collect();
    let agg = if use_median { median(&d) } else { d.iter().sum::<f64>() / d.len() as f64 };
    1.0 / (2.0 * agg)
}

pub fn jaakkola_gamma(x: ArrayView2<f64>, labels: &[usize]) -> f64 {
    let d: Vec<f64> = (0..x.nrows()).map(|i| nearest(x, i, |j| labels[j] != labels[i])).collect();
    let s = median(&d);
    1.0 / (2.0 * s * s)
}

fn kernel(d: f64, gamma: f64) -> f64 {
    (-gamma * d * d).exp()
}

/// `1 / (1 - a)` or `None` when the kernel variance is numerically zero.
fn c_of(a: f64) -> Option<f64> {
    (1.0 - a > 1e-12).then(|| 1.0 / (1.0 - a))
}

pub fn chapelle_c(x: ArrayView2<f64>, gamma: f64) -> Option<f64> {
    let m = x.nrows();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += kernel(dist(x, i, j), gamma);
        }
    }
    c_of(s / (m * m) as f64)
}

/// Close-pair variant over every ordered pair `(i, j)`, self pairs included.
pub fn modified_chapelle_c(x: ArrayView2<f64>, gamma: f64) -> Option<f64> {
    let (m, n) = x.dim();
    let mut all = Vec::new();
    for i in 0..m {
        for j in 0..m {
            all.push(dist(x, i, j));
        }
    }
    let t = quantile(&all, 1.0 / n as f64);
    let close: Vec<f64> = all.iter().copied().filter(|&d| d <= t).collect();
    c_of(close.iter().map(|&d| kernel(d, gamma)).sum::<f64>() / close.len() as f64)
}

/// `(C, gamma)` for a heuristic, `None` where the estimate is undefined.
pub fn estimate(id: HeuristicId, x: ArrayView2<f64>, labels: &[usize], n_classes: usize) -> Option<(f64, f64)> {
    let ok = |g: f64| (g.is_finite() && g > 0.0).then_some(g);
    Some(match id {
        HeuristicId::Default => (1.0, 1.0),
        HeuristicId::Covtrace => (1.0, ok(covtrace_gamma(x))?),
        HeuristicId::CovtraceC => {
            let g = ok(covtrace_gamma(x))?;
            (chapelle_c(x, g)?, g)
        }
        HeuristicId::CovtraceMc => {
            let g = ok(covtrace_gamma(x))?;
            (modified_chapelle_c(x, g)?, g)
        }
        HeuristicId::Gelbart => (1.0, ok(gelbart_gamma(x))?),
        HeuristicId::Smola10 => (1.0, ok(smola_gamma(x, 0.1))?),
        HeuristicId::Smola50 => (1.0, ok(smola_gamma(x, 0.5))?),
        HeuristicId::Smola90 => (1.0, ok(smola_gamma(x, 0.9))?),
        HeuristicId::Chapelle => {
            let g = ok(chapelle_gamma(x, n_classes))?;
            (chapelle_c(x, g)?, g)
        }
        HeuristicId::Soares => (1.0, ok(soares_gamma(x, false))?),
        HeuristicId::SoaresMed => (1.0, ok(soares_gamma(x, true))?),
        HeuristicId::Jaakkola => (1.0, ok(jaakkola_gamma(x, labels))?),
    })
}

pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `sum(a) - a'Qa / 2` at the optimum.
    pub objective: f64,
}

impl QpSolution {
    pub fn decision(&self, x: ArrayView2<f64>, y: &[f64], gamma: f64, probe: &[f64]) -> f64 {
        let mut f = self.bias;
        for i in 0..x.nrows() {
            let d2: f64 = (0..x.ncols()).map(|k| (x[[i, k]] - probe[k]).powi(2)).sum();
            f += self.alpha[i] * y[i] * (-gamma * d2).exp();
        }
        f
    }
}

/// Brute-force soft-margin dual: every split of the variables into
/// lower-bound, upper-bound and free sets; the free block solves the KKT
/// system exactly and the best feasible candidate wins.
pub fn svm_dual_oracle(x: ArrayView2<f64>, y: &[f64], c: f64, gamma: f64) -> QpSolution {
    let m = x.nrows();
    let q = DMatrix::from_fn(m, m, |i, j| y[i] * y[j] * kernel(dist(x, i, j), gamma));
    let objective = |a: &[f64]| {
        let av = DVector::from_column_slice(a);
        av.sum() - 0.5 * (av.transpose() * &q * &av)[(0, 0)]
    };
    let eps = 1e-11 * c.max(1.0);
    let mut best: Option<(Vec<f64>, f64, Option<f64>)> = None;
    for code in 0..3usize.pow(m as u32) {
        // state: 0 at zero, 1 at C, 2 free
        let state: Vec<usize> = (0..m).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let mut nu = None;
        if free.is_empty() {
            let r: f64 = alpha.iter().zip(y).map(|(a, yi)| a * yi).sum();
            if r.abs() > eps {
                continue;
            }
        } else {
            let k = free.len();
            let mut a = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, k)] = y[i];
                a[(k, r)] = y[i];
                rhs[r] = 1.0 - (0..m).filter(|&j| state[j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[k] = -(0..m).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            if free.iter().enumerate().any(|(r, _)| sol[r] < -eps || sol[r] > c + eps) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
            nu = Some(sol[k]);
        }
        let obj = objective(&alpha);
        if best.as_ref().is_none_or(|b| obj > b.1) {
            best = Some((alpha, obj, nu));
        }
    }
    let (alpha, objective, nu) = best.expect("zero vector is always feasible");

    // Output without bias at each training point.
    let g: Vec<f64> = (0..m).map(|i| (0..m).map(|j| alpha[j] * y[j] * kernel(dist(x, i, j), gamma)).sum()).collect();
    let strictly_free = (0..m).any(|i| alpha[i] > 1e-9 * c && alpha[i] < c * (1.0 - 1e-9));
    let bias = match nu {
        Some(b) if strictly_free => b,
        _ => {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..m {
                let edge = y[i] - g[i];
                let at_zero = alpha[i] <= 1e-9 * c;
                // at zero y f >= 1, at C y f <= 1
                if (y[i] > 0.0) == at_zero {
                    lo = lo.max(edge);
                } else {
                    hi = hi.min(edge);
                }
            }
            (lo + hi) / 2.0
        }
    };
    QpSolution { alpha, bias, objective }
}

/// `U` of `a` by pair counting, ties counting one half.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// One-sided permutation p-value over every assignment of the pooled values
/// to a sample of size `a.len()`.
pub fn mww_enumerated(a: &[f64], b: &[f64], greater: bool) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let observed = u_statistic(a, b);
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (sa, sb): (Vec<f64>, Vec<f64>) = {
            let mut sa = Vec::new();
            let mut sb = Vec::new();
            for (i, &v) in pooled.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sa.push(v);
                } else {
                    sb.push(v);
                }
            }
            (sa, sb)
        };
        let u = u_statistic(&sa, &sb);
        total += 1;
        if (greater && u >= observed - 1e-9) || (!greater && u <= observed + 1e-9) {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Every `k`-subset of `0..n` as index lists.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n)).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect()).collect()
}

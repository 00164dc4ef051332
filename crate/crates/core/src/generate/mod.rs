//! Per-class proxy generation.
//!
//! Every strategy sees the embeddings of a single class and nothing else;
//! there is no way to pass cross-class statistics through this module.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{ImprintError, Result};
use crate::seed::rng_for;

pub mod kmeans;
pub mod kmedoids;

pub use kmeans::{kmeans, KMeansFit, KMeansParams};
pub use kmedoids::{kmedoids, KMedoidsFit};

use kmeans::{mean_of_rows, sq_dist};

/// How a class's embeddings become proxies. `k` is carried by the variants
/// that use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenStrategy {
    All,
    Mean,
    KRandom(usize),
    KMeans(usize),
    KMedoids(usize),
    KCovMax(usize),
    KFps(usize),
}

impl GenStrategy {
    pub fn from_name(name: &str, k: usize) -> Result<Self> {
        let s = match name {
            "all" => GenStrategy::All,
            "mean" => GenStrategy::Mean,
            "k-random" => GenStrategy::KRandom(k),
            "k-means" => GenStrategy::KMeans(k),
            "k-medoids" => GenStrategy::KMedoids(k),
            "k-cov-max" => GenStrategy::KCovMax(k),
            "k-fps" => GenStrategy::KFps(k),
            other => {
                return Err(ImprintError::InvalidConfig(format!(
                    "unknown generation strategy `{other}`"
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GenStrategy::All => "all",
            GenStrategy::Mean => "mean",
            GenStrategy::KRandom(_) => "k-random",
            GenStrategy::KMeans(_) => "k-means",
            GenStrategy::KMedoids(_) => "k-medoids",
            GenStrategy::KCovMax(_) => "k-cov-max",
            GenStrategy::KFps(_) => "k-fps",
        }
    }

    /// Proxies per class, or `None` for `all`.
    pub fn k(&self) -> Option<usize> {
        match *self {
            GenStrategy::All => None,
            GenStrategy::Mean => Some(1),
            GenStrategy::KRandom(k)
            | GenStrategy::KMeans(k)
            | GenStrategy::KMedoids(k)
            | GenStrategy::KCovMax(k)
            | GenStrategy::KFps(k) => Some(k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k() == Some(0) {
            return Err(ImprintError::InvalidConfig(format!("{} needs k >= 1", self.name())));
        }
        Ok(())
    }

    /// Minimum class size this strategy accepts.
    pub fn min_samples(&self) -> usize {
        match *self {
            GenStrategy::All | GenStrategy::Mean => 1,
            GenStrategy::KCovMax(k) => k.max(2),
            _ => self.k().unwrap_or(1),
        }
    }

    /// Runs the strategy on one class's embeddings.
    pub fn generate(&self, class_embeddings: ArrayView2<'_, f64>, seed: u64) -> Result<Array2<f64>> {
        match *self {
            GenStrategy::All => gen_all(class_embeddings),
            GenStrategy::Mean => gen_mean(class_embeddings),
            GenStrategy::KRandom(k) => gen_k_random(class_embeddings, k, seed),
            GenStrategy::KMeans(k) => gen_k_means(class_embeddings, k, seed),
            GenStrategy::KMedoids(k) => gen_k_medoids(class_embeddings, k, seed),
            GenStrategy::KCovMax(k) => gen_k_cov_max(class_embeddings, k),
            GenStrategy::KFps(k) => gen_k_fps(class_embeddings, k, seed),
        }
    }
}

impl fmt::Display for GenStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k() {
            Some(k) if !matches!(self, GenStrategy::Mean) => write!(f, "{}:{k}", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for GenStrategy {
    type Err = ImprintError;

    /// Parses `name` or `name:k`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((name, k)) => {
                let k = k
                    .parse()
                    .map_err(|_| ImprintError::InvalidConfig(format!("bad k in `{s}`")))?;
                GenStrategy::from_name(name, k)
            }
            None => GenStrategy::from_name(s, 1),
        }
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(ImprintError::EmptyClass { class: 0 });
    }
    if k == 0 {
        return Err(ImprintError::InvalidConfig("k must be at least 1".into()));
    }
    if k > n {
        return Err(ImprintError::TooManyProxies { k, n });
    }
    Ok(())
}

pub fn gen_all(class_embeddings: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if class_embeddings.nrows() == 0 {
        return Err(ImprintError::EmptyClass { class: 0 });
    }
    Ok(class_embeddings.to_owned())
}

pub fn gen_mean(class_embeddings: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = class_embeddings.nrows();
    if n == 0 {
        return Err(ImprintError::EmptyClass { class: 0 });
    }
    Ok(mean_of_rows(class_embeddings, 0..n).insert_axis(Axis(0)))
}

pub fn gen_k_means(class_embeddings: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    check_k(class_embeddings.nrows(), k)?;
    Ok(kmeans(class_embeddings, KMeansParams::new(k, seed))?.centers)
}

pub fn gen_k_medoids(class_embeddings: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    check_k(class_embeddings.nrows(), k)?;
    let fit = kmedoids(class_embeddings, k, seed)?;
    Ok(class_embeddings.select(Axis(0), &fit.medoids))
}

/// Column sums of the sample-by-sample covariance matrix, treating each row
/// as a variable observed over its `l` coordinates (divisor `l - 1`).
pub fn covariance_scores(class_embeddings: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let (n, l) = class_embeddings.dim();
    if n < 2 {
        return Err(ImprintError::InvalidArgument(format!(
            "k-cov-max needs at least 2 samples, got {n}"
        )));
    }
    if l < 2 {
        return Err(ImprintError::InvalidArgument(
            "k-cov-max needs embedding dimension >= 2".into(),
        ));
    }
    let centered: Vec<Vec<f64>> = class_embeddings
        .rows()
        .into_iter()
        .map(|r| {
            let mu = r.sum() / l as f64;
            r.iter().map(|v| v - mu).collect()
        })
        .collect();
    // sum_i cov(i, j) = <sum_i centered_i, centered_j> / (l - 1)
    let mut total = vec![0.0; l];
    for row in &centered {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    Ok(centered
        .iter()
        .map(|row| row.iter().zip(&total).map(|(a, b)| a * b).sum::<f64>() / (l - 1) as f64)
        .collect())
}

/// The `k` rows with the largest covariance scores, best first; equal
/// scores keep row order.
pub fn gen_k_cov_max(class_embeddings: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    let scores = covariance_scores(class_embeddings)?;
    check_k(class_embeddings.nrows(), k)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    Ok(class_embeddings.select(Axis(0), &order))
}

/// Farthest-point sampling order starting from row `start`. Ties in the
/// max-min distance go to the lower row index.
pub fn farthest_point_order(class_embeddings: ArrayView2<'_, f64>, k: usize, start: usize) -> Result<Vec<usize>> {
    let n = class_embeddings.nrows();
    check_k(n, k)?;
    if start >= n {
        return Err(ImprintError::InvalidArgument(format!("start row {start} out of range")));
    }
    let mut picked = vec![start];
    let mut taken = vec![false; n];
    taken[start] = true;
    let mut min_d: Vec<f64> = (0..n)
        .map(|i| sq_dist(class_embeddings.row(i), class_embeddings.row(start)))
        .collect();
    while picked.len() < k {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            if best.is_none_or(|b| min_d[i] > min_d[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("k <= n leaves a free row");
        taken[next] = true;
        picked.push(next);
        for (i, d) in min_d.iter_mut().enumerate() {
            *d = d.min(sq_dist(class_embeddings.row(i), class_embeddings.row(next)));
        }
    }
    Ok(picked)
}

pub fn gen_k_fps(class_embeddings: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let n = class_embeddings.nrows();
    check_k(n, k)?;
    let start = rng_for(seed, 0).random_range(0..n);
    let order = farthest_point_order(class_embeddings, k, start)?;
    Ok(class_embeddings.select(Axis(0), &order))
}

pub fn gen_k_random(class_embeddings: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let n = class_embeddings.nrows();
    check_k(n, k)?;
    let mut rng = rng_for(seed, 0);
    let rows = sample(&mut rng, n, k).into_vec();
    Ok(class_embeddings.select(Axis(0), &rows))
}

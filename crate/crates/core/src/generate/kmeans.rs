//! Lloyd's k-means with greedy k-means++ seeding and restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{ImprintError, Result};
use crate::par;
use crate::seed::rng_for;

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Column means of the selected rows, summed in the given order.
pub(crate) fn mean_of_rows(data: ArrayView2<'_, f64>, rows: impl Iterator<Item = usize>) -> ndarray::Array1<f64> {
    let mut acc = ndarray::Array1::<f64>::zeros(data.ncols());
    let mut count = 0usize;
    for r in rows {
        acc += &data.row(r);
        count += 1;
    }
    acc.mapv_inplace(|v| v / count as f64);
    acc
}

/// Nearest center by squared distance; ties go to the lower index.
fn nearest(point: ArrayView1<'_, f64>, centers: ArrayView2<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.rows().into_iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Samples an index with probability proportional to `weights`. Falls back
/// to a uniform draw when every weight is zero.
pub(crate) fn weighted_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return rng.random_range(0..weights.len());
    }
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // Rounding left us past the end; take the last positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Greedy k-means++: each step draws `2 + ln k` candidates by D² sampling
/// and keeps the one that lowers the potential most.
pub(crate) fn kmeans_plus_plus(data: ArrayView2<'_, f64>, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = data.nrows();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(first))).collect();

    while chosen.len() < k {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = weighted_index(&closest, rng);
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(sq_dist(data.row(i), data.row(cand))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.1) {
                best = Some((cand, potential, updated));
            }
        }
        let (cand, _, updated) = best.expect("at least one trial");
        chosen.push(cand);
        closest = updated;
    }
    chosen
}

fn assign(data: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>, out: &mut [usize], dist: &mut [f64]) {
    for (i, row) in data.rows().into_iter().enumerate() {
        let (j, d) = nearest(row, centers);
        out[i] = j;
        dist[i] = d;
    }
}

/// Moves the point farthest from its center into each empty cluster, taking
/// only from clusters that keep at least one member.
fn repair_empty(assignments: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..assignments.len() {
            if sizes[assignments[i]] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        if let Some(i) = far {
            sizes[assignments[i]] -= 1;
            assignments[i] = j;
            sizes[j] = 1;
            dist[i] = 0.0;
        }
    }
}

fn update_centers(data: ArrayView2<'_, f64>, assignments: &[usize], k: usize) -> Array2<f64> {
    let mut centers = Array2::zeros((k, data.ncols()));
    for j in 0..k {
        let members = assignments.iter().enumerate().filter(|(_, &a)| a == j).map(|(i, _)| i);
        centers.row_mut(j).assign(&mean_of_rows(data, members));
    }
    centers
}

fn lloyd(data: ArrayView2<'_, f64>, k: usize, max_iter: usize, init: &[usize]) -> KMeansFit {
    let n = data.nrows();
    let mut centers = Array2::zeros((k, data.ncols()));
    for (j, &i) in init.iter().enumerate() {
        centers.row_mut(j).assign(&data.row(i));
    }
    let mut assignments = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    while iterations < max_iter {
        assign(data, centers.view(), &mut next, &mut dist);
        repair_empty(&mut next, &mut dist, k);
        if next == assignments {
            break;
        }
        assignments.copy_from_slice(&next);
        centers = update_centers(data, &assignments, k);
        iterations += 1;
    }
    let inertia = (0..n).map(|i| sq_dist(data.row(i), centers.row(assignments[i]))).sum();
    KMeansFit {
        centers,
        assignments,
        inertia,
        iterations,
    }
}

/// Best-of-`restarts` Lloyd clustering. Each restart seeds its own RNG from
/// `(seed, restart)`, so the result does not depend on thread scheduling.
pub fn kmeans(data: ArrayView2<'_, f64>, params: KMeansParams) -> Result<KMeansFit> {
    let n = data.nrows();
    if n == 0 {
        return Err(ImprintError::EmptyClass { class: 0 });
    }
    if params.k == 0 || params.restarts == 0 {
        return Err(ImprintError::InvalidConfig(
            "k-means needs k >= 1 and at least one restart".into(),
        ));
    }
    if params.k > n {
        return Err(ImprintError::TooManyProxies { k: params.k, n });
    }
    let fits = par::map_range(params.restarts, |r| {
        let mut rng = rng_for(params.seed, r as u64);
        let init = kmeans_plus_plus(data, params.k, &mut rng);
        lloyd(data, params.k, params.max_iter, &init)
    });
    let best = fits
        .into_iter()
        .reduce(|best, f| if f.inertia < best.inertia { f } else { best })
        .expect("restarts >= 1");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_pairs_split_cleanly() {
        let data = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let fit = kmeans(data.view(), KMeansParams::new(2, 3)).unwrap();
        let mut centers: Vec<Vec<f64>> = fit.centers.rows().into_iter().map(|r| r.to_vec()).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
        assert!((fit.inertia - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let data = array![[0.0], [1.0], [3.0], [7.0], [8.5]];
        let fit = kmeans(data.view(), KMeansParams::new(5, 0)).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn k_larger_than_n_errors() {
        let data = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans(data.view(), KMeansParams::new(3, 0)),
            Err(ImprintError::TooManyProxies { k: 3, n: 2 })
        ));
    }

    #[test]
    fn duplicate_points_do_not_leave_empty_clusters() {
        let data = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let fit = kmeans(data.view(), KMeansParams::new(3, 11)).unwrap();
        let mut sizes = [0; 3];
        for &a in &fit.assignments {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "{sizes:?}");
    }

    #[test]
    fn weighted_index_respects_zero_weights() {
        let mut rng = rng_for(1, 2);
        for _ in 0..100 {
            let i = weighted_index(&[0.0, 3.0, 0.0, 1.0], &mut rng);
            assert!(i == 1 || i == 3);
        }
    }
}

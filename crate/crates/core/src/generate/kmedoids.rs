//! Alternating k-medoids (assign, then re-pick each cluster's medoid) on
//! squared Euclidean distance.

use ndarray::ArrayView2;
use rand::Rng;

use super::kmeans::{sq_dist, weighted_index, DEFAULT_MAX_ITER, DEFAULT_RESTARTS};
use crate::error::{ImprintError, Result};
use crate::par;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsFit {
    /// Row indices of the medoids, one per cluster.
    pub medoids: Vec<usize>,
    pub assignments: Vec<usize>,
    pub cost: f64,
}

/// D²-weighted seeding over sample indices; never picks an index twice.
fn seed_medoids(data: ArrayView2<'_, f64>, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = data.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(chosen[0]))).collect();
    while chosen.len() < k {
        let mut weights = closest.clone();
        for &c in &chosen {
            weights[c] = 0.0;
        }
        let pick = if weights.iter().any(|&w| w > 0.0) {
            weighted_index(&weights, rng)
        } else {
            // Only duplicates of chosen points remain.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq_dist(data.row(i), data.row(pick)));
        }
    }
    chosen
}

fn assign(data: ArrayView2<'_, f64>, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignments = (0..data.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (j, &m) in medoids.iter().enumerate() {
                let d = sq_dist(data.row(i), data.row(m));
                if d < best.1 {
                    best = (j, d);
                }
            }
            cost += best.1;
            best.0
        })
        .collect();
    (assignments, cost)
}

/// The member minimizing summed squared distance to the other members. The
/// current medoid wins ties so the iteration cannot cycle.
fn best_medoid(data: ArrayView2<'_, f64>, members: &[usize], current: usize) -> usize {
    let cost_of = |c: usize| -> f64 { members.iter().map(|&i| sq_dist(data.row(i), data.row(c))).sum() };
    let mut best = (current, cost_of(current));
    for &c in members {
        let cost = cost_of(c);
        if cost < best.1 {
            best = (c, cost);
        }
    }
    best.0
}

fn alternate(data: ArrayView2<'_, f64>, k: usize, mut medoids: Vec<usize>) -> KMedoidsFit {
    for _ in 0..DEFAULT_MAX_ITER {
        let (assignments, _) = assign(data, &medoids);
        let mut changed = false;
        for (j, medoid) in medoids.iter_mut().enumerate().take(k) {
            let members: Vec<usize> = (0..data.nrows()).filter(|&i| assignments[i] == j).collect();
            if members.is_empty() {
                continue;
            }
            let m = best_medoid(data, &members, *medoid);
            if m != *medoid {
                *medoid = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let (assignments, cost) = assign(data, &medoids);
    KMedoidsFit {
        medoids,
        assignments,
        cost,
    }
}

pub fn kmedoids(data: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<KMedoidsFit> {
    let n = data.nrows();
    if n == 0 {
        return Err(ImprintError::EmptyClass { class: 0 });
    }
    if k == 0 {
        return Err(ImprintError::InvalidConfig("k-medoids needs k >= 1".into()));
    }
    if k > n {
        return Err(ImprintError::TooManyProxies { k, n });
    }
    let fits = par::map_range(DEFAULT_RESTARTS, |r| {
        let mut rng = rng_for(seed, r as u64);
        let init = seed_medoids(data, k, &mut rng);
        alternate(data, k, init)
    });
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.cost < best.cost { f } else { best })
        .expect("restarts >= 1"))
}

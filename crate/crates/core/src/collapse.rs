//! Variability-collapse statistics: NC1 = (1/C) tr(Σ_W Σ_B⁺).

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::dataset::EmbeddingSet;
use crate::error::{ImprintError, Result};
use crate::generate::kmeans::mean_of_rows;
use crate::linalg::pinv_symmetric;
use crate::normalize::l2_normalize_rows;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseStats {
    pub global_mean: Array1<f64>,
    pub class_means: Array2<f64>,
    pub sigma_w: Array2<f64>,
    pub sigma_b: Array2<f64>,
    pub nc1: f64,
    /// Rank of Σ_B under the pseudo-inverse cutoff.
    pub rank_sigma_b: usize,
}

impl CollapseStats {
    pub fn trace_sigma_w(&self) -> f64 {
        self.sigma_w.diag().sum()
    }
}

/// How samples are weighted when building Σ_W and h_G.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Weighting {
    /// Every sample counts once.
    PerSample,
    /// Every class counts once, whatever its size.
    PerClass,
}

/// NC1 with Σ_W averaged over all samples and h_G the mean of all samples.
/// On balanced data this is exactly the textbook definition.
pub fn compute_nc1(set: &EmbeddingSet, pre_l2: bool) -> Result<CollapseStats> {
    collapse_stats(set, pre_l2, Weighting::PerSample)
}

/// NC1 for unequal class sizes: each class contributes its own within-class
/// covariance with weight 1/C, and h_G is the mean of the class means.
/// Duplicating a class's samples therefore leaves the result unchanged.
pub fn imbalanced_nc1(set: &EmbeddingSet, pre_l2: bool) -> Result<CollapseStats> {
    collapse_stats(set, pre_l2, Weighting::PerClass)
}

fn symmetrize(m: &mut Array2<f64>) {
    let t = m.t().to_owned();
    *m += &t;
    m.mapv_inplace(|v| v / 2.0);
}

fn scatter(centered: ArrayView2<'_, f64>) -> Array2<f64> {
    centered.t().dot(&centered)
}

fn collapse_stats(set: &EmbeddingSet, pre_l2: bool, weighting: Weighting) -> Result<CollapseStats> {
    let c = set.class_count();
    if c < 2 {
        return Err(ImprintError::InvalidArgument("NC1 needs at least two classes".into()));
    }
    let data = if pre_l2 {
        l2_normalize_rows(set.vectors().view())?
    } else {
        set.vectors().clone()
    };
    let l = data.ncols();
    let groups = set.class_indices();

    let class_means = {
        let rows = par::map_slice(&groups, |idx| mean_of_rows(data.view(), idx.iter().copied()));
        let mut m = Array2::zeros((c, l));
        for (j, r) in rows.iter().enumerate() {
            m.row_mut(j).assign(r);
        }
        m
    };

    let within = par::map_range(c, |j| {
        let mut centered = data.select(Axis(0), &groups[j]);
        centered -= &class_means.row(j);
        scatter(centered.view())
    });
    let mut sigma_w = Array2::zeros((l, l));
    let global_mean = match weighting {
        Weighting::PerSample => {
            for s in &within {
                sigma_w += s;
            }
            sigma_w /= set.len() as f64;
            data.mean_axis(Axis(0)).expect("non-empty set")
        }
        Weighting::PerClass => {
            for (s, idx) in within.iter().zip(&groups) {
                sigma_w.scaled_add(1.0 / idx.len() as f64, s);
            }
            sigma_w /= c as f64;
            class_means.mean_axis(Axis(0)).expect("c >= 2")
        }
    };
    symmetrize(&mut sigma_w);

    let mut between = class_means.clone();
    between -= &global_mean;
    let mut sigma_b = scatter(between.view()) / c as f64;
    symmetrize(&mut sigma_b);

    let (sigma_b_pinv, rank_sigma_b) = pinv_symmetric(sigma_b.view(), l.max(c) as f64);
    // tr(A B) without forming the product.
    let trace: f64 = (&sigma_w * &sigma_b_pinv.t()).sum();
    let nc1 = (trace / c as f64).max(0.0);

    Ok(CollapseStats {
        global_mean,
        class_means,
        sigma_w,
        sigma_b,
        nc1,
        rank_sigma_b,
    })
}

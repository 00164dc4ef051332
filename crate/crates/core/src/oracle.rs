//! Least-squares reference weights. These use statistics across all classes,
//! so they are a supervised upper reference, not an imprinting strategy.

use ndarray::{Array2, Axis};
use serde::Serialize;

use crate::dataset::EmbeddingSet;
use crate::error::{ImprintError, Result};
use crate::generate::kmeans::mean_of_rows;
use crate::generate::{kmeans, KMeansParams};
use crate::head::{AggMode, ClassifierHead, Provenance};
use crate::linalg::solve_right_spd;
use crate::normalize::NormMode;
use crate::par;
use crate::seed::mix;

pub const DEFAULT_LAMBDA: f64 = 1e-4;

/// Weight decay suggested for embeddings from a given backbone family.
pub fn lambda_for_model(family: &str) -> Option<f64> {
    match family.to_ascii_lowercase().as_str() {
        "resnet" => Some(1e-4),
        "vit" => Some(0.1),
        "swin" => Some(0.05),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleWeights {
    /// One row per proxy, grouped by class.
    pub weights: Array2<f64>,
    pub proxy_class: Vec<usize>,
    pub class_count: usize,
    pub lambda: f64,
    pub k: usize,
}

impl OracleWeights {
    /// Wraps the weights in a head that predicts by max aggregation on raw
    /// queries.
    pub fn to_head(&self) -> Result<ClassifierHead> {
        let echo = serde_json::json!({"method": "least-squares", "k": self.k, "lambda": self.lambda}).to_string();
        Ok(ClassifierHead::new(
            self.weights.clone(),
            self.proxy_class.clone(),
            self.class_count,
            NormMode::None,
            AggMode::Max,
        )?
        .with_meta(Provenance::Oracle, echo))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ImprintError::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// Row c of the result is (1/P) h̄_cᵀ (Σ_T + h_G h_Gᵀ + λI)⁻¹ over the
/// `groups` (P of them), with Σ_T the population covariance of all rows.
fn solve(data: &Array2<f64>, groups: &[Vec<usize>], lambda: f64) -> Result<Array2<f64>> {
    let (n, l) = data.dim();
    let p = groups.len();
    let mut means = Array2::zeros((p, l));
    for (j, idx) in groups.iter().enumerate() {
        means.row_mut(j).assign(&mean_of_rows(data.view(), idx.iter().copied()));
    }
    let h_g = data.mean_axis(Axis(0)).expect("non-empty set");
    let centered = data - &h_g;
    let mut a = centered.t().dot(&centered) / n as f64;
    let outer = h_g.view().insert_axis(Axis(1)).dot(&h_g.view().insert_axis(Axis(0)));
    a += &outer;
    let t = a.t().to_owned();
    a = (a + t) / 2.0;
    for i in 0..l {
        a[[i, i]] += lambda;
    }
    let w = solve_right_spd(a.view(), means.view())?;
    Ok(w / p as f64)
}

/// Ridge least-squares weights, one row per class.
pub fn least_squares_weights(set: &EmbeddingSet, lambda: f64) -> Result<OracleWeights> {
    check_lambda(lambda)?;
    if set.class_count() < 2 {
        return Err(ImprintError::InvalidArgument(
            "least squares needs at least two classes".into(),
        ));
    }
    let weights = solve(set.vectors(), &set.class_indices(), lambda)?;
    Ok(OracleWeights {
        weights,
        proxy_class: (0..set.class_count()).collect(),
        class_count: set.class_count(),
        lambda,
        k: 1,
    })
}

/// Splits every class into `k` clusters with k-means and solves one joint
/// least-squares problem over the k·C clusters. Rows come out grouped by
/// class, then by cluster.
pub fn k_least_squares(set: &EmbeddingSet, k: usize, lambda: f64, seed: u64) -> Result<OracleWeights> {
    check_lambda(lambda)?;
    if k == 0 {
        return Err(ImprintError::InvalidConfig("k must be at least 1".into()));
    }
    if k == 1 {
        return least_squares_weights(set, lambda);
    }
    if set.class_count() < 2 {
        return Err(ImprintError::InvalidArgument(
            "least squares needs at least two classes".into(),
        ));
    }
    let classes = set.class_indices();
    if let Some((class, idx)) = classes.iter().enumerate().find(|(_, idx)| idx.len() < k) {
        return Err(ImprintError::NotEnoughSamples {
            class,
            available: idx.len(),
            requested: k,
        });
    }
    let fits = par::map_range(classes.len(), |c| {
        let rows = set.vectors().select(Axis(0), &classes[c]);
        kmeans(rows.view(), KMeansParams::new(k, mix(seed, c as u64)))
    });
    let mut groups = Vec::with_capacity(k * classes.len());
    for (idx, fit) in classes.iter().zip(fits) {
        let fit = fit?;
        let mut clusters = vec![Vec::new(); k];
        for (&row, &a) in idx.iter().zip(&fit.assignments) {
            clusters[a].push(row);
        }
        groups.extend(clusters);
    }
    let weights = solve(set.vectors(), &groups, lambda)?;
    Ok(OracleWeights {
        weights,
        proxy_class: (0..classes.len()).flat_map(|c| std::iter::repeat_n(c, k)).collect(),
        class_count: classes.len(),
        lambda,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, generate_synthetic_split, SyntheticTaskSpec};
    use crate::generate::GenStrategy;
    use crate::head::imprint;
    use crate::linalg::pinv_symmetric;
    use crate::runner::ImprintConfig;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn task(seed: u64, dim: usize, modes: usize) -> SyntheticTaskSpec {
        SyntheticTaskSpec {
            class_count: 4,
            modes_per_class: modes,
            samples_per_mode: 12,
            dim,
            mode_separation: 1.5,
            within_mode_std: 0.4,
            seed,
        }
    }

    #[test]
    fn one_dimensional_hand_case() {
        let set = EmbeddingSet::new(array![[1.0], [-1.0]], vec![0, 1]).unwrap();
        let w = least_squares_weights(&set, 0.0).unwrap();
        assert_abs_diff_eq!(w.weights[[0, 0]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.weights[[1, 0]], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn singular_without_ridge() {
        // Every sample lies on the x axis, so the second moment is rank one.
        let set = EmbeddingSet::new(array![[1.0, 0.0], [-1.0, 0.0]], vec![0, 1]).unwrap();
        assert!(matches!(least_squares_weights(&set, 0.0), Err(ImprintError::Singular)));
        assert!(least_squares_weights(&set, 1e-4).is_ok());
        assert!(least_squares_weights(&set, -1.0).is_err());
    }

    #[test]
    fn huge_ridge_matches_mean_proxies() {
        let (train, test) = generate_synthetic_split(&task(3, 6, 2), 10).unwrap();
        let head = least_squares_weights(&train, 1e9).unwrap().to_head().unwrap();
        let config = ImprintConfig {
            gen: GenStrategy::Mean,
            norm_pre: NormMode::None,
            norm_post: NormMode::None,
            norm_inf: NormMode::None,
            ..ImprintConfig::default()
        };
        let mean_head = imprint(&train, &config).unwrap();
        assert_eq!(head.predict_all(&test).unwrap(), mean_head.predict_all(&test).unwrap());
    }

    #[test]
    fn k_one_is_plain_least_squares() {
        let set = generate_synthetic(&task(1, 5, 2)).unwrap();
        assert_eq!(
            k_least_squares(&set, 1, 1e-4, 9).unwrap(),
            least_squares_weights(&set, 1e-4).unwrap()
        );
    }

    #[test]
    fn k_rows_grouped_by_class() {
        let set = generate_synthetic(&task(2, 5, 2)).unwrap();
        let w = k_least_squares(&set, 3, 1e-4, 0).unwrap();
        assert_eq!(w.weights.nrows(), 12);
        assert_eq!(w.proxy_class, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
        assert!(k_least_squares(&set, 25, 1e-4, 0).is_err());
    }

    #[test]
    fn two_proxies_help_on_bimodal_classes() {
        let spec = SyntheticTaskSpec {
            class_count: 5,
            modes_per_class: 2,
            samples_per_mode: 30,
            dim: 8,
            mode_separation: 2.0,
            within_mode_std: 0.2,
            seed: 4,
        };
        let (train, test) = generate_synthetic_split(&spec, 30).unwrap();
        let one = least_squares_weights(&train, 1e-4).unwrap().to_head().unwrap();
        let two = k_least_squares(&train, 2, 1e-4, 0).unwrap().to_head().unwrap();
        assert!(two.accuracy(&test).unwrap() >= one.accuracy(&test).unwrap());
    }

    #[test]
    fn head_has_oracle_provenance() {
        let set = generate_synthetic(&task(0, 4, 1)).unwrap();
        let head = least_squares_weights(&set, 1e-4).unwrap().to_head().unwrap();
        assert_eq!(head.provenance(), Provenance::Oracle);
        assert_eq!(head.norm_inf(), NormMode::None);
    }

    #[test]
    fn model_lambdas() {
        assert_eq!(lambda_for_model("ViT"), Some(0.1));
        assert_eq!(lambda_for_model("swin"), Some(0.05));
        assert_eq!(lambda_for_model("resnet"), Some(1e-4));
        assert_eq!(lambda_for_model("other"), None);
    }

    /// Same weights through an explicit pseudo-inverse.
    fn weights_via_pinv(set: &EmbeddingSet, lambda: f64) -> Array2<f64> {
        let data = set.vectors();
        let (n, l) = data.dim();
        let c = set.class_count();
        let mut m = Array2::<f64>::zeros((c, l));
        for class in 0..c {
            m.row_mut(class)
                .assign(&set.class_rows(class).mean_axis(Axis(0)).unwrap());
        }
        let mut second = data.t().dot(data) / n as f64;
        for i in 0..l {
            second[[i, i]] += lambda;
        }
        let (inv, _) = pinv_symmetric(second.view(), l as f64);
        m.dot(&inv) / c as f64
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn solve_agrees_with_pinv(seed in 0u64..10_000, l in 1usize..32, lambda in 1e-3f64..1.0) {
            let set = generate_synthetic(&SyntheticTaskSpec {
                class_count: 3,
                modes_per_class: 1,
                samples_per_mode: 40,
                dim: l,
                mode_separation: 1.0,
                within_mode_std: 0.5,
                seed,
            })
            .unwrap();
            let a = least_squares_weights(&set, lambda).unwrap().weights;
            let b = weights_via_pinv(&set, lambda);
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn order_invariant(seed in 0u64..10_000) {
            let set = generate_synthetic(&task(seed, 6, 2)).unwrap();
            let mut rows: Vec<usize> = (0..set.len()).collect();
            rows.reverse();
            rows.rotate_left(seed as usize % set.len());
            let shuffled = set.select(&rows).unwrap();
            let a = least_squares_weights(&set, 1e-4).unwrap().weights;
            let b = least_squares_weights(&shuffled, 1e-4).unwrap().weights;
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }
    }
}

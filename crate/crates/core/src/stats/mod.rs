//! Rank statistics for comparing configurations across evaluation instances:
//! average ranks, Friedman, Wilcoxon signed-rank, Holm, and CD diagrams.

mod svg;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{ImprintError, Result};
use crate::par;

pub use svg::{emit_cd_svg, render_svg};

/// Largest number of non-zero differences for which the exact Wilcoxon
/// distribution is used.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(ImprintError::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(ImprintError::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Per-class recall; `None` for classes absent from `truth`.
pub fn per_class_accuracy(predicted: &[usize], truth: &[usize], class_count: usize) -> Vec<Option<f64>> {
    let mut hits = vec![0usize; class_count];
    let mut totals = vec![0usize; class_count];
    for (&p, &t) in predicted.iter().zip(truth) {
        if t < class_count {
            totals[t] += 1;
            hits[t] += usize::from(p == t);
        }
    }
    hits.iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect()
}

/// Ascending average ranks (1-based). With `descending`, the largest value
/// gets rank 1. Equal values share the mean of their positions.
pub fn average_ranks(values: &[f64], descending: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of t³ - t over groups of tied values.
fn tie_term(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankMatrix {
    /// Configs × instances, rank 1 = best.
    pub ranks: Array2<f64>,
    pub config_names: Vec<String>,
    pub instance_names: Vec<String>,
}

impl RankMatrix {
    pub fn configs(&self) -> usize {
        self.ranks.nrows()
    }

    pub fn instances(&self) -> usize {
        self.ranks.ncols()
    }

    pub fn average_ranks(&self) -> Vec<f64> {
        self.ranks.rows().into_iter().map(|r| r.mean().unwrap_or(0.0)).collect()
    }

    pub fn with_names(mut self, configs: Vec<String>, instances: Vec<String>) -> Result<Self> {
        if configs.len() != self.configs() || instances.len() != self.instances() {
            return Err(ImprintError::InvalidArgument(
                "name count does not match the matrix".into(),
            ));
        }
        self.config_names = configs;
        self.instance_names = instances;
        Ok(self)
    }
}

/// Ranks each column (instance) of a configs × instances accuracy matrix.
pub fn rank_columns(accuracies: ArrayView2<'_, f64>) -> Result<RankMatrix> {
    let (k, n) = accuracies.dim();
    if k == 0 || n == 0 {
        return Err(ImprintError::InvalidArgument("empty accuracy matrix".into()));
    }
    if accuracies.iter().any(|v| v.is_nan()) {
        return Err(ImprintError::InvalidArgument("accuracy matrix contains NaN".into()));
    }
    let mut ranks = Array2::zeros((k, n));
    for (j, col) in accuracies.columns().into_iter().enumerate() {
        let r = average_ranks(&col.to_vec(), true);
        ranks.column_mut(j).assign(&ArrayView1::from(&r));
    }
    Ok(RankMatrix {
        ranks,
        config_names: (0..k).map(|i| format!("config{i}")).collect(),
        instance_names: (0..n).map(|j| format!("instance{j}")).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Friedman chi-square on a rank matrix, tie-corrected, with k - 1 degrees
/// of freedom.
pub fn friedman_test(ranks: &RankMatrix) -> Result<FriedmanResult> {
    let (k, n) = ranks.ranks.dim();
    if k < 3 || n < 2 {
        return Err(ImprintError::InvalidArgument(format!(
            "Friedman test needs >= 3 configs and >= 2 instances, got {k} x {n}"
        )));
    }
    friedman_unchecked(ranks)
}

fn friedman_unchecked(ranks: &RankMatrix) -> Result<FriedmanResult> {
    let (k, n) = ranks.ranks.dim();
    let (kf, nf) = (k as f64, n as f64);
    let mean_sq: f64 = ranks.average_ranks().iter().map(|r| r * r).sum();
    let raw = 12.0 * nf / (kf * (kf + 1.0)) * (mean_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    let ties: f64 = ranks.ranks.columns().into_iter().map(|c| tie_term(&c.to_vec())).sum();
    let correction = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
    if correction <= 0.0 {
        // Every instance ties every config.
        return Ok(FriedmanResult {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let statistic = (raw / correction).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| ImprintError::InvalidArgument(e.to_string()))?;
    Ok(FriedmanResult {
        statistic,
        p_value: chi.sf(statistic).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    /// Exact up to [`WILCOXON_EXACT_MAX_N`], normal approximation above.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences.
    pub statistic: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    let r = wilcoxon_with(a, b, WilcoxonMethod::Auto)?;
    if r.n < 5 {
        return Err(ImprintError::InvalidArgument(format!(
            "need at least 5 non-zero differences, got {}",
            r.n
        )));
    }
    Ok(r.p_value)
}

/// Wilcoxon signed-rank test with an explicit choice of null distribution.
/// No minimum sample size is enforced.
pub fn wilcoxon_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(ImprintError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(ImprintError::InvalidArgument("NaN in paired samples".into()));
    }
    if diffs.is_empty() {
        return Err(ImprintError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs, false);
    let statistic: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let n = diffs.len();
    let exact = match method {
        WilcoxonMethod::Auto => n <= WILCOXON_EXACT_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let p_value = if exact {
        exact_p(&ranks, statistic)
    } else {
        normal_p(&abs, statistic)
    };
    Ok(WilcoxonResult {
        statistic,
        n,
        p_value,
        exact,
    })
}

/// Exact null distribution of the positive rank sum: every sign pattern is
/// equally likely. Ranks are half-integers, so the DP runs on doubled ranks.
fn exact_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut dist = vec![0.0f64; total + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let p = dist[s] * 0.5;
            dist[s] = p;
            dist[s + r] += p;
        }
        reach += r;
    }
    let w = (statistic * 2.0).round() as usize;
    let lower: f64 = dist[..=w].iter().sum();
    let upper: f64 = dist[w..].iter().sum();
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
fn normal_p(abs_diffs: &[f64], statistic: f64) -> f64 {
    let n = abs_diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(abs_diffs) / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.sf(z)).min(1.0)
}

/// Holm step-down adjusted p-values, returned in input order.
pub fn holm_correct(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ImprintError::InvalidArgument(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (j, &i) in order.iter().enumerate() {
        running = running.max(((m - j) as f64 * p_values[i]).min(1.0));
        adjusted[i] = running;
    }
    Ok(adjusted)
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(ImprintError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(ImprintError::InvalidArgument(
            "correlation needs at least two points".into(),
        ));
    }
    let rx = average_ranks(x, false);
    let ry = average_ranks(y, false);
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ImprintError::InvalidArgument(
            "correlation of a constant sequence".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTest {
    pub a: usize,
    pub b: usize,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CDDiagram {
    pub config_names: Vec<String>,
    pub avg_ranks: Vec<f64>,
    /// Config indices, each clique sorted by average rank.
    pub cliques: Vec<Vec<usize>>,
    pub alpha: f64,
    /// Absent when there are only two configs.
    pub friedman: Option<FriedmanResult>,
    /// Set when the Friedman test did not reject; cliques then hold a single
    /// set with every config.
    pub friedman_not_rejected: bool,
    pub pairwise: Vec<PairwiseTest>,
}

impl CDDiagram {
    /// Config indices from best to worst average rank.
    pub fn rank_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.avg_ranks.len()).collect();
        order.sort_by(|&a, &b| self.avg_ranks[a].total_cmp(&self.avg_ranks[b]).then(a.cmp(&b)));
        order
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds a CD diagram from a configs × instances accuracy matrix.
///
/// Pairwise tests use the exact distribution for small samples regardless
/// of size, and a pair with no differing instance gets p = 1.
pub fn build_cd_diagram(accuracies: ArrayView2<'_, f64>, names: &[String], alpha: f64) -> Result<CDDiagram> {
    let (k, n) = accuracies.dim();
    if names.len() != k {
        return Err(ImprintError::DimensionMismatch {
            expected: k,
            actual: names.len(),
        });
    }
    if k < 2 || n < 2 {
        return Err(ImprintError::InvalidArgument(format!(
            "CD diagram needs >= 2 configs and >= 2 instances, got {k} x {n}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ImprintError::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let ranks = rank_columns(accuracies)?;
    let avg_ranks = ranks.average_ranks();
    let friedman = if k >= 3 { Some(friedman_test(&ranks)?) } else { None };
    let friedman_not_rejected = friedman.is_some_and(|f| f.p_value >= alpha);

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let raw = par::map_slice(&pairs, |&(a, b)| {
        let ra = accuracies.row(a).to_vec();
        let rb = accuracies.row(b).to_vec();
        match wilcoxon_with(&ra, &rb, WilcoxonMethod::Auto) {
            Ok(r) => Ok(r.p_value),
            Err(ImprintError::AllZeroDifferences) => Ok(1.0),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let adjusted = holm_correct(&raw)?;
    let pairwise: Vec<PairwiseTest> = pairs
        .iter()
        .zip(raw.iter().zip(&adjusted))
        .map(|(&(a, b), (&p_raw, &p_adjusted))| PairwiseTest {
            a,
            b,
            p_raw,
            p_adjusted,
            significant: p_adjusted < alpha,
        })
        .collect();

    let mut diagram = CDDiagram {
        config_names: names.to_vec(),
        avg_ranks,
        cliques: Vec::new(),
        alpha,
        friedman,
        friedman_not_rejected,
        pairwise,
    };
    let order = diagram.rank_order();
    diagram.cliques = if friedman_not_rejected {
        vec![order]
    } else {
        let mut significant = vec![vec![false; k]; k];
        for t in &diagram.pairwise {
            significant[t.a][t.b] = t.significant;
            significant[t.b][t.a] = t.significant;
        }
        contiguous_cliques(&order, &significant)
    };
    Ok(diagram)
}

/// Maximal runs of `order` with no significant pair inside.
fn contiguous_cliques(order: &[usize], significant: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let mut cliques = Vec::new();
    let mut prev_end = None;
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && (start..=end).all(|i| !significant[order[i]][order[end + 1]]) {
            end += 1;
        }
        // The run end never moves left, so a run is maximal iff it reaches
        // further than the previous one.
        if prev_end.is_none_or(|p| end > p) {
            cliques.push(order[start..=end].to_vec());
        }
        prev_end = Some(end);
    }
    cliques
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn rank_examples() {
        let r = rank_columns(array![[0.9], [0.8], [0.7]].view()).unwrap();
        assert_eq!(r.ranks.column(0).to_vec(), vec![1.0, 2.0, 3.0]);
        let r = rank_columns(array![[0.9], [0.9], [0.7]].view()).unwrap();
        assert_eq!(r.ranks.column(0).to_vec(), vec![1.5, 1.5, 3.0]);
        let r = rank_columns(array![[0.5], [0.5], [0.5], [0.5]].view()).unwrap();
        assert!(r.ranks.iter().all(|&v| v == 2.5));
        assert!(rank_columns(Array2::<f64>::zeros((0, 3)).view()).is_err());
        assert!(rank_columns(array![[f64::NAN]].view()).is_err());
    }

    #[test]
    fn friedman_consistent_ordering() {
        let acc = Array2::from_shape_fn((3, 10), |(i, _)| 0.9 - 0.1 * i as f64);
        let f = friedman_test(&rank_columns(acc.view()).unwrap()).unwrap();
        assert_abs_diff_eq!(f.statistic, 20.0, epsilon = 1e-12);
        assert!(f.p_value < 1e-4);
    }

    #[test]
    fn friedman_all_tied() {
        let acc = Array2::from_elem((4, 6), 0.5);
        let f = friedman_test(&rank_columns(acc.view()).unwrap()).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert_eq!(f.p_value, 1.0);
        assert!(friedman_test(&rank_columns(Array2::from_elem((2, 6), 0.5).view()).unwrap()).is_err());
    }

    #[test]
    fn wilcoxon_all_positive_five() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        assert_abs_diff_eq!(wilcoxon_signed_rank(&a, &b).unwrap(), 0.0625, epsilon = 1e-15);
        assert!(matches!(
            wilcoxon_signed_rank(&a, &a),
            Err(ImprintError::AllZeroDifferences)
        ));
        assert!(wilcoxon_signed_rank(&a[..4], &b[..4]).is_err());
    }

    #[test]
    fn exact_matches_enumeration() {
        let mut rng = crate::seed::rng_for(5, 0);
        for _ in 0..40 {
            let n = rng.random_range(5..=10);
            // Quantized values create ties in |d|.
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let v = rng.random_range(1..6) as f64;
                    if rng.random::<bool>() {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let zeros = vec![0.0; n];
            let got = wilcoxon_signed_rank(&d, &zeros).unwrap();
            let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
            let ranks = average_ranks(&abs, false);
            let w: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
            let (mut lo, mut hi) = (0u64, 0u64);
            for mask in 0u64..(1 << n) {
                let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
                lo += u64::from(s <= w + 1e-9);
                hi += u64::from(s >= w - 1e-9);
            }
            let want = (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn exact_and_normal_agree_at_moderate_n() {
        let mut rng = crate::seed::rng_for(8, 0);
        let d: Vec<f64> = (0..25)
            .map(|i| (i as f64 + 1.0) * if rng.random::<f64>() < 0.6 { 1.0 } else { -1.0 })
            .collect();
        let z = vec![0.0; 25];
        let exact = wilcoxon_with(&d, &z, WilcoxonMethod::Exact).unwrap().p_value;
        let approx = wilcoxon_with(&d, &z, WilcoxonMethod::Normal).unwrap().p_value;
        assert!((exact - approx).abs() < 0.01, "{exact} vs {approx}");
        let exact18 = wilcoxon_with(&d[..18], &z[..18], WilcoxonMethod::Exact)
            .unwrap()
            .p_value;
        let approx18 = wilcoxon_with(&d[..18], &z[..18], WilcoxonMethod::Normal)
            .unwrap()
            .p_value;
        assert!((exact18 - approx18).abs() < 0.01, "{exact18} vs {approx18}");
        assert!(!wilcoxon_with(&d, &z, WilcoxonMethod::Auto).unwrap().exact);
    }

    #[test]
    fn holm_examples() {
        let adj = holm_correct(&[0.01, 0.03, 0.04]).unwrap();
        assert_eq!(adj, vec![0.03, 0.06, 0.06]);
        assert_eq!(holm_correct(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(holm_correct(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(holm_correct(&[0.04, 0.01, 0.03]).unwrap(), vec![0.06, 0.03, 0.06]);
        assert!(holm_correct(&[1.5]).is_err());
        assert!(holm_correct(&[f64::NAN]).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cd_two_configs_one_dominant() {
        let acc = Array2::from_shape_fn((2, 48), |(i, j)| {
            0.5 + 0.001 * j as f64 + if i == 0 { 0.1 } else { 0.0 }
        });
        let names = vec!["good".to_string(), "bad".to_string()];
        let d = build_cd_diagram(acc.view(), &names, 0.05).unwrap();
        assert_eq!(d.cliques, vec![vec![0], vec![1]]);
        assert!(d.pairwise[0].p_raw < 1e-8);
        assert!(d.friedman.is_none());
    }

    #[test]
    fn cd_identical_configs_share_a_clique() {
        let row: Vec<f64> = (0..10).map(|j| 0.5 + 0.01 * j as f64).collect();
        let acc = Array2::from_shape_fn((2, 10), |(_, j)| row[j]);
        let names = vec!["a".to_string(), "b".to_string()];
        let d = build_cd_diagram(acc.view(), &names, 0.05).unwrap();
        assert_eq!(d.cliques, vec![vec![0, 1]]);
    }

    #[test]
    fn cd_non_rejection_flags_single_clique() {
        let mut rng = crate::seed::rng_for(3, 0);
        let acc = Array2::from_shape_fn((3, 6), |_| rng.random::<f64>());
        let names: Vec<String> = ["x", "y", "z"].map(String::from).to_vec();
        let d = build_cd_diagram(acc.view(), &names, 1e-9).unwrap();
        assert!(d.friedman_not_rejected);
        assert_eq!(d.cliques.len(), 1);
        assert_eq!(d.cliques[0].len(), 3);
    }

    #[test]
    fn contiguous_cliques_overlap() {
        // 0-1 and 1-2 indistinguishable, 0-2 different.
        let mut sig = vec![vec![false; 3]; 3];
        sig[0][2] = true;
        sig[2][0] = true;
        assert_eq!(contiguous_cliques(&[0, 1, 2], &sig), vec![vec![0, 1], vec![1, 2]]);
        let none = vec![vec![false; 3]; 3];
        assert_eq!(contiguous_cliques(&[2, 0, 1], &none), vec![vec![2, 0, 1]]);
    }

    proptest! {
        #[test]
        fn columns_sum_to_triangular(acc in proptest::collection::vec(0u8..5, 12)) {
            let m = Array2::from_shape_fn((4, 3), |(i, j)| acc[i * 3 + j] as f64);
            let r = rank_columns(m.view()).unwrap();
            for c in r.ranks.columns() {
                prop_assert!((c.sum() - 10.0).abs() < 1e-12);
            }
        }

        #[test]
        fn ranks_invariant_to_monotone_maps(acc in proptest::collection::vec(0.0f64..1.0, 12)) {
            let m = Array2::from_shape_vec((4, 3), acc).unwrap();
            let t = m.mapv(|v| (3.0 * v).exp() + 7.0);
            prop_assert_eq!(rank_columns(m.view()).unwrap(), rank_columns(t.view()).unwrap());
        }

        #[test]
        fn friedman_invariant_to_instance_order(acc in proptest::collection::vec(0u8..4, 20), shift in 0usize..5) {
            let m = Array2::from_shape_fn((4, 5), |(i, j)| acc[i * 5 + j] as f64);
            let p = Array2::from_shape_fn((4, 5), |(i, j)| m[[i, (j + shift) % 5]]);
            let a = friedman_test(&rank_columns(m.view()).unwrap()).unwrap();
            let b = friedman_test(&rank_columns(p.view()).unwrap()).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-10);
        }

        #[test]
        fn holm_dominates_raw(ps in proptest::collection::vec(0.0f64..=1.0, 1..12)) {
            let adj = holm_correct(&ps).unwrap();
            for i in 0..ps.len() {
                prop_assert!(adj[i] >= ps[i]);
                for j in 0..ps.len() {
                    if ps[i] < ps[j] {
                        prop_assert!(adj[i] <= adj[j]);
                    }
                }
            }
        }

        #[test]
        fn wilcoxon_symmetric(d in proptest::collection::vec(-5i32..5, 5..15)) {
            let a: Vec<f64> = d.iter().map(|&v| v as f64).collect();
            let b = vec![0.0; a.len()];
            match (wilcoxon_with(&a, &b, WilcoxonMethod::Exact), wilcoxon_with(&b, &a, WilcoxonMethod::Exact)) {
                (Ok(x), Ok(y)) => prop_assert!((x.p_value - y.p_value).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }
    }
}

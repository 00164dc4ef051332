//! The three normalization modes and the slots they may occupy.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{ImprintError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    None,
    L2,
    /// Rank-wise mapping onto previously imprinted weights. Post slot only.
    Quantile,
}

/// Where in the pipeline a [`NormMode`] is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormSlot {
    /// Embeddings before proxy generation.
    Pre,
    /// Generated proxies.
    Post,
    /// Query embeddings at inference.
    Inf,
}

impl NormMode {
    pub fn check_slot(self, slot: NormSlot) -> Result<()> {
        if self == NormMode::Quantile && slot != NormSlot::Post {
            return Err(ImprintError::InvalidConfig(format!(
                "quantile normalization is only valid for generated weights, not the {slot:?} slot"
            )));
        }
        Ok(())
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            NormMode::None => 0,
            NormMode::L2 => 1,
            NormMode::Quantile => 2,
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::None => "none",
            NormMode::L2 => "l2",
            NormMode::Quantile => "quantile",
        })
    }
}

impl FromStr for NormMode {
    type Err = ImprintError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormMode::None),
            "l2" => Ok(NormMode::L2),
            "quantile" => Ok(NormMode::Quantile),
            other => Err(ImprintError::InvalidConfig(format!("unknown norm mode `{other}`"))),
        }
    }
}

/// Divides `v` by its Euclidean length.
pub fn l2_normalize(v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    // Rescale by the max magnitude first so tiny or huge inputs don't under/overflow.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(ImprintError::ZeroVector);
    }
    let scaled = v.mapv(|x| x / scale);
    let norm = scaled.dot(&scaled).sqrt();
    Ok(scaled.mapv(|x| x / norm))
}

/// L2-normalizes every row.
pub fn l2_normalize_rows(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let n = l2_normalize(row.view())?;
        row.assign(&n);
    }
    Ok(out)
}

/// Applies a non-quantile mode to every row.
pub fn apply_rows(mode: NormMode, m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    match mode {
        NormMode::None => Ok(m.to_owned()),
        NormMode::L2 => l2_normalize_rows(m),
        NormMode::Quantile => Err(ImprintError::InvalidConfig(
            "quantile normalization needs a reference distribution".into(),
        )),
    }
}

/// Applies a non-quantile mode to a single vector.
pub fn apply_vector(mode: NormMode, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    match mode {
        NormMode::None => Ok(v.to_owned()),
        NormMode::L2 => l2_normalize(v),
        NormMode::Quantile => Err(ImprintError::InvalidConfig(
            "quantile normalization is not defined for query vectors".into(),
        )),
    }
}

/// Empirical quantile of sorted `reference` at probability `q`, using
/// mid-point plotting positions: order statistic `j` (0-based) sits at
/// `(j + 0.5) / r`. Values between positions are interpolated linearly;
/// outside the first/last position the extreme value is returned.
fn midpoint_quantile(sorted: &[f64], q: f64) -> f64 {
    let r = sorted.len();
    let pos = q * r as f64 - 0.5;
    if pos <= 0.0 {
        return sorted[0];
    }
    if pos >= (r - 1) as f64 {
        return sorted[r - 1];
    }
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Maps each proxy row rank-wise onto the reference distribution: the i-th
/// smallest entry (1-based, ties by position) becomes the reference quantile
/// at `(i - 0.5) / l`. An empty reference leaves the weights unchanged.
pub fn quantile_normalize(new_weights: ArrayView2<'_, f64>, reference: &[f64]) -> Array2<f64> {
    let mut out = new_weights.to_owned();
    if reference.is_empty() {
        return out;
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l = out.ncols();
    for mut row in out.rows_mut() {
        let mut order: Vec<usize> = (0..l).collect();
        // Stable sort keeps equal entries in index order.
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let mapped: Vec<f64> = (0..l)
            .map(|i| midpoint_quantile(&sorted, (i as f64 + 0.5) / l as f64))
            .collect();
        for (rank, &col) in order.iter().enumerate() {
            row[col] = mapped[rank];
        }
    }
    out
}

/// Pool of every scalar in previously imprinted proxies; the reference for
/// [`quantile_normalize`]. Classes must be pushed in class order.
#[derive(Debug, Default, Clone)]
pub struct QuantileReference {
    values: Vec<f64>,
}

impl QuantileReference {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Normalizes one class's proxies against the pool, then adds the result to it.
    pub fn normalize_and_extend(&mut self, proxies: ArrayView2<'_, f64>) -> Array2<f64> {
        let out = quantile_normalize(proxies, &self.values);
        self.values.extend(out.iter().copied());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        let v = l2_normalize(array![3.0, 4.0].view()).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unit_vector_unchanged() {
        let e = array![0.0, 1.0, 0.0];
        assert_eq!(l2_normalize(e.view()).unwrap(), e);
    }

    #[test]
    fn zero_vector_errors() {
        assert!(matches!(
            l2_normalize(array![0.0, 0.0].view()),
            Err(ImprintError::ZeroVector)
        ));
    }

    #[test]
    fn quantile_slot_rules() {
        assert!(NormMode::Quantile.check_slot(NormSlot::Post).is_ok());
        assert!(NormMode::Quantile.check_slot(NormSlot::Pre).is_err());
        assert!(NormMode::Quantile.check_slot(NormSlot::Inf).is_err());
        assert!(NormMode::L2.check_slot(NormSlot::Inf).is_ok());
    }

    #[test]
    fn quantile_empty_reference_is_identity() {
        let w = array![[5.0, 1.0, 9.0], [-2.0, 0.0, 3.0]];
        assert_eq!(quantile_normalize(w.view(), &[]), w);
    }

    #[test]
    fn quantile_two_point_reference() {
        // Plotting positions 1/6, 3/6, 5/6 against {0, 10} with midpoints at
        // 1/4 and 3/4: the outer two clamp, the middle one interpolates to 5.
        let w = array![[5.0, 1.0, 9.0]];
        let out = quantile_normalize(w.view(), &[10.0, 0.0]);
        assert_eq!(out, array![[5.0, 0.0, 10.0]]);
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        // Reference {0, 4, 8, 12}: positions (j+0.5)/4. q = 1/2 lands halfway
        // between 4 and 8.
        let out = quantile_normalize(array![[1.0, 0.0]].view(), &[0.0, 4.0, 8.0, 12.0]);
        // l=2: q = 0.25 -> pos 0.5 -> 2.0; q = 0.75 -> pos 2.5 -> 10.0
        assert_eq!(out, array![[10.0, 2.0]]);
    }

    #[test]
    fn quantile_self_reference_keeps_multiset() {
        let w = array![[0.3, -1.2, 4.0, 0.3, 2.2]];
        let out = quantile_normalize(w.view(), w.as_slice().unwrap());
        assert_eq!(out, w);
    }

    #[test]
    fn reference_pool_grows() {
        let mut r = QuantileReference::new();
        let a = r.normalize_and_extend(array![[1.0, 2.0]].view());
        assert_eq!(a, array![[1.0, 2.0]]);
        let b = r.normalize_and_extend(array![[9.0, -9.0]].view());
        assert_eq!(b, array![[2.0, 1.0]]);
        assert_eq!(r.values(), &[1.0, 2.0, 2.0, 1.0]);
    }

    proptest! {
        #[test]
        fn l2_idempotent_and_scale_invariant(
            v in prop::collection::vec(-1e3f64..1e3, 1..16),
            alpha in 1e-3f64..1e3,
        ) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-9));
            let v = Array1::from(v);
            let once = l2_normalize(v.view()).unwrap();
            prop_assert!((once.dot(&once).sqrt() - 1.0).abs() < 1e-12);
            let twice = l2_normalize(once.view()).unwrap();
            let scaled = l2_normalize(v.mapv(|x| x * alpha).view()).unwrap();
            for i in 0..v.len() {
                prop_assert!((once[i] - twice[i]).abs() < 1e-12);
                prop_assert!((once[i] - scaled[i]).abs() < 1e-12);
            }
        }
    }
}

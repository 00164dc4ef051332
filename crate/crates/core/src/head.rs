//! The imprinted classifier head: stacked per-class proxies, the inference
//! normalization, and the aggregation rule.
//!
//! Head files share the embedding file's layout family (little-endian):
//! - magic `b"IMPH"`, `u32` version (= 1)
//! - `u32` proxy count P, `u32` dimension l, `u32` class count C
//! - `u8` provenance (0 = imprint, 1 = oracle), `u8` NORM_inf code,
//!   `u8` aggregation code (0 = max, 1 = m-nn), `u8` reserved, `u32` m
//! - `u32` byte length of a UTF-8 JSON config echo, followed by the echo
//! - P × `u32` owning class, then P × l × `f64` proxy values, row-major

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{read_u32, EmbeddingSet};
use crate::error::{ImprintError, Result};
use crate::normalize::{apply_rows, apply_vector, NormMode, QuantileReference};
use crate::par;
use crate::runner::ImprintConfig;
use crate::seed::mix;

pub const HEAD_MAGIC: &[u8; 4] = b"IMPH";
pub const HEAD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggMode {
    /// Class of the proxy with the largest inner product.
    Max,
    /// Inverse-distance weighted vote among the `m` nearest proxies.
    MNn(usize),
}

impl AggMode {
    pub fn validate(&self) -> Result<()> {
        if *self == AggMode::MNn(0) {
            return Err(ImprintError::InvalidConfig("m-nn needs m >= 1".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggMode::Max => "max",
            AggMode::MNn(_) => "m-nn",
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            AggMode::Max => 1,
            AggMode::MNn(m) => m,
        }
    }

    pub fn from_name(name: &str, m: usize) -> Result<Self> {
        let agg = match name {
            "max" => AggMode::Max,
            "m-nn" => AggMode::MNn(m),
            other => return Err(ImprintError::InvalidConfig(format!("unknown aggregation `{other}`"))),
        };
        agg.validate()?;
        Ok(agg)
    }
}

impl fmt::Display for AggMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggMode::Max => f.write_str("max"),
            AggMode::MNn(m) => write!(f, "{m}-nn"),
        }
    }
}

impl FromStr for AggMode {
    type Err = ImprintError;

    /// Accepts `max`, `m-nn` (m = 1) or `<m>-nn`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(m) = s.strip_suffix("-nn").and_then(|p| p.parse::<usize>().ok()) {
            return AggMode::from_name("m-nn", m);
        }
        AggMode::from_name(s, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Imprint,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    proxies: Array2<f64>,
    proxy_class: Vec<usize>,
    class_count: usize,
    norm_inf: NormMode,
    agg: AggMode,
    provenance: Provenance,
    /// JSON description of how the head was built.
    echo: String,
}

impl ClassifierHead {
    pub fn new(
        proxies: Array2<f64>,
        proxy_class: Vec<usize>,
        class_count: usize,
        norm_inf: NormMode,
        agg: AggMode,
    ) -> Result<Self> {
        if proxies.nrows() != proxy_class.len() {
            return Err(ImprintError::DimensionMismatch {
                expected: proxies.nrows(),
                actual: proxy_class.len(),
            });
        }
        norm_inf.check_slot(crate::normalize::NormSlot::Inf)?;
        agg.validate()?;
        let mut owned = vec![false; class_count];
        for &c in &proxy_class {
            if c >= class_count {
                return Err(ImprintError::InvalidArgument(format!(
                    "proxy class {c} out of range for {class_count} classes"
                )));
            }
            owned[c] = true;
        }
        if let Some(class) = owned.iter().position(|o| !o) {
            return Err(ImprintError::EmptyClass { class });
        }
        Ok(Self {
            proxies,
            proxy_class,
            class_count,
            norm_inf,
            agg,
            provenance: Provenance::Imprint,
            echo: "{}".into(),
        })
    }

    pub(crate) fn with_meta(mut self, provenance: Provenance, echo: String) -> Self {
        self.provenance = provenance;
        self.echo = echo;
        self
    }

    pub fn proxies(&self) -> &Array2<f64> {
        &self.proxies
    }

    pub fn proxy_class(&self) -> &[usize] {
        &self.proxy_class
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.proxies.ncols()
    }

    pub fn norm_inf(&self) -> NormMode {
        self.norm_inf
    }

    pub fn agg(&self) -> AggMode {
        self.agg
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn echo(&self) -> &str {
        &self.echo
    }

    /// Same head, different aggregation.
    pub fn with_agg(mut self, agg: AggMode) -> Result<Self> {
        agg.validate()?;
        self.agg = agg;
        Ok(self)
    }

    fn prepare_query(&self, query: ArrayView1<'_, f64>) -> Result<ndarray::Array1<f64>> {
        if query.len() != self.dim() {
            return Err(ImprintError::DimensionMismatch {
                expected: self.dim(),
                actual: query.len(),
            });
        }
        apply_vector(self.norm_inf, query)
    }

    pub fn predict(&self, query: ArrayView1<'_, f64>) -> Result<usize> {
        match self.agg {
            AggMode::Max => predict_max(self, query),
            AggMode::MNn(m) => predict_m_nn(self, query, m),
        }
    }

    /// Predictions for every row of `queries`, in row order.
    pub fn predict_all(&self, queries: &EmbeddingSet) -> Result<Vec<usize>> {
        if queries.dim() != self.dim() {
            return Err(ImprintError::DimensionMismatch {
                expected: self.dim(),
                actual: queries.dim(),
            });
        }
        par::map_range(queries.len(), |i| self.predict(queries.row(i)))
            .into_iter()
            .collect()
    }

    pub fn accuracy(&self, test: &EmbeddingSet) -> Result<f64> {
        let preds = self.predict_all(test)?;
        let correct = preds.iter().zip(test.labels()).filter(|(p, l)| p == l).count();
        Ok(correct as f64 / test.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| ImprintError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| ImprintError::io(path, e))?;
        w.flush().map_err(|e| ImprintError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ImprintError::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(HEAD_MAGIC)?;
        w.write_all(&HEAD_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.proxies.nrows() as u32).to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.class_count as u32).to_le_bytes())?;
        let provenance = match self.provenance {
            Provenance::Imprint => 0u8,
            Provenance::Oracle => 1,
        };
        let agg = match self.agg {
            AggMode::Max => 0u8,
            AggMode::MNn(_) => 1,
        };
        w.write_all(&[provenance, self.norm_inf.code(), agg, 0])?;
        w.write_all(&(self.agg.m() as u32).to_le_bytes())?;
        w.write_all(&(self.echo.len() as u32).to_le_bytes())?;
        w.write_all(self.echo.as_bytes())?;
        for &c in &self.proxy_class {
            w.write_all(&(c as u32).to_le_bytes())?;
        }
        for v in self.proxies.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| ImprintError::Format("missing magic bytes".into()))?;
        if &magic != HEAD_MAGIC {
            return Err(ImprintError::Format(format!("bad magic {magic:?}, expected \"IMPH\"")));
        }
        let version = read_u32(&mut r)?;
        if version != HEAD_FORMAT_VERSION {
            return Err(ImprintError::Format(format!("unsupported head version {version}")));
        }
        let p = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let classes = read_u32(&mut r)? as usize;
        let mut flags = [0u8; 4];
        r.read_exact(&mut flags)
            .map_err(|_| ImprintError::Format("truncated head flags".into()))?;
        let m = read_u32(&mut r)? as usize;
        let echo_len = read_u32(&mut r)? as usize;
        let mut echo = vec![0u8; echo_len];
        r.read_exact(&mut echo)
            .map_err(|_| ImprintError::Format("truncated config echo".into()))?;
        let echo = String::from_utf8(echo).map_err(|_| ImprintError::Format("config echo is not UTF-8".into()))?;

        let provenance = match flags[0] {
            0 => Provenance::Imprint,
            1 => Provenance::Oracle,
            x => return Err(ImprintError::Format(format!("unknown provenance code {x}"))),
        };
        let norm_inf = match flags[1] {
            0 => NormMode::None,
            1 => NormMode::L2,
            x => return Err(ImprintError::Format(format!("invalid NORM_inf code {x}"))),
        };
        let agg = match flags[2] {
            0 => AggMode::Max,
            1 => AggMode::MNn(m),
            x => return Err(ImprintError::Format(format!("unknown aggregation code {x}"))),
        };

        let mut class_bytes = vec![0u8; p * 4];
        r.read_exact(&mut class_bytes)
            .map_err(|_| ImprintError::Format(format!("expected {p} proxy classes")))?;
        let proxy_class = class_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let mut value_bytes = vec![0u8; p * dim * 8];
        r.read_exact(&mut value_bytes)
            .map_err(|_| ImprintError::Format(format!("expected {} f64 values", p * dim)))?;
        let values = value_bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let proxies = Array2::from_shape_vec((p, dim), values).map_err(|e| ImprintError::Format(e.to_string()))?;
        Ok(Self::new(proxies, proxy_class, classes, norm_inf, agg)?.with_meta(provenance, echo))
    }
}

/// Builds a head class by class (ascending id): NORM_pre on the class's
/// embeddings, the generation strategy, then NORM_post.
///
/// Generation runs in parallel across classes. Quantile NORM_post is then
/// applied sequentially in class order, since each class is mapped onto the
/// pool of all earlier classes' proxies.
pub fn imprint(train: &EmbeddingSet, config: &ImprintConfig) -> Result<ClassifierHead> {
    config.validate()?;
    let counts = train.per_class_counts();
    let need = config.gen.min_samples();
    if let Some((class, &available)) = counts.iter().enumerate().find(|(_, &c)| c < need) {
        return Err(ImprintError::NotEnoughSamples {
            class,
            available,
            requested: need,
        });
    }

    let generated: Vec<Result<Array2<f64>>> = par::map_range(train.class_count(), |class| {
        let rows = train.class_rows(class);
        let rows = apply_rows(config.norm_pre, rows.view())?;
        config.gen.generate(rows.view(), mix(config.seed, class as u64))
    });

    let mut reference = QuantileReference::new();
    let mut blocks = Vec::with_capacity(generated.len());
    let mut proxy_class = Vec::new();
    for (class, proxies) in generated.into_iter().enumerate() {
        let proxies = proxies?;
        let proxies = match config.norm_post {
            NormMode::Quantile => reference.normalize_and_extend(proxies.view()),
            mode => apply_rows(mode, proxies.view())?,
        };
        proxy_class.extend(std::iter::repeat_n(class, proxies.nrows()));
        blocks.push(proxies);
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let stacked = ndarray::concatenate(Axis(0), &views).map_err(|e| ImprintError::Format(e.to_string()))?;
    let echo = serde_json::to_string(config)?;
    Ok(
        ClassifierHead::new(stacked, proxy_class, train.class_count(), config.norm_inf, config.agg)?
            .with_meta(Provenance::Imprint, echo),
    )
}

/// Class of the proxy with the largest inner product with the (NORM_inf
/// normalized) query. Exact ties go to the lower class id.
pub fn predict_max(head: &ClassifierHead, query: ArrayView1<'_, f64>) -> Result<usize> {
    let q = head.prepare_query(query)?;
    let mut best: Option<(f64, usize)> = None;
    for (row, &class) in head.proxies.rows().into_iter().zip(&head.proxy_class) {
        let score = row.dot(&q);
        let better = match best {
            None => true,
            Some((s, c)) => score > s || (score == s && class < c),
        };
        if better {
            best = Some((score, class));
        }
    }
    Ok(best.expect("head owns at least one proxy").1)
}

/// Inverse-distance weighted vote among the `m` proxies nearest to the
/// (NORM_inf normalized) query. A proxy at distance zero wins outright.
pub fn predict_m_nn(head: &ClassifierHead, query: ArrayView1<'_, f64>, m: usize) -> Result<usize> {
    let p = head.proxies.nrows();
    if m == 0 || m > p {
        return Err(ImprintError::InvalidArgument(format!("m = {m} must lie in 1..={p}")));
    }
    let q = head.prepare_query(query)?;
    let mut dists: Vec<(f64, usize, usize)> = head
        .proxies
        .rows()
        .into_iter()
        .zip(&head.proxy_class)
        .enumerate()
        .map(|(i, (row, &class))| {
            let d = row
                .iter()
                .zip(q.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (d, class, i)
        })
        .collect();
    let by_distance =
        |a: &(f64, usize, usize), b: &(f64, usize, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2));
    if m < p {
        dists.select_nth_unstable_by(m - 1, by_distance);
        dists.truncate(m);
    }
    dists.sort_by(by_distance);

    if dists[0].0 == 0.0 {
        return Ok(dists[0].1);
    }
    let mut votes = vec![0.0; head.class_count];
    for &(d, class, _) in &dists {
        votes[class] += 1.0 / d;
    }
    let mut winner = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[winner] {
            winner = c;
        }
    }
    Ok(winner)
}

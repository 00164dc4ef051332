//! Labeled embedding sets and everything that reads or writes them.
//!
//! Binary layout (little-endian):
//! - magic `b"IMPR"`
//! - `u32` version (= 1), `u32` row count N, `u32` dimension l, `u32` class count C
//! - N × `u32` labels
//! - N × l × `f32` values, row-major
//!
//! CSV layout: header `label,x0,...,x{l-1}`, one row per embedding.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ImprintError, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"IMPR";
pub const EMBEDDING_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Binary,
    Csv,
}

impl FileFormat {
    /// Guesses the format from the file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

/// A validated matrix of embeddings with contiguous class labels `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
}

impl EmbeddingSet {
    /// Builds a set from already-contiguous labels. Every id in `0..C` must
    /// occur, where `C = max(label) + 1`.
    pub fn new(vectors: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if vectors.nrows() != labels.len() {
            return Err(ImprintError::DimensionMismatch {
                expected: vectors.nrows(),
                actual: labels.len(),
            });
        }
        if labels.is_empty() || vectors.ncols() == 0 {
            return Err(ImprintError::InvalidArgument(
                "embedding set must have at least one row and one column".into(),
            ));
        }
        for ((row, col), v) in vectors.indexed_iter() {
            if !v.is_finite() {
                return Err(ImprintError::NonFinite { row, col });
            }
        }
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; class_count];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(class) = seen.iter().position(|s| !s) {
            return Err(ImprintError::EmptyClass { class });
        }
        Ok(Self {
            vectors,
            labels,
            class_count,
        })
    }

    /// Builds a set from arbitrary integer ids, re-indexing them to `0..C`
    /// in ascending order of the original id.
    pub fn from_raw_labels(vectors: Array2<f64>, raw: &[i64]) -> Result<Self> {
        let (labels, _) = reindex(raw);
        Self::new(vectors, labels)
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn per_class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices of each class, in row order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            idx[l].push(i);
        }
        idx
    }

    /// The rows belonging to `class`, in row order.
    pub fn class_rows(&self, class: usize) -> Array2<f64> {
        let idx: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        self.vectors.select(Axis(0), &idx)
    }

    /// Subset of rows in the given order; labels are re-indexed if classes drop out.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let vectors = self.vectors.select(Axis(0), rows);
        let raw: Vec<i64> = rows.iter().map(|&r| self.labels[r] as i64).collect();
        Self::from_raw_labels(vectors, &raw)
    }

    pub fn is_balanced(&self) -> bool {
        let counts = self.per_class_counts();
        counts.windows(2).all(|w| w[0] == w[1])
    }
}

/// Maps arbitrary ids onto `0..C` preserving their sort order.
fn reindex(raw: &[i64]) -> (Vec<usize>, Vec<i64>) {
    let mut map = BTreeMap::new();
    for &r in raw {
        map.entry(r).or_insert(0usize);
    }
    let originals: Vec<i64> = map.keys().copied().collect();
    for (new, v) in map.values_mut().enumerate() {
        *v = new;
    }
    (raw.iter().map(|r| map[r]).collect(), originals)
}

pub fn load_embeddings(path: impl AsRef<Path>, format: FileFormat) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    match format {
        FileFormat::Binary => {
            let file = File::open(path).map_err(|e| ImprintError::io(path, e))?;
            read_binary(BufReader::new(file))
        }
        FileFormat::Csv => {
            let file = File::open(path).map_err(|e| ImprintError::io(path, e))?;
            read_csv(BufReader::new(file))
        }
    }
}

pub fn save_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| ImprintError::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        FileFormat::Binary => write_binary(set, &mut w).map_err(|e| ImprintError::io(path, e))?,
        FileFormat::Csv => write_csv(set, &mut w)?,
    }
    w.flush().map_err(|e| ImprintError::io(path, e))
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| ImprintError::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_binary(mut r: impl Read) -> Result<EmbeddingSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| ImprintError::Format("missing magic bytes".into()))?;
    if &magic != EMBEDDING_MAGIC {
        return Err(ImprintError::Format(format!("bad magic {magic:?}, expected \"IMPR\"")));
    }
    let version = read_u32(&mut r)?;
    if version != EMBEDDING_FORMAT_VERSION {
        return Err(ImprintError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    let classes = read_u32(&mut r)? as usize;
    if n == 0 || dim == 0 || classes == 0 {
        return Err(ImprintError::Format(format!(
            "header declares N={n}, l={dim}, C={classes}; all must be positive"
        )));
    }

    let mut label_bytes = vec![0u8; n * 4];
    r.read_exact(&mut label_bytes)
        .map_err(|_| ImprintError::Format(format!("expected {n} labels")))?;
    let raw: Vec<i64> = label_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as i64)
        .collect();

    let mut value_bytes = vec![0u8; n * dim * 4];
    r.read_exact(&mut value_bytes)
        .map_err(|_| ImprintError::Format(format!("expected {} f32 values", n * dim)))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| ImprintError::Format(e.to_string()))? != 0 {
        return Err(ImprintError::Format("trailing bytes after payload".into()));
    }
    let values: Vec<f64> = value_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let vectors = Array2::from_shape_vec((n, dim), values).map_err(|e| ImprintError::Format(e.to_string()))?;

    let distinct = reindex(&raw).1.len();
    if distinct < classes {
        // Header promises more classes than the labels deliver.
        return Err(ImprintError::EmptyClass { class: distinct });
    }
    if distinct > classes {
        return Err(ImprintError::Format(format!(
            "header declares C={classes} but labels contain {distinct} distinct ids"
        )));
    }
    EmbeddingSet::from_raw_labels(vectors, &raw)
}

pub fn write_binary(set: &EmbeddingSet, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(EMBEDDING_MAGIC)?;
    w.write_all(&EMBEDDING_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(set.len() as u32).to_le_bytes())?;
    w.write_all(&(set.dim() as u32).to_le_bytes())?;
    w.write_all(&(set.class_count() as u32).to_le_bytes())?;
    for &l in set.labels() {
        w.write_all(&(l as u32).to_le_bytes())?;
    }
    for v in set.vectors().iter() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<EmbeddingSet> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || &headers[0] != "label" {
        return Err(ImprintError::Format("csv header must start with `label`".into()));
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(ImprintError::Format("csv has no embedding columns".into()));
    }
    for (j, h) in headers.iter().skip(1).enumerate() {
        if h != format!("x{j}") {
            return Err(ImprintError::Format(format!(
                "csv column {} should be `x{j}`, found `{h}`",
                j + 1
            )));
        }
    }

    let mut raw = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != dim + 1 {
            return Err(ImprintError::DimensionMismatch {
                expected: dim + 1,
                actual: record.len(),
            });
        }
        let label: i64 = record[0]
            .trim()
            .parse()
            .map_err(|_| ImprintError::Format(format!("row {row}: bad label `{}`", &record[0])))?;
        raw.push(label);
        for (col, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| ImprintError::Format(format!("row {row}: bad value `{field}`")))?;
            if !v.is_finite() {
                return Err(ImprintError::NonFinite { row, col });
            }
            values.push(v);
        }
    }
    if raw.is_empty() {
        return Err(ImprintError::Format("csv contains no rows".into()));
    }
    let vectors = Array2::from_shape_vec((raw.len(), dim), values).map_err(|e| ImprintError::Format(e.to_string()))?;
    EmbeddingSet::from_raw_labels(vectors, &raw)
}

pub fn write_csv(set: &EmbeddingSet, w: &mut impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec!["label".to_string()];
    header.extend((0..set.dim()).map(|j| format!("x{j}")));
    writer.write_record(&header)?;
    for (i, &label) in set.labels().iter().enumerate() {
        let mut rec = vec![label.to_string()];
        rec.extend(set.row(i).iter().map(|v| v.to_string()));
        writer.write_record(&rec)?;
    }
    writer.flush().map_err(|e| ImprintError::Format(e.to_string()))?;
    Ok(())
}

/// Keeps exactly `n` rows per class, drawn uniformly without replacement.
///
/// Output rows are grouped by class in ascending order; within a class they
/// appear in draw order.
pub fn few_shot_sample(set: &EmbeddingSet, n: usize, seed: u64) -> Result<EmbeddingSet> {
    if n == 0 {
        return Err(ImprintError::InvalidArgument("few-shot n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n * set.class_count());
    for (class, idx) in set.class_indices().into_iter().enumerate() {
        if idx.len() < n {
            return Err(ImprintError::NotEnoughSamples {
                class,
                available: idx.len(),
                requested: n,
            });
        }
        rows.extend(sample(&mut rng, idx.len(), n).into_iter().map(|i| idx[i]));
    }
    set.select(&rows)
}

/// Merges consecutive groups of `d` classes into one label (`new = old / d`).
/// Classes past the last full group are dropped.
pub fn remap_labels(set: &EmbeddingSet, d: usize) -> Result<EmbeddingSet> {
    if d == 0 || d > set.class_count() {
        return Err(ImprintError::InvalidArgument(format!(
            "group size d={d} must lie in 1..={}",
            set.class_count()
        )));
    }
    let kept = (set.class_count() / d) * d;
    let rows: Vec<usize> = (0..set.len()).filter(|&i| set.labels()[i] < kept).collect();
    let vectors = set.vectors().select(Axis(0), &rows);
    let labels = rows.iter().map(|&i| set.labels()[i] / d).collect();
    EmbeddingSet::new(vectors, labels)
}

/// Parameters of a synthetic multi-modal classification task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub class_count: usize,
    pub modes_per_class: usize,
    pub samples_per_mode: usize,
    pub dim: usize,
    pub mode_separation: f64,
    pub within_mode_std: f64,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ImprintError::InvalidConfig(m.to_string()));
        if self.class_count == 0 {
            return bad("class_count must be positive");
        }
        if self.modes_per_class == 0 {
            return bad("modes_per_class must be at least 1");
        }
        if self.samples_per_mode == 0 {
            return bad("samples_per_mode must be positive");
        }
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(self.mode_separation > 0.0 && self.mode_separation.is_finite()) {
            return bad("mode_separation must be positive");
        }
        if !(self.within_mode_std > 0.0 && self.within_mode_std.is_finite()) {
            return bad("within_mode_std must be positive");
        }
        Ok(())
    }
}

const CENTER_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mode_centers(spec: &SyntheticTaskSpec) -> Array2<f64> {
    let modes = spec.class_count * spec.modes_per_class;
    let mut rng = stream_rng(spec.seed, CENTER_STREAM);
    let mut centers = Array2::<f64>::zeros((modes, spec.dim));
    for mut c in centers.rows_mut() {
        loop {
            for v in c.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = c.dot(&c).sqrt();
            if norm > 1e-12 {
                c.mapv_inplace(|v| v / norm * spec.mode_separation);
                break;
            }
        }
    }
    centers
}

fn sample_around(
    spec: &SyntheticTaskSpec,
    centers: ArrayView2<'_, f64>,
    per_mode: usize,
    rng: &mut impl Rng,
) -> Result<EmbeddingSet> {
    let d = spec.modes_per_class;
    let rows = spec.class_count * d * per_mode;
    let mut vectors = Array2::zeros((rows, spec.dim));
    let mut labels = Vec::with_capacity(rows);
    let mut r = 0;
    for class in 0..spec.class_count {
        for mode in 0..d {
            let center = centers.row(class * d + mode);
            for _ in 0..per_mode {
                for (j, v) in vectors.row_mut(r).iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = center[j] + spec.within_mode_std * z;
                }
                labels.push(class);
                r += 1;
            }
        }
    }
    EmbeddingSet::new(vectors, labels)
}

/// Draws `d` mode centers per class uniformly on the sphere of radius
/// `mode_separation`, then `samples_per_mode` isotropic normal samples around
/// each. Rows are ordered by class, then mode.
pub fn generate_synthetic(spec: &SyntheticTaskSpec) -> Result<EmbeddingSet> {
    spec.validate()?;
    let centers = mode_centers(spec);
    let mut rng = stream_rng(spec.seed, TRAIN_STREAM);
    sample_around(spec, centers.view(), spec.samples_per_mode, &mut rng)
}

/// Like [`generate_synthetic`], plus a held-out set of `test_per_mode`
/// samples per mode around the same centers. The train half is identical to
/// what [`generate_synthetic`] returns for the same spec.
pub fn generate_synthetic_split(
    spec: &SyntheticTaskSpec,
    test_per_mode: usize,
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    if test_per_mode == 0 {
        return Err(ImprintError::InvalidConfig("test_per_mode must be positive".into()));
    }
    spec.validate()?;
    let centers = mode_centers(spec);
    let mut train_rng = stream_rng(spec.seed, TRAIN_STREAM);
    let mut test_rng = stream_rng(spec.seed, TEST_STREAM);
    let train = sample_around(spec, centers.view(), spec.samples_per_mode, &mut train_rng)?;
    let test = sample_around(spec, centers.view(), test_per_mode, &mut test_rng)?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> EmbeddingSet {
        EmbeddingSet::new(array![[0.0, 1.0], [0.5, 1.0], [2.0, 3.0], [2.5, 3.5]], vec![0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn csv_parse_four_rows() {
        let text = "label,x0,x1\n0,0.0,1.0\n0,0.5,1.0\n1,2.0,3.0\n1,2.5,3.5\n";
        let set = read_csv(text.as_bytes()).unwrap();
        assert_eq!(set.class_count(), 2);
        assert_eq!(set.len(), 4);
        assert_eq!(set.dim(), 2);
        assert_eq!(set, toy());
    }

    #[test]
    fn csv_nan_is_rejected() {
        let text = "label,x0,x1\n0,NaN,1.0\n1,2.0,3.0\n";
        assert!(matches!(
            read_csv(text.as_bytes()),
            Err(ImprintError::NonFinite { row: 0, col: 0 })
        ));
    }

    #[test]
    fn csv_ragged_row_is_rejected() {
        let text = "label,x0,x1\n0,1.0,1.0\n1,2.0\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn csv_bad_header() {
        let text = "class,x0\n0,1.0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(ImprintError::Format(_))));
    }

    #[test]
    fn labels_are_reindexed_in_order() {
        let text = "label,x0\n7,1.0\n3,2.0\n3,3.0\n";
        let set = read_csv(text.as_bytes()).unwrap();
        assert_eq!(set.labels(), &[1, 0, 0]);
        assert_eq!(set.class_count(), 2);
    }

    #[test]
    fn binary_round_trip_and_validation() {
        let set = toy();
        let mut buf = Vec::new();
        write_binary(&set, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"IMPR");
        assert_eq!(buf.len(), 4 + 16 + 4 * 4 + 4 * 8);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), set);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(bad.as_slice()), Err(ImprintError::Format(_))));

        let mut truncated = buf.clone();
        truncated.pop();
        assert!(read_binary(truncated.as_slice()).is_err());

        // Header claims three classes, labels only carry two.
        let mut more = buf.clone();
        more[16..20].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(
            read_binary(more.as_slice()),
            Err(ImprintError::EmptyClass { .. })
        ));

        let mut nan = buf.clone();
        let off = 20 + 16;
        nan[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_binary(nan.as_slice()),
            Err(ImprintError::NonFinite { .. })
        ));
    }

    #[test]
    fn few_shot_counts_and_determinism() {
        let spec = SyntheticTaskSpec {
            class_count: 2,
            modes_per_class: 1,
            samples_per_mode: 100,
            dim: 3,
            mode_separation: 1.0,
            within_mode_std: 0.1,
            seed: 4,
        };
        let set = generate_synthetic(&spec).unwrap();
        let a = few_shot_sample(&set, 10, 9).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a.per_class_counts(), vec![10, 10]);
        assert_eq!(a, few_shot_sample(&set, 10, 9).unwrap());
        assert_ne!(a, few_shot_sample(&set, 10, 10).unwrap());
        assert!(matches!(
            few_shot_sample(&set, 101, 0),
            Err(ImprintError::NotEnoughSamples { requested: 101, .. })
        ));
    }

    #[test]
    fn few_shot_full_size_is_a_permutation() {
        let set = toy();
        let s = few_shot_sample(&set, 2, 3).unwrap();
        let mut a: Vec<_> = s.vectors().rows().into_iter().map(|r| r.to_vec()).collect();
        let mut b: Vec<_> = set.vectors().rows().into_iter().map(|r| r.to_vec()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    fn one_row_per_class(c: usize) -> EmbeddingSet {
        let vectors = Array2::from_shape_fn((c, 1), |(i, _)| i as f64);
        EmbeddingSet::new(vectors, (0..c).collect()).unwrap()
    }

    #[test]
    fn remap_six_into_two() {
        let set = remap_labels(&one_row_per_class(6), 3).unwrap();
        assert_eq!(set.labels(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(set.class_count(), 2);
    }

    #[test]
    fn remap_identity_and_truncation() {
        let base = one_row_per_class(10);
        assert_eq!(remap_labels(&base, 1).unwrap(), base);
        let four = remap_labels(&base, 4).unwrap();
        assert_eq!(four.labels(), &[0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(four.len(), 8);
        assert_eq!(
            four.vectors().column(0).to_vec(),
            (0..8).map(|v| v as f64).collect::<Vec<_>>()
        );
        assert!(remap_labels(&base, 11).is_err());
        assert!(remap_labels(&base, 0).is_err());
    }

    #[test]
    fn synthetic_counts_and_labels() {
        let spec = SyntheticTaskSpec {
            class_count: 3,
            modes_per_class: 2,
            samples_per_mode: 5,
            dim: 4,
            mode_separation: 2.0,
            within_mode_std: 0.5,
            seed: 1,
        };
        let set = generate_synthetic(&spec).unwrap();
        assert_eq!(set.len(), 30);
        assert_eq!(set.per_class_counts(), vec![10, 10, 10]);
        assert_eq!(set, generate_synthetic(&spec).unwrap());
        let (train, test) = generate_synthetic_split(&spec, 7).unwrap();
        assert_eq!(train, set);
        assert_eq!(test.per_class_counts(), vec![14, 14, 14]);
    }

    #[test]
    fn synthetic_tiny_std_collapses_to_centers() {
        let spec = SyntheticTaskSpec {
            class_count: 2,
            modes_per_class: 1,
            samples_per_mode: 6,
            dim: 3,
            mode_separation: 5.0,
            within_mode_std: 1e-12,
            seed: 2,
        };
        let set = generate_synthetic(&spec).unwrap();
        for c in 0..2 {
            let rows = set.class_rows(c);
            let first = rows.row(0).to_owned();
            assert!((first.dot(&first).sqrt() - 5.0).abs() < 1e-9);
            for r in rows.rows() {
                assert!((&r - &first).iter().all(|v| v.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn synthetic_rejects_bad_spec() {
        let mut spec = SyntheticTaskSpec {
            class_count: 2,
            modes_per_class: 0,
            samples_per_mode: 1,
            dim: 2,
            mode_separation: 1.0,
            within_mode_std: 0.1,
            seed: 0,
        };
        assert!(generate_synthetic(&spec).is_err());
        spec.modes_per_class = 1;
        spec.within_mode_std = 0.0;
        assert!(generate_synthetic(&spec).is_err());
    }
}

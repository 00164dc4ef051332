//! Experiment orchestration: evaluate configurations on tasks and sweep grids.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    few_shot_sample, generate_synthetic_split, load_embeddings, EmbeddingSet, FileFormat, SyntheticTaskSpec,
};
use crate::error::{ImprintError, Result};
use crate::generate::GenStrategy;
use crate::head::{imprint, AggMode};
use crate::normalize::{NormMode, NormSlot};
use crate::par;
use crate::seed::mix;

/// One point of the framework grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigRecord", into = "ConfigRecord")]
pub struct ImprintConfig {
    pub gen: GenStrategy,
    pub norm_pre: NormMode,
    pub norm_post: NormMode,
    pub norm_inf: NormMode,
    pub agg: AggMode,
    pub seed: u64,
}

impl Default for ImprintConfig {
    /// k-means with 20 proxies, L2 in every slot, max aggregation.
    fn default() -> Self {
        Self {
            gen: GenStrategy::KMeans(20),
            norm_pre: NormMode::L2,
            norm_post: NormMode::L2,
            norm_inf: NormMode::L2,
            agg: AggMode::Max,
            seed: 0,
        }
    }
}

impl ImprintConfig {
    pub fn validate(&self) -> Result<()> {
        self.norm_pre.check_slot(NormSlot::Pre)?;
        self.norm_post.check_slot(NormSlot::Post)?;
        self.norm_inf.check_slot(NormSlot::Inf)?;
        self.gen.validate()?;
        self.agg.validate()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl fmt::Display for ImprintConfig {
    /// `NORM_pre/GEN/NORM_post/NORM_inf/AGG`, e.g. `l2/k-means:20/l2/l2/max`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/{}",
            self.norm_pre, self.gen, self.norm_post, self.norm_inf, self.agg
        )
    }
}

/// Flat JSON shape of [`ImprintConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigRecord {
    gen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default = "l2")]
    norm_pre: NormMode,
    #[serde(default = "l2")]
    norm_post: NormMode,
    #[serde(default = "l2")]
    norm_inf: NormMode,
    #[serde(default = "max")]
    agg: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn l2() -> NormMode {
    NormMode::L2
}

fn max() -> String {
    "max".into()
}

impl TryFrom<ConfigRecord> for ImprintConfig {
    type Error = ImprintError;

    fn try_from(r: ConfigRecord) -> Result<Self> {
        let config = ImprintConfig {
            gen: GenStrategy::from_name(&r.gen, r.k.unwrap_or(1))?,
            norm_pre: r.norm_pre,
            norm_post: r.norm_post,
            norm_inf: r.norm_inf,
            agg: AggMode::from_name(&r.agg, r.m.unwrap_or(1))?,
            seed: r.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<ImprintConfig> for ConfigRecord {
    fn from(c: ImprintConfig) -> Self {
        ConfigRecord {
            gen: c.gen.name().to_string(),
            k: match c.gen {
                GenStrategy::All | GenStrategy::Mean => None,
                g => g.k(),
            },
            norm_pre: c.norm_pre,
            norm_post: c.norm_post,
            norm_inf: c.norm_inf,
            agg: c.agg.name().to_string(),
            m: match c.agg {
                AggMode::Max => None,
                AggMode::MNn(m) => Some(m),
            },
            seed: c.seed,
        }
    }
}

/// Imprints on `train` and returns the fraction of `test` rows predicted correctly.
pub fn evaluate_config(train: &EmbeddingSet, test: &EmbeddingSet, config: &ImprintConfig) -> Result<f64> {
    if train.class_count() < 2 {
        return Err(ImprintError::InvalidArgument("need at least two classes".into()));
    }
    if train.dim() != test.dim() {
        return Err(ImprintError::DimensionMismatch {
            expected: train.dim(),
            actual: test.dim(),
        });
    }
    if train.class_count() != test.class_count() {
        return Err(ImprintError::InvalidArgument(format!(
            "train has {} classes, test has {}",
            train.class_count(),
            test.class_count()
        )));
    }
    imprint(train, config)?.accuracy(test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(flatten)]
    pub config: ImprintConfig,
}

impl NamedConfig {
    pub fn new(id: impl Into<String>, config: ImprintConfig) -> Self {
        Self {
            id: Some(id.into()),
            config,
        }
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.config.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskSource {
    Files {
        train: PathBuf,
        test: PathBuf,
    },
    Synthetic {
        synthetic: SyntheticTaskSpec,
        test_per_mode: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    #[serde(flatten)]
    pub source: TaskSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub few_shot: Option<usize>,
}

impl TaskSpec {
    pub fn synthetic(id: impl Into<String>, spec: SyntheticTaskSpec, test_per_mode: usize) -> Self {
        Self {
            id: id.into(),
            source: TaskSource::Synthetic {
                synthetic: spec,
                test_per_mode,
            },
            few_shot: None,
        }
    }

    fn load(&self) -> Result<(EmbeddingSet, EmbeddingSet)> {
        match &self.source {
            TaskSource::Files { train, test } => Ok((
                load_embeddings(train, FileFormat::from_path(train))?,
                load_embeddings(test, FileFormat::from_path(test))?,
            )),
            TaskSource::Synthetic {
                synthetic,
                test_per_mode,
            } => generate_synthetic_split(synthetic, *test_per_mode),
        }
    }
}

/// Three seeds for ordinary sweeps.
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
/// Five seeds for few-shot sweeps.
pub const DEFAULT_FEW_SHOT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub configs: Vec<NamedConfig>,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// When non-empty, every task is evaluated once per listed n.
    #[serde(default)]
    pub few_shot: Vec<usize>,
}

impl GridSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut spec: GridSpec = serde_json::from_str(text)?;
        if spec.seeds.is_empty() {
            spec.seeds = if spec.few_shot.is_empty() {
                DEFAULT_SEEDS.to_vec()
            } else {
                DEFAULT_FEW_SHOT_SEEDS.to_vec()
            };
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative task paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| ImprintError::io(path, e))?;
        let mut spec = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for task in &mut spec.tasks {
            if let TaskSource::Files { train, test } = &mut task.source {
                for p in [train, test] {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() || self.tasks.is_empty() || self.seeds.is_empty() {
            return Err(ImprintError::InvalidConfig(
                "grid needs at least one config, task and seed".into(),
            ));
        }
        for c in &self.configs {
            c.config.validate()?;
        }
        let mut ids: Vec<String> = self.configs.iter().map(NamedConfig::id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ImprintError::InvalidConfig("config ids must be unique".into()));
        }
        if self.few_shot.contains(&0) || self.tasks.iter().any(|t| t.few_shot == Some(0)) {
            return Err(ImprintError::InvalidConfig("few-shot n must be positive".into()));
        }
        Ok(())
    }

    /// (instance id, task index, few-shot n) in canonical order.
    fn instances(&self) -> Vec<(String, usize, Option<usize>)> {
        let mut out = Vec::new();
        for (t, task) in self.tasks.iter().enumerate() {
            if self.few_shot.is_empty() {
                let id = match task.few_shot {
                    Some(n) => format!("{}@n{n}", task.id),
                    None => task.id.clone(),
                };
                out.push((id, t, task.few_shot));
            } else {
                for &n in &self.few_shot {
                    out.push((format!("{}@n{n}", task.id), t, Some(n)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedCell {
    Seed(u64),
    Median,
}

impl fmt::Display for SeedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedCell::Seed(s) => write!(f, "{s}"),
            SeedCell::Median => f.write_str("median"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config_id: String,
    pub instance_id: String,
    pub seed: SeedCell,
    /// `Err` carries the failure message of a cell that could not be evaluated.
    pub accuracy: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

pub const RESULTS_HEADER: [&str; 5] = ["config_id", "instance_id", "seed", "accuracy", "status"];

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Evaluates every (config, instance, seed) cell and appends one median row
/// per (config, instance). Rows come out in canonical order, so the result
/// does not depend on `workers`. A failing cell becomes an error row.
pub fn run_grid(spec: &GridSpec, workers: usize) -> Result<ResultsTable> {
    spec.validate()?;
    let instances = spec.instances();

    par::with_workers(workers, || {
        let tasks: Vec<std::result::Result<(EmbeddingSet, EmbeddingSet), String>> =
            par::map_slice(&spec.tasks, |t| t.load().map_err(|e| e.to_string()));

        let n_seeds = spec.seeds.len();
        let cells = spec.configs.len() * instances.len() * n_seeds;
        let accuracies = par::map_range(cells, |cell| {
            let s = cell % n_seeds;
            let i = (cell / n_seeds) % instances.len();
            let c = cell / (n_seeds * instances.len());
            let seed = spec.seeds[s];
            let (_, task, few_shot) = &instances[i];
            let (train, test) = tasks[*task].as_ref().map_err(Clone::clone)?;
            let config = spec.configs[c].config.with_seed(seed);
            let sampled;
            let train = match few_shot {
                Some(n) => {
                    sampled = few_shot_sample(train, *n, mix(seed, 0xF5)).map_err(|e| e.to_string())?;
                    &sampled
                }
                None => train,
            };
            evaluate_config(train, test, &config).map_err(|e| e.to_string())
        });

        let mut rows = Vec::with_capacity(cells + cells / n_seeds);
        let mut it = accuracies.into_iter();
        for named in &spec.configs {
            let config_id = named.id();
            for (instance_id, _, _) in &instances {
                let mut ok = Vec::with_capacity(n_seeds);
                let mut failure = None;
                for &seed in &spec.seeds {
                    let accuracy = it.next().expect("one result per cell");
                    match &accuracy {
                        Ok(a) => ok.push(*a),
                        Err(e) => failure = Some(e.clone()),
                    }
                    rows.push(ResultRow {
                        config_id: config_id.clone(),
                        instance_id: instance_id.clone(),
                        seed: SeedCell::Seed(seed),
                        accuracy,
                    });
                }
                let med = match failure {
                    Some(e) => Err(format!("seed failed: {e}")),
                    None => Ok(median(&ok).expect("seeds non-empty")),
                };
                rows.push(ResultRow {
                    config_id: config_id.clone(),
                    instance_id: instance_id.clone(),
                    seed: SeedCell::Median,
                    accuracy: med,
                });
            }
        }
        Ok(ResultsTable { rows })
    })
}

impl ResultsTable {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(RESULTS_HEADER)?;
        for row in &self.rows {
            let (acc, status) = match &row.accuracy {
                Ok(a) => (a.to_string(), "ok".to_string()),
                Err(e) => (String::new(), format!("error: {e}")),
            };
            writer.write_record([
                row.config_id.as_str(),
                row.instance_id.as_str(),
                &row.seed.to_string(),
                &acc,
                &status,
            ])?;
        }
        writer.flush().map_err(|e| ImprintError::Format(e.to_string()))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| ImprintError::io(path, e))?;
        self.write_csv(file)
    }

    /// Parses a results CSV. The `status` column is optional.
    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(ci), Some(ii), Some(si), Some(ai)) =
            (col("config_id"), col("instance_id"), col("seed"), col("accuracy"))
        else {
            return Err(ImprintError::Format(
                "results csv needs config_id, instance_id, seed and accuracy columns".into(),
            ));
        };
        let status = col("status");
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let seed = match &record[si] {
                "median" => SeedCell::Median,
                s => SeedCell::Seed(s.parse().map_err(|_| ImprintError::Format(format!("bad seed `{s}`")))?),
            };
            let failed = status
                .and_then(|s| record.get(s))
                .filter(|s| !s.is_empty() && *s != "ok")
                .map(str::to_string);
            let accuracy = match failed {
                Some(msg) => Err(msg),
                None => {
                    let a: f64 = record[ai]
                        .parse()
                        .map_err(|_| ImprintError::Format(format!("bad accuracy `{}`", &record[ai])))?;
                    if !a.is_finite() {
                        return Err(ImprintError::Format("accuracy must be finite".into()));
                    }
                    Ok(a)
                }
            };
            rows.push(ResultRow {
                config_id: record[ci].to_string(),
                instance_id: record[ii].to_string(),
                seed,
                accuracy,
            });
        }
        Ok(Self { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ImprintError::io(path, e))?;
        Self::read_csv(file)
    }

    /// Configs × instances matrix of median accuracies, names in first-seen
    /// order. Uses median rows when present, otherwise the median of the
    /// per-seed rows. Any missing or failed cell is an error.
    pub fn accuracy_matrix(&self) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
        fn index_of(names: &mut Vec<String>, name: &str) -> usize {
            names.iter().position(|n| n == name).unwrap_or_else(|| {
                names.push(name.to_string());
                names.len() - 1
            })
        }
        let mut configs = Vec::new();
        let mut instances = Vec::new();
        for row in &self.rows {
            index_of(&mut configs, &row.config_id);
            index_of(&mut instances, &row.instance_id);
        }
        let has_median = self.rows.iter().any(|r| r.seed == SeedCell::Median);
        let mut cells: Vec<Vec<f64>> = vec![Vec::new(); configs.len() * instances.len()];
        for row in &self.rows {
            if (row.seed == SeedCell::Median) != has_median {
                continue;
            }
            let c = index_of(&mut configs, &row.config_id);
            let i = index_of(&mut instances, &row.instance_id);
            match &row.accuracy {
                Ok(a) => cells[c * instances.len() + i].push(*a),
                Err(e) => {
                    return Err(ImprintError::InvalidArgument(format!(
                        "cell ({}, {}) failed: {e}",
                        row.config_id, row.instance_id
                    )))
                }
            }
        }
        let mut m = Array2::zeros((configs.len(), instances.len()));
        for c in 0..configs.len() {
            for i in 0..instances.len() {
                m[[c, i]] = median(&cells[c * instances.len() + i]).ok_or_else(|| {
                    ImprintError::InvalidArgument(format!("no result for ({}, {})", configs[c], instances[i]))
                })?;
            }
        }
        Ok((configs, instances, m))
    }
}

//! Weight imprinting: build linear classifier heads from embeddings without
//! gradient training.
//!
//! A head is built per class in three steps: normalize the class's
//! embeddings, generate proxies from them, normalize the proxies. Queries are
//! normalized again at inference and scored against the proxies by
//! max-aggregation or an inverse-distance m-NN vote.
//!
//! ```
//! use imprint_core::{generate_synthetic_split, imprint, GenStrategy, ImprintConfig, SyntheticTaskSpec};
//!
//! let spec = SyntheticTaskSpec {
//!     class_count: 3,
//!     modes_per_class: 2,
//!     samples_per_mode: 10,
//!     dim: 8,
//!     mode_separation: 3.0,
//!     within_mode_std: 0.2,
//!     seed: 0,
//! };
//! let (train, test) = generate_synthetic_split(&spec, 10).unwrap();
//! let config = ImprintConfig { gen: GenStrategy::KMeans(2), ..ImprintConfig::default() };
//! let head = imprint(&train, &config).unwrap();
//! assert!(head.accuracy(&test).unwrap() > 0.9);
//! ```

pub mod collapse;
pub mod dataset;
pub mod error;
pub mod generate;
pub mod head;
mod linalg;
pub mod normalize;
pub mod oracle;
pub mod par;
pub mod runner;
pub mod seed;
pub mod stats;

pub use collapse::{compute_nc1, imbalanced_nc1, CollapseStats};
pub use dataset::{
    few_shot_sample, generate_synthetic, generate_synthetic_split, load_embeddings, remap_labels, save_embeddings,
    EmbeddingSet, FileFormat, SyntheticTaskSpec,
};
pub use error::{ImprintError, Result};
pub use generate::GenStrategy;
pub use head::{imprint, AggMode, ClassifierHead, Provenance};
pub use normalize::NormMode;
pub use oracle::{k_least_squares, least_squares_weights, OracleWeights, DEFAULT_LAMBDA};
pub use runner::{evaluate_config, run_grid, GridSpec, ImprintConfig, ResultsTable};
pub use stats::{build_cd_diagram, CDDiagram};

pub use dataset::EMBEDDING_FORMAT_VERSION;
pub use head::HEAD_FORMAT_VERSION;

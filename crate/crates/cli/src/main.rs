//! `imprint` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use imprint_core::stats::{emit_cd_svg, per_class_accuracy};
use imprint_core::{
    build_cd_diagram, compute_nc1, generate_synthetic, generate_synthetic_split, imbalanced_nc1, imprint,
    k_least_squares, load_embeddings, run_grid, save_embeddings, AggMode, ClassifierHead, EmbeddingSet, FileFormat,
    GenStrategy, GridSpec, ImprintConfig, NormMode, ResultsTable, SyntheticTaskSpec, DEFAULT_LAMBDA,
    EMBEDDING_FORMAT_VERSION, HEAD_FORMAT_VERSION,
};
use serde_json::json;

const GEN_NAMES: [&str; 7] = ["all", "mean", "k-random", "k-means", "k-medoids", "k-cov-max", "k-fps"];
const AGG_NAMES: [&str; 2] = ["max", "m-nn"];

#[derive(Parser)]
#[command(name = "imprint", about = "Weight imprinting over frozen embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-modal task.
    Synth(SynthArgs),
    /// Build a classifier head from training embeddings.
    Imprint(ImprintArgs),
    /// Evaluate a head on test embeddings.
    Predict(PredictArgs),
    /// Report the NC1 collapse statistic of a labelled set.
    Nc1(Nc1Args),
    /// Fit least-squares reference weights.
    Oracle(OracleArgs),
    /// Run a configuration grid from a JSON spec.
    Grid(GridArgs),
    /// Draw a critical-difference diagram from grid results.
    CdDiagram(CdArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    modes: usize,
    #[arg(long)]
    per_mode: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    sep: f64,
    #[arg(long)]
    std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.csv` selects CSV, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
    /// Also write a test split drawn from the same modes.
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    test_per_mode: usize,
}

#[derive(Args)]
struct ImprintArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "k-means", value_parser = GEN_NAMES)]
    gen: String,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "l2")]
    norm_pre: NormMode,
    #[arg(long, default_value = "l2")]
    norm_post: NormMode,
    #[arg(long, default_value = "l2")]
    norm_inf: NormMode,
    #[arg(long, default_value = "max", value_parser = AGG_NAMES)]
    agg: String,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Accuracy,
    PerClass,
    Json,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    head: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Override the head's aggregation.
    #[arg(long, value_parser = AGG_NAMES)]
    agg: Option<String>,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, value_enum, default_value = "accuracy")]
    report: Report,
}

#[derive(Args)]
struct Nc1Args {
    #[arg(long)]
    data: PathBuf,
    /// Skip the per-sample L2 normalization.
    #[arg(long)]
    no_l2: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Results CSV.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct CdArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// SVG output; the diagram data is written next to it as JSON.
    #[arg(long)]
    out: PathBuf,
}

fn load(path: &Path) -> Result<EmbeddingSet> {
    load_embeddings(path, FileFormat::from_path(path)).with_context(|| format!("loading {}", path.display()))
}

fn save(set: &EmbeddingSet, path: &Path) -> Result<()> {
    save_embeddings(set, path, FileFormat::from_path(path)).with_context(|| format!("writing {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticTaskSpec {
        class_count: a.classes,
        modes_per_class: a.modes,
        samples_per_mode: a.per_mode,
        dim: a.dim,
        mode_separation: a.sep,
        within_mode_std: a.std,
        seed: a.seed,
    };
    match &a.test_out {
        Some(test_out) => {
            let (train, test) = generate_synthetic_split(&spec, a.test_per_mode)?;
            save(&train, &a.out)?;
            save(&test, test_out)?;
        }
        None => save(&generate_synthetic(&spec)?, &a.out)?,
    }
    Ok(())
}

fn imprint_cmd(a: ImprintArgs) -> Result<()> {
    let config = ImprintConfig {
        gen: GenStrategy::from_name(&a.gen, a.k)?,
        norm_pre: a.norm_pre,
        norm_post: a.norm_post,
        norm_inf: a.norm_inf,
        agg: AggMode::from_name(&a.agg, a.m)?,
        seed: a.seed,
    };
    let train = load(&a.train)?;
    let head = imprint(&train, &config)?;
    head.save(&a.out)?;
    println!(
        "{}",
        json!({
            "config": config.to_string(),
            "classes": head.class_count(),
            "proxies": head.proxies().nrows(),
            "dim": head.dim(),
        })
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let mut head = ClassifierHead::load(&a.head)?;
    if let Some(agg) = &a.agg {
        head = head.with_agg(AggMode::from_name(agg, a.m)?)?;
    }
    let test = load(&a.test)?;
    if test.dim() != head.dim() {
        bail!(
            "dimension mismatch: head expects {}-dimensional queries, test set has {}",
            head.dim(),
            test.dim()
        );
    }
    let predicted = head.predict_all(&test)?;
    let accuracy = imprint_core::stats::accuracy(&predicted, test.labels())?;
    let per_class = per_class_accuracy(&predicted, test.labels(), head.class_count());
    match a.report {
        Report::Accuracy => println!("{accuracy:.6}"),
        Report::PerClass => {
            for (class, acc) in per_class.iter().enumerate() {
                match acc {
                    Some(v) => println!("{class}\t{v:.6}"),
                    None => println!("{class}\t-"),
                }
            }
        }
        Report::Json => println!(
            "{}",
            json!({"accuracy": accuracy, "per_class": per_class, "n": test.len(), "agg": head.agg().to_string()})
        ),
    }
    Ok(())
}

fn nc1(a: Nc1Args) -> Result<()> {
    let set = load(&a.data)?;
    let balanced = set.is_balanced();
    let stats = if balanced {
        compute_nc1(&set, !a.no_l2)?
    } else {
        imbalanced_nc1(&set, !a.no_l2)?
    };
    println!(
        "{}",
        json!({
            "nc1": stats.nc1,
            "C": set.class_count(),
            "l": set.dim(),
            "per_class_counts": set.per_class_counts(),
            "trace_sigma_w": stats.trace_sigma_w(),
            "rank_sigma_b": stats.rank_sigma_b,
            "weighting": if balanced { "per-sample" } else { "per-class" },
        })
    );
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let train = load(&a.train)?;
    let weights = k_least_squares(&train, a.k, a.lambda, a.seed)?;
    weights.to_head()?.save(&a.out)?;
    println!(
        "{}",
        json!({"classes": weights.class_count, "proxies": weights.weights.nrows(), "k": a.k, "lambda": a.lambda})
    );
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let spec = GridSpec::from_file(&a.spec)?;
    let table = run_grid(&spec, a.workers)?;
    table.save(&a.out)?;
    let failed = table.rows.iter().filter(|r| r.accuracy.is_err()).count();
    println!("{}", json!({"rows": table.rows.len(), "failed": failed}));
    Ok(())
}

fn cd_diagram(a: CdArgs) -> Result<()> {
    let table = ResultsTable::load(&a.results)?;
    let (configs, _, acc) = table.accuracy_matrix()?;
    let diagram = build_cd_diagram(acc.view(), &configs, a.alpha)?;
    emit_cd_svg(&diagram, &a.out)?;
    let sidecar = a.out.with_extension("json");
    std::fs::write(&sidecar, diagram.to_json()?).with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

fn version() -> &'static str {
    let s = format!(
        "{} (embedding format {EMBEDDING_FORMAT_VERSION}, head format {HEAD_FORMAT_VERSION})",
        env!("CARGO_PKG_VERSION")
    );
    Box::leak(s.into_boxed_str())
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Imprint(a) => imprint_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Nc1(a) => nc1(a),
        Command::Oracle(a) => oracle(a),
        Command::Grid(a) => grid(a),
        Command::CdDiagram(a) => cd_diagram(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}")}));
            ExitCode::from(1)
        }
    }
}

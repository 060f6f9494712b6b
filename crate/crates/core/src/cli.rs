//! Command implementations behind the `ccq` binary.
//!
//! Configuration precedence: built-in defaults, then the TOML config file,
//! then command-line flags. All randomness derives from the top-level seed:
//! the split plan uses `seed`, fold `(r, k)` uses `seed + r * folds + k` for
//! SMOTE and model training, global SMOTE uses `seed`, and the hashed
//! embedding provider hashes with `seed`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augmentation::{
    build_prompt, parse_generation, qc_filter, AugmentError, LlmClient, LlmClientConfig,
    PromptSpec,
};
use crate::balance::{smote, SmoteConfig, SmoteMode};
use crate::corpus::{
    dataset_stats, merge_datasets, parse_dataset, separator_collisions, write_dataset,
    CorpusError, Dataset, Format, Provenance,
};
use crate::embedding::{Embedder, EmbeddingError, ProviderConfig, ProviderKind, DEFAULT_DIM};
use crate::evaluation::{
    cohen_kappa, compare_reports, rskf_splits, run_experiment, EvaluationError, RunReport,
    REPORT_SCHEMA_VERSION,
};
use crate::models::{MlpConfig, ModelConfig, RandomForestConfig, VotingConfig};

pub fn tool_version() -> String {
    format!(
        "ccq {} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("CCQ_GIT_DESCRIBE")
    )
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    MissingFile(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    SchemaMismatch(String),
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    NoRecords(String),
    #[error("{0}")]
    EmptyAccept(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::MissingFile(_) => 2,
            CliError::InvalidInput(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::SchemaMismatch(_) => 5,
            CliError::Transport(_) => 6,
            CliError::NoRecords(_) => 7,
            CliError::EmptyAccept(_) => 8,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::MissingFile(format!("{}: file not found", path.display()))
    } else {
        CliError::Other(format!("{}: {e}", path.display()))
    }
}

fn corpus_err(path: &Path, e: CorpusError) -> CliError {
    match e {
        CorpusError::Io(e) => io_err(path, e),
        other => CliError::InvalidInput(format!("{}: {other}", path.display())),
    }
}

fn embed_err(e: EmbeddingError) -> CliError {
    match e {
        EmbeddingError::Transport(_) => CliError::Transport(format!("embedding: {e}")),
        EmbeddingError::Pair { ref source, .. }
            if matches!(**source, EmbeddingError::Transport(_)) =>
        {
            CliError::Transport(format!("embedding: {e}"))
        }
        EmbeddingError::Config(_) => CliError::Precondition(format!("embedding: {e}")),
        other => CliError::Other(format!("embedding: {other}")),
    }
}

fn eval_err(e: EvaluationError) -> CliError {
    match e {
        EvaluationError::SchemaMismatch(_) => CliError::SchemaMismatch(e.to_string()),
        EvaluationError::TooFewSamples { .. } => CliError::Precondition(e.to_string()),
        other => CliError::Other(format!("evaluation: {other}")),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn load_dataset(
    path: &Path,
    format: Option<Format>,
    provenance: Provenance,
) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let format = format.unwrap_or_else(|| Format::from_path(path));
    parse_dataset(BufReader::new(file), format, provenance).map_err(|e| corpus_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "seed")]
    Seed,
    #[serde(rename = "seed+llm")]
    SeedLlm,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Seed => "seed",
            Variant::SeedLlm => "seed+llm",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seed" => Ok(Variant::Seed),
            "seed+llm" | "seed-llm" | "augmented" => Ok(Variant::SeedLlm),
            other => Err(format!("unknown variant {other:?} (expected seed or seed+llm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    Rf,
    Vc,
    Nn,
    All,
}

impl std::str::FromStr for ModelSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(ModelSelection::Rf),
            "vc" => Ok(ModelSelection::Vc),
            "nn" => Ok(ModelSelection::Nn),
            "all" => Ok(ModelSelection::All),
            other => Err(format!("unknown model {other:?} (expected rf, vc, nn or all)")),
        }
    }
}

impl ModelSelection {
    /// Model configurations in table order (RF, VC, NN).
    pub fn configs(self) -> Vec<ModelConfig> {
        let rf = ModelConfig::RandomForest(RandomForestConfig::default());
        let vc = ModelConfig::Voting(VotingConfig::default());
        let nn = ModelConfig::Mlp(MlpConfig::default());
        match self {
            ModelSelection::Rf => vec![rf],
            ModelSelection::Vc => vec![vc],
            ModelSelection::Nn => vec![nn],
            ModelSelection::All => vec![rf, vc, nn],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSettings {
    pub k_neighbors: usize,
    pub target_ratio: f64,
}

/// Fully resolved settings of a `run`. Everything except `out_dir` and `jobs`
/// (which cannot change results) is echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_path: Option<PathBuf>,
    pub variant: Variant,
    pub provider: ProviderConfig,
    pub smote: SmoteSettings,
    pub smote_mode: SmoteMode,
    pub models: ModelSelection,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Resolved model hyperparameters.
    pub model_configs: Vec<ModelConfig>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub jobs: usize,
}

/// Optional settings as read from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOverrides {
    pub seed_path: Option<PathBuf>,
    pub generated_path: Option<PathBuf>,
    pub variant: Option<Variant>,
    pub provider: Option<ProviderKind>,
    pub dimension: Option<usize>,
    pub endpoint: Option<String>,
    pub cache_path: Option<PathBuf>,
    pub ngram_range: Option<(usize, usize)>,
    pub k_neighbors: Option<usize>,
    pub target_ratio: Option<f64>,
    pub smote_mode: Option<SmoteMode>,
    pub models: Option<ModelSelection>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(self, other: RunOverrides) -> RunOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { RunOverrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            seed_path, generated_path, variant, provider, dimension, endpoint, cache_path,
            ngram_range, k_neighbors, target_ratio, smote_mode, models, folds, repeats, seed,
            out_dir, jobs
        )
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let seed = self.seed.unwrap_or(42);
        let seed_path = self
            .seed_path
            .ok_or_else(|| CliError::Precondition("no seed dataset given (--seed-data)".into()))?;
        let models = self.models.unwrap_or(ModelSelection::All);
        let cfg = RunConfig {
            seed_path,
            generated_path: self.generated_path,
            variant: self.variant.unwrap_or(Variant::Seed),
            provider: ProviderConfig {
                kind: self.provider.unwrap_or(ProviderKind::HashedNgram),
                dimension: self.dimension.unwrap_or(DEFAULT_DIM),
                endpoint: self.endpoint,
                cache_path: self.cache_path,
                seed,
                ngram_range: self.ngram_range.unwrap_or((3, 5)),
            },
            smote: SmoteSettings {
                k_neighbors: self.k_neighbors.unwrap_or(5),
                target_ratio: self.target_ratio.unwrap_or(1.0),
            },
            smote_mode: self.smote_mode.unwrap_or(SmoteMode::InFold),
            models,
            folds: self.folds.unwrap_or(10),
            repeats: self.repeats.unwrap_or(3),
            seed,
            model_configs: models.configs(),
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from("runs")),
            jobs: self.jobs.unwrap_or(0),
        };
        Ok(cfg)
    }
}

fn print_stats(d: &Dataset, out: &mut dyn Write) -> Result<(), CliError> {
    let unlabeled = d.pairs.iter().filter(|p| p.label.is_none()).count();
    let w = |out: &mut dyn Write, s: String| {
        writeln!(out, "{s}").map_err(|e| CliError::Other(e.to_string()))
    };
    if unlabeled > 0 {
        w(out, format!("pairs: {} ({unlabeled} unlabeled)", d.pairs.len()))?;
    } else {
        let s = dataset_stats(d).map_err(|e| CliError::InvalidInput(e.to_string()))?;
        w(out, s.to_string())?;
    }
    let collisions = separator_collisions(d);
    if !collisions.is_empty() {
        w(out, format!("separator collisions: {}", collisions.len()))?;
    }
    Ok(())
}

/// Parses and validates a dataset, prints its class table and optionally
/// writes the validated records as JSONL.
pub fn cmd_ingest(
    path: &Path,
    format: Option<Format>,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let d = load_dataset(path, format, Provenance::Seed)?;
    print_stats(&d, out)?;
    if let Some(p) = out_path {
        let mut buf = Vec::new();
        write_dataset(&d, Format::Jsonl, &mut buf).map_err(|e| corpus_err(p, e))?;
        write_file(p, &buf)?;
        info!("wrote {} validated pairs to {}", d.pairs.len(), p.display());
    }
    Ok(())
}

/// Class table, plus Cohen's kappa against a second annotation of the same
/// ids when `annotations` is given.
pub fn cmd_stats(
    path: &Path,
    format: Option<Format>,
    annotations: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let d = load_dataset(path, format, Provenance::Seed)?;
    print_stats(&d, out)?;
    if let Some(other_path) = annotations {
        let other = load_dataset(other_path, None, Provenance::Seed)?;
        let by_id: std::collections::HashMap<&str, _> =
            other.pairs.iter().map(|p| (p.id.as_str(), p.label)).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for p in &d.pairs {
            if let (Some(la), Some(Some(lb))) = (p.label, by_id.get(p.id.as_str())) {
                a.push(la);
                b.push(*lb);
            }
        }
        let k = cohen_kappa(&a, &b).map_err(|e| CliError::InvalidInput(e.to_string()))?;
        writeln!(out, "cohen kappa over {} shared ids: {k:.3}", a.len())
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FeatureRecord<'a> {
    id: &'a str,
    label: crate::corpus::Label,
    vector: Vec<f32>,
}

/// Embeds a dataset, warming the provider cache, and optionally writes the
/// feature rows as JSONL.
pub fn cmd_embed(
    path: &Path,
    provider: &ProviderConfig,
    features_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let d = load_dataset(path, None, Provenance::Seed)?;
    let collisions = separator_collisions(&d);
    if !collisions.is_empty() {
        warn!("{} pairs contain the separator token", collisions.len());
    }
    let mut embedder = Embedder::from_config(provider).map_err(embed_err)?;
    let m = embedder.embed_dataset(&d).map_err(embed_err)?;
    writeln!(out, "embedded {} pairs into {} dimensions", m.n_rows(), m.dim())
        .map_err(|e| CliError::Other(e.to_string()))?;
    if let Some(p) = features_out {
        let mut buf = Vec::new();
        for i in 0..m.n_rows() {
            let rec = FeatureRecord {
                id: &m.ids[i],
                label: m.labels[i],
                vector: m.x.row(i).iter().map(|v| *v as f32).collect(),
            };
            serde_json::to_writer(&mut buf, &rec).map_err(|e| CliError::Other(e.to_string()))?;
            buf.push(b'\n');
        }
        write_file(p, &buf)?;
    }
    Ok(())
}

/// Loads the variant's data, embeds it, evaluates every selected model and
/// writes `report.json` and `report.md` into the output directory.
pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<RunReport, CliError> {
    if cfg.variant == Variant::SeedLlm && cfg.generated_path.is_none() {
        return Err(CliError::Precondition(
            "variant seed+llm needs the generated dataset (--generated-data <path>)".into(),
        ));
    }
    let seed_data = load_dataset(&cfg.seed_path, None, Provenance::Seed)?;
    let data = match (cfg.variant, &cfg.generated_path) {
        (Variant::SeedLlm, Some(p)) => {
            let generated = load_dataset(p, None, Provenance::LlmGenerated)?;
            merge_datasets(&seed_data, &generated)
        }
        _ => seed_data,
    };
    let collisions = separator_collisions(&data);
    if !collisions.is_empty() {
        warn!(
            "{} pairs contain the separator token; their renderings may be ambiguous",
            collisions.len()
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Other(e.to_string()))?;
    let report = pool.install(|| -> Result<RunReport, CliError> {
        let mut embedder = Embedder::from_config(&cfg.provider).map_err(embed_err)?;
        let mut features = embedder.embed_dataset(&data).map_err(embed_err)?;
        let smote_cfg = SmoteConfig {
            k_neighbors: cfg.smote.k_neighbors,
            target_ratio: cfg.smote.target_ratio,
            rng_seed: cfg.seed,
        };
        if cfg.smote_mode == SmoteMode::Global {
            features = smote(&features, &smote_cfg)
                .map_err(|e| CliError::Precondition(format!("smote: {e}")))?;
        }
        let plan =
            rskf_splits(&features.labels, cfg.folds, cfg.repeats, cfg.seed).map_err(eval_err)?;
        let mut reports = Vec::new();
        for model in &cfg.model_configs {
            info!("evaluating {}", model.name());
            let r = run_experiment(&features, model, &plan, &smote_cfg, cfg.smote_mode)
                .map_err(eval_err)?;
            reports.push(r.with_variant(cfg.variant.as_str()));
        }
        Ok(RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: tool_version(),
            variant: cfg.variant.as_str().to_string(),
            smote_mode: cfg.smote_mode,
            config: serde_json::to_value(cfg).map_err(|e| CliError::Other(e.to_string()))?,
            reports,
        })
    })?;

    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&cfg.out_dir.join("report.json"), format!("{json}\n").as_bytes())?;
    let table = report.render_table();
    write_file(&cfg.out_dir.join("report.md"), table.as_bytes())?;
    write!(out, "{table}").map_err(|e| CliError::Other(e.to_string()))?;
    Ok(report)
}

pub fn load_run_report(path: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::SchemaMismatch(format!("{}: {e}", path.display())))
}

/// Writes the per-metric deltas of `augmented` over `seed` as JSON (if
/// `out_path` is given) and prints the delta table.
pub fn cmd_compare(
    seed: &Path,
    augmented: &Path,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<crate::evaluation::ComparisonReport, CliError> {
    let a = load_run_report(seed)?;
    let b = load_run_report(augmented)?;
    let cmp = compare_reports(&a, &b).map_err(eval_err)?;
    if let Some(p) = out_path {
        let json = serde_json::to_string_pretty(&serde_json::json!({
            "tool_version": tool_version(),
            "seed_report": seed,
            "augmented_report": augmented,
            "comparison": cmp,
        }))
        .map_err(|e| CliError::Other(e.to_string()))?;
        write_file(p, format!("{json}\n").as_bytes())?;
    }
    write!(out, "{}", cmp.render_table()).map_err(|e| CliError::Other(e.to_string()))?;
    Ok(cmp)
}

#[derive(Debug, Clone)]
pub struct AugmentArgs {
    pub spec: PromptSpec,
    /// Raw completion text to use instead of calling the LLM.
    pub from_file: Option<PathBuf>,
    pub client: Option<LlmClientConfig>,
    /// Corpus used for cross-dataset deduplication.
    pub existing: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub relabel_review: bool,
}

fn augment_err(e: AugmentError) -> CliError {
    match e {
        AugmentError::NoRecordsFound { .. } => CliError::NoRecords(e.to_string()),
        AugmentError::InvalidSpec(_) => CliError::Precondition(e.to_string()),
        AugmentError::Io(e) => CliError::Other(e.to_string()),
        other => CliError::Transport(other.to_string()),
    }
}

/// Prompt, generate (or read), parse and filter generated pairs. Writes
/// `prompt.txt`, `accepted.jsonl` and `intake_report.json`.
pub fn cmd_augment(
    args: &AugmentArgs,
    out: &mut dyn Write,
) -> Result<crate::augmentation::IntakeReport, CliError> {
    args.spec.validate().map_err(augment_err)?;
    let prompt = build_prompt(&args.spec);
    write_file(&args.out_dir.join("prompt.txt"), prompt.as_bytes())?;

    let raw = match (&args.from_file, &args.client) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| io_err(p, e))?,
        (None, Some(c)) => LlmClient::from_env(c.clone())
            .generate(&prompt)
            .map_err(augment_err)?,
        (None, None) => {
            return Err(CliError::Precondition(
                "give --from-file or an LLM endpoint (--llm-url)".into(),
            ))
        }
    };
    write_file(&args.out_dir.join("raw_generation.txt"), raw.as_bytes())?;
    let parsed = parse_generation(&raw).map_err(augment_err)?;
    let existing = match &args.existing {
        Some(p) => load_dataset(p, None, Provenance::Seed)?,
        None => Dataset {
            pairs: Vec::new(),
            provenance: Provenance::Seed,
        },
    };
    let report = qc_filter(&parsed.pairs, &existing);

    let mut accepted = Vec::new();
    write_dataset(&report.accepted, Format::Jsonl, &mut accepted)
        .map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&args.out_dir.join("accepted.jsonl"), &accepted)?;
    let mut json = report.to_json();
    json["parse_rejects"] = serde_json::to_value(&parsed.rejects).unwrap_or_default();
    json["tool_version"] = serde_json::Value::from(tool_version());
    json["prompt_spec"] = serde_json::to_value(&args.spec).unwrap_or_default();
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&args.out_dir.join("intake_report.json"), format!("{text}\n").as_bytes())?;
    if args.relabel_review {
        let mut buf = Vec::new();
        write_dataset(&report.accepted, Format::Csv, &mut buf)
            .map_err(|e| CliError::Other(e.to_string()))?;
        write_file(&args.out_dir.join("relabel_review.csv"), &buf)?;
    }

    writeln!(
        out,
        "parsed {} records ({} malformed lines); accepted {}, rejected {} (duplicate {}, incomplete {}, ambiguous {})",
        parsed.pairs.len(),
        parsed.rejects.len(),
        report.accepted.pairs.len(),
        report.rejected.len(),
        report.counts.duplicate,
        report.counts.incomplete,
        report.counts.ambiguous
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    if report.accepted.pairs.is_empty() {
        return Err(CliError::EmptyAccept("quality control rejected every generated pair".into()));
    }
    Ok(report)
}

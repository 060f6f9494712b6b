use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ccq::augmentation::{LlmClientConfig, PromptSpec};
use ccq::balance::SmoteMode;
use ccq::cli::{self, AugmentArgs, CliError, ModelSelection, RunOverrides, Variant};
use ccq::corpus::Format;
use ccq::embedding::ProviderKind;

#[derive(Parser)]
#[command(name = "ccq", version, about = "Code-comment usefulness classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a labeled dataset and print its class distribution
    Ingest {
        path: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        /// Write the validated pairs as JSONL
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print class distribution, optionally agreement with a second annotation
    Stats {
        path: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        /// Second annotation of the same ids; prints Cohen's kappa
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Generate pairs with an LLM (or read a saved completion) and filter them
    Augment(AugmentCmd),
    /// Embed a dataset, warming the cache
    Embed {
        path: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write feature rows as JSONL
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Cross-validate the selected models and write a report
    Run(RunCmd),
    /// Per-metric deltas between a seed report and an augmented report
    Compare {
        seed_report: PathBuf,
        augmented_report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_parser = parse_provider)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct RunCmd {
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed_data: Option<PathBuf>,
    #[arg(long)]
    generated_data: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    model: Option<ModelSelection>,
    #[arg(long, value_parser = parse_smote_mode)]
    smote_mode: Option<SmoteMode>,
    /// Shorthand for --smote-mode global
    #[arg(long, conflicts_with = "smote_mode")]
    smote_global: bool,
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Print the resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct AugmentCmd {
    #[arg(long, default_value_t = 3000)]
    n_pairs: usize,
    #[arg(long, default_value = "C")]
    language: String,
    #[arg(long, default_value_t = 0.5)]
    label_split: f64,
    /// Use a saved completion instead of calling the LLM
    #[arg(long)]
    from_file: Option<PathBuf>,
    /// Messages-style completion endpoint; the key is read from LLM_API_KEY
    #[arg(long, requires = "llm_model")]
    llm_url: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
    #[arg(long, default_value_t = 4096)]
    max_tokens: usize,
    /// Existing corpus for cross-dataset deduplication
    #[arg(long)]
    existing: Option<PathBuf>,
    #[arg(long, default_value = "generated")]
    out_dir: PathBuf,
    /// Also export the accepted pairs as CSV for manual relabeling
    #[arg(long)]
    relabel_review: bool,
}

fn parse_provider(s: &str) -> Result<ProviderKind, String> {
    match s {
        "hashed" | "hashed-ngram" | "hashed_ngram" => Ok(ProviderKind::HashedNgram),
        "remote" => Ok(ProviderKind::Remote),
        "precomputed" => Ok(ProviderKind::Precomputed),
        other => Err(format!("unknown provider {other:?}")),
    }
}

fn parse_smote_mode(s: &str) -> Result<SmoteMode, String> {
    s.parse()
}

fn run_overrides(cmd: &RunCmd) -> anyhow::Result<Result<RunOverrides, CliError>> {
    let file = match &cmd.config {
        Some(p) => match RunOverrides::from_toml_file(p) {
            Ok(f) => f,
            Err(e) => return Ok(Err(e)),
        },
        None => RunOverrides::default(),
    };
    let flags = RunOverrides {
        seed_path: cmd.seed_data.clone(),
        generated_path: cmd.generated_data.clone(),
        variant: cmd.variant,
        provider: cmd.provider.provider,
        dimension: cmd.provider.dim,
        endpoint: cmd.provider.endpoint.clone(),
        cache_path: cmd.provider.cache.clone(),
        k_neighbors: cmd.k_neighbors,
        smote_mode: if cmd.smote_global { Some(SmoteMode::Global) } else { cmd.smote_mode },
        models: cmd.model,
        folds: cmd.folds,
        repeats: cmd.repeats,
        seed: cmd.seed,
        out_dir: cmd.out_dir.clone(),
        jobs: cmd.jobs,
        ..Default::default()
    };
    Ok(Ok(file.overlay(flags)))
}

fn dispatch(cli: Cli) -> anyhow::Result<Result<(), CliError>> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let res = match cli.command {
        Command::Ingest { path, format, out: dest } => {
            cli::cmd_ingest(&path, format, dest.as_deref(), &mut out)
        }
        Command::Stats { path, format, annotations } => {
            cli::cmd_stats(&path, format, annotations.as_deref(), &mut out)
        }
        Command::Embed { path, provider, seed, features_out } => {
            let o = RunOverrides {
                seed_path: Some(path.clone()),
                provider: provider.provider,
                dimension: provider.dim,
                endpoint: provider.endpoint,
                cache_path: provider.cache,
                seed: Some(seed),
                ..Default::default()
            };
            o.resolve().and_then(|cfg| {
                cli::cmd_embed(&path, &cfg.provider, features_out.as_deref(), &mut out)
            })
        }
        Command::Run(cmd) => {
            let cfg = match run_overrides(&cmd)?.and_then(RunOverrides::resolve) {
                Ok(c) => c,
                Err(e) => return Ok(Err(e)),
            };
            if cmd.print_config {
                let text = toml::to_string_pretty(&cfg).context("serializing config")?;
                write!(out, "{text}")?;
                Ok(())
            } else {
                cli::cmd_run(&cfg, &mut out).map(|_| ())
            }
        }
        Command::Compare { seed_report, augmented_report, out: dest } => {
            cli::cmd_compare(&seed_report, &augmented_report, dest.as_deref(), &mut out)
                .map(|_| ())
        }
        Command::Augment(a) => {
            let args = AugmentArgs {
                spec: PromptSpec {
                    n_pairs: a.n_pairs,
                    language: a.language,
                    label_split: a.label_split,
                },
                from_file: a.from_file,
                client: a.llm_url.map(|url| LlmClientConfig {
                    url,
                    model: a.llm_model.clone().unwrap_or_default(),
                    max_tokens: a.max_tokens,
                    audit_log: a.out_dir.join("llm_audit.jsonl"),
                    ..Default::default()
                }),
                existing: a.existing,
                out_dir: a.out_dir,
                relabel_review: a.relabel_review,
            };
            cli::cmd_augment(&args, &mut out).map(|_| ())
        }
    };
    out.flush()?;
    Ok(res)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ipd_core::embed::{EmbeddingModel, EmbeddingParams, WalkCorpus};
use ipd_core::io::{
    format_dataset, format_patterns, parse_dataset, parse_itemsets_with_label_items,
};
use ipd_core::miner::{ingest_patterns, mine_closed_itemsets};
use ipd_core::model::{Dataset, Pattern, PatternKind};
use ipd_core::select::StrategyVariant;
use ipd_core::session::{
    run_ablation, run_session, ContainmentBasis, FeaturizerKind, OracleSpec, RaterSpec,
    SessionConfig, Workspace,
};
use ipd_core::synthetic::SeparableItemsets;

#[derive(Parser)]
#[command(name = "ipd", version, about = "Interactive pattern discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Mine closed frequent itemsets and write them as a pattern file.
    Mine {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        min_support: usize,
        /// Output pattern file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load an externally mined pattern file and re-check its supports.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        patterns: PathBuf,
    },
    /// Train a paragraph-vector model on a sequence or graph dataset.
    EmbedTrain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negative: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic two-class itemset dataset.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        transactions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run sessions with a simulated rater.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, env = "IPD_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Run one session to the end and write its report.
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strategy: Option<StrategyVariant>,
    },
    /// Run every strategy over several seeds and compare final scores.
    Ablation {
        #[command(flatten)]
        run: RunArgs,
        /// Seeds 0..N.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Set)]
    kind: Kind,
    /// Items that encode the class inside each itemset, first item = class 1.
    #[arg(long, value_delimiter = ',')]
    label_items: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Set,
    Sequence,
    Graph,
}

impl From<Kind> for PatternKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Set => PatternKind::Set,
            Kind::Sequence => PatternKind::Sequence,
            Kind::Graph => PatternKind::Graph,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Majority,
    Features,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Pattern,
    Set,
}

#[derive(Clone, Copy, ValueEnum)]
enum Featurizer {
    Native,
    Ngram,
    Topological,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Pattern file to ingest.
    #[arg(long, conflicts_with = "min_support")]
    patterns: Option<PathBuf>,
    /// Mine closed itemsets at this support instead of reading a pattern file.
    #[arg(long)]
    min_support: Option<usize>,
    /// Base session configuration (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Feature set for the feature-containment oracle.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    basis: Option<Basis>,
    #[arg(long)]
    batch_fraction: Option<f64>,
    #[arg(long)]
    min_iterations: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    stop_threshold: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    featurizer: Option<Featurizer>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    embedding_epochs: Option<usize>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    let text = fs::read_to_string(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let source = args.data.display().to_string();
    let kind = PatternKind::from(args.kind);
    let dataset = if args.label_items.is_empty() {
        parse_dataset(&text, kind, &source)?
    } else {
        if kind != PatternKind::Set {
            bail!("--label-items only applies to itemset data");
        }
        let labels: Vec<&str> = args.label_items.iter().map(String::as_str).collect();
        parse_itemsets_with_label_items(&text, &labels, &source)?
    };
    Ok(dataset)
}

fn load_patterns(run: &RunArgs, dataset: &Dataset) -> Result<Vec<Pattern>> {
    match (&run.patterns, run.min_support) {
        (Some(path), _) => {
            let ingested = ingest_patterns(path, dataset.kind, dataset)?;
            report_mismatches(&ingested.warnings);
            Ok(ingested.patterns)
        }
        (None, Some(min)) => Ok(mine_closed_itemsets(dataset, min)?),
        (None, None) => bail!("give --patterns or --min-support"),
    }
}

fn report_mismatches(warnings: &[ipd_core::miner::SupportMismatch]) {
    for w in warnings {
        eprintln!(
            "warning: pattern {} (line {}) declares support {} but occurs in {} transactions",
            w.pattern_id, w.line, w.declared, w.recomputed
        );
    }
}

fn session_config(run: &RunArgs) -> Result<SessionConfig> {
    let mut config: SessionConfig = match &run.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => SessionConfig::default(),
    };
    if let Some(oracle) = run.oracle {
        config.rater = RaterSpec::Oracle {
            oracle: match oracle {
                OracleKind::Majority => OracleSpec::MajorityClass,
                OracleKind::Features => OracleSpec::FeatureContainment {
                    features: run.features.clone(),
                    threshold: run.threshold.unwrap_or(0.8),
                    basis: match run.basis {
                        Some(Basis::Set) => ContainmentBasis::SetFraction,
                        _ => ContainmentBasis::PatternFraction,
                    },
                },
            },
        };
    }
    if let Some(v) = run.batch_fraction {
        config.batch_fraction = v;
    }
    if let Some(v) = run.min_iterations {
        config.min_iterations = v;
    }
    if run.max_iterations.is_some() {
        config.max_iterations = run.max_iterations;
    }
    if let Some(v) = run.stop_threshold {
        config.stop_threshold = v;
    }
    if let Some(v) = run.lambda {
        config.lambda = v;
    }
    if let Some(f) = run.featurizer {
        config.features.featurizer = match f {
            Featurizer::Native => FeaturizerKind::Native,
            Featurizer::Ngram => FeaturizerKind::NGram,
            Featurizer::Topological => FeaturizerKind::Topological,
        };
    }
    if let Some(v) = run.embedding_dim {
        config.features.embedding.dim = v;
    }
    if let Some(v) = run.embedding_epochs {
        config.features.embedding.epochs = v;
    }
    Ok(config)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mine {
            data,
            min_support,
            out,
        } => {
            let dataset = load_dataset(&data)?;
            let patterns = mine_closed_itemsets(&dataset, min_support)?;
            eprintln!(
                "{} closed patterns at min_support {min_support}",
                patterns.len()
            );
            write_output(out.as_deref(), &format_patterns(&patterns, &dataset.vocab))?;
        }
        Command::Ingest { data, patterns } => {
            let dataset = load_dataset(&data)?;
            let ingested = ingest_patterns(&patterns, dataset.kind, &dataset)?;
            report_mismatches(&ingested.warnings);
            println!(
                "{} patterns, {} support mismatches",
                ingested.patterns.len(),
                ingested.warnings.len()
            );
        }
        Command::EmbedTrain {
            data,
            dim,
            epochs,
            window,
            negative,
            seed,
            out,
        } => {
            let dataset = load_dataset(&data)?;
            let corpus = WalkCorpus::from_dataset(&dataset)?;
            let params = EmbeddingParams {
                dim,
                epochs,
                window,
                negative_samples: negative,
                seed,
                ..EmbeddingParams::default()
            };
            let model = EmbeddingModel::train(&corpus, params)?;
            model.save(&out)?;
            let losses: Vec<String> = model
                .epoch_losses()
                .iter()
                .map(|l| format!("{l:.4}"))
                .collect();
            eprintln!(
                "{} sentences, vocabulary {}, epoch losses [{}]",
                corpus.sentences.len(),
                model.vocabulary().len(),
                losses.join(", ")
            );
        }
        Command::Synth {
            seed,
            transactions,
            out,
        } => {
            let dataset = SeparableItemsets {
                seed,
                transactions,
                ..SeparableItemsets::default()
            }
            .generate();
            write_output(out.as_deref(), &format_dataset(&dataset))?;
        }
        Command::Session(SessionCommand::Run {
            run,
            seed,
            strategy,
        }) => {
            let dataset = load_dataset(&run.data)?;
            let patterns = load_patterns(&run, &dataset)?;
            let mut config = session_config(&run)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(v) = strategy {
                config.strategy.variant = v;
            }
            let ws = Arc::new(Workspace::new(dataset, patterns)?);
            let (_, report) = run_session(ws, config)?;
            eprintln!(
                "{} after {} iterations, {} ratings, final F-score {}",
                report.status.name(),
                report.iterations,
                report.feedback_count,
                report
                    .final_f_score
                    .map_or("n/a".to_owned(), |f| format!("{f:.4}"))
            );
            write_output(
                run.report.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
        }
        Command::Session(SessionCommand::Ablation { run, seeds }) => {
            let dataset = load_dataset(&run.data)?;
            let patterns = load_patterns(&run, &dataset)?;
            let config = session_config(&run)?;
            let ws = Arc::new(Workspace::new(dataset, patterns)?);
            let features = Arc::new(ws.featurize(&config.features)?);
            let seeds: Vec<u64> = (0..seeds).collect();
            let report = run_ablation(ws, features, &config, &StrategyVariant::all(), &seeds)?;
            for (name, median) in &report.medians {
                eprintln!("{name:>8}  median final F-score {median:.4}");
            }
            write_output(
                run.report.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
        }
        Command::Serve { store, port, host } => {
            tracing_subscriber::fmt()
                .with_writer(std::io::stderr)
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info,tower_http=debug".into()),
                )
                .init();
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            let config = ipd_service::ServeConfig {
                store,
                addr: SocketAddr::new(host, port),
            };
            runtime.block_on(ipd_service::serve(config, |addr| {
                // parsed by scripts and tests waiting for the server
                println!("listening on {addr}");
            }))?;
        }
    }
    Ok(())
}

//! `analyze`: command-line front end for the stage pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use emoji_solidarity::classify::{BalanceStrategy, FeatureMode};
use emoji_solidarity::diffusion::ThresholdMode;
use emoji_solidarity::labeling::TweetClass;
use emoji_solidarity::network::PairMode;
use emoji_solidarity::pipeline::{Config, EmojiVariant, ModelKind, Pipeline, RegionFilter, Stage};

#[derive(Debug, Parser)]
#[command(name = "analyze", version, about = "Solidarity and emoji analytics over crisis-event tweets")]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Event tag, e.g. irma or paris.
    #[arg(long, global = true)]
    event: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read, deduplicate and tokenize a JSONL corpus.
    Ingest(IngestArgs),
    /// Inter-annotator agreement, hashtag lexicon and distant labels.
    Label(LabelArgs),
    /// Train and evaluate the classifiers.
    Classify(ClassifyArgs),
    /// Top-k emoji per class.
    EmojiStats(EmojiStatsArgs),
    /// Affected-region versus rest-of-world emoji shares.
    Geo(GeoArgs),
    /// Emoji co-occurrence network.
    Network(NetworkArgs),
    /// Per-day emoji counts.
    Diffusion(DiffusionArgs),
    /// Several stages in dependency order (all when none are named).
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Stop-word list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Treat only byte-identical texts as duplicates.
    #[arg(long)]
    dedupe_exact: bool,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Label this corpus directly instead of the ingest output.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// The two annotators' TSV files.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    annotations: Option<Vec<PathBuf>>,
    /// Fail when kappa is below this value; bare flag means 0.65.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.65")]
    min_kappa: Option<f64>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Feature sets for the linear model (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    features: Vec<FeatureMode>,
    #[arg(long = "model", value_delimiter = ',', value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long, conflicts_with = "no_emojis")]
    with_emojis: bool,
    #[arg(long)]
    no_emojis: bool,
    /// Pre-trained word vectors (GloVe text format).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    balance: Option<BalanceStrategy>,
    #[arg(long)]
    lstm_epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct EmojiStatsArgs {
    #[arg(long)]
    top_k: Option<usize>,
    /// Count each emoji once per tweet.
    #[arg(long)]
    distinct_per_tweet: bool,
}

#[derive(Debug, Args)]
struct GeoArgs {
    /// Gazetteer TSV (name, ISO code) replacing the built-in one.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Affected ISO codes, replacing the event's built-in set.
    #[arg(long, value_delimiter = ',')]
    affected: Vec<String>,
}

#[derive(Debug, Args)]
struct SubsetArgs {
    #[arg(long)]
    class: Option<TweetClass>,
    #[arg(long)]
    region: Option<RegionFilter>,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NetworkArgs {
    #[command(flatten)]
    subset: SubsetArgs,
    #[arg(long)]
    pair_mode: Option<PairMode>,
    #[arg(long)]
    min_edge_weight: Option<u64>,
    #[arg(long)]
    layout_iterations: Option<usize>,
}

#[derive(Debug, Args)]
struct DiffusionArgs {
    #[command(flatten)]
    subset: SubsetArgs,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    threshold_mode: Option<ThresholdMode>,
    /// Day boundary offset, e.g. -04:00.
    #[arg(long, allow_hyphen_values = true)]
    tz_offset: Option<String>,
    /// Emoji sentiment CSV.
    #[arg(long)]
    sentiment: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(value_parser = parse_stage)]
    stages: Vec<Stage>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    annotations: Option<Vec<PathBuf>>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "linear" | "svm" => Ok(ModelKind::Linear),
        "lstm" => Ok(ModelKind::Lstm),
        other => Err(format!("unknown model {other:?} (expected linear or lstm)")),
    }
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: emoji_solidarity::Error| e.to_string())
}

fn apply_subset(args: SubsetArgs, class: &mut TweetClass, region: &mut RegionFilter, cfg_gaz: &mut Option<PathBuf>) {
    if let Some(c) = args.class {
        *class = c;
    }
    if let Some(r) = args.region {
        *region = r;
    }
    if args.gazetteer.is_some() {
        *cfg_gaz = args.gazetteer;
    }
}

/// Merge flags into the configuration and pick the stages to run.
fn configure(cli: Cli) -> emoji_solidarity::Result<(Config, Vec<Stage>)> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(e) = cli.event {
        cfg.event = e;
    }
    let stages = match cli.command {
        Command::Ingest(a) => {
            if a.corpus.is_some() {
                cfg.ingest.corpus = a.corpus;
            }
            if a.stopwords.is_some() {
                cfg.ingest.stopwords = a.stopwords;
            }
            cfg.ingest.exact_dedupe |= a.dedupe_exact;
            vec![Stage::Ingest]
        }
        Command::Label(a) => {
            if a.corpus.is_some() {
                cfg.label.corpus = a.corpus;
            }
            if let Some(ann) = a.annotations {
                cfg.label.annotations = ann;
            }
            if a.min_kappa.is_some() {
                cfg.label.min_kappa = a.min_kappa;
            }
            if a.stopwords.is_some() {
                cfg.ingest.stopwords = a.stopwords;
            }
            vec![Stage::Label]
        }
        Command::Classify(a) => {
            let c = &mut cfg.classify;
            if !a.features.is_empty() {
                c.features = a.features;
            }
            if !a.models.is_empty() {
                c.models = a.models;
            }
            if a.with_emojis {
                c.emojis = EmojiVariant::With;
            } else if a.no_emojis {
                c.emojis = EmojiVariant::Without;
            }
            if a.embeddings.is_some() {
                c.embeddings = a.embeddings;
            }
            if let Some(f) = a.folds {
                c.folds = f;
            }
            if let Some(b) = a.balance {
                c.balance = b;
            }
            if let Some(e) = a.lstm_epochs {
                c.lstm.epochs = e;
            }
            vec![Stage::Classify]
        }
        Command::EmojiStats(a) => {
            if let Some(k) = a.top_k {
                cfg.emoji_stats.top_k = k;
            }
            cfg.emoji_stats.distinct_per_tweet |= a.distinct_per_tweet;
            vec![Stage::EmojiStats]
        }
        Command::Geo(a) => {
            if a.gazetteer.is_some() {
                cfg.geo.gazetteer = a.gazetteer;
            }
            if !a.affected.is_empty() {
                cfg.geo.affected = Some(a.affected);
            }
            vec![Stage::Geo]
        }
        Command::Network(a) => {
            let n = &mut cfg.network;
            apply_subset(a.subset, &mut n.class, &mut n.region, &mut cfg.geo.gazetteer);
            if let Some(m) = a.pair_mode {
                n.pair_mode = m;
            }
            if let Some(w) = a.min_edge_weight {
                n.min_edge_weight = w;
            }
            if let Some(i) = a.layout_iterations {
                n.layout.iterations = i;
            }
            vec![Stage::Network]
        }
        Command::Diffusion(a) => {
            let d = &mut cfg.diffusion;
            apply_subset(a.subset, &mut d.class, &mut d.region, &mut cfg.geo.gazetteer);
            if a.threshold.is_some() {
                d.threshold = a.threshold;
            }
            if let Some(m) = a.threshold_mode {
                d.threshold_mode = m;
            }
            if let Some(tz) = a.tz_offset {
                d.tz_offset = tz;
            }
            if a.sentiment.is_some() {
                d.sentiment = a.sentiment;
            }
            vec![Stage::Diffusion]
        }
        Command::Run(a) => {
            if a.corpus.is_some() {
                cfg.ingest.corpus = a.corpus;
            }
            if let Some(ann) = a.annotations {
                cfg.label.annotations = ann;
            }
            if !a.stages.is_empty() {
                a.stages
            } else if !cfg.stages.is_empty() {
                cfg.stages.iter().map(|s| s.parse()).collect::<emoji_solidarity::Result<_>>()?
            } else {
                Stage::ALL.to_vec()
            }
        }
    };
    Ok((cfg, stages))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let command_line: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let (cfg, stages) = match configure(cli) {
        Ok(v) => v,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(2);
        }
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            error!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let pipeline = Pipeline::new(cfg, command_line);
    let results = pipeline.run(&stages);
    let mut wanted = stages;
    wanted.sort();
    wanted.dedup();
    // An upstream failure leaves later stages unrun; that is a failure too.
    let mut failed = results.len() != wanted.len();
    for (stage, result) in results {
        match result {
            Ok(m) => {
                for out in &m.outputs {
                    println!("{stage}\t{}", out.path.display());
                }
            }
            Err(e) => {
                error!("{stage} failed: {e}");
                failed = true;
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

//! Stage runner: each stage reads upstream artifacts from the output
//! directory, writes its own files into `<out_dir>/<stage>/` and finishes
//! with a `manifest.json`.

pub mod config;
pub mod manifest;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{Config, EmojiVariant, ModelKind, RegionFilter};
pub use manifest::{digest_file, DigestReader, FileDigest, ManifestBuilder, RunManifest, MANIFEST_FILE};

use crate::classify::{
    balance_with, train_linear_cv, train_linear_holdout, train_lstm, CvReport, Dataset, Embeddings, HoldoutReport,
};
use crate::corpus::{
    dedupe_and_filter, default_stopwords, ingest_reader, preprocess, CorpusStore, ExportedTweet, StopList,
};
use crate::diffusion::{
    bin_by_day, default_threshold, filter_threshold, order_by_sentiment, write_diffusion_csv, write_diffusion_svg,
};
use crate::emoji::{count_emojis, rank_top_k, write_ranked_csv, SentimentMap};
use crate::error::{Error, Result};
use crate::geo::{classify_regions, partition_emojis, select_region, AffectedRegionSet, Gazetteer, Region};
use crate::labeling::{
    compute_kappa, consensus_lexicon, distant_label, parse_annotations, HashtagAnnotation, LabeledCorpus, TweetClass,
};
use crate::network::{
    build_cooccurrence, layout_force_directed, summarize, write_edge_csv, write_graphml, write_node_csv, write_svg,
};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const LABELED_FILE: &str = "labeled.jsonl";
pub const LEXICON_FILE: &str = "lexicon.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Label,
    Classify,
    EmojiStats,
    Geo,
    Network,
    Diffusion,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Label,
        Stage::Classify,
        Stage::EmojiStats,
        Stage::Geo,
        Stage::Network,
        Stage::Diffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Label => "label",
            Stage::Classify => "classify",
            Stage::EmojiStats => "emoji-stats",
            Stage::Geo => "geo",
            Stage::Network => "network",
            Stage::Diffusion => "diffusion",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

fn json_err(context: &Path) -> impl Fn(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        context: context.display().to_string(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn slug(s: &str) -> String {
    s.replace('+', "_plus_")
}

/// Labelled records read back from the label stage, with their stored tokens.
#[derive(Debug, Clone, Default)]
pub struct LabeledArtifact {
    pub corpus: LabeledCorpus,
    pub tokens: HashMap<String, Vec<String>>,
}

/// Parse `labeled.jsonl`.
pub fn parse_labeled<R: Read>(reader: R, event_tag: &str, context: &str) -> Result<LabeledArtifact> {
    let mut text = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(context, e))?;
    let mut out = LabeledArtifact {
        corpus: LabeledCorpus {
            event_tag: event_tag.to_string(),
            ..LabeledCorpus::default()
        },
        tokens: HashMap::new(),
    };
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::parse(context, format!("line {}: {m}", n + 1));
        let t: ExportedTweet = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let class: TweetClass = t
            .label
            .as_deref()
            .ok_or_else(|| bad("missing label".into()))?
            .parse()?;
        let record = t.to_record().ok_or_else(|| bad("bad created_at".into()))?;
        out.tokens.insert(record.id.clone(), t.tokens.clone().unwrap_or_default());
        out.corpus.class_mut(class).push(record);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct IngestReport<'a> {
    event: &'a str,
    lines_read: usize,
    skipped_malformed: usize,
    skipped_duplicate_ids: usize,
    records_ingested: usize,
    records_after_dedupe: usize,
    exact_dedupe: bool,
}

#[derive(Debug, Serialize)]
struct LabelSummary<'a> {
    event: &'a str,
    input_records: usize,
    solidarity: usize,
    not_solidarity: usize,
    labeled_total: usize,
    dropped_conflicts: usize,
    dropped_unmatched: usize,
    lexicon_size: usize,
}

#[derive(Debug, Serialize)]
struct AgreementOutput<'a> {
    agreement: &'a crate::labeling::AgreementReport,
    min_kappa: Option<f64>,
    gate_passed: bool,
    lexicon_size: usize,
    agreed_unrelated: &'a [String],
    disagreements: &'a [String],
}

#[derive(Debug, Serialize)]
struct LinearResult {
    cv: CvReport,
    holdout: HoldoutReport,
}

#[derive(Debug, Serialize)]
struct AccuracyRow {
    model: &'static str,
    features: Option<String>,
    with_emoji: bool,
    cv_mean_accuracy: Option<f64>,
    holdout_test_accuracy: f64,
}

#[derive(Debug, Serialize)]
struct ClassifySummary {
    event: String,
    balance: String,
    n_solidarity: usize,
    n_not_solidarity: usize,
    results: Vec<AccuracyRow>,
}

#[derive(Debug, Serialize)]
struct EmojiStatsSummary<'a> {
    event: &'a str,
    distinct_per_tweet: bool,
    solidarity_tweets: usize,
    not_solidarity_tweets: usize,
    solidarity_emoji: u64,
    not_solidarity_emoji: u64,
    total_emoji: u64,
}

#[derive(Debug, Serialize)]
struct DiffusionSummary {
    subset: String,
    tweets: usize,
    days: Vec<String>,
    threshold: u64,
    threshold_mode: crate::diffusion::ThresholdMode,
    tz_offset: String,
    rows_before_filter: usize,
    rows_kept: usize,
    emoji_total: u64,
    emoji_kept: u64,
    sentiment_source: Option<PathBuf>,
    sentiment_misses: usize,
}

/// Runs stages against one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: Config,
    pub command_line: Vec<String>,
}

impl Pipeline {
    pub fn new(config: Config, command_line: Vec<String>) -> Self {
        Self { config, command_line }
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.out_dir.join(stage.name())
    }

    fn prepare(&self, stage: Stage) -> Result<PathBuf> {
        let dir = self.stage_dir(stage);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    fn artifact(&self, stage: Stage, file: &str) -> Result<PathBuf> {
        let path = self.stage_dir(stage).join(file);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact {
                path,
                stage: stage.name().to_string(),
            })
        }
    }

    fn read_text(&self, path: &Path, m: &mut ManifestBuilder) -> Result<String> {
        let mut r = DigestReader::open(path)?;
        let mut text = String::new();
        r.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;
        m.input(r.finish()?);
        Ok(text)
    }

    fn stopwords(&self, m: &mut ManifestBuilder) -> Result<StopList> {
        match &self.config.ingest.stopwords {
            Some(p) => {
                let text = self.read_text(p, m)?;
                Ok(text
                    .lines()
                    .map(|l| l.trim().to_lowercase())
                    .filter(|l| !l.is_empty())
                    .collect())
            }
            None => Ok(default_stopwords()),
        }
    }

    fn ingest_file(&self, path: &Path, m: &mut ManifestBuilder) -> Result<(CorpusStore, CorpusStore)> {
        let mut r = DigestReader::open(path)?;
        let raw = ingest_reader(&mut r, path, &self.config.event)?;
        m.input(r.finish()?);
        let deduped = dedupe_and_filter(raw.clone(), self.config.ingest.exact_dedupe);
        Ok((raw, deduped))
    }

    fn labeled(&self, m: &mut ManifestBuilder) -> Result<LabeledArtifact> {
        let path = self.artifact(Stage::Label, LABELED_FILE)?;
        let mut r = DigestReader::open(&path)?;
        let out = parse_labeled(&mut r, &self.config.event, &path.display().to_string())?;
        m.input(r.finish()?);
        Ok(out)
    }

    fn gazetteer(&self, m: &mut ManifestBuilder) -> Result<Gazetteer> {
        match &self.config.geo.gazetteer {
            Some(p) => Gazetteer::parse_tsv(&self.read_text(p, m)?, &p.display().to_string()),
            None => Ok(Gazetteer::builtin()),
        }
    }

    fn affected(&self) -> Result<AffectedRegionSet> {
        match &self.config.geo.affected {
            Some(codes) => AffectedRegionSet::new(&self.config.event, codes),
            None => AffectedRegionSet::builtin(&self.config.event).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no built-in affected regions for event {:?}; set [geo] affected",
                    self.config.event
                ))
            }),
        }
    }

    /// Tweets of `class`, optionally restricted to a region.
    fn subset(
        &self,
        data: &LabeledArtifact,
        class: TweetClass,
        region: RegionFilter,
        m: &mut ManifestBuilder,
    ) -> Result<Vec<crate::corpus::TweetRecord>> {
        let tweets = data.corpus.class(class);
        let wanted = match region {
            RegionFilter::All => return Ok(tweets.to_vec()),
            RegionFilter::Affected => Region::Affected,
            RegionFilter::Other => Region::Other,
        };
        let gaz = self.gazetteer(m)?;
        let regions = classify_regions(tweets, &gaz, &self.affected()?);
        Ok(select_region(tweets, &regions, wanted))
    }

    fn subset_name(&self, class: TweetClass, region: RegionFilter) -> String {
        let region = match region {
            RegionFilter::All => "all",
            RegionFilter::Affected => "affected",
            RegionFilter::Other => "other",
        };
        format!("{}_{}", class.as_str(), region)
    }

    fn finish_stage(&self, m: ManifestBuilder, dir: &Path) -> Result<RunManifest> {
        m.write(dir, &self.command_line, self.config.seed, self.config.to_json())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<RunManifest> {
        info!("stage {stage}: start");
        let out = match stage {
            Stage::Ingest => self.ingest(),
            Stage::Label => self.label(),
            Stage::Classify => self.classify(),
            Stage::EmojiStats => self.emoji_stats(),
            Stage::Geo => self.geo(),
            Stage::Network => self.network(),
            Stage::Diffusion => self.diffusion(),
        };
        match &out {
            Ok(_) => info!("stage {stage}: done"),
            Err(e) => warn!("stage {stage}: {e}"),
        }
        out
    }

    /// Run `stages` in dependency order. Ingest and label run first; the
    /// remaining stages only read the label output and run concurrently.
    /// Stops after the first failing upstream stage.
    pub fn run(&self, stages: &[Stage]) -> Vec<(Stage, Result<RunManifest>)> {
        let mut wanted: Vec<Stage> = stages.to_vec();
        wanted.sort();
        wanted.dedup();
        let mut results = Vec::new();
        let (upstream, downstream): (Vec<Stage>, Vec<Stage>) =
            wanted.into_iter().partition(|s| matches!(s, Stage::Ingest | Stage::Label));
        for s in upstream {
            let r = self.run_stage(s);
            let failed = r.is_err();
            results.push((s, r));
            if failed {
                return results;
            }
        }
        let rest: Vec<(Stage, Result<RunManifest>)> =
            downstream.par_iter().map(|&s| (s, self.run_stage(s))).collect();
        results.extend(rest);
        results
    }

    fn ingest(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Ingest)?;
        let mut m = ManifestBuilder::new("ingest");
        let src = self.config.ingest.corpus.clone().ok_or_else(|| {
            Error::InvalidArgument("ingest needs a corpus file (--corpus or [ingest] corpus)".into())
        })?;
        let (raw, store) = self.ingest_file(&src, &mut m)?;
        let stop = self.stopwords(&mut m)?;
        m.mark("read");

        let corpus_path = dir.join(CORPUS_FILE);
        let mut w = create(&corpus_path)?;
        crate::corpus::export_jsonl(&store, &stop, &StopList::new(), &mut w)?;
        finish(w, &corpus_path)?;
        m.output(&corpus_path);

        let report_path = dir.join("report.json");
        write_json(
            &report_path,
            &IngestReport {
                event: &self.config.event,
                lines_read: raw.provenance.lines_read,
                skipped_malformed: raw.provenance.skipped_malformed,
                skipped_duplicate_ids: raw.provenance.skipped_duplicate_ids,
                records_ingested: raw.len(),
                records_after_dedupe: store.len(),
                exact_dedupe: self.config.ingest.exact_dedupe,
            },
        )?;
        m.output(&report_path);
        m.mark("write");
        self.finish_stage(m, &dir)
    }

    fn label(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Label)?;
        let mut m = ManifestBuilder::new("label");
        let store = match &self.config.label.corpus {
            Some(p) => self.ingest_file(p, &mut m)?.1,
            None => {
                let path = self.artifact(Stage::Ingest, CORPUS_FILE)?;
                // Already deduplicated by the ingest stage.
                let mut r = DigestReader::open(&path)?;
                let store = ingest_reader(&mut r, &path, &self.config.event)?;
                m.input(r.finish()?);
                store
            }
        };
        let files = &self.config.label.annotations;
        if files.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "label needs exactly two annotation files, got {}",
                files.len()
            )));
        }
        let mut sets: Vec<Vec<HashtagAnnotation>> = Vec::new();
        for f in files {
            sets.push(parse_annotations(&self.read_text(f, &mut m)?, &f.display().to_string())?);
        }
        let stop = self.stopwords(&mut m)?;
        m.mark("read");

        let agreement = compute_kappa(&sets[0], &sets[1])?;
        let consensus = consensus_lexicon(&sets[0], &sets[1])?;
        let min_kappa = self.config.label.min_kappa;
        let gate_passed = match (min_kappa, agreement.kappa) {
            (None, _) => true,
            (Some(req), Some(k)) => k >= req,
            (Some(_), None) => false,
        };
        let agreement_path = dir.join("agreement.json");
        write_json(
            &agreement_path,
            &AgreementOutput {
                agreement: &agreement,
                min_kappa,
                gate_passed,
                lexicon_size: consensus.lexicon.len(),
                agreed_unrelated: &consensus.agreed_unrelated,
                disagreements: &consensus.disagreements,
            },
        )?;
        m.output(&agreement_path);
        let kappa_text = agreement
            .kappa
            .map_or_else(|| "undefined".to_string(), |k| format!("{k:.4}"));
        if !gate_passed {
            return Err(Error::AgreementBelowThreshold {
                kappa: kappa_text,
                required: min_kappa.unwrap_or_default(),
            });
        }
        if agreement.kappa.is_none_or(|k| k < 0.65) {
            warn!("inter-annotator kappa {kappa_text} is below 0.65");
        }

        let lexicon_path = dir.join(LEXICON_FILE);
        let mut w = create(&lexicon_path)?;
        consensus.lexicon.write_tsv(&mut w)?;
        finish(w, &lexicon_path)?;
        m.output(&lexicon_path);

        let labeled = distant_label(&store, &consensus.lexicon);
        m.mark("label");
        let strip: StopList = sets.iter().flatten().map(|a| a.hashtag.clone()).collect();
        let labeled_path = dir.join(LABELED_FILE);
        let mut w = create(&labeled_path)?;
        for (class, r) in labeled.iter() {
            let mut t = ExportedTweet::from_record(r, Some(preprocess(r, &stop, &strip).tokens));
            t.label = Some(class.as_str().to_string());
            let line = serde_json::to_string(&t).map_err(json_err(&labeled_path))?;
            writeln!(w, "{line}").map_err(|e| Error::io(&labeled_path, e))?;
        }
        finish(w, &labeled_path)?;
        m.output(&labeled_path);

        let summary_path = dir.join("summary.json");
        write_json(
            &summary_path,
            &LabelSummary {
                event: &self.config.event,
                input_records: store.len(),
                solidarity: labeled.solidarity.len(),
                not_solidarity: labeled.not_solidarity.len(),
                labeled_total: labeled.len(),
                dropped_conflicts: labeled.dropped_conflicts,
                dropped_unmatched: labeled.dropped_unmatched,
                lexicon_size: consensus.lexicon.len(),
            },
        )?;
        m.output(&summary_path);
        m.mark("write");
        self.finish_stage(m, &dir)
    }

    fn classify(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Classify)?;
        let mut m = ManifestBuilder::new("classify");
        let cfg = &self.config.classify;
        let seed = self.config.seed;
        let data = self.labeled(&mut m)?;
        let balanced = balance_with(&data.corpus, cfg.balance, seed)?;
        let dataset = Dataset {
            docs: balanced
                .iter()
                .map(|(_, r)| data.tokens.get(&r.id).cloned().unwrap_or_default())
                .collect(),
            labels: balanced.iter().map(|(c, _)| c).collect(),
        };
        let embeddings = match (&cfg.embeddings, cfg.models.contains(&ModelKind::Lstm)) {
            (Some(p), true) => {
                let keep: std::collections::HashSet<String> = dataset.docs.iter().flatten().cloned().collect();
                let mut r = DigestReader::open(p)?;
                let e = Embeddings::from_reader(&mut r, Some(&keep), &p.display().to_string())?;
                m.input(r.finish()?);
                Some(e)
            }
            (None, true) => {
                warn!("no embedding file given; LSTM embeddings are randomly initialized");
                None
            }
            _ => None,
        };
        m.mark("read");

        let mut rows = Vec::new();
        for &with_emoji in cfg.emojis.flags() {
            let variant = if with_emoji { "with_emoji" } else { "without_emoji" };
            let ds = if with_emoji { dataset.clone() } else { dataset.without_emoji() };
            if cfg.models.contains(&ModelKind::Linear) {
                for &mode in &cfg.features {
                    let cv = train_linear_cv(&ds, mode, cfg.folds, seed, cfg.linear, with_emoji)?;
                    let holdout = train_linear_holdout(&ds, mode, seed, cfg.linear, with_emoji)?;
                    rows.push(AccuracyRow {
                        model: "linear_svm",
                        features: Some(mode.to_string()),
                        with_emoji,
                        cv_mean_accuracy: Some(cv.mean_accuracy),
                        holdout_test_accuracy: holdout.test_accuracy,
                    });
                    let path = dir.join(format!("linear_{}_{variant}.json", slug(mode.as_str())));
                    write_json(&path, &LinearResult { cv, holdout })?;
                    m.output(&path);
                    m.mark(&format!("linear_{}_{variant}", slug(mode.as_str())));
                }
            }
            if cfg.models.contains(&ModelKind::Lstm) {
                let (model, report) = train_lstm(&dataset, embeddings.as_ref(), &cfg.lstm, with_emoji, seed)?;
                rows.push(AccuracyRow {
                    model: "lstm",
                    features: None,
                    with_emoji,
                    cv_mean_accuracy: None,
                    holdout_test_accuracy: report.test_accuracy,
                });
                let report_path = dir.join(format!("lstm_{variant}.json"));
                write_json(&report_path, &report)?;
                let ckpt = dir.join(format!("lstm_{variant}.bin"));
                let mut w = create(&ckpt)?;
                model.params.write_checkpoint(&mut w).map_err(|e| Error::io(&ckpt, e))?;
                let vocab_path = dir.join(format!("lstm_{variant}_vocab.txt"));
                let mut vw = create(&vocab_path)?;
                model.vocab.write(&mut vw).map_err(|e| Error::io(&vocab_path, e))?;
                finish(vw, &vocab_path)?;
                for p in [report_path, ckpt, vocab_path] {
                    m.output(p);
                }
                m.mark(&format!("lstm_{variant}"));
            }
        }
        let summary_path = dir.join("summary.json");
        write_json(
            &summary_path,
            &ClassifySummary {
                event: self.config.event.clone(),
                balance: cfg.balance.to_string(),
                n_solidarity: balanced.solidarity.len(),
                n_not_solidarity: balanced.not_solidarity.len(),
                results: rows,
            },
        )?;
        m.output(&summary_path);
        self.finish_stage(m, &dir)
    }

    fn emoji_stats(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::EmojiStats)?;
        let mut m = ManifestBuilder::new("emoji-stats");
        let cfg = &self.config.emoji_stats;
        let data = self.labeled(&mut m)?;
        m.mark("read");
        let tables = rank_top_k(&data.corpus, cfg.top_k, cfg.distinct_per_tweet)?;
        for table in &tables {
            let path = dir.join(format!("top_{}.csv", table.class.as_str()));
            let mut w = create(&path)?;
            write_ranked_csv(table, &mut w)?;
            finish(w, &path)?;
            m.output(&path);
        }
        let counts = count_emojis(&data.corpus, cfg.distinct_per_tweet);
        let path = dir.join("counts.json");
        write_json(
            &path,
            &EmojiStatsSummary {
                event: &self.config.event,
                distinct_per_tweet: cfg.distinct_per_tweet,
                solidarity_tweets: data.corpus.solidarity.len(),
                not_solidarity_tweets: data.corpus.not_solidarity.len(),
                solidarity_emoji: counts.solidarity,
                not_solidarity_emoji: counts.not_solidarity,
                total_emoji: counts.total(),
            },
        )?;
        m.output(&path);
        m.mark("count");
        self.finish_stage(m, &dir)
    }

    fn geo(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Geo)?;
        let mut m = ManifestBuilder::new("geo");
        let data = self.labeled(&mut m)?;
        let gaz = self.gazetteer(&mut m)?;
        let affected = self.affected()?;
        m.mark("read");
        let report = partition_emojis(&data.corpus.solidarity, &gaz, &affected);
        let path = dir.join("partition.json");
        write_json(&path, &report)?;
        m.output(&path);
        m.mark("partition");
        self.finish_stage(m, &dir)
    }

    fn network(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Network)?;
        let mut m = ManifestBuilder::new("network");
        let cfg = &self.config.network;
        let data = self.labeled(&mut m)?;
        let tweets = self.subset(&data, cfg.class, cfg.region, &mut m)?;
        let name = self.subset_name(cfg.class, cfg.region);
        m.mark("read");

        let graph = build_cooccurrence(&tweets, cfg.pair_mode).prune(cfg.min_edge_weight);
        m.mark("build");
        let edges = dir.join(format!("edges_{name}.csv"));
        let mut w = create(&edges)?;
        write_edge_csv(&graph, &mut w)?;
        finish(w, &edges)?;
        let nodes = dir.join(format!("nodes_{name}.csv"));
        let mut w = create(&nodes)?;
        write_node_csv(&graph, &mut w)?;
        finish(w, &nodes)?;
        let graphml = dir.join(format!("graph_{name}.graphml"));
        let mut w = create(&graphml)?;
        write_graphml(&graph, &mut w)?;
        finish(w, &graphml)?;
        for p in [edges, nodes, graphml] {
            m.output(p);
        }
        if graph.nodes.is_empty() {
            warn!("network {name}: no emoji in subset, SVG skipped");
        } else {
            let mut layout_cfg = cfg.layout.clone();
            layout_cfg.seed = layout_cfg.seed.wrapping_add(self.config.seed);
            let layout = layout_force_directed(&graph, &layout_cfg)?;
            m.mark("layout");
            let svg = dir.join(format!("graph_{name}.svg"));
            let mut w = create(&svg)?;
            write_svg(&graph, &layout, layout_cfg.width, layout_cfg.height, &mut w)?;
            finish(w, &svg)?;
            m.output(svg);
        }
        let summary = dir.join(format!("summary_{name}.json"));
        write_json(&summary, &summarize(&graph, 10))?;
        m.output(summary);
        m.mark("write");
        self.finish_stage(m, &dir)
    }

    fn diffusion(&self) -> Result<RunManifest> {
        let dir = self.prepare(Stage::Diffusion)?;
        let mut m = ManifestBuilder::new("diffusion");
        let cfg = &self.config.diffusion;
        let tz = config::parse_tz_offset(&cfg.tz_offset)?;
        let data = self.labeled(&mut m)?;
        let tweets = self.subset(&data, cfg.class, cfg.region, &mut m)?;
        let sentiment = match &cfg.sentiment {
            Some(p) => {
                let mut r = DigestReader::open(p)?;
                let map = SentimentMap::from_reader(&mut r, &p.display().to_string())?;
                m.input(r.finish()?);
                map
            }
            None => {
                warn!("no sentiment file given; every emoji scores 0 and rows fall back to key order");
                SentimentMap::default()
            }
        };
        let name = self.subset_name(cfg.class, cfg.region);
        m.mark("read");

        let raw = bin_by_day(&tweets, tz, &format!("{}/{name}", self.config.event));
        let threshold = cfg
            .threshold
            .or_else(|| default_threshold(&self.config.event))
            .unwrap_or(0);
        let kept = filter_threshold(&raw, threshold, cfg.threshold_mode);
        let ordered = order_by_sentiment(&kept, &sentiment);
        m.mark("bin");

        let csv_path = dir.join(format!("diffusion_{name}.csv"));
        let mut w = create(&csv_path)?;
        write_diffusion_csv(&ordered, &mut w)?;
        finish(w, &csv_path)?;
        m.output(&csv_path);
        if ordered.is_empty() {
            warn!("diffusion {name}: no emoji reach the threshold of {threshold}, SVG skipped");
        } else {
            let svg = dir.join(format!("diffusion_{name}.svg"));
            let mut w = create(&svg)?;
            write_diffusion_svg(&ordered, &mut w)?;
            finish(w, &svg)?;
            m.output(svg);
        }
        let summary = dir.join(format!("summary_{name}.json"));
        write_json(
            &summary,
            &DiffusionSummary {
                subset: raw.subset.clone(),
                tweets: tweets.len(),
                days: raw.days.iter().map(|d| d.to_string()).collect(),
                threshold,
                threshold_mode: cfg.threshold_mode,
                tz_offset: cfg.tz_offset.clone(),
                rows_before_filter: raw.rows.len(),
                rows_kept: ordered.rows.len(),
                emoji_total: raw.total(),
                emoji_kept: ordered.total(),
                sentiment_source: cfg.sentiment.clone(),
                sentiment_misses: sentiment.misses(),
            },
        )?;
        m.output(summary);
        m.mark("write");
        self.finish_stage(m, &dir)
    }
}

/// Run the configured stages (all of them when the list is empty).
pub fn run_pipeline(config: Config, command_line: Vec<String>) -> Result<Vec<RunManifest>> {
    let stages: Vec<Stage> = if config.stages.is_empty() {
        Stage::ALL.to_vec()
    } else {
        config
            .stages
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<_>>>()?
    };
    let pipeline = Pipeline::new(config, command_line);
    let mut manifests = Vec::new();
    let mut first_err = None;
    for (_, r) in pipeline.run(&stages) {
        match r {
            Ok(m) => manifests.push(m),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(manifests),
    }
}

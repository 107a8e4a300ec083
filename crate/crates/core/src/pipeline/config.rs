//! TOML run configuration. Every key is optional; command-line flags override.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//! event = "irma"
//!
//! [ingest]
//! corpus = "irma.jsonl"
//!
//! [label]
//! annotations = ["ann_a.tsv", "ann_b.tsv"]
//! min_kappa = 0.65
//!
//! [classify]
//! features = ["bigram", "tfidf", "tfidf+bigram"]
//! models = ["linear", "lstm"]
//! embeddings = "glove.6B.50d.txt"
//!
//! [diffusion]
//! class = "solidarity"
//! region = "affected"
//! sentiment = "emoji_sentiment.csv"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{BalanceStrategy, FeatureMode, LinearConfig, LstmConfig};
use crate::diffusion::ThresholdMode;
use crate::error::{Error, Result};
use crate::labeling::TweetClass;
use crate::network::{LayoutConfig, PairMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub event: String,
    /// Stages for `run`, in any order; executed in dependency order.
    pub stages: Vec<String>,
    pub ingest: IngestConfig,
    pub label: LabelConfig,
    pub classify: ClassifyConfig,
    pub emoji_stats: EmojiStatsConfig,
    pub geo: GeoConfig,
    pub network: NetworkConfig,
    pub diffusion: DiffusionConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("out"),
            threads: 0,
            event: "irma".into(),
            stages: Vec::new(),
            ingest: IngestConfig::default(),
            label: LabelConfig::default(),
            classify: ClassifyConfig::default(),
            emoji_stats: EmojiStatsConfig::default(),
            geo: GeoConfig::default(),
            network: NetworkConfig::default(),
            diffusion: DiffusionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub corpus: Option<PathBuf>,
    /// Deduplicate on exact text instead of normalized text.
    pub exact_dedupe: bool,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Read this corpus directly instead of the ingest stage output.
    pub corpus: Option<PathBuf>,
    pub annotations: Vec<PathBuf>,
    /// Fail when kappa is below this value (or undefined).
    pub min_kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmojiVariant {
    With,
    Without,
    Both,
}

impl EmojiVariant {
    pub fn flags(self) -> &'static [bool] {
        match self {
            EmojiVariant::With => &[true],
            EmojiVariant::Without => &[false],
            EmojiVariant::Both => &[true, false],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub features: Vec<FeatureMode>,
    pub models: Vec<ModelKind>,
    pub emojis: EmojiVariant,
    pub folds: usize,
    pub balance: BalanceStrategy,
    pub embeddings: Option<PathBuf>,
    pub linear: LinearConfig,
    pub lstm: LstmConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            features: vec![FeatureMode::Bigram, FeatureMode::TfIdf, FeatureMode::TfIdfPlusBigram],
            models: vec![ModelKind::Linear, ModelKind::Lstm],
            emojis: EmojiVariant::Both,
            folds: 10,
            balance: BalanceStrategy::Undersample,
            embeddings: None,
            linear: LinearConfig::default(),
            lstm: LstmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmojiStatsConfig {
    pub top_k: usize,
    /// Count each key once per tweet.
    pub distinct_per_tweet: bool,
}

impl Default for EmojiStatsConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            distinct_per_tweet: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoConfig {
    pub gazetteer: Option<PathBuf>,
    /// Overrides the built-in affected set of the event.
    pub affected: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionFilter {
    #[default]
    All,
    Affected,
    Other,
}

impl FromStr for RegionFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(RegionFilter::All),
            "affected" => Ok(RegionFilter::Affected),
            "other" => Ok(RegionFilter::Other),
            other => Err(Error::InvalidArgument(format!("unknown region filter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub class: TweetClass,
    pub region: RegionFilter,
    pub pair_mode: PairMode,
    pub min_edge_weight: u64,
    pub layout: LayoutConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            class: TweetClass::Solidarity,
            region: RegionFilter::All,
            pair_mode: PairMode::Presence,
            min_edge_weight: 1,
            layout: LayoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    pub class: TweetClass,
    pub region: RegionFilter,
    /// Defaults to 50 for irma, 25 for paris, 0 otherwise.
    pub threshold: Option<u64>,
    pub threshold_mode: ThresholdMode,
    /// Day-boundary offset from UTC, e.g. `"-04:00"`.
    pub tz_offset: String,
    pub sentiment: Option<PathBuf>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            class: TweetClass::Solidarity,
            region: RegionFilter::All,
            threshold: None,
            threshold_mode: ThresholdMode::MaxDay,
            tz_offset: "+00:00".into(),
            sentiment: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, context: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(context, e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Make relative paths in the file relative to the file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        for p in [
            self.ingest.corpus.as_mut(),
            self.label.corpus.as_mut(),
            self.ingest.stopwords.as_mut(),
            self.classify.embeddings.as_mut(),
            self.geo.gazetteer.as_mut(),
            self.diffusion.sentiment.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.label.annotations.iter_mut().for_each(fix);
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Parse `+HH:MM`, `-HH:MM`, `+HH` or `Z`.
pub fn parse_tz_offset(s: &str) -> Result<chrono::FixedOffset> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("bad timezone offset {s:?} (expected e.g. +02:00)"));
    if s.eq_ignore_ascii_case("z") || s.eq_ignore_ascii_case("utc") {
        return chrono::FixedOffset::east_opt(0).ok_or_else(bad);
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(bad()),
    };
    let (h, m) = rest.split_once(':').unwrap_or((rest, "0"));
    let h: i32 = h.parse().map_err(|_| bad())?;
    let m: i32 = m.parse().map_err(|_| bad())?;
    if h > 23 || m > 59 {
        return Err(bad());
    }
    chrono::FixedOffset::east_opt(sign * (h * 3600 + m * 60)).ok_or_else(bad)
}

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

/// Per-emoji sentiment: labelled occurrence counts and the derived score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmojiSentimentEntry {
    pub key: String,
    pub n_neg: Option<u64>,
    pub n_neut: Option<u64>,
    pub n_pos: Option<u64>,
    pub n_total: Option<u64>,
    pub score: f64,
}

impl EmojiSentimentEntry {
    pub fn from_counts(key: String, n_neg: u64, n_neut: u64, n_pos: u64) -> Option<Self> {
        let n_total = n_neg + n_neut + n_pos;
        if n_total == 0 {
            return None;
        }
        let score = (n_pos as f64 - n_neg as f64) / n_total as f64;
        Some(Self {
            key,
            n_neg: Some(n_neg),
            n_neut: Some(n_neut),
            n_pos: Some(n_pos),
            n_total: Some(n_total),
            score,
        })
    }
}

/// Sentiment lookup table keyed by emoji counting key.
#[derive(Debug, Default)]
pub struct SentimentMap {
    entries: BTreeMap<String, EmojiSentimentEntry>,
    skipped_rows: usize,
    misses: AtomicUsize,
}

impl SentimentMap {
    pub fn from_entries(entries: impl IntoIterator<Item = EmojiSentimentEntry>) -> Self {
        Self {
            entries: entries.into_iter().map(|e| (e.key.clone(), e)).collect(),
            ..Self::default()
        }
    }

    /// Parse a sentiment CSV. Accepts `emoji,n_neg,n_neut,n_pos` or
    /// `emoji,score`, with or without a header row. Header names may also be
    /// the long forms (`Negative`, `Neutral`, `Positive`, `Sentiment`).
    pub fn from_reader<R: Read>(reader: R, context: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = rdr.records();

        let first = match rows.next() {
            Some(r) => r.map_err(|source| Error::Csv {
                context: context.to_string(),
                source,
            })?,
            None => return Err(Error::EmptyInput(format!("sentiment file {context}"))),
        };

        let columns = if first.len() >= 2 && first[1].parse::<f64>().is_err() {
            Columns::from_header(&first).ok_or_else(|| {
                Error::parse(context, "header must name an emoji column and counts or a score")
            })?
        } else {
            Columns::positional(first.len())
                .ok_or_else(|| Error::parse(context, "expected 2 or 4 columns"))?
        };

        let mut map = SentimentMap::default();
        let headerless = columns.positional;
        let first_row = headerless.then_some(Ok(first));
        for (line_no, row) in first_row.into_iter().chain(rows).enumerate() {
            let parsed = row.ok().and_then(|r| columns.parse_row(&r));
            match parsed {
                Some(entry) => {
                    map.entries.entry(entry.key.clone()).or_insert(entry);
                }
                None => {
                    map.skipped_rows += 1;
                    warn!("{context}: skipping malformed sentiment row {}", line_no + 1);
                }
            }
        }
        if map.entries.is_empty() {
            return Err(Error::EmptyInput(format!(
                "sentiment file {context} has no valid rows"
            )));
        }
        Ok(map)
    }

    pub fn get(&self, key: &str) -> Option<&EmojiSentimentEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn skipped_rows(&self) -> usize {
        self.skipped_rows
    }

    /// Number of lookups that fell back to the neutral default.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

struct Columns {
    emoji: usize,
    counts: Option<(usize, usize, usize)>,
    score: Option<usize>,
    positional: bool,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Option<Self> {
        let find = |names: &[&str]| {
            header
                .iter()
                .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
        };
        let emoji = find(&["emoji", "key", "char"])?;
        let counts = match (
            find(&["n_neg", "negative", "neg"]),
            find(&["n_neut", "neutral", "neut"]),
            find(&["n_pos", "positive", "pos"]),
        ) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let score = find(&["score", "sentiment", "sentiment_score"]);
        (counts.is_some() || score.is_some()).then_some(Self {
            emoji,
            counts,
            score,
            positional: false,
        })
    }

    fn positional(width: usize) -> Option<Self> {
        match width {
            2 => Some(Self {
                emoji: 0,
                counts: None,
                score: Some(1),
                positional: true,
            }),
            4 => Some(Self {
                emoji: 0,
                counts: Some((1, 2, 3)),
                score: None,
                positional: true,
            }),
            _ => None,
        }
    }

    fn parse_row(&self, row: &csv::StringRecord) -> Option<EmojiSentimentEntry> {
        let key = parse_emoji_field(row.get(self.emoji)?)?;
        if let Some(col) = self.score {
            let score: f64 = row.get(col)?.parse().ok()?;
            if !(-1.0..=1.0).contains(&score) {
                return None;
            }
            let mut entry = EmojiSentimentEntry {
                key,
                n_neg: None,
                n_neut: None,
                n_pos: None,
                n_total: None,
                score,
            };
            if let Some((a, b, c)) = self.counts {
                if let (Some(neg), Some(neut), Some(pos)) =
                    (num(row, a), num(row, b), num(row, c))
                {
                    entry.n_neg = Some(neg);
                    entry.n_neut = Some(neut);
                    entry.n_pos = Some(pos);
                    entry.n_total = Some(neg + neut + pos);
                }
            }
            return Some(entry);
        }
        let (a, b, c) = self.counts?;
        EmojiSentimentEntry::from_counts(key, num(row, a)?, num(row, b)?, num(row, c)?)
    }
}

fn num(row: &csv::StringRecord, col: usize) -> Option<u64> {
    row.get(col)?.parse().ok()
}

/// Accepts the emoji itself or a hex codepoint list such as `0x2764`,
/// `U+1F1EB U+1F1F7` or `1f1eb-1f1f7`. Returns the variation-selector-free key.
fn parse_emoji_field(field: &str) -> Option<String> {
    let field = field.trim();
    if field.is_empty() {
        return None;
    }
    let looks_hex = field.is_ascii()
        && field.len() > 1
        && field
            .split(|c: char| c == '-' || c == ' ' || c == '_')
            .filter(|p| !p.is_empty())
            .all(|p| {
                let p = p
                    .trim_start_matches("0x")
                    .trim_start_matches("U+")
                    .trim_start_matches("u+");
                !p.is_empty() && p.len() >= 2 && p.chars().all(|c| c.is_ascii_hexdigit())
            });
    let text: String = if looks_hex {
        field
            .split(|c: char| c == '-' || c == ' ' || c == '_')
            .filter(|p| !p.is_empty())
            .map(|p| {
                let p = p
                    .trim_start_matches("0x")
                    .trim_start_matches("U+")
                    .trim_start_matches("u+");
                u32::from_str_radix(p, 16).ok().and_then(char::from_u32)
            })
            .collect::<Option<String>>()?
    } else {
        field.to_string()
    };
    let key: String = text
        .chars()
        .filter(|&c| c != '\u{FE0F}' && c != '\u{FE0E}')
        .collect();
    (!key.is_empty()).then_some(key)
}

/// Load a sentiment CSV from disk.
pub fn load_sentiment(path: impl AsRef<Path>) -> Result<SentimentMap> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    SentimentMap::from_reader(file, &path.display().to_string())
}

/// Score for `key`; unknown emoji score neutral 0.0 and bump the miss counter.
pub fn sentiment_of(key: &str, map: &SentimentMap) -> f64 {
    match map.entries.get(key) {
        Some(e) => e.score,
        None => {
            map.misses.fetch_add(1, Ordering::Relaxed);
            0.0
        }
    }
}

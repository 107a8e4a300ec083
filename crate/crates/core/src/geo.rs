//! Offline location resolution and affected-region emoji partitions.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::TweetRecord;
use crate::emoji::extract_emoji;
use crate::error::{Error, Result};

const BUILTIN_GAZETTEER: &str = include_str!("../data/gazetteer.tsv");

/// Lowercase, strip diacritics, map punctuation other than commas to spaces,
/// collapse whitespace and drop empty comma segments.
pub fn normalize_place(raw: &str) -> String {
    let folded: String = raw
        .nfkd()
        .filter(|&c| !is_combining_mark(c))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c == ',' { c } else { ' ' })
        .collect();
    folded
        .split(',')
        .map(|seg| seg.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|seg| !seg.is_empty())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Normalized place name → ISO 3166-1 alpha-2 code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub entries: HashMap<String, String>,
    pub source: String,
    /// Names listed again with a different code; the first listing wins.
    pub shadowed: usize,
}

impl Gazetteer {
    /// The shipped gazetteer: countries, US states, major and Caribbean cities.
    pub fn builtin() -> Self {
        Self::parse_tsv(BUILTIN_GAZETTEER, "builtin").expect("shipped gazetteer parses")
    }

    /// `name<TAB>code` lines; `#` starts a comment line.
    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let mut g = Gazetteer {
            entries: HashMap::new(),
            source: source.to_string(),
            shadowed: 0,
        };
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, code) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source, format!("line {}: expected name<TAB>code", n + 1)))?;
            let code = code.trim().to_ascii_uppercase();
            if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(Error::parse(source, format!("line {}: bad country code {code:?}", n + 1)));
            }
            let key = normalize_place(name);
            if key.is_empty() {
                continue;
            }
            match g.entries.get(&key) {
                Some(existing) if *existing != code => g.shadowed += 1,
                Some(_) => {}
                None => {
                    g.entries.insert(key, code);
                }
            }
        }
        if g.entries.is_empty() {
            return Err(Error::EmptyInput(format!("gazetteer {source}")));
        }
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Country for a free-form location string.
///
/// Tries the whole normalized string, then each comma segment from the
/// right, then token n-grams (longest first, rightmost first).
pub fn resolve_location(raw: &str, gaz: &Gazetteer) -> Option<String> {
    let norm = normalize_place(raw);
    if norm.is_empty() {
        return None;
    }
    if let Some(code) = gaz.get(&norm) {
        return Some(code.to_string());
    }
    let segments: Vec<&str> = norm.split(", ").collect();
    if let Some(code) = segments.iter().rev().find_map(|s| gaz.get(s)) {
        return Some(code.to_string());
    }
    for seg in segments.iter().rev() {
        let tokens: Vec<&str> = seg.split(' ').collect();
        for n in (1..=tokens.len().min(3)).rev() {
            for start in (0..=tokens.len() - n).rev() {
                if let Some(code) = gaz.get(&tokens[start..start + n].join(" ")) {
                    return Some(code.to_string());
                }
            }
        }
    }
    None
}

/// Countries directly hit by an event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectedRegionSet {
    pub event_tag: String,
    pub countries: BTreeSet<String>,
}

pub const IRMA_AFFECTED: [&str; 13] = [
    "US", "AG", "MF", "BL", "AI", "KN", "VG", "VI", "DO", "PR", "HT", "TC", "CU",
];
pub const PARIS_AFFECTED: [&str; 1] = ["FR"];

impl AffectedRegionSet {
    pub fn new(event_tag: &str, countries: impl IntoIterator<Item = impl AsRef<str>>) -> Result<Self> {
        let countries: BTreeSet<String> = countries
            .into_iter()
            .map(|c| c.as_ref().trim().to_ascii_uppercase())
            .filter(|c| !c.is_empty())
            .collect();
        if countries.is_empty() {
            return Err(Error::InvalidArgument(format!("affected region set for {event_tag} is empty")));
        }
        Ok(Self {
            event_tag: event_tag.to_string(),
            countries,
        })
    }

    /// Built-in sets for `irma` and `paris`.
    pub fn builtin(event_tag: &str) -> Option<Self> {
        let codes: &[&str] = match event_tag.to_ascii_lowercase().as_str() {
            "irma" => &IRMA_AFFECTED,
            "paris" => &PARIS_AFFECTED,
            _ => return None,
        };
        Self::new(event_tag, codes).ok()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.countries.contains(code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Affected,
    Other,
    Unresolved,
}

/// Emoji occurrences in geotagged solidarity tweets, affected vs. other regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub event: String,
    pub affected_emoji_count: u64,
    pub other_emoji_count: u64,
    /// Percentages of resolved emoji; both 0 when nothing resolved.
    pub affected_pct: f64,
    pub other_pct: f64,
    pub affected_tweets: usize,
    pub other_tweets: usize,
    pub unresolved_tweets: usize,
    pub unresolved_emoji_count: u64,
}

/// Region of each tweet, in input order.
pub fn classify_regions(tweets: &[TweetRecord], gaz: &Gazetteer, affected: &AffectedRegionSet) -> Vec<Region> {
    tweets
        .par_iter()
        .map(|t| {
            match t.user_location.as_deref().and_then(|loc| resolve_location(loc, gaz)) {
                Some(code) if affected.contains(&code) => Region::Affected,
                Some(_) => Region::Other,
                None => Region::Unresolved,
            }
        })
        .collect()
}

/// Tweets of one region, input order preserved.
pub fn select_region(tweets: &[TweetRecord], regions: &[Region], region: Region) -> Vec<TweetRecord> {
    tweets
        .iter()
        .zip(regions)
        .filter(|(_, r)| **r == region)
        .map(|(t, _)| t.clone())
        .collect()
}

pub fn partition_emojis(tweets: &[TweetRecord], gaz: &Gazetteer, affected: &AffectedRegionSet) -> PartitionReport {
    let regions = classify_regions(tweets, gaz, affected);
    let mut r = PartitionReport {
        event: affected.event_tag.clone(),
        affected_emoji_count: 0,
        other_emoji_count: 0,
        affected_pct: 0.0,
        other_pct: 0.0,
        affected_tweets: 0,
        other_tweets: 0,
        unresolved_tweets: 0,
        unresolved_emoji_count: 0,
    };
    for (t, region) in tweets.iter().zip(&regions) {
        let n = extract_emoji(&t.text).len() as u64;
        match region {
            Region::Affected => {
                r.affected_tweets += 1;
                r.affected_emoji_count += n;
            }
            Region::Other => {
                r.other_tweets += 1;
                r.other_emoji_count += n;
            }
            Region::Unresolved => {
                r.unresolved_tweets += 1;
                r.unresolved_emoji_count += n;
            }
        }
    }
    let total = r.affected_emoji_count + r.other_emoji_count;
    if total > 0 {
        r.affected_pct = 100.0 * r.affected_emoji_count as f64 / total as f64;
        r.other_pct = 100.0 * r.other_emoji_count as f64 / total as f64;
    }
    r
}

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_emoji, key_hex};
use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::labeling::{LabeledCorpus, TweetClass};

/// Total emoji occurrences per class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmojiCounts {
    pub solidarity: u64,
    pub not_solidarity: u64,
}

impl EmojiCounts {
    pub fn total(&self) -> u64 {
        self.solidarity + self.not_solidarity
    }
}

fn keys_of(text: &str, distinct_per_tweet: bool) -> Vec<String> {
    let keys = extract_emoji(text).into_iter().map(|s| s.key);
    if distinct_per_tweet {
        keys.collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        keys.collect()
    }
}

/// Occurrence count per emoji key over `tweets`.
///
/// Workers build partial maps that are merged by addition, so the result
/// does not depend on scheduling.
pub fn count_keys(tweets: &[TweetRecord], distinct_per_tweet: bool) -> BTreeMap<String, u64> {
    tweets
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<String, u64>, t| {
            for key in keys_of(&t.text, distinct_per_tweet) {
                *acc.entry(key).or_default() += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

/// Total emoji-sequence occurrences per class.
pub fn count_emojis(corpus: &LabeledCorpus, distinct_per_tweet: bool) -> EmojiCounts {
    let total = |tweets: &[TweetRecord]| -> u64 {
        tweets
            .par_iter()
            .map(|t| keys_of(&t.text, distinct_per_tweet).len() as u64)
            .sum()
    };
    EmojiCounts {
        solidarity: total(&corpus.solidarity),
        not_solidarity: total(&corpus.not_solidarity),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEmojiRow {
    pub rank: usize,
    pub key: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEmojiTable {
    pub class: TweetClass,
    pub event: String,
    pub rows: Vec<RankedEmojiRow>,
}

/// Top `k` keys by count; ties broken by codepoint order of the key.
pub fn rank_keys(counts: &BTreeMap<String, u64>, k: usize) -> Vec<RankedEmojiRow> {
    let mut items: Vec<(&String, &u64)> = counts.iter().collect();
    // String order on UTF-8 is codepoint order.
    items.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    items
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (key, &count))| RankedEmojiRow {
            rank: i + 1,
            key: key.clone(),
            count,
        })
        .collect()
}

/// Ranked tables for the solidarity and not-solidarity sides of `corpus`.
pub fn rank_top_k(
    corpus: &LabeledCorpus,
    k: usize,
    distinct_per_tweet: bool,
) -> Result<[RankedEmojiTable; 2]> {
    if k == 0 {
        return Err(Error::InvalidArgument("top-k requires k >= 1".into()));
    }
    let table = |class: TweetClass| RankedEmojiTable {
        class,
        event: corpus.event_tag.clone(),
        rows: rank_keys(&count_keys(corpus.class(class), distinct_per_tweet), k),
    };
    Ok([
        table(TweetClass::Solidarity),
        table(TweetClass::NotSolidarity),
    ])
}

/// CSV export: `rank,emoji,codepoints_hex,count`.
pub fn write_ranked_csv<W: Write>(table: &RankedEmojiTable, out: W) -> Result<()> {
    let csv_err = |source| Error::Csv {
        context: "ranked table".into(),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "emoji", "codepoints_hex", "count"])
        .map_err(csv_err)?;
    for row in &table.rows {
        w.write_record([
            row.rank.to_string(),
            row.key.clone(),
            key_hex(&row.key),
            row.count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::io("ranked table", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_break_by_codepoint() {
        let counts: BTreeMap<String, u64> = [("b", 5), ("a", 5), ("c", 1)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let rows = rank_keys(&counts, 2);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].key.as_str(), rows[0].rank), ("a", 1));
        assert_eq!((rows[1].key.as_str(), rows[1].rank), ("b", 2));
    }

    #[test]
    fn short_table_when_few_keys() {
        let counts: BTreeMap<String, u64> = [("\u{1F64F}".to_string(), 3)].into();
        assert_eq!(rank_keys(&counts, 10).len(), 1);
    }

    #[test]
    fn csv_layout() {
        let table = RankedEmojiTable {
            class: TweetClass::Solidarity,
            event: "paris".into(),
            rows: vec![RankedEmojiRow {
                rank: 1,
                key: "\u{1F1EB}\u{1F1F7}".into(),
                count: 7,
            }],
        };
        let mut buf = Vec::new();
        write_ranked_csv(&table, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "rank,emoji,codepoints_hex,count\n1,\u{1F1EB}\u{1F1F7},1f1eb-1f1f7,7\n"
        );
    }
}

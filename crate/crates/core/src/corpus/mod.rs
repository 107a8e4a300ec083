//! Tweet ingestion, deduplication and normalised export.

mod tokenize;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub use self::tokenize::{
    default_stopwords, extract_hashtags, load_stopwords, preprocess, tokenize, StopList, TokenList,
};
use crate::error::{Error, Result};

/// One ingested post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub user_location: Option<String>,
    /// `#`-prefixed tokens of `text`, lowercased, `#` removed.
    pub hashtags: Vec<String>,
    pub is_retweet: bool,
}

impl TweetRecord {
    /// Build a record, deriving hashtags from the text. `created_at` is
    /// truncated to whole seconds.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        created_at: DateTime<Utc>,
        user_location: Option<String>,
        is_retweet: bool,
    ) -> Self {
        let text = text.into();
        let created_at = DateTime::from_timestamp(created_at.timestamp(), 0).unwrap_or(created_at);
        Self {
            id: id.into(),
            hashtags: extract_hashtags(&text),
            text,
            created_at,
            user_location,
            is_retweet,
        }
    }
}

/// Where a store came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub source: PathBuf,
    pub ingested_at: DateTime<Utc>,
    pub lines_read: usize,
    pub skipped_malformed: usize,
    pub skipped_duplicate_ids: usize,
}

#[derive(Debug, Clone)]
pub struct CorpusStore {
    pub records: Vec<TweetRecord>,
    pub event_tag: String,
    pub provenance: Provenance,
}

impl CorpusStore {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Num(u64),
}

#[derive(Deserialize)]
struct RawTweet {
    id: RawId,
    text: String,
    created_at: String,
    #[serde(default)]
    user_location: Option<String>,
    #[serde(default)]
    retweeted: Option<bool>,
}

/// Parse RFC 3339 or the classic Twitter API format
/// (`Fri Nov 13 22:00:00 +0000 2015`).
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y"))
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

fn looks_like_retweet(text: &str) -> bool {
    text.starts_with("RT @")
}

fn parse_line(line: &str) -> Option<TweetRecord> {
    let raw: RawTweet = serde_json::from_str(line).ok()?;
    let id = match raw.id {
        RawId::Str(s) => s,
        RawId::Num(n) => n.to_string(),
    };
    if id.is_empty() {
        return None;
    }
    let created_at = parse_timestamp(&raw.created_at)?;
    let is_retweet = raw
        .retweeted
        .unwrap_or_else(|| looks_like_retweet(&raw.text));
    let location = raw.user_location.filter(|l| !l.trim().is_empty());
    Some(TweetRecord::new(id, raw.text, created_at, location, is_retweet))
}

/// Ingest JSONL from any reader. `source` is used for provenance and messages.
pub fn ingest_reader<R: Read>(reader: R, source: &Path, event_tag: &str) -> Result<CorpusStore> {
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut lines_read = 0;
    let mut skipped_malformed = 0;
    let mut skipped_duplicate_ids = 0;

    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        lines_read += 1;
        match parse_line(&line) {
            Some(rec) if seen_ids.insert(rec.id.clone()) => records.push(rec),
            Some(rec) => {
                skipped_duplicate_ids += 1;
                warn!("{}:{}: duplicate id {}", source.display(), n + 1, rec.id);
            }
            None => {
                skipped_malformed += 1;
                warn!("{}:{}: skipping malformed line", source.display(), n + 1);
            }
        }
    }

    if records.is_empty() {
        return Err(Error::EmptyCorpus(source.display().to_string()));
    }
    Ok(CorpusStore {
        records,
        event_tag: event_tag.to_string(),
        provenance: Provenance {
            source: source.to_path_buf(),
            ingested_at: Utc::now(),
            lines_read,
            skipped_malformed,
            skipped_duplicate_ids,
        },
    })
}

/// Read one tweet per line from `path`.
pub fn ingest_jsonl(path: impl AsRef<Path>, event_tag: &str) -> Result<CorpusStore> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, path, event_tag)
}

/// Duplicate-detection key: NFC, lowercase, URLs removed, whitespace collapsed.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect::<String>().to_lowercase();
    nfc.split_whitespace()
        .filter(|chunk| !tokenize::is_url(chunk))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drop retweets and keep the earliest record (then smallest id) of every
/// group sharing a duplicate key. Survivors keep their relative order.
///
/// With `exact` the raw text is the key instead of [`normalize_text`].
pub fn dedupe_and_filter(store: CorpusStore, exact: bool) -> CorpusStore {
    let key_of = |r: &TweetRecord| {
        if exact {
            r.text.clone()
        } else {
            normalize_text(&r.text)
        }
    };

    let mut best: HashMap<String, usize> = HashMap::new();
    for (i, r) in store.records.iter().enumerate() {
        if r.is_retweet {
            continue;
        }
        best.entry(key_of(r))
            .and_modify(|j| {
                let cur = &store.records[*j];
                if (r.created_at, &r.id) < (cur.created_at, &cur.id) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let keep: HashSet<usize> = best.into_values().collect();

    let CorpusStore {
        records,
        event_tag,
        provenance,
    } = store;
    let records = records
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| keep.contains(&i).then_some(r))
        .collect();
    CorpusStore {
        records,
        event_tag,
        provenance,
    }
}

/// Serialized form shared by the normalized-corpus and labeled-corpus exports.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ExportedTweet {
    pub id: String,
    pub text: String,
    pub created_at: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub user_location: Option<String>,
    pub retweeted: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tokens: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

impl ExportedTweet {
    pub fn from_record(r: &TweetRecord, tokens: Option<Vec<String>>) -> Self {
        Self {
            id: r.id.clone(),
            text: r.text.clone(),
            created_at: r.created_at.to_rfc3339_opts(SecondsFormat::Secs, true),
            user_location: r.user_location.clone(),
            retweeted: r.is_retweet,
            tokens,
            label: None,
        }
    }

    pub fn to_record(&self) -> Option<TweetRecord> {
        Some(TweetRecord::new(
            self.id.clone(),
            self.text.clone(),
            parse_timestamp(&self.created_at)?,
            self.user_location.clone(),
            self.retweeted,
        ))
    }
}

/// Write the store as JSONL in the input schema plus a `tokens` array.
pub fn export_jsonl<W: Write>(
    store: &CorpusStore,
    stop_list: &StopList,
    strip_hashtags: &StopList,
    mut out: W,
) -> Result<()> {
    for r in &store.records {
        let tokens = preprocess(r, stop_list, strip_hashtags).tokens;
        let line = serde_json::to_string(&ExportedTweet::from_record(r, Some(tokens))).map_err(
            |source| Error::Json {
                context: "corpus export".into(),
                source,
            },
        )?;
        writeln!(out, "{line}").map_err(|e| Error::io("corpus export", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Result<CorpusStore> {
        ingest_reader(text.as_bytes(), Path::new("fixture.jsonl"), "paris")
    }

    fn rec(id: &str, text: &str, secs: i64, rt: bool) -> TweetRecord {
        TweetRecord::new(id, text, DateTime::from_timestamp(secs, 0).unwrap(), None, rt)
    }

    fn store(records: Vec<TweetRecord>) -> CorpusStore {
        CorpusStore {
            records,
            event_tag: "t".into(),
            provenance: Provenance {
                source: "mem".into(),
                ingested_at: DateTime::UNIX_EPOCH,
                lines_read: 0,
                skipped_malformed: 0,
                skipped_duplicate_ids: 0,
            },
        }
    }

    #[test]
    fn ingest_maps_fields() {
        let s = ingest(
            r#"{"id":"1","text":"stay safe #PrayForParis","created_at":"2015-11-13T22:00:00Z"}"#,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        let r = &s.records[0];
        assert_eq!(r.hashtags, vec!["prayforparis"]);
        assert_eq!(r.created_at.timestamp(), 1_447_452_000);
        assert!(!r.is_retweet);
        assert_eq!(s.event_tag, "paris");
    }

    #[test]
    fn empty_file_is_fatal() {
        assert!(matches!(ingest(""), Err(Error::EmptyCorpus(_))));
        assert!(matches!(ingest("not json\n"), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn malformed_lines_are_counted() {
        let text = "{\"id\":\"1\",\"text\":\"a\",\"created_at\":\"2017-09-06T00:00:00Z\"}\n\
                    {\"id\":\"2\",\"text\":\"b\"\n\
                    {\"id\":3,\"text\":\"c\",\"created_at\":\"Wed Sep 06 10:00:00 +0000 2017\"}\n";
        let s = ingest(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.provenance.skipped_malformed, 1);
        assert_eq!(s.records[1].id, "3");
    }

    #[test]
    fn bad_timestamp_and_duplicate_id_rejected() {
        let text = "{\"id\":\"1\",\"text\":\"a\",\"created_at\":\"yesterday\"}\n\
                    {\"id\":\"2\",\"text\":\"b\",\"created_at\":\"2017-09-06T00:00:00Z\"}\n\
                    {\"id\":\"2\",\"text\":\"c\",\"created_at\":\"2017-09-06T00:00:00Z\"}\n";
        let s = ingest(text).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.provenance.skipped_malformed, 1);
        assert_eq!(s.provenance.skipped_duplicate_ids, 1);
    }

    #[test]
    fn retweet_detection() {
        let text = "{\"id\":\"1\",\"text\":\"RT @x: hi\",\"created_at\":\"2017-09-06T00:00:00Z\"}\n\
                    {\"id\":\"2\",\"text\":\"RT @x: hi\",\"created_at\":\"2017-09-06T00:00:00Z\",\"retweeted\":false}\n\
                    {\"id\":\"3\",\"text\":\"hi\",\"created_at\":\"2017-09-06T00:00:00Z\",\"retweeted\":true}\n";
        let s = ingest(text).unwrap();
        let flags: Vec<bool> = s.records.iter().map(|r| r.is_retweet).collect();
        assert_eq!(flags, vec![true, false, true]);
    }

    #[test]
    fn dedupe_drops_retweet_copy() {
        let s = store(vec![rec("1", "same", 10, false), rec("2", "same", 5, true)]);
        let out = dedupe_and_filter(s, false);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].id, "1");
    }

    #[test]
    fn dedupe_case_insensitive_keeps_earliest() {
        let s = store(vec![
            rec("a", "Stay Safe Florida", 20, false),
            rec("b", "other", 1, false),
            rec("c", "stay  safe florida https://t.co/x", 10, false),
            rec("d", "STAY SAFE FLORIDA", 10, false),
        ]);
        let out = dedupe_and_filter(s.clone(), false);
        let ids: Vec<&str> = out.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["b", "c"]);

        let exact = dedupe_and_filter(s, true);
        assert_eq!(exact.records.len(), 4);
    }

    #[test]
    fn dedupe_identity_on_clean_store() {
        let s = store(vec![rec("1", "a", 1, false), rec("2", "b", 2, false)]);
        let out = dedupe_and_filter(s.clone(), false);
        assert_eq!(out.records, s.records);
    }

    #[test]
    fn normalize_rules() {
        assert_eq!(
            normalize_text("  Caf\u{0065}\u{0301}\tHTTP://x.y  Ok "),
            "caf\u{00e9} ok"
        );
    }

    #[test]
    fn export_then_reingest() {
        let s = store(vec![
            TweetRecord::new(
                "9",
                "\u{1F64F} #Irma stay safe",
                DateTime::from_timestamp(1_504_700_000, 0).unwrap(),
                Some("Miami, FL".into()),
                false,
            ),
            rec("10", "RT @a: b", 5, true),
        ]);
        let mut buf = Vec::new();
        export_jsonl(&s, &default_stopwords(), &StopList::new(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"tokens\":[\"\u{1F64F}\",\"#irma\",\"stay\",\"safe\"]"));
        let back = ingest(&text).unwrap();
        assert_eq!(back.records, s.records);
    }
}

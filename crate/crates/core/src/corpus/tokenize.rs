//! Tweet tokenizer and stopword handling.
//!
//! Text is NFC-normalised and lowercased, URLs are dropped, emoji sequences
//! become single tokens (their counting key), `#`/`@` prefixed words survive
//! whole, and everything else splits on whitespace and punctuation.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::TweetRecord;
use crate::emoji::extract_emoji;
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenList {
    pub tokens: Vec<String>,
    pub source_id: String,
}

pub type StopList = HashSet<String>;

fn parse_word_list(text: &str) -> StopList {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// The shipped 179-word English list.
pub fn default_stopwords() -> StopList {
    parse_word_list(DEFAULT_STOPWORDS)
}

/// One word per line, UTF-8.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<StopList> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

pub(crate) fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Split a run of non-emoji text into word, `#tag` and `@user` tokens.
fn scan_words(segment: &str, out: &mut Vec<String>) {
    let mut current = String::new();
    let mut prev_word = false;
    for c in segment.chars() {
        if is_word_char(c) {
            current.push(c);
            prev_word = true;
            continue;
        }
        let only_prefix = current == "#" || current == "@";
        if !current.is_empty() && !only_prefix {
            out.push(std::mem::take(&mut current));
        } else {
            current.clear();
        }
        if (c == '#' || c == '@') && !prev_word {
            current.push(c);
        }
        prev_word = false;
    }
    if !current.is_empty() && current != "#" && current != "@" {
        out.push(current);
    }
}

/// Tokenize raw tweet text without any filtering.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect::<String>().to_lowercase();
    let mut tokens = Vec::new();
    for chunk in normalized.split_whitespace() {
        if is_url(chunk) {
            continue;
        }
        let mut cursor = 0;
        for seq in extract_emoji(chunk) {
            scan_words(&chunk[cursor..seq.span.start], &mut tokens);
            tokens.push(seq.key);
            cursor = seq.span.end;
        }
        scan_words(&chunk[cursor..], &mut tokens);
    }
    tokens
}

/// Lowercased hashtags (without `#`) in text order.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter_map(|t| t.strip_prefix('#').map(str::to_string))
        .collect()
}

/// Tokenize `record` and drop stopwords and stripped hashtags.
///
/// A token matches a `strip_hashtags` entry with or without its leading `#`.
pub fn preprocess(record: &TweetRecord, stop_list: &StopList, strip_hashtags: &StopList) -> TokenList {
    let tokens = tokenize(&record.text)
        .into_iter()
        .filter(|t| !stop_list.contains(t))
        .filter(|t| !strip_hashtags.contains(t.strip_prefix('#').unwrap_or(t)))
        .collect();
    TokenList {
        tokens,
        source_id: record.id.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str) -> TweetRecord {
        TweetRecord::new("1", text, chrono::DateTime::UNIX_EPOCH, None, false)
    }

    fn set(words: &[&str]) -> StopList {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stopwords_and_stripped_hashtags() {
        let r = record("We Stand With Paris #PrayForParis");
        let got = preprocess(&r, &set(&["we", "with"]), &set(&["prayforparis"]));
        assert_eq!(got.tokens, vec!["stand", "paris"]);
        assert_eq!(got.source_id, "1");
    }

    #[test]
    fn bare_word_matching_stripped_hashtag_is_removed() {
        let r = record("prayforparis tonight");
        let got = preprocess(&r, &set(&[]), &set(&["prayforparis"]));
        assert_eq!(got.tokens, vec!["tonight"]);
    }

    #[test]
    fn empty_text() {
        assert!(preprocess(&record(""), &set(&[]), &set(&[])).tokens.is_empty());
    }

    #[test]
    fn emoji_kept_as_tokens() {
        let got = preprocess(&record("\u{1F64F}\u{1F64F} irma"), &set(&[]), &set(&[]));
        assert_eq!(got.tokens, vec!["\u{1F64F}", "\u{1F64F}", "irma"]);
    }

    #[test]
    fn punctuation_urls_mentions() {
        let got = tokenize("RT @FEMA: Stay safe, Florida!! https://t.co/xyz #Irma2017 \u{2764}\u{FE0F}us");
        assert_eq!(
            got,
            vec!["rt", "@fema", "stay", "safe", "florida", "#irma2017", "\u{2764}", "us"]
        );
    }

    #[test]
    fn hashtags_need_a_boundary() {
        assert_eq!(extract_hashtags("a#b #C_d ##e # #"), vec!["c_d", "e"]);
        assert_eq!(extract_hashtags("(#PrayForParis)"), vec!["prayforparis"]);
    }

    #[test]
    fn default_list_size() {
        assert_eq!(default_stopwords().len(), 179);
    }
}

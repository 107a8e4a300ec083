//! Emoji sequence extraction, counting and sentiment lookup.
//!
//! Extraction walks the text left to right and at every position takes the
//! longest well-formed emoji sequence that starts there. A sequence is built
//! from one or more *elements* joined by U+200D:
//!
//! * a regional-indicator pair (flag),
//! * a keycap (`[0-9#*]`, optional U+FE0F, U+20E3),
//! * an emoji scalar optionally followed by a skin-tone modifier (only when
//!   the scalar is an `Emoji_Modifier_Base`) or by a tag run ending in
//!   U+E007F (subdivision flags),
//!
//! with any variation selector after an element absorbed into the sequence.
//! Property data comes from the generated [`tables`] module.

mod sentiment;
mod stats;
pub mod tables;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use self::sentiment::{load_sentiment, sentiment_of, EmojiSentimentEntry, SentimentMap};
pub use self::stats::{
    count_emojis, count_keys, rank_keys, rank_top_k, write_ranked_csv, EmojiCounts, RankedEmojiRow,
    RankedEmojiTable,
};
pub use self::tables::UNICODE_VERSION;

const ZWJ: char = '\u{200D}';
const VS15: char = '\u{FE0E}';
const VS16: char = '\u{FE0F}';
const KEYCAP: char = '\u{20E3}';
const CANCEL_TAG: char = '\u{E007F}';

/// Structural class of an extracted sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Single,
    ModifierSequence,
    ZwjSequence,
    Flag,
    Keycap,
    /// Base emoji followed by tag characters and a cancel tag, e.g. the
    /// subdivision flag of England.
    TagSequence,
}

/// One user-perceived emoji found in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiSequence {
    /// Scalars exactly as they appear in the source, variation selectors included.
    pub codepoints: Vec<char>,
    /// Counting key: the scalars with U+FE0E/U+FE0F removed.
    pub key: String,
    pub kind: SequenceKind,
    /// Byte range of the sequence in the source text.
    pub span: Range<usize>,
}

impl EmojiSequence {
    /// Codepoints of the key as lowercase hex joined by `-` (e.g. `1f1eb-1f1f7`).
    pub fn key_hex(&self) -> String {
        key_hex(&self.key)
    }
}

/// Lowercase dash-joined hex of the scalars in `key`.
pub fn key_hex(key: &str) -> String {
    key.chars()
        .map(|c| format!("{:x}", c as u32))
        .collect::<Vec<_>>()
        .join("-")
}

fn in_table(table: &[(u32, u32)], c: char) -> bool {
    let c = c as u32;
    table
        .binary_search_by(|&(lo, hi)| {
            if hi < c {
                std::cmp::Ordering::Less
            } else if lo > c {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
        .is_ok()
}

/// True for scalars with the `Emoji` property, excluding the ASCII keycap
/// bases (`0-9`, `#`, `*`) which only count inside keycap sequences.
pub fn is_emoji_scalar(c: char) -> bool {
    !c.is_ascii() && in_table(tables::EMOJI, c)
}

pub fn is_emoji_presentation(c: char) -> bool {
    in_table(tables::EMOJI_PRESENTATION, c)
}

pub fn is_modifier_base(c: char) -> bool {
    in_table(tables::EMOJI_MODIFIER_BASE, c)
}

/// Skin-tone modifiers U+1F3FB..U+1F3FF.
pub fn is_modifier(c: char) -> bool {
    ('\u{1F3FB}'..='\u{1F3FF}').contains(&c)
}

pub fn is_regional_indicator(c: char) -> bool {
    ('\u{1F1E6}'..='\u{1F1FF}').contains(&c)
}

fn is_tag(c: char) -> bool {
    ('\u{E0020}'..='\u{E007E}').contains(&c)
}

fn is_keycap_base(c: char) -> bool {
    c.is_ascii_digit() || c == '#' || c == '*'
}

fn is_variation_selector(c: char) -> bool {
    c == VS15 || c == VS16
}

/// Parse one element starting at `i`; returns its end index and kind.
fn parse_element(chars: &[(usize, char)], i: usize) -> Option<(usize, SequenceKind)> {
    let n = chars.len();
    let c = chars[i].1;
    let at = |j: usize| if j < n { Some(chars[j].1) } else { None };

    if is_regional_indicator(c) {
        return Some(match at(i + 1) {
            Some(next) if is_regional_indicator(next) => (i + 2, SequenceKind::Flag),
            // unpaired indicator
            _ => (i + 1, SequenceKind::Single),
        });
    }

    if is_keycap_base(c) {
        let mut j = i + 1;
        if at(j) == Some(VS16) {
            j += 1;
        }
        return (at(j) == Some(KEYCAP)).then_some((j + 1, SequenceKind::Keycap));
    }

    if !is_emoji_scalar(c) {
        return None;
    }

    let mut j = i + 1;
    match at(j) {
        Some(m) if is_modifier(m) && is_modifier_base(c) => {
            return Some((j + 1, SequenceKind::ModifierSequence));
        }
        Some(t) if is_tag(t) => {
            while at(j).is_some_and(is_tag) {
                j += 1;
            }
            if at(j) == Some(CANCEL_TAG) {
                return Some((j + 1, SequenceKind::TagSequence));
            }
        }
        _ => {}
    }
    Some((i + 1, SequenceKind::Single))
}

fn skip_variation_selectors(chars: &[(usize, char)], mut j: usize) -> usize {
    while j < chars.len() && is_variation_selector(chars[j].1) {
        j += 1;
    }
    j
}

/// Parse a full sequence (elements joined by ZWJ) starting at `i`.
fn parse_sequence(chars: &[(usize, char)], i: usize) -> Option<(usize, SequenceKind)> {
    let (end, first_kind) = parse_element(chars, i)?;
    let mut j = skip_variation_selectors(chars, end);
    let mut joined = false;

    while j + 1 < chars.len() && chars[j].1 == ZWJ {
        match parse_element(chars, j + 1) {
            Some((next_end, kind)) if kind != SequenceKind::Keycap => {
                j = skip_variation_selectors(chars, next_end);
                joined = true;
            }
            _ => break,
        }
    }

    let kind = if joined {
        SequenceKind::ZwjSequence
    } else {
        first_kind
    };
    Some((j, kind))
}

/// Extract every emoji sequence in `text`, in text order.
///
/// Total over all Unicode input: unrecognised scalars are skipped, never an error.
pub fn extract_emoji(text: &str) -> Vec<EmojiSequence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match parse_sequence(&chars, i) {
            Some((end, kind)) => {
                let codepoints: Vec<char> = chars[i..end].iter().map(|&(_, c)| c).collect();
                let key = codepoints
                    .iter()
                    .filter(|&&c| !is_variation_selector(c))
                    .collect();
                let byte_end = chars.get(end).map_or(text.len(), |&(b, _)| b);
                out.push(EmojiSequence {
                    codepoints,
                    key,
                    kind,
                    span: chars[i].0..byte_end,
                });
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// Counting keys of every emoji occurrence in `text`.
pub fn extract_keys(text: &str) -> Vec<String> {
    extract_emoji(text).into_iter().map(|s| s.key).collect()
}

/// True when `token` is exactly one emoji sequence and nothing else.
pub fn is_emoji_token(token: &str) -> bool {
    match extract_emoji(token).as_slice() {
        [only] => only.span == (0..token.len()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(String, SequenceKind)> {
        extract_emoji(text)
            .into_iter()
            .map(|s| (s.key, s.kind))
            .collect()
    }

    #[test]
    fn flag_pair() {
        let got = extract_emoji("\u{1F1EB}\u{1F1F7}");
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind, SequenceKind::Flag);
        assert_eq!(got[0].key_hex(), "1f1eb-1f1f7");
    }

    #[test]
    fn empty_text() {
        assert!(extract_emoji("").is_empty());
        assert!(extract_emoji("plain ascii, 123 #tag *").is_empty());
    }

    #[test]
    fn modifier_then_text_then_single() {
        let got = extract_emoji("\u{1F44D}\u{1F3FD}x\u{1F64F}");
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].codepoints, vec!['\u{1F44D}', '\u{1F3FD}']);
        assert_eq!(got[0].kind, SequenceKind::ModifierSequence);
        assert_eq!(got[1].codepoints, vec!['\u{1F64F}']);
        assert_eq!(got[1].kind, SequenceKind::Single);
    }

    #[test]
    fn family_zwj() {
        let got = extract_emoji("\u{1F468}\u{200D}\u{1F469}\u{200D}\u{1F466}");
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].codepoints.len(), 5);
        assert_eq!(got[0].kind, SequenceKind::ZwjSequence);
    }

    #[test]
    fn variation_selector_merges_key() {
        let got = kinds("\u{2764}\u{FE0F} and \u{2764}");
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, got[1].0);
        assert_eq!(got[0].0, "\u{2764}");
    }

    #[test]
    fn unpaired_regional_indicator_is_single() {
        let got = kinds("a\u{1F1EB}b");
        assert_eq!(got, vec![("\u{1F1EB}".to_string(), SequenceKind::Single)]);
        // three indicators: one pair, one leftover
        let got = kinds("\u{1F1EB}\u{1F1F7}\u{1F1FA}");
        assert_eq!(got[0].1, SequenceKind::Flag);
        assert_eq!(got[1].1, SequenceKind::Single);
    }

    #[test]
    fn keycaps() {
        assert_eq!(
            kinds("1\u{FE0F}\u{20E3}")[0],
            ("1\u{20E3}".to_string(), SequenceKind::Keycap)
        );
        assert_eq!(kinds("#\u{20E3}")[0].1, SequenceKind::Keycap);
        // bare digits and a lone selector are not emoji
        assert!(kinds("2\u{FE0F} 9").is_empty());
    }

    #[test]
    fn dangling_zwj_not_consumed() {
        let got = extract_emoji("\u{1F64F}\u{200D}x");
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].codepoints, vec!['\u{1F64F}']);
        assert_eq!(got[0].kind, SequenceKind::Single);
    }

    #[test]
    fn modifier_on_non_base_is_separate() {
        let got = kinds("\u{2764}\u{1F3FB}");
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|(_, k)| *k == SequenceKind::Single));
    }

    #[test]
    fn subdivision_flag_is_tag_sequence() {
        let england = "\u{1F3F4}\u{E0067}\u{E0062}\u{E0065}\u{E006E}\u{E0067}\u{E007F}";
        let got = extract_emoji(england);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind, SequenceKind::TagSequence);
        // unterminated tag run: base only
        let got = extract_emoji("\u{1F3F4}\u{E0067}\u{E0062}");
        assert_eq!(got[0].codepoints, vec!['\u{1F3F4}']);
    }

    #[test]
    fn spans_point_into_source() {
        let text = "stay safe \u{1F64F}\u{1F3FC} #irma \u{1F1FA}\u{1F1F8}";
        for seq in extract_emoji(text) {
            let s: String = seq.codepoints.iter().collect();
            assert_eq!(&text[seq.span.clone()], s);
        }
    }

    #[test]
    fn emoji_token_check() {
        assert!(is_emoji_token("\u{1F64F}"));
        assert!(is_emoji_token("\u{2764}\u{FE0F}"));
        assert!(!is_emoji_token("\u{1F64F}\u{1F64F}"));
        assert!(!is_emoji_token("irma"));
        assert!(!is_emoji_token(""));
    }
}

//! Synthetic corpus and annotation fixtures shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const SOLIDARITY_TAGS: &[&str] = &["prayforirma", "irmastrong", "floridastrong", "standwithpr"];
pub const NOT_SOLIDARITY_TAGS: &[&str] = &["irmahoax", "climatescam", "notmyproblem"];
pub const UNRELATED_TAGS: &[&str] = &["irma", "hurricane", "weather"];
pub const SOLIDARITY_EMOJI: &[&str] = &["🙏", "❤️", "💙", "🇺🇸", "🙏🏽", "💪"];
pub const NOT_SOLIDARITY_EMOJI: &[&str] = &["😂", "🙄", "🤣", "😡"];
pub const LOCATIONS: &[&str] = &[
    "Miami, Florida",
    "San Juan, Puerto Rico",
    "London, United Kingdom",
    "Paris, France",
    "Havana, Cuba",
    "Toronto, Canada",
    "somewhere over the rainbow",
    "",
];
const WORDS: &[&str] = &[
    "storm", "safe", "family", "praying", "home", "wind", "rain", "news", "power", "help", "flood", "stay",
    "love", "strong", "lol", "fake", "media", "again", "really", "people",
];

pub struct Fixture {
    pub corpus: PathBuf,
    pub ann_a: PathBuf,
    pub ann_b: PathBuf,
    pub sentiment: PathBuf,
}

/// Deterministic corpus of `n` tweets spread over five days.
pub fn corpus_jsonl(n: usize, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..n {
        let solidarity = rng.random_bool(0.6);
        let (tags, emoji) = if solidarity {
            (SOLIDARITY_TAGS, SOLIDARITY_EMOJI)
        } else {
            (NOT_SOLIDARITY_TAGS, NOT_SOLIDARITY_EMOJI)
        };
        let mut text = String::new();
        for _ in 0..rng.random_range(3..8) {
            text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
            text.push(' ');
        }
        for _ in 0..rng.random_range(0..4) {
            text.push_str(emoji[rng.random_range(0..emoji.len())]);
        }
        write!(text, " #{}", tags[rng.random_range(0..tags.len())]).unwrap();
        if rng.random_bool(0.3) {
            write!(text, " #{}", UNRELATED_TAGS[rng.random_range(0..UNRELATED_TAGS.len())]).unwrap();
        }
        if rng.random_bool(0.02) {
            // A few conflicting tweets.
            write!(text, " #{}", NOT_SOLIDARITY_TAGS[0]).unwrap();
        }
        write!(text, " {i}").unwrap();
        let day = 6 + rng.random_range(0..5);
        let hour = rng.random_range(0..24);
        let loc = LOCATIONS[rng.random_range(0..LOCATIONS.len())];
        let line = serde_json::json!({
            "id": format!("{}", 900_000 + i),
            "text": text,
            "created_at": format!("2017-09-{day:02}T{hour:02}:15:00Z"),
            "user_location": loc,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Two annotators who agree on everything but one hashtag.
pub fn annotations() -> (String, String) {
    let mut a = String::from("hashtag\tlabel\tannotator\n");
    let mut b = a.clone();
    let rows = SOLIDARITY_TAGS
        .iter()
        .map(|t| (t, "solidarity"))
        .chain(NOT_SOLIDARITY_TAGS.iter().map(|t| (t, "not_solidarity")))
        .chain(UNRELATED_TAGS.iter().map(|t| (t, "unrelated")));
    for (i, (tag, label)) in rows.enumerate() {
        writeln!(a, "{tag}\t{label}\tA").unwrap();
        let lb = if i == 3 { "unrelated" } else { label };
        writeln!(b, "{tag}\t{lb}\tB").unwrap();
    }
    (a, b)
}

pub const SENTIMENT_CSV: &str = "emoji,score\n🙏,0.42\n❤,0.75\n💙,0.70\n💪,0.55\n😂,0.22\n🙄,-0.30\n🤣,0.25\n😡,-0.40\n";

pub fn write_fixture(dir: &Path, n: usize, seed: u64) -> Fixture {
    let f = Fixture {
        corpus: dir.join("corpus.jsonl"),
        ann_a: dir.join("ann_a.tsv"),
        ann_b: dir.join("ann_b.tsv"),
        sentiment: dir.join("sentiment.csv"),
    };
    std::fs::write(&f.corpus, corpus_jsonl(n, seed)).unwrap();
    let (a, b) = annotations();
    std::fs::write(&f.ann_a, a).unwrap();
    std::fs::write(&f.ann_b, b).unwrap();
    std::fs::write(&f.sentiment, SENTIMENT_CSV).unwrap();
    f
}

/// One non-comment line of `emoji-test.txt`.
#[derive(Debug, Clone)]
pub struct EmojiTestCase {
    pub codepoints: Vec<char>,
    pub status: String,
    pub name: String,
}

impl EmojiTestCase {
    pub fn text(&self) -> String {
        self.codepoints.iter().collect()
    }
}

pub fn emoji_test_cases() -> Vec<EmojiTestCase> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/emoji-test.txt");
    let text = std::fs::read_to_string(&path).expect("emoji-test.txt fixture");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (cps, rest) = l.split_once(';').expect("codepoint field");
            let (status, comment) = rest.split_once('#').expect("comment field");
            let codepoints = cps
                .split_whitespace()
                .map(|h| char::from_u32(u32::from_str_radix(h, 16).unwrap()).unwrap())
                .collect();
            // Comment reads "<glyph> E<version> <name>".
            let name = comment.trim().splitn(3, ' ').nth(2).unwrap_or("").to_string();
            EmojiTestCase {
                codepoints,
                status: status.trim().to_string(),
                name,
            }
        })
        .collect()
}

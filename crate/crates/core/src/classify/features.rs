//! Bag-of-words feature extraction: word bigrams, TF-IDF unigrams, or both.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    #[serde(rename = "bigram")]
    Bigram,
    #[serde(rename = "tfidf")]
    TfIdf,
    #[serde(rename = "tfidf+bigram")]
    TfIdfPlusBigram,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Bigram => "bigram",
            FeatureMode::TfIdf => "tfidf",
            FeatureMode::TfIdfPlusBigram => "tfidf+bigram",
        }
    }

    fn unigrams(self) -> bool {
        matches!(self, FeatureMode::TfIdf | FeatureMode::TfIdfPlusBigram)
    }

    fn bigrams(self) -> bool {
        matches!(self, FeatureMode::Bigram | FeatureMode::TfIdfPlusBigram)
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bigram" | "bigrams" => Ok(FeatureMode::Bigram),
            "tfidf" | "tf-idf" => Ok(FeatureMode::TfIdf),
            "tfidf+bigram" | "tfidf+bigrams" | "tf-idf+bigrams" => Ok(FeatureMode::TfIdfPlusBigram),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature mode {other:?} (expected bigram, tfidf or tfidf+bigram)"
            ))),
        }
    }
}

/// A vocabulary entry. Unigram columns precede bigram columns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Unigram(String),
    Bigram(String, String),
}

/// Sparse row: `(column, value)` pairs sorted by column, no duplicates.
pub type SparseVec = Vec<(usize, f64)>;

pub fn dot(w: &[f64], x: &SparseVec) -> f64 {
    x.iter().map(|&(j, v)| w[j] * v).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVectorizer {
    pub mode: FeatureMode,
    pub vocabulary: BTreeMap<Term, usize>,
    /// Per column; 1.0 for bigram columns (raw counts).
    pub idf: Vec<f64>,
    pub n_docs: usize,
    pub doc_freq: Vec<usize>,
    /// Scale each transformed row to unit L2 norm.
    pub normalize: bool,
}

fn terms_of<'a>(mode: FeatureMode, doc: &'a [String]) -> impl Iterator<Item = Term> + 'a {
    let uni = mode
        .unigrams()
        .then(|| doc.iter().map(|t| Term::Unigram(t.clone())))
        .into_iter()
        .flatten();
    let bi = mode
        .bigrams()
        .then(|| doc.windows(2).map(|w| Term::Bigram(w[0].clone(), w[1].clone())))
        .into_iter()
        .flatten();
    uni.chain(bi)
}

pub fn idf_value(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl FeatureVectorizer {
    pub fn fit<S: AsRef<[String]>>(docs: &[S], mode: FeatureMode) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyInput("no documents to fit a vectorizer".into()));
        }
        let mut df: BTreeMap<Term, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<Term> = terms_of(mode, doc.as_ref()).collect();
            seen.sort();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyInput(format!("empty {mode} vocabulary")));
        }
        let n_docs = docs.len();
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        let mut doc_freq = Vec::with_capacity(df.len());
        for (col, (term, count)) in df.into_iter().enumerate() {
            idf.push(match term {
                Term::Unigram(_) => idf_value(n_docs, count),
                Term::Bigram(..) => 1.0,
            });
            doc_freq.push(count);
            vocabulary.insert(term, col);
        }
        Ok(Self {
            mode,
            vocabulary,
            idf,
            n_docs,
            doc_freq,
            normalize: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Raw term counts per known column. Unseen terms are ignored.
    pub fn raw_counts(&self, doc: &[String]) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in terms_of(self.mode, doc) {
            if let Some(&col) = self.vocabulary.get(&t) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        counts.into_iter().collect()
    }

    /// Weighted row: tf·idf for unigrams, raw count for bigrams.
    pub fn transform(&self, doc: &[String]) -> SparseVec {
        let mut row = self.raw_counts(doc);
        for (col, v) in row.iter_mut() {
            *v *= self.idf[*col];
        }
        if self.normalize {
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in row.iter_mut() {
                    *v /= norm;
                }
            }
        }
        row
    }
}

//! Solidarity classifiers: linear SVM baselines and an LSTM.

pub mod features;
pub mod linear;
pub mod lstm;

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{FeatureMode, FeatureVectorizer, SparseVec, Term};
pub use linear::{train_hinge, LinearConfig, LinearModel, Loss};
pub use lstm::{
    gradient_check, lstm_forward, pad_sequence, train_lstm, Embeddings, LstmConfig, LstmModel, LstmParameters,
    LstmReport, Optimizer, Vocab,
};

use crate::corpus::{preprocess, StopList};
use crate::emoji::is_emoji_token;
use crate::error::{Error, Result};
use crate::labeling::{LabeledCorpus, TweetClass};

/// Token sequences with their classes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub docs: Vec<Vec<String>>,
    pub labels: Vec<TweetClass>,
}

impl Dataset {
    /// Preprocess every labelled record. `with_emoji = false` removes emoji tokens.
    pub fn from_labeled(corpus: &LabeledCorpus, stop: &StopList, strip_hashtags: &StopList, with_emoji: bool) -> Self {
        let (docs, labels) = corpus
            .iter()
            .map(|(class, r)| {
                let mut tokens = preprocess(r, stop, strip_hashtags).tokens;
                if !with_emoji {
                    tokens.retain(|t| !is_emoji_token(t));
                }
                (tokens, class)
            })
            .unzip();
        Self { docs, labels }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            docs: idx.iter().map(|&i| self.docs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn without_emoji(&self) -> Dataset {
        Dataset {
            docs: self
                .docs
                .iter()
                .map(|d| d.iter().filter(|t| !is_emoji_token(t)).cloned().collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }

    fn targets(&self) -> Vec<bool> {
        self.labels.iter().map(|&c| c == TweetClass::Solidarity).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceStrategy {
    Undersample,
    Oversample,
    None,
}

impl FromStr for BalanceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "undersample" => Ok(BalanceStrategy::Undersample),
            "oversample" => Ok(BalanceStrategy::Oversample),
            "none" => Ok(BalanceStrategy::None),
            other => Err(Error::InvalidArgument(format!("unknown balance strategy {other:?}"))),
        }
    }
}

impl fmt::Display for BalanceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BalanceStrategy::Undersample => "undersample",
            BalanceStrategy::Oversample => "oversample",
            BalanceStrategy::None => "none",
        })
    }
}

/// Seeded random undersampling of the majority class to the minority count.
pub fn balance_classes(corpus: &LabeledCorpus, seed: u64) -> Result<LabeledCorpus> {
    balance_with(corpus, BalanceStrategy::Undersample, seed)
}

pub fn balance_with(corpus: &LabeledCorpus, strategy: BalanceStrategy, seed: u64) -> Result<LabeledCorpus> {
    let (ns, nn) = (corpus.solidarity.len(), corpus.not_solidarity.len());
    if ns == 0 || nn == 0 {
        return Err(Error::EmptyInput(format!(
            "class balancing needs both classes (solidarity {ns}, not solidarity {nn})"
        )));
    }
    let mut out = corpus.clone();
    if ns == nn || strategy == BalanceStrategy::None {
        return Ok(out);
    }
    let big = if ns > nn { TweetClass::Solidarity } else { TweetClass::NotSolidarity };
    let small = big.opposite();
    let (n_big, n_small) = (ns.max(nn), ns.min(nn));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match strategy {
        BalanceStrategy::Undersample => {
            let mut keep = index::sample(&mut rng, n_big, n_small).into_vec();
            keep.sort_unstable();
            let src = corpus.class(big);
            *out.class_mut(big) = keep.into_iter().map(|i| src[i].clone()).collect();
        }
        BalanceStrategy::Oversample => {
            let src = corpus.class(small);
            let extra: Vec<_> = (0..n_big - n_small)
                .map(|_| src[rng.random_range(0..n_small)].clone())
                .collect();
            out.class_mut(small).extend(extra);
        }
        BalanceStrategy::None => unreachable!(),
    }
    Ok(out)
}

/// Held-out index sets for stratified `k`-fold cross-validation.
///
/// Each class is shuffled and dealt round-robin, continuing the deal across
/// classes so fold sizes stay within one of each other.
pub fn stratified_folds(labels: &[TweetClass], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [TweetClass::Solidarity, TweetClass::NotSolidarity] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::InvalidArgument(format!(
                "{} {class} examples is fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Seeded 80/10/10 train / validation / test index split.
pub fn split_train_val_test(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    (idx, val, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub protocol: String,
    pub features: FeatureMode,
    pub with_emoji: bool,
    pub n_examples: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub protocol: String,
    pub features: FeatureMode,
    pub with_emoji: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub test_accuracy: f64,
}

fn fit_and_score(train: &Dataset, test: &Dataset, mode: FeatureMode, cfg: LinearConfig, seed: u64) -> Result<f64> {
    let vec = FeatureVectorizer::fit(&train.docs, mode)?;
    let xs: Vec<SparseVec> = train.docs.iter().map(|d| vec.transform(d)).collect();
    let model = train_hinge(&xs, &train.targets(), vec.dim(), cfg, seed);
    let xt: Vec<SparseVec> = test.docs.iter().map(|d| vec.transform(d)).collect();
    Ok(model.accuracy(&xt, &test.targets()))
}

/// Stratified k-fold CV of the linear model; the vectorizer is refit per fold.
pub fn train_linear_cv(
    data: &Dataset,
    mode: FeatureMode,
    folds: usize,
    seed: u64,
    cfg: LinearConfig,
    with_emoji: bool,
) -> Result<CvReport> {
    if data.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{} examples is fewer than {folds} folds",
            data.len()
        )));
    }
    let held_out = stratified_folds(&data.labels, folds, seed)?;
    let fold_accuracies = held_out
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let mut in_test = vec![false; data.len()];
            test_idx.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
            fit_and_score(
                &data.subset(&train_idx),
                &data.subset(test_idx),
                mode,
                cfg,
                seed.wrapping_add(1 + f as u64),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvReport {
        protocol: format!("stratified_{folds}_fold"),
        features: mode,
        with_emoji,
        n_examples: data.len(),
        fold_accuracies,
        mean_accuracy,
    })
}

/// Single 80/10/10 split, scored on the test part; the validation part is unused.
pub fn train_linear_holdout(
    data: &Dataset,
    mode: FeatureMode,
    seed: u64,
    cfg: LinearConfig,
    with_emoji: bool,
) -> Result<HoldoutReport> {
    let (train, _, test) = split_train_val_test(data.len(), seed);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} examples is too few for an 80/10/10 split",
            data.len()
        )));
    }
    let test_accuracy = fit_and_score(&data.subset(&train), &data.subset(&test), mode, cfg, seed)?;
    Ok(HoldoutReport {
        protocol: "holdout_80_10_10".into(),
        features: mode,
        with_emoji,
        n_train: train.len(),
        n_test: test.len(),
        test_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TweetRecord;
    use chrono::DateTime;

    fn corpus(ns: usize, nn: usize) -> LabeledCorpus {
        let rec = |i: usize| TweetRecord::new(i.to_string(), format!("t{i}"), DateTime::UNIX_EPOCH, None, false);
        LabeledCorpus {
            event_tag: "irma".into(),
            solidarity: (0..ns).map(rec).collect(),
            not_solidarity: (ns..ns + nn).map(rec).collect(),
            ..LabeledCorpus::default()
        }
    }

    #[test]
    fn undersampling_matches_minority() {
        let c = corpus(12, 81);
        let b = balance_classes(&c, 3).unwrap();
        assert_eq!((b.solidarity.len(), b.not_solidarity.len()), (12, 12));
        assert_eq!(b.solidarity, c.solidarity);
        assert_eq!(b, balance_classes(&c, 3).unwrap());
    }

    #[test]
    fn balanced_is_identity_and_empty_is_fatal() {
        let c = corpus(5, 5);
        assert_eq!(balance_classes(&c, 1).unwrap(), c);
        assert!(balance_classes(&corpus(0, 5), 1).is_err());
    }

    #[test]
    fn oversampling_matches_majority() {
        let b = balance_with(&corpus(3, 10), BalanceStrategy::Oversample, 9).unwrap();
        assert_eq!((b.solidarity.len(), b.not_solidarity.len()), (10, 10));
    }

    #[test]
    fn folds_are_stratified_partition() {
        let labels: Vec<TweetClass> = (0..53)
            .map(|i| if i % 3 == 0 { TweetClass::Solidarity } else { TweetClass::NotSolidarity })
            .collect();
        let folds = stratified_folds(&labels, 10, 4).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        let n_s = labels.iter().filter(|&&c| c == TweetClass::Solidarity).count() as f64;
        for f in &folds {
            let s = f.iter().filter(|&&i| labels[i] == TweetClass::Solidarity).count() as f64;
            assert!((s - n_s / 10.0).abs() <= 1.0);
        }
        assert!(stratified_folds(&labels[..5], 10, 0).is_err());
    }

    #[test]
    fn split_sizes() {
        let (a, b, c) = split_train_val_test(100, 0);
        assert_eq!((a.len(), b.len(), c.len()), (80, 10, 10));
    }
}

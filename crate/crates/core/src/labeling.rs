//! Hashtag annotation agreement, consensus lexicon and distant labeling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, TweetRecord};
use crate::error::{Error, Result};

/// Annotation label for a hashtag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Solidarity,
    NotSolidarity,
    Unrelated,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Solidarity, Label::NotSolidarity, Label::Unrelated];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Solidarity => "solidarity",
            Label::NotSolidarity => "not_solidarity",
            Label::Unrelated => "unrelated",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "solidarity" => Ok(Label::Solidarity),
            "not_solidarity" => Ok(Label::NotSolidarity),
            "unrelated" => Ok(Label::Unrelated),
            other => Err(Error::parse("annotation label", format!("unknown label {other:?}"))),
        }
    }
}

/// Tweet class after distant labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TweetClass {
    Solidarity,
    NotSolidarity,
}

impl TweetClass {
    pub fn opposite(self) -> Self {
        match self {
            TweetClass::Solidarity => TweetClass::NotSolidarity,
            TweetClass::NotSolidarity => TweetClass::Solidarity,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TweetClass::Solidarity => "solidarity",
            TweetClass::NotSolidarity => "not_solidarity",
        }
    }
}

impl fmt::Display for TweetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TweetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match Label::from_str(s)? {
            Label::Solidarity => Ok(TweetClass::Solidarity),
            Label::NotSolidarity => Ok(TweetClass::NotSolidarity),
            Label::Unrelated => Err(Error::parse("class", "unrelated is not a tweet class")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashtagAnnotation {
    pub hashtag: String,
    pub label: Label,
    pub annotator: String,
}

impl HashtagAnnotation {
    pub fn new(hashtag: &str, label: Label, annotator: &str) -> Self {
        Self {
            hashtag: normalize_hashtag(hashtag),
            label,
            annotator: annotator.to_string(),
        }
    }
}

fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

/// Parse `hashtag<TAB>label<TAB>annotator` lines. A header line is skipped.
pub fn parse_annotations(text: &str, context: &str) -> Result<Vec<HashtagAnnotation>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if n == 0 && fields.first().is_some_and(|f| f.eq_ignore_ascii_case("hashtag")) {
            continue;
        }
        let [tag, label, rest @ ..] = fields.as_slice() else {
            return Err(Error::parse(context, format!("line {}: expected 3 tab-separated fields", n + 1)));
        };
        let annotator = rest.first().copied().unwrap_or("");
        let hashtag = normalize_hashtag(tag);
        if hashtag.is_empty() {
            return Err(Error::parse(context, format!("line {}: empty hashtag", n + 1)));
        }
        let label = label
            .parse()
            .map_err(|_| Error::parse(context, format!("line {}: unknown label {label:?}", n + 1)))?;
        out.push(HashtagAnnotation {
            hashtag,
            label,
            annotator: annotator.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<HashtagAnnotation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, &path.display().to_string())
}

/// Two-rater agreement over the three annotation labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub p_o: f64,
    pub p_e: f64,
    /// `None` when chance agreement is 1 (both raters used one and the same category).
    pub kappa: Option<f64>,
    /// Rows: first rater, columns: second rater, in [`Label::ALL`] order.
    pub confusion: [[u64; 3]; 3],
    pub n_items: u64,
}

fn index_annotations(anns: &[HashtagAnnotation], side: &str) -> Result<BTreeMap<String, Label>> {
    let mut map = BTreeMap::new();
    for a in anns {
        if map.insert(a.hashtag.clone(), a.label).is_some() {
            return Err(Error::InputMismatch(format!(
                "hashtag {:?} annotated twice by rater {side}",
                a.hashtag
            )));
        }
    }
    Ok(map)
}

fn join(
    a: &[HashtagAnnotation],
    b: &[HashtagAnnotation],
) -> Result<Vec<(String, Label, Label)>> {
    let ma = index_annotations(a, "a")?;
    let mb = index_annotations(b, "b")?;
    let only_a: Vec<&String> = ma.keys().filter(|k| !mb.contains_key(*k)).collect();
    let only_b: Vec<&String> = mb.keys().filter(|k| !ma.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let sample = |v: &[&String]| v.iter().take(5).map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
        return Err(Error::InputMismatch(format!(
            "{} only in a [{}], {} only in b [{}]",
            only_a.len(),
            sample(&only_a),
            only_b.len(),
            sample(&only_b)
        )));
    }
    Ok(ma
        .into_iter()
        .map(|(tag, la)| {
            let lb = mb[&tag];
            (tag, la, lb)
        })
        .collect())
}

/// Cohen's kappa between two annotators over the same hashtag set.
pub fn compute_kappa(a: &[HashtagAnnotation], b: &[HashtagAnnotation]) -> Result<AgreementReport> {
    let items = join(a, b)?;
    if items.is_empty() {
        return Err(Error::EmptyInput("no annotated hashtags".into()));
    }
    let mut confusion = [[0u64; 3]; 3];
    for (_, la, lb) in &items {
        confusion[la.index()][lb.index()] += 1;
    }
    Ok(agreement_from_confusion(confusion))
}

/// Agreement statistics for a 3×3 confusion matrix with at least one item.
pub fn agreement_from_confusion(confusion: [[u64; 3]; 3]) -> AgreementReport {
    let n: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..3).map(|i| confusion[i][i]).sum();
    let rows: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..3).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
    let marg: u128 = (0..3).map(|c| rows[c] as u128 * cols[c] as u128).sum();
    let n2 = n as u128 * n as u128;

    let p_o = trace as f64 / n as f64;
    let p_e = marg as f64 / n2 as f64;
    // (p_o - p_e) / (1 - p_e) with both scaled by n², kept in integers.
    let kappa = (marg < n2).then(|| {
        let num = n as i128 * trace as i128 - marg as i128;
        let den = n2 as i128 - marg as i128;
        num as f64 / den as f64
    });
    AgreementReport {
        p_o,
        p_e,
        kappa,
        confusion,
        n_items: n,
    }
}

/// Hashtag → class map built from annotator consensus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashtagLexicon {
    pub entries: BTreeMap<String, TweetClass>,
}

impl HashtagLexicon {
    pub fn get(&self, hashtag: &str) -> Option<TweetClass> {
        self.entries.get(hashtag).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// TSV `hashtag<TAB>label`, sorted by hashtag.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (tag, class) in &self.entries {
            writeln!(out, "{tag}\t{class}").map_err(|e| Error::io("lexicon", e))?;
        }
        Ok(())
    }

    pub fn parse_tsv(text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (tag, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(context, format!("line {}: expected hashtag<TAB>label", n + 1)))?;
            let class: TweetClass = label
                .parse()
                .map_err(|_| Error::parse(context, format!("line {}: bad label {label:?}", n + 1)))?;
            entries.insert(normalize_hashtag(tag), class);
        }
        Ok(Self { entries })
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }
}

/// Lexicon plus the hashtags that did not make it in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consensus {
    pub lexicon: HashtagLexicon,
    pub agreed_unrelated: Vec<String>,
    pub disagreements: Vec<String>,
}

/// Hashtags both annotators labelled identically as solidarity or not-solidarity.
pub fn consensus_lexicon(a: &[HashtagAnnotation], b: &[HashtagAnnotation]) -> Result<Consensus> {
    let mut out = Consensus::default();
    for (tag, la, lb) in join(a, b)? {
        match (la, lb) {
            (Label::Solidarity, Label::Solidarity) => {
                out.lexicon.entries.insert(tag, TweetClass::Solidarity);
            }
            (Label::NotSolidarity, Label::NotSolidarity) => {
                out.lexicon.entries.insert(tag, TweetClass::NotSolidarity);
            }
            (Label::Unrelated, Label::Unrelated) => out.agreed_unrelated.push(tag),
            _ => out.disagreements.push(tag),
        }
    }
    if out.lexicon.is_empty() {
        warn!("annotator consensus is empty; no tweet can be labeled");
    }
    Ok(out)
}

/// Corpus split into solidarity / not-solidarity by distant labeling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub event_tag: String,
    pub solidarity: Vec<TweetRecord>,
    pub not_solidarity: Vec<TweetRecord>,
    pub dropped_conflicts: usize,
    pub dropped_unmatched: usize,
}

impl LabeledCorpus {
    pub fn class(&self, class: TweetClass) -> &[TweetRecord] {
        match class {
            TweetClass::Solidarity => &self.solidarity,
            TweetClass::NotSolidarity => &self.not_solidarity,
        }
    }

    pub fn class_mut(&mut self, class: TweetClass) -> &mut Vec<TweetRecord> {
        match class {
            TweetClass::Solidarity => &mut self.solidarity,
            TweetClass::NotSolidarity => &mut self.not_solidarity,
        }
    }

    /// Number of retained (labelled) records.
    pub fn len(&self) -> usize {
        self.solidarity.len() + self.not_solidarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every labelled record with its class, solidarity first.
    pub fn iter(&self) -> impl Iterator<Item = (TweetClass, &TweetRecord)> {
        self.solidarity
            .iter()
            .map(|r| (TweetClass::Solidarity, r))
            .chain(self.not_solidarity.iter().map(|r| (TweetClass::NotSolidarity, r)))
    }
}

/// Class a record would get from `lex`: `Ok(Some)` when it carries hashtags of
/// exactly one class, `Ok(None)` when none match, `Err(())` on a conflict.
pub fn classify_hashtags(hashtags: &[String], lex: &HashtagLexicon) -> std::result::Result<Option<TweetClass>, ()> {
    let classes: BTreeSet<TweetClass> = hashtags.iter().filter_map(|h| lex.get(h)).collect();
    match classes.len() {
        0 => Ok(None),
        1 => Ok(classes.into_iter().next()),
        _ => Err(()),
    }
}

/// Assign each record to a class through its lexicon hashtags.
pub fn distant_label(store: &CorpusStore, lex: &HashtagLexicon) -> LabeledCorpus {
    let mut out = LabeledCorpus {
        event_tag: store.event_tag.clone(),
        ..LabeledCorpus::default()
    };
    for r in &store.records {
        match classify_hashtags(&r.hashtags, lex) {
            Ok(Some(class)) => out.class_mut(class).push(r.clone()),
            Ok(None) => out.dropped_unmatched += 1,
            Err(()) => out.dropped_conflicts += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;
    use chrono::DateTime;

    fn anns(labels: &[(&str, Label)], who: &str) -> Vec<HashtagAnnotation> {
        labels
            .iter()
            .map(|(t, l)| HashtagAnnotation::new(t, *l, who))
            .collect()
    }

    fn seq(labels: &[Label], who: &str) -> Vec<HashtagAnnotation> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| HashtagAnnotation::new(&format!("h{i}"), *l, who))
            .collect()
    }

    use Label::{NotSolidarity as N, Solidarity as S, Unrelated as U};

    #[test]
    fn perfect_agreement() {
        let a = seq(&[S, N, U, S], "a");
        let r = compute_kappa(&a, &seq(&[S, N, U, S], "b")).unwrap();
        assert_eq!(r.kappa, Some(1.0));
        assert_eq!(r.p_o, 1.0);
    }

    #[test]
    fn chance_level() {
        let r = compute_kappa(&seq(&[S, S, N, N], "a"), &seq(&[S, N, S, N], "b")).unwrap();
        assert_eq!(r.p_o, 0.5);
        assert_eq!(r.p_e, 0.5);
        assert_eq!(r.kappa, Some(0.0));
    }

    #[test]
    fn half_kappa() {
        let r = compute_kappa(&seq(&[S, S, S, N], "a"), &seq(&[S, S, N, N], "b")).unwrap();
        assert_eq!(r.p_o, 0.75);
        assert_eq!(r.p_e, 0.5);
        assert_eq!(r.kappa, Some(0.5));
        assert_eq!(r.confusion[0], [2, 1, 0]);
    }

    #[test]
    fn single_shared_category_is_undefined() {
        let r = compute_kappa(&seq(&[U, U], "a"), &seq(&[U, U], "b")).unwrap();
        assert_eq!(r.p_e, 1.0);
        assert_eq!(r.kappa, None);
    }

    #[test]
    fn mismatched_or_empty_sets() {
        let a = anns(&[("x", S)], "a");
        let b = anns(&[("y", S)], "b");
        assert!(matches!(compute_kappa(&a, &b), Err(Error::InputMismatch(_))));
        assert!(matches!(compute_kappa(&[], &[]), Err(Error::EmptyInput(_))));
        let dup = anns(&[("x", S), ("#X", N)], "a");
        assert!(matches!(compute_kappa(&dup, &a), Err(Error::InputMismatch(_))));
    }

    #[test]
    fn lexicon_from_consensus() {
        let a = anns(
            &[("prayforparis", S), ("breakingnews", N), ("irma", S), ("syrianrefugees", U)],
            "a",
        );
        let b = anns(
            &[("prayforparis", S), ("breakingnews", N), ("irma", N), ("syrianrefugees", U)],
            "b",
        );
        let c = consensus_lexicon(&a, &b).unwrap();
        assert_eq!(c.lexicon.get("prayforparis"), Some(TweetClass::Solidarity));
        assert_eq!(c.lexicon.get("breakingnews"), Some(TweetClass::NotSolidarity));
        assert_eq!(c.lexicon.get("irma"), None);
        assert_eq!(c.disagreements, vec!["irma"]);
        assert_eq!(c.agreed_unrelated, vec!["syrianrefugees"]);
    }

    #[test]
    fn empty_consensus_is_not_fatal() {
        let c = consensus_lexicon(&anns(&[("x", S)], "a"), &anns(&[("x", U)], "b")).unwrap();
        assert!(c.lexicon.is_empty());
    }

    #[test]
    fn annotation_tsv() {
        let text = "hashtag\tlabel\tannotator\n#PrayForParis\tsolidarity\tann1\nbreakingnews\tNot Solidarity\tann1\n";
        let a = parse_annotations(text, "t").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].hashtag, "prayforparis");
        assert_eq!(a[1].label, Label::NotSolidarity);
        assert!(parse_annotations("x\tmaybe\ta\n", "t").is_err());
        assert!(parse_annotations("x\n", "t").is_err());
    }

    #[test]
    fn lexicon_tsv_round_trip() {
        let mut lex = HashtagLexicon::default();
        lex.entries.insert("prayforparis".into(), TweetClass::Solidarity);
        lex.entries.insert("breakingnews".into(), TweetClass::NotSolidarity);
        let mut buf = Vec::new();
        lex.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "breakingnews\tnot_solidarity\nprayforparis\tsolidarity\n"
        );
        let back = HashtagLexicon::parse_tsv(std::str::from_utf8(&buf).unwrap(), "t").unwrap();
        assert_eq!(back, lex);
    }

    fn store_of(texts: &[&str]) -> CorpusStore {
        CorpusStore {
            records: texts
                .iter()
                .enumerate()
                .map(|(i, t)| TweetRecord::new(i.to_string(), *t, DateTime::UNIX_EPOCH, None, false))
                .collect(),
            event_tag: "paris".into(),
            provenance: Provenance {
                source: "mem".into(),
                ingested_at: DateTime::UNIX_EPOCH,
                lines_read: texts.len(),
                skipped_malformed: 0,
                skipped_duplicate_ids: 0,
            },
        }
    }

    fn lexicon() -> HashtagLexicon {
        let mut lex = HashtagLexicon::default();
        lex.entries.insert("prayforparis".into(), TweetClass::Solidarity);
        lex.entries.insert("westandwithparis".into(), TweetClass::Solidarity);
        lex.entries.insert("breakingnews".into(), TweetClass::NotSolidarity);
        lex
    }

    #[test]
    fn single_and_conflicting_records() {
        let store = store_of(&["#prayforparis", "#PrayForParis #breakingnews"]);
        let out = distant_label(&store, &lexicon());
        assert_eq!(out.solidarity.len(), 1);
        assert_eq!(out.dropped_conflicts, 1);
    }

    #[test]
    fn ten_record_fixture_counts() {
        let store = store_of(&[
            "#prayforparis",
            "#westandwithparis love",
            "#prayforparis #westandwithparis",
            "\u{1F1EB}\u{1F1F7} #PrayForParis #syrianrefugees",
            "#breakingnews shots fired",
            "#BreakingNews",
            "#breakingnews #facebook",
            "#prayforparis #breakingnews",
            "no tags at all",
            "#unannotated",
        ]);
        let out = distant_label(&store, &lexicon());
        assert_eq!(
            (out.solidarity.len(), out.not_solidarity.len(), out.dropped_conflicts, out.dropped_unmatched),
            (4, 3, 1, 2)
        );
        assert_eq!(out.len() + out.dropped_conflicts + out.dropped_unmatched, store.len());
    }
}

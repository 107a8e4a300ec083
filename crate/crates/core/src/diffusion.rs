//! Emoji-by-day count matrices, threshold filtering and sentiment ordering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Duration, FixedOffset, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;
use crate::emoji::{extract_keys, key_hex, sentiment_of, SentimentMap};
use crate::error::{Error, Result};
use crate::xml::{escape, version_comment};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Keep a row if any single day reaches the threshold.
    #[default]
    MaxDay,
    /// Keep a row only if every day reaches the threshold.
    AllDays,
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max-day" | "max_day" => Ok(ThresholdMode::MaxDay),
            "all-days" | "all_days" => Ok(ThresholdMode::AllDays),
            other => Err(Error::InvalidArgument(format!("unknown threshold mode {other:?}"))),
        }
    }
}

/// Per-day threshold used for an event when none is given.
pub fn default_threshold(event_tag: &str) -> Option<u64> {
    match event_tag.to_ascii_lowercase().as_str() {
        "irma" => Some(50),
        "paris" => Some(25),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRow {
    pub key: String,
    pub sentiment: f64,
    pub counts: Vec<u64>,
}

impl DiffusionRow {
    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSeries {
    pub days: Vec<NaiveDate>,
    pub rows: Vec<DiffusionRow>,
    pub threshold: u64,
    pub threshold_mode: ThresholdMode,
    /// Free-form subset label, e.g. `irma/solidarity/affected`.
    pub subset: String,
}

impl DiffusionSeries {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(DiffusionRow::total).sum()
    }
}

/// Calendar day of a tweet after shifting by `tz`.
pub fn day_of(t: &TweetRecord, tz: FixedOffset) -> NaiveDate {
    t.created_at.with_timezone(&tz).date_naive()
}

/// Emoji occurrence counts per day. Rows are in key order with sentiment 0;
/// the day axis runs from the first to the last tweet day with explicit zeros.
pub fn bin_by_day(tweets: &[TweetRecord], tz: FixedOffset, subset: &str) -> DiffusionSeries {
    let mut series = DiffusionSeries {
        days: Vec::new(),
        rows: Vec::new(),
        threshold: 0,
        threshold_mode: ThresholdMode::MaxDay,
        subset: subset.to_string(),
    };
    let (Some(first), Some(last)) = (
        tweets.iter().map(|t| day_of(t, tz)).min(),
        tweets.iter().map(|t| day_of(t, tz)).max(),
    ) else {
        return series;
    };
    let n_days = (last - first).num_days() as usize + 1;
    series.days = (0..n_days).map(|i| first + Duration::days(i as i64)).collect();

    let cells: BTreeMap<String, Vec<u64>> = tweets
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<String, Vec<u64>>, t| {
            let day = (day_of(t, tz) - first).num_days() as usize;
            for key in extract_keys(&t.text) {
                acc.entry(key).or_insert_with(|| vec![0; n_days])[day] += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                let row = a.entry(k).or_insert_with(|| vec![0; n_days]);
                row.iter_mut().zip(v).for_each(|(x, y)| *x += y);
            }
            a
        });
    series.rows = cells
        .into_iter()
        .map(|(key, counts)| DiffusionRow {
            key,
            sentiment: 0.0,
            counts,
        })
        .collect();
    series
}

pub fn filter_threshold(series: &DiffusionSeries, min_per_day: u64, mode: ThresholdMode) -> DiffusionSeries {
    let keep = |r: &DiffusionRow| match mode {
        ThresholdMode::MaxDay => r.max() >= min_per_day,
        ThresholdMode::AllDays => r.counts.iter().all(|&c| c >= min_per_day),
    };
    DiffusionSeries {
        days: series.days.clone(),
        rows: series.rows.iter().filter(|r| keep(r)).cloned().collect(),
        threshold: series.threshold.max(min_per_day),
        threshold_mode: mode,
        subset: series.subset.clone(),
    }
}

/// Attach sentiment scores and sort rows by score descending, then key.
pub fn order_by_sentiment(series: &DiffusionSeries, map: &SentimentMap) -> DiffusionSeries {
    let mut out = series.clone();
    for r in &mut out.rows {
        r.sentiment = sentiment_of(&r.key, map);
    }
    out.rows
        .sort_by(|a, b| b.sentiment.total_cmp(&a.sentiment).then_with(|| a.key.cmp(&b.key)));
    out
}

/// `emoji,sentiment,<day1>,...,<dayN>` with ISO dates as day headers.
pub fn write_diffusion_csv<W: Write>(series: &DiffusionSeries, out: W) -> Result<()> {
    let err = |source| Error::Csv {
        context: "diffusion csv".into(),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["emoji".to_string(), "sentiment".to_string()];
    header.extend(series.days.iter().map(|d| d.to_string()));
    w.write_record(&header).map_err(err)?;
    for r in &series.rows {
        let mut rec = vec![r.key.clone(), r.sentiment.to_string()];
        rec.extend(r.counts.iter().map(u64::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("diffusion csv", e))
}

/// Parse a CSV written by [`write_diffusion_csv`].
pub fn read_diffusion_csv<R: Read>(input: R) -> Result<DiffusionSeries> {
    let err = |source| Error::Csv {
        context: "diffusion csv".into(),
        source,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(err)?.clone();
    if header.len() < 2 || &header[0] != "emoji" || &header[1] != "sentiment" {
        return Err(Error::parse("diffusion csv", "header must start with emoji,sentiment"));
    }
    let days = header
        .iter()
        .skip(2)
        .map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d"))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse("diffusion csv", e.to_string()))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(err)?;
        let bad = |m: String| Error::parse("diffusion csv", m);
        let sentiment = rec[1].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        let counts = rec
            .iter()
            .skip(2)
            .map(|c| c.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        rows.push(DiffusionRow {
            key: rec[0].to_string(),
            sentiment,
            counts,
        });
    }
    Ok(DiffusionSeries {
        days,
        rows,
        threshold: 0,
        threshold_mode: ThresholdMode::MaxDay,
        subset: String::new(),
    })
}

const CELL: f64 = 60.0;
const ROW: f64 = 36.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Bubble chart: one column per day, one row per emoji in series order,
/// radius ∝ sqrt(count). Zero cells draw nothing.
pub fn write_diffusion_svg<W: Write>(series: &DiffusionSeries, mut out: W) -> Result<()> {
    if series.rows.is_empty() || series.days.is_empty() {
        return Err(Error::EmptyInput(format!("diffusion series {} has no rows", series.subset)));
    }
    let max = series.rows.iter().map(DiffusionRow::max).max().unwrap_or(1).max(1) as f64;
    let r_max = ROW.min(CELL) * 0.48;
    let width = LEFT + CELL * series.days.len() as f64 + 20.0;
    let height = TOP + ROW * series.rows.len() as f64 + BOTTOM;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&version_comment());
    s.push('\n');
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(s, "<title>{}</title>", escape(&series.subset));
    let x_of = |d: usize| LEFT + CELL * (d as f64 + 0.5);
    let y_of = |r: usize| TOP + ROW * (r as f64 + 0.5);
    for (i, row) in series.rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text class=\"label\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"20\" text-anchor=\"end\" dominant-baseline=\"central\">{}</text>",
            LEFT - 10.0,
            y_of(i),
            escape(&row.key)
        );
        for (d, &c) in row.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let r = r_max * (c as f64 / max).sqrt();
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\" fill=\"#2e86c1\" fill-opacity=\"0.6\"><title>{} {} {c}</title></circle>",
                x_of(d),
                y_of(i),
                key_hex(&row.key),
                series.days[d]
            );
        }
    }
    for (d, day) in series.days.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text class=\"day\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            x_of(d),
            height - BOTTOM / 2.0,
            day.format("%b %d")
        );
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes()).map_err(|e| Error::io("diffusion svg", e))
}

//! Emoji co-occurrence networks.

pub mod export;
pub mod layout;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use export::{write_edge_csv, write_graphml, write_node_csv, write_svg};
pub use layout::{layout_force_directed, Layout, LayoutConfig};

use crate::corpus::TweetRecord;
use crate::emoji::extract_keys;
use crate::error::{Error, Result};

/// How one tweet contributes to an edge weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// 1 per tweet containing both keys.
    #[default]
    Presence,
    /// count(a) × count(b) per tweet.
    Occurrences,
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "presence" => Ok(PairMode::Presence),
            "occurrences" => Ok(PairMode::Occurrences),
            other => Err(Error::InvalidArgument(format!("unknown pair mode {other:?}"))),
        }
    }
}

/// Undirected weighted graph. Edge keys are stored with `a < b`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceGraph {
    pub nodes: BTreeMap<String, u64>,
    pub edges: BTreeMap<(String, String), u64>,
}

impl CooccurrenceGraph {
    pub fn weight(&self, a: &str, b: &str) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
            .unwrap_or(0)
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.nodes {
            *self.nodes.entry(k).or_default() += v;
        }
        for (k, v) in other.edges {
            *self.edges.entry(k).or_default() += v;
        }
        self
    }

    fn add_tweet(&mut self, keys: &[String], mode: PairMode) {
        let mut counts: BTreeMap<&String, u64> = BTreeMap::new();
        for k in keys {
            *counts.entry(k).or_default() += 1;
        }
        for (k, n) in &counts {
            *self.nodes.entry((*k).clone()).or_default() += n;
        }
        let distinct: Vec<(&String, u64)> = counts.into_iter().collect();
        for (i, (a, na)) in distinct.iter().enumerate() {
            for (b, nb) in &distinct[i + 1..] {
                let w = match mode {
                    PairMode::Presence => 1,
                    PairMode::Occurrences => na * nb,
                };
                *self.edges.entry(((*a).clone(), (*b).clone())).or_default() += w;
            }
        }
    }

    /// Graph over pre-extracted key lists, one list per tweet.
    pub fn from_key_lists<S: AsRef<[String]> + Sync>(lists: &[S], mode: PairMode) -> Self {
        lists
            .par_iter()
            .fold(Self::default, |mut g, keys| {
                g.add_tweet(keys.as_ref(), mode);
                g
            })
            .reduce(Self::default, Self::merge)
    }

    /// Drop edges lighter than `min_weight`; nodes are kept.
    pub fn prune(&self, min_weight: u64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|(_, &w)| w >= min_weight)
                .map(|(k, &w)| (k.clone(), w))
                .collect(),
        }
    }

    fn adjacency(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.nodes.keys().map(|k| (k.as_str(), Vec::new())).collect();
        for (a, b) in self.edges.keys() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        adj
    }
}

/// Co-occurrence graph of the emoji keys in `tweets`.
pub fn build_cooccurrence(tweets: &[TweetRecord], mode: PairMode) -> CooccurrenceGraph {
    build_cooccurrence_with(tweets, |t| extract_keys(t), mode)
}

pub fn build_cooccurrence_with<F>(tweets: &[TweetRecord], extractor: F, mode: PairMode) -> CooccurrenceGraph
where
    F: Fn(&str) -> Vec<String> + Sync,
{
    tweets
        .par_iter()
        .fold(CooccurrenceGraph::default, |mut g, t| {
            g.add_tweet(&extractor(&t.text), mode);
            g
        })
        .reduce(CooccurrenceGraph::default, CooccurrenceGraph::merge)
}

/// Connected components, largest first, ties by member list.
pub fn components(graph: &CooccurrenceGraph) -> Vec<BTreeSet<String>> {
    let adj = graph.adjacency();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut out: Vec<BTreeSet<String>> = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            comp.insert(n.to_string());
            for &m in &adj[n] {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.iter().cmp(b.iter())));
    out
}

/// Sum of incident edge weights per node; isolated nodes get 0.
pub fn degree_centrality(graph: &CooccurrenceGraph) -> BTreeMap<String, u64> {
    let mut deg: BTreeMap<String, u64> = graph.nodes.keys().map(|k| (k.clone(), 0)).collect();
    for ((a, b), w) in &graph.edges {
        *deg.entry(a.clone()).or_default() += w;
        *deg.entry(b.clone()).or_default() += w;
    }
    deg
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub components: Vec<Vec<String>>,
    /// Node with the largest weighted degree (ties by key).
    pub center: Option<String>,
    pub top_edges: Vec<(String, String, u64)>,
}

pub fn summarize(graph: &CooccurrenceGraph, top: usize) -> NetworkSummary {
    let deg = degree_centrality(graph);
    let center = deg
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(k, _)| k.clone());
    let mut edges: Vec<(String, String, u64)> = graph
        .edges
        .iter()
        .map(|((a, b), w)| (a.clone(), b.clone(), *w))
        .collect();
    edges.sort_by(|x, y| y.2.cmp(&x.2).then_with(|| (&x.0, &x.1).cmp(&(&y.0, &y.1))));
    edges.truncate(top);
    NetworkSummary {
        n_nodes: graph.nodes.len(),
        n_edges: graph.edges.len(),
        components: components(graph).into_iter().map(|c| c.into_iter().collect()).collect(),
        center,
        top_edges: edges,
    }
}

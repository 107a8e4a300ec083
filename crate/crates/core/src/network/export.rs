//! Edge CSV, node CSV, GraphML and SVG writers.

use std::fmt::Write as _;
use std::io::Write;

use super::{degree_centrality, CooccurrenceGraph, Layout};
use crate::emoji::key_hex;
use crate::error::{Error, Result};
use crate::xml::{escape, version_comment};

fn csv_err(context: &str) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        context: context.to_string(),
        source,
    }
}

/// `a,b,weight`, one row per edge in key order.
pub fn write_edge_csv<W: Write>(graph: &CooccurrenceGraph, out: W) -> Result<()> {
    let err = csv_err("edge csv");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["a", "b", "weight"]).map_err(&err)?;
    for ((a, b), weight) in &graph.edges {
        w.write_record([a.as_str(), b.as_str(), &weight.to_string()]).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io("edge csv", e))
}

/// `emoji,codepoints_hex,count,weighted_degree`.
pub fn write_node_csv<W: Write>(graph: &CooccurrenceGraph, out: W) -> Result<()> {
    let err = csv_err("node csv");
    let deg = degree_centrality(graph);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["emoji", "codepoints_hex", "count", "weighted_degree"])
        .map_err(&err)?;
    for (key, count) in &graph.nodes {
        w.write_record([key.clone(), key_hex(key), count.to_string(), deg[key].to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io("node csv", e))
}

/// Undirected GraphML; node ids are codepoint hex, labels the emoji itself.
pub fn write_graphml<W: Write>(graph: &CooccurrenceGraph, mut out: W) -> Result<()> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"count\" for=\"node\" attr.name=\"count\" attr.type=\"long\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n");
    s.push_str("  <graph id=\"cooccurrence\" edgedefault=\"undirected\">\n");
    for (key, count) in &graph.nodes {
        let _ = writeln!(
            s,
            "    <node id=\"u{}\"><data key=\"label\">{}</data><data key=\"count\">{count}</data></node>",
            key_hex(key),
            escape(key)
        );
    }
    for ((a, b), w) in &graph.edges {
        let _ = writeln!(
            s,
            "    <edge source=\"u{}\" target=\"u{}\"><data key=\"weight\">{w}</data></edge>",
            key_hex(a),
            key_hex(b)
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    out.write_all(s.as_bytes()).map_err(|e| Error::io("graphml", e))
}

const MARGIN: f64 = 40.0;

/// Nodes as labelled circles with area ∝ count, edges with width ∝ weight.
pub fn write_svg<W: Write>(graph: &CooccurrenceGraph, layout: &Layout, width: f64, height: f64, mut out: W) -> Result<()> {
    let max_count = graph.nodes.values().copied().max().unwrap_or(1).max(1) as f64;
    let max_weight = graph.edges.values().copied().max().unwrap_or(1).max(1) as f64;
    let pos = |k: &str| -> Result<(f64, f64)> {
        layout
            .get(k)
            .map(|&(x, y)| (x + MARGIN, y + MARGIN))
            .ok_or_else(|| Error::InvalidArgument(format!("layout has no position for {k}")))
    };
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&version_comment());
    s.push('\n');
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        width + 2.0 * MARGIN,
        height + 2.0 * MARGIN,
        width + 2.0 * MARGIN,
        height + 2.0 * MARGIN
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g stroke=\"#888888\" stroke-opacity=\"0.6\">\n");
    for ((a, b), w) in &graph.edges {
        let ((x1, y1), (x2, y2)) = (pos(a)?, pos(b)?);
        let _ = writeln!(
            s,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke-width=\"{:.2}\"/>",
            0.5 + 5.5 * (*w as f64 / max_weight)
        );
    }
    s.push_str("</g>\n<g>\n");
    for (key, count) in &graph.nodes {
        let (x, y) = pos(key)?;
        let r = 6.0 + 18.0 * (*count as f64 / max_count).sqrt();
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"#f4d03f\" fill-opacity=\"0.7\" stroke=\"#7d6608\"><title>{} ({count})</title></circle>",
            key_hex(key)
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{:.1}\" text-anchor=\"middle\" dominant-baseline=\"central\">{}</text>",
            r,
            escape(key)
        );
    }
    s.push_str("</g>\n</svg>\n");
    out.write_all(s.as_bytes()).map_err(|e| Error::io("svg", e))
}

use std::collections::BTreeMap;

use chrono::{FixedOffset, TimeZone, Utc};

use emoji_solidarity::corpus::TweetRecord;
use emoji_solidarity::diffusion::{bin_by_day, read_diffusion_csv, write_diffusion_csv, write_diffusion_svg};
use emoji_solidarity::network::{
    build_cooccurrence, layout_force_directed, write_graphml, write_svg, CooccurrenceGraph, LayoutConfig, PairMode,
};

const VERSION_LINE: &str = concat!("<!-- emoji-solidarity ", env!("CARGO_PKG_VERSION"), " -->");

fn tweets() -> Vec<TweetRecord> {
    let t0 = Utc.with_ymd_and_hms(2017, 9, 7, 12, 0, 0).unwrap();
    [
        "🙏 ❤️ stay safe",
        "🙏🙏 💔 & <irma>",
        "❤️ 🇺🇸 👍🏽",
        "👨‍👩‍👦 🙏 #️⃣",
        "no emoji here",
        "🌀 🌀 🙏",
    ]
    .iter()
    .enumerate()
    .map(|(i, text)| TweetRecord::new(i.to_string(), *text, t0 + chrono::Duration::hours(20 * i as i64), None, false))
    .collect()
}

fn decode_hex(id: &str) -> String {
    id.trim_start_matches('u')
        .split('-')
        .map(|h| char::from_u32(u32::from_str_radix(h, 16).unwrap()).unwrap())
        .collect()
}

/// Graph rebuilt from GraphML text, checking labels against ids.
fn parse_graphml(text: &str) -> CooccurrenceGraph {
    let doc = roxmltree::Document::parse(text).unwrap();
    let graph_el = doc.descendants().find(|n| n.has_tag_name("graph")).unwrap();
    assert_eq!(graph_el.attribute("edgedefault"), Some("undirected"));
    let data = |n: roxmltree::Node, key: &str| -> String {
        n.children()
            .find(|c| c.has_tag_name("data") && c.attribute("key") == Some(key))
            .and_then(|c| c.text())
            .unwrap_or_default()
            .to_string()
    };
    let mut g = CooccurrenceGraph::default();
    let mut ids = BTreeMap::new();
    for n in graph_el.children().filter(|n| n.has_tag_name("node")) {
        let id = n.attribute("id").unwrap();
        let label = data(n, "label");
        assert_eq!(decode_hex(id), label, "id {id} does not spell its label");
        g.nodes.insert(label.clone(), data(n, "count").parse().unwrap());
        ids.insert(id.to_string(), label);
    }
    for e in graph_el.children().filter(|n| n.has_tag_name("edge")) {
        let a = ids[e.attribute("source").unwrap()].clone();
        let b = ids[e.attribute("target").unwrap()].clone();
        let key = if a < b { (a, b) } else { (b, a) };
        g.edges.insert(key, data(e, "weight").parse().unwrap());
    }
    g
}

#[test]
fn graphml_round_trips() {
    for mode in [PairMode::Presence, PairMode::Occurrences] {
        let g = build_cooccurrence(&tweets(), mode);
        assert!(!g.edges.is_empty());
        let mut buf = Vec::new();
        write_graphml(&g, &mut buf).unwrap();
        assert_eq!(parse_graphml(std::str::from_utf8(&buf).unwrap()), g);
    }
}

#[test]
fn network_svg_is_well_formed() {
    let g = build_cooccurrence(&tweets(), PairMode::Presence);
    let cfg = LayoutConfig::default();
    let layout = layout_force_directed(&g, &cfg).unwrap();
    let mut buf = Vec::new();
    write_svg(&g, &layout, cfg.width, cfg.height, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().nth(1), Some(VERSION_LINE));
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
    let lines = doc.descendants().filter(|n| n.has_tag_name("line")).count();
    assert_eq!(circles, g.nodes.len());
    assert_eq!(lines, g.edges.len());
    let labels: Vec<&str> = doc.descendants().filter(|n| n.has_tag_name("text")).filter_map(|n| n.text()).collect();
    assert!(labels.contains(&"🙏"));
}

#[test]
fn diffusion_svg_and_csv() {
    let tz = FixedOffset::west_opt(4 * 3600).unwrap();
    let series = bin_by_day(&tweets(), tz, "test/all");
    assert!(!series.is_empty());

    let mut csv = Vec::new();
    write_diffusion_csv(&series, &mut csv).unwrap();
    let back = read_diffusion_csv(&csv[..]).unwrap();
    assert_eq!(back.days, series.days);
    assert_eq!(back.rows, series.rows);

    let mut svg = Vec::new();
    write_diffusion_svg(&series, &mut svg).unwrap();
    let text = String::from_utf8(svg).unwrap();
    assert_eq!(text.lines().nth(1), Some(VERSION_LINE));
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let drawn: String = doc.descendants().filter_map(|n| n.text()).collect();
    for row in &series.rows {
        assert!(drawn.contains(&row.key), "{} missing from plot", row.key);
    }
}

#[test]
fn markup_in_labels_is_escaped() {
    let mut g = CooccurrenceGraph::default();
    g.nodes.insert("<&>".into(), 1);
    let mut buf = Vec::new();
    write_graphml(&g, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let label = doc.descendants().find(|n| n.has_tag_name("data")).and_then(|n| n.text());
    assert_eq!(label, Some("<&>"));
}

//! Plain-text formats for graph topologies and coverage maps.
//!
//! Edge list: one edge per line, `u v mean_latency_ms`, 0-based node ids.
//! Coverage map: one line per item, `item_id topic_id[,topic_id...]`.
//! In both, `#` starts a comment and blank lines are ignored.

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

use super::{CoverageMap, Edge, GraphTopology};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("no records found")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        message: message.into(),
    }
}

/// Yields `(1-based line number, content)` with comments stripped.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    })
}

fn read(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_edge_list(text: &str) -> Result<GraphTopology, ParseError> {
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_node = 0;
    for (line, content) in records(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(malformed(line, format!("expected `u v mean_latency_ms`, got {} fields", fields.len())));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| malformed(line, format!("invalid node id `{s}`")))
        };
        let (u, v) = (node(fields[0])?, node(fields[1])?);
        let mean_latency: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(line, format!("invalid latency `{}`", fields[2])))?;
        if !(mean_latency.is_finite() && mean_latency >= 0.0) {
            return Err(malformed(line, format!("latency must be finite and non-negative, got {mean_latency}")));
        }
        if u == v {
            return Err(malformed(line, format!("self-loop on node {u}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(malformed(line, format!("duplicate edge ({u}, {v})")));
        }
        max_node = max_node.max(u).max(v);
        edges.push(Edge { u, v, mean_latency });
    }
    if edges.is_empty() {
        return Err(ParseError::Empty);
    }
    GraphTopology::new(max_node + 1, edges).map_err(|e| ParseError::Invalid(e.to_string()))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<GraphTopology, ParseError> {
    parse_edge_list(&read(path.as_ref())?)
}

/// Item ids must cover `0..n` exactly once; the topic count is one past the
/// largest topic id.
pub fn parse_coverage_map(text: &str) -> Result<CoverageMap, ParseError> {
    let mut rows: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (line, content) in records(text) {
        let mut fields = content.split_whitespace();
        let (Some(item), Some(topics), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed(line, "expected `item_id topic_id[,topic_id...]`"));
        };
        let item: usize = item
            .parse()
            .map_err(|_| malformed(line, format!("invalid item id `{item}`")))?;
        let topics = topics
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| malformed(line, format!("invalid topic id `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, item, topics));
    }
    if rows.is_empty() {
        return Err(ParseError::Empty);
    }
    let n = rows.len();
    let mut topics_of: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut topic_count = 0;
    for (line, item, topics) in rows {
        if item >= n {
            return Err(malformed(line, format!("item id {item} outside 0..{n}")));
        }
        if topics_of[item].is_some() {
            return Err(malformed(line, format!("duplicate item {item}")));
        }
        topic_count = topics.iter().fold(topic_count, |acc, &t| acc.max(t + 1));
        topics_of[item] = Some(topics);
    }
    let topics_of = topics_of.into_iter().map(Option::unwrap).collect();
    CoverageMap::new(topics_of, topic_count).map_err(|e| ParseError::Invalid(e.to_string()))
}

pub fn load_coverage_map(path: impl AsRef<Path>) -> Result<CoverageMap, ParseError> {
    parse_coverage_map(&read(path.as_ref())?)
}

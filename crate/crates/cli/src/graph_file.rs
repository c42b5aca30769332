//! Line-delimited JSON graph files: one header record, then one record per
//! node in id order, then one record per edge in edge-id order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use smallworld::marked_graph::{Direction, Edge, EdgeKind, MarkedGraph, ModelTag, NodeMark};

use crate::error::CliError;

pub const FORMAT_NAME: &str = "smallworld-graph";

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header {
        format: String,
        version: String,
        #[serde(flatten)]
        model: ModelTag,
        seed: u64,
        nodes: usize,
        edges: usize,
        #[serde(default)]
        config: serde_json::Value,
    },
    Node {
        id: u32,
        mark: NodeMark,
    },
    /// Listed with `u < v`; `direction` is seen from `u`.
    Edge {
        u: u32,
        v: u32,
        kind: EdgeKind,
        direction: Direction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ring_distance: Option<u16>,
    },
}

/// Writes `g` with `config` embedded in the header.
pub fn write_graph(g: &MarkedGraph, config: &serde_json::Value, mut out: impl Write) -> Result<(), CliError> {
    let mut line = |r: &Record| -> Result<(), CliError> {
        serde_json::to_writer(&mut out, r).map_err(|e| CliError::io(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    };
    line(&Record::Header {
        format: FORMAT_NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        model: g.model().clone(),
        seed: g.seed(),
        nodes: g.node_count(),
        edges: g.edge_count(),
        config: config.clone(),
    })?;
    for (id, &mark) in g.marks().iter().enumerate() {
        line(&Record::Node { id: id as u32, mark })?;
    }
    for e in g.edges() {
        let mark = e.mark_at_tail();
        let (u, v, direction) =
            if e.tail < e.head { (e.tail, e.head, mark.direction) } else { (e.head, e.tail, mark.flipped().direction) };
        line(&Record::Edge { u, v, kind: e.kind, direction, ring_distance: e.ring_distance })?;
    }
    out.flush()?;
    Ok(())
}

fn bad(line: usize, what: impl std::fmt::Display) -> CliError {
    CliError::io(format!("graph file line {}: {what}", line + 1))
}

/// Reads a graph file back; edge ids and marks are preserved exactly.
pub fn read_graph(input: impl BufRead) -> Result<MarkedGraph, CliError> {
    let mut lines = input.lines().enumerate();
    let (model, seed, nodes, edges) = match lines.next() {
        Some((i, text)) => match serde_json::from_str(&text?).map_err(|e| bad(i, e))? {
            Record::Header { format, model, seed, nodes, edges, .. } if format == FORMAT_NAME => {
                (model, seed, nodes, edges)
            }
            _ => return Err(bad(i, "expected a smallworld-graph header")),
        },
        None => return Err(CliError::io("empty graph file")),
    };
    let mut marks = Vec::with_capacity(nodes);
    let mut edge_list = Vec::with_capacity(edges);
    for (i, text) in lines {
        let text = text?;
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(&text).map_err(|e| bad(i, e))? {
            Record::Node { id, mark } if id as usize == marks.len() && edge_list.is_empty() => marks.push(mark),
            Record::Edge { u, v, kind, direction, ring_distance } if u < v => {
                let (tail, head) = match direction {
                    Direction::Incoming => (v, u),
                    _ => (u, v),
                };
                edge_list.push(Edge { tail, head, kind, ring_distance });
            }
            _ => return Err(bad(i, "unexpected record")),
        }
    }
    if marks.len() != nodes || edge_list.len() != edges {
        return Err(CliError::io(format!(
            "graph file declares {nodes} nodes and {edges} edges but lists {} and {}",
            marks.len(),
            edge_list.len()
        )));
    }
    MarkedGraph::from_edges(model, seed, marks, edge_list).map_err(|e| CliError::io(e.to_string()))
}

/// The configuration recorded in a graph file header.
pub fn header_config(first_line: &str) -> Option<serde_json::Value> {
    match serde_json::from_str(first_line).ok()? {
        Record::Header { config, .. } => Some(config),
        _ => None,
    }
}

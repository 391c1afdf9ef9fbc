//! JSON and DOT serialisation.
//!
//! DOT output is one statement per line. Each edge is written `"a" -> "b"`
//! with `dir=both` and the mark at `a` as `arrowtail`, the mark at `b` as
//! `arrowhead`: `none` for a tail, `normal` for an arrow, `odot` for a
//! circle. The reader accepts exactly what the writer produces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EndpointMark, GraphKind, MixedGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub a: String,
    pub b: String,
    pub mark_a: EndpointMark,
    pub mark_b: EndpointMark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default = "default_kind")]
    pub kind: GraphKind,
    pub nodes: Vec<String>,
    pub edges: Vec<JsonEdge>,
}

fn default_kind() -> GraphKind {
    GraphKind::Pag
}

fn dot_arrow(mark: EndpointMark) -> &'static str {
    match mark {
        EndpointMark::Tail => "none",
        EndpointMark::Arrow => "normal",
        EndpointMark::Circle => "odot",
    }
}

fn parse_dot_arrow(s: &str) -> Result<EndpointMark> {
    match s {
        "none" => Ok(EndpointMark::Tail),
        "normal" => Ok(EndpointMark::Arrow),
        "odot" => Ok(EndpointMark::Circle),
        other => Err(Error::Input(format!("unknown DOT arrow style `{other}`"))),
    }
}

fn quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Reads one quoted identifier from the front of `s`, returning it and the rest.
fn unquote(s: &str) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    if chars.next().map(|(_, c)| c) != Some('"') {
        return Err(Error::Input(format!("expected quoted DOT id at `{s}`")));
    }
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            out.push(c);
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Ok((out, &s[i + 1..]));
        } else {
            out.push(c);
        }
    }
    Err(Error::Input("unterminated DOT id".into()))
}

impl MixedGraph {
    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            kind: self.kind(),
            nodes: self.names().to_vec(),
            edges: self
                .edges()
                .into_iter()
                .map(|e| JsonEdge {
                    a: self.name(e.a).to_string(),
                    b: self.name(e.b).to_string(),
                    mark_a: e.mark_a,
                    mark_b: e.mark_b,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        // serialising plain strings and enums cannot fail
        serde_json::to_string_pretty(&self.to_json_value()).expect("graph JSON") + "\n"
    }

    pub fn from_json_value(value: &GraphJson) -> Result<Self> {
        let mut g = MixedGraph::new(&value.nodes, value.kind)?;
        for e in &value.edges {
            let (a, b) = (g.node(&e.a)?, g.node(&e.b)?);
            g.add_edge(a, b, e.mark_a, e.mark_b)?;
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: GraphJson = serde_json::from_str(text)?;
        Self::from_json_value(&value)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {} {{", self.kind().as_str());
        for name in self.names() {
            let _ = writeln!(out, "  {};", quote(name));
        }
        for e in self.edges() {
            let _ = writeln!(
                out,
                "  {} -> {} [dir=both, arrowtail={}, arrowhead={}];",
                quote(self.name(e.a)),
                quote(self.name(e.b)),
                dot_arrow(e.mark_a),
                dot_arrow(e.mark_b)
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn from_dot(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Input("empty DOT input".into()))?;
        let kind = header
            .strip_prefix("digraph")
            .and_then(|rest| rest.trim().strip_suffix('{'))
            .map(str::trim)
            .ok_or_else(|| Error::Input(format!("bad DOT header `{header}`")))?;
        let kind = GraphKind::parse(kind)?;

        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut closed = false;
        for line in lines {
            if line == "}" {
                closed = true;
                break;
            }
            let body = line
                .strip_suffix(';')
                .ok_or_else(|| Error::Input(format!("DOT statement without `;`: `{line}`")))?;
            let (first, rest) = unquote(body)?;
            let rest = rest.trim();
            if rest.is_empty() {
                nodes.push(first);
                continue;
            }
            let rest = rest
                .strip_prefix("->")
                .ok_or_else(|| Error::Input(format!("bad DOT edge `{line}`")))?;
            let (second, attrs) = unquote(rest)?;
            let attrs = attrs
                .trim()
                .strip_prefix('[')
                .and_then(|a| a.strip_suffix(']'))
                .ok_or_else(|| Error::Input(format!("missing DOT attributes in `{line}`")))?;
            let (mut tail, mut head) = (None, None);
            for kv in attrs.split(',') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Input(format!("bad DOT attribute `{kv}`")))?;
                match k.trim() {
                    "arrowtail" => tail = Some(parse_dot_arrow(v.trim())?),
                    "arrowhead" => head = Some(parse_dot_arrow(v.trim())?),
                    _ => {}
                }
            }
            let (Some(mark_a), Some(mark_b)) = (tail, head) else {
                return Err(Error::Input(format!("DOT edge missing arrowtail/arrowhead: `{line}`")));
            };
            edges.push(JsonEdge { a: first, b: second, mark_a, mark_b });
        }
        if !closed {
            return Err(Error::Input("DOT graph not closed".into()));
        }
        Self::from_json_value(&GraphJson { kind, nodes, edges })
    }
}

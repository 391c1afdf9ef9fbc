//! Mixed graphs with per-endpoint marks.
//!
//! One representation covers DAGs, MAGs and PAGs. Each edge stores the mark
//! found at each of its two endpoints, so `a o-> b` is the edge with a
//! [`EndpointMark::Circle`] at `a` and an [`EndpointMark::Arrow`] at `b`.

mod classify;
mod io;
mod separation;

pub use classify::{classify_edge, EdgeClass};
pub use io::{GraphJson, JsonEdge};
pub use separation::{ancestors, d_separated, descendants, m_separated};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a node in a graph's ordered name list.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointMark {
    Tail,
    Arrow,
    Circle,
}

impl EndpointMark {
    fn left_symbol(self) -> char {
        match self {
            EndpointMark::Tail => '-',
            EndpointMark::Arrow => '<',
            EndpointMark::Circle => 'o',
        }
    }

    fn right_symbol(self) -> char {
        match self {
            EndpointMark::Tail => '-',
            EndpointMark::Arrow => '>',
            EndpointMark::Circle => 'o',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EndpointMark::Tail => "tail",
            EndpointMark::Arrow => "arrow",
            EndpointMark::Circle => "circle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Mag,
    Pag,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Dag => "dag",
            GraphKind::Mag => "mag",
            GraphKind::Pag => "pag",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dag" => Ok(GraphKind::Dag),
            "mag" => Ok(GraphKind::Mag),
            "pag" => Ok(GraphKind::Pag),
            other => Err(Error::Input(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// An edge as seen from outside the graph. Listed with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub mark_a: EndpointMark,
    pub mark_b: EndpointMark,
}

/// Violated kind-specific invariant, as reported by [`MixedGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A directed cycle, listed in traversal order.
    Cycle(Vec<String>),
    /// A DAG edge that is not `tail -> arrow`.
    NonDirectedEdgeInDag { a: String, b: String },
    CircleInMag { a: String, b: String },
    /// Undirected (tail-tail) edges encode selection bias, which is not modelled.
    TailTail { a: String, b: String },
    /// `a <-> b` where `a` is also an ancestor of `b`.
    AlmostDirectedCycle { a: String, b: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(nodes) => write!(f, "directed cycle {}", nodes.join(" -> ")),
            Violation::NonDirectedEdgeInDag { a, b } => {
                write!(f, "edge {a}-{b} is not directed in a DAG")
            }
            Violation::CircleInMag { a, b } => write!(f, "circle mark on edge {a}-{b} in a MAG"),
            Violation::TailTail { a, b } => write!(f, "tail-tail edge {a}---{b}"),
            Violation::AlmostDirectedCycle { a, b } => {
                write!(f, "almost directed cycle through {a}<->{b}")
            }
        }
    }
}

/// Node set plus marked edges.
///
/// Marks are held in a dense `n x n` table: entry `(i, j)` is the mark at `j`
/// on the edge `i *-* j`, or `None` when the nodes are not adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    kind: GraphKind,
    marks: Vec<Option<EndpointMark>>,
}

impl MixedGraph {
    /// Creates an edgeless graph. Names must be unique (case-sensitive).
    pub fn new<S: AsRef<str>>(names: &[S], kind: GraphKind) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Input("empty node name".into()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate node name `{name}`")));
            }
        }
        let n = names.len();
        Ok(Self { names, index, kind, marks: vec![None; n * n] })
    }

    /// Complete graph with circle marks on every endpoint.
    pub fn complete_circles<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut g = Self::new(names, GraphKind::Pag)?;
        let n = g.len();
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b, EndpointMark::Circle, EndpointMark::Circle)?;
            }
        }
        Ok(g)
    }

    /// Builds a graph from edge strings such as `"H o-> R"` or `"R <-> Y"`.
    ///
    /// Left symbols are `-`, `<`, `o`; right symbols are `-`, `>`, `o`; the
    /// middle character is always `-`.
    pub fn from_edge_specs<S: AsRef<str>>(names: &[S], kind: GraphKind, specs: &[&str]) -> Result<Self> {
        let mut g = Self::new(names, kind)?;
        for spec in specs {
            let parts: Vec<&str> = spec.split_whitespace().collect();
            let [a, arrow, b] = parts[..] else {
                return Err(Error::Input(format!("bad edge spec `{spec}`")));
            };
            let chars: Vec<char> = arrow.chars().collect();
            if chars.len() != 3 || chars[1] != '-' {
                return Err(Error::Input(format!("bad edge symbol `{arrow}`")));
            }
            let left = match chars[0] {
                '-' => EndpointMark::Tail,
                '<' => EndpointMark::Arrow,
                'o' => EndpointMark::Circle,
                c => return Err(Error::Input(format!("bad left mark `{c}`"))),
            };
            let right = match chars[2] {
                '-' => EndpointMark::Tail,
                '>' => EndpointMark::Arrow,
                'o' => EndpointMark::Circle,
                c => return Err(Error::Input(format!("bad right mark `{c}`"))),
            };
            let (a, b) = (g.node(a)?, g.node(b)?);
            g.add_edge(a, b, left, right)?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn set_kind(&mut self, kind: GraphKind) {
        self.kind = kind;
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    /// Looks a node up by name.
    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown node `{name}`")))
    }

    pub(crate) fn check(&self, id: NodeId) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::Input(format!("node index {id} out of range (graph has {} nodes)", self.len())))
        }
    }

    #[inline]
    fn slot(&self, from: NodeId, at: NodeId) -> usize {
        from * self.names.len() + at
    }

    /// Mark at `at` on the edge `other *-* at`, if the two are adjacent.
    #[inline]
    pub fn mark(&self, at: NodeId, other: NodeId) -> Option<EndpointMark> {
        self.marks[self.slot(other, at)]
    }

    #[inline]
    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.marks[self.slot(a, b)].is_some()
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId, mark_a: EndpointMark, mark_b: EndpointMark) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::Input(format!("self-loop on `{}`", self.names[a])));
        }
        if self.is_adjacent(a, b) {
            return Err(Error::Input(format!("duplicate edge {}-{}", self.names[a], self.names[b])));
        }
        let (ab, ba) = (self.slot(a, b), self.slot(b, a));
        self.marks[ab] = Some(mark_b);
        self.marks[ba] = Some(mark_a);
        Ok(())
    }

    /// Adds `a -> b`.
    pub fn add_directed(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        self.add_edge(a, b, EndpointMark::Tail, EndpointMark::Arrow)
    }

    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let was = self.is_adjacent(a, b);
        let (ab, ba) = (self.slot(a, b), self.slot(b, a));
        self.marks[ab] = None;
        self.marks[ba] = None;
        was
    }

    /// Overwrites the mark at `at` on an existing edge `other *-* at`.
    pub fn set_mark(&mut self, at: NodeId, other: NodeId, mark: EndpointMark) {
        let slot = self.slot(other, at);
        debug_assert!(self.marks[slot].is_some(), "set_mark on missing edge");
        self.marks[slot] = Some(mark);
    }

    /// Resets every endpoint to a circle, keeping adjacencies.
    pub fn reset_to_circles(&mut self) {
        for m in self.marks.iter_mut().flatten() {
            *m = EndpointMark::Circle;
        }
    }

    /// Neighbours of `x` in node order.
    pub fn neighbors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let n = self.len();
        (0..n).filter(move |&j| self.marks[x * n + j].is_some())
    }

    pub fn degree(&self, x: NodeId) -> usize {
        self.neighbors(x).count()
    }

    /// `a -> b`: tail at `a`, arrow at `b`.
    pub fn is_directed(&self, a: NodeId, b: NodeId) -> bool {
        self.mark(a, b) == Some(EndpointMark::Tail) && self.mark(b, a) == Some(EndpointMark::Arrow)
    }

    /// Tail-to-arrow children of `x` (definite in a PAG).
    pub fn children(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors(x).filter(move |&c| self.is_directed(x, c))
    }

    pub fn parents(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors(x).filter(move |&p| self.is_directed(p, x))
    }

    /// All edges, `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if let (Some(mark_a), Some(mark_b)) = (self.mark(a, b), self.mark(b, a)) {
                    out.push(Edge { a, b, mark_a, mark_b });
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.marks.iter().filter(|m| m.is_some()).count() / 2
    }

    /// Returns `a *-* b` rendered with marks, e.g. `H o-> R`.
    pub fn edge_string(&self, a: NodeId, b: NodeId) -> Option<String> {
        let (ma, mb) = (self.mark(a, b)?, self.mark(b, a)?);
        Some(format!("{} {}-{} {}", self.names[a], ma.left_symbol(), mb.right_symbol(), self.names[b]))
    }

    /// Edge strings in canonical order, for comparison and display.
    pub fn edge_strings(&self) -> Vec<String> {
        self.edges().iter().filter_map(|e| self.edge_string(e.a, e.b)).collect()
    }

    /// Checks the invariants of the graph's kind; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for e in self.edges() {
            let (a, b) = (self.names[e.a].clone(), self.names[e.b].clone());
            use EndpointMark::*;
            match self.kind {
                GraphKind::Dag => {
                    let directed = matches!((e.mark_a, e.mark_b), (Tail, Arrow) | (Arrow, Tail));
                    if !directed {
                        out.push(Violation::NonDirectedEdgeInDag { a, b });
                    }
                }
                GraphKind::Mag | GraphKind::Pag => {
                    if self.kind == GraphKind::Mag && (e.mark_a == Circle || e.mark_b == Circle) {
                        out.push(Violation::CircleInMag { a: a.clone(), b: b.clone() });
                    }
                    if e.mark_a == Tail && e.mark_b == Tail {
                        out.push(Violation::TailTail { a, b });
                    }
                }
            }
        }
        if let Some(cycle) = self.find_directed_cycle() {
            out.push(Violation::Cycle(cycle.into_iter().map(|i| self.names[i].clone()).collect()));
        } else if self.kind == GraphKind::Mag {
            for e in self.edges() {
                if e.mark_a == EndpointMark::Arrow && e.mark_b == EndpointMark::Arrow {
                    let (a, b) = (e.a, e.b);
                    if descendants_of(self, a).contains(&b) || descendants_of(self, b).contains(&a) {
                        out.push(Violation::AlmostDirectedCycle {
                            a: self.names[a].clone(),
                            b: self.names[b].clone(),
                        });
                    }
                }
            }
        }
        out
    }

    fn find_directed_cycle(&self) -> Option<Vec<NodeId>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<NodeId> = Vec::new();
        fn visit(g: &MixedGraph, v: NodeId, state: &mut [u8], stack: &mut Vec<NodeId>) -> Option<Vec<NodeId>> {
            state[v] = 1;
            stack.push(v);
            for c in g.children(v).collect::<Vec<_>>() {
                if state[c] == 1 {
                    let start = stack.iter().position(|&s| s == c).unwrap_or(0);
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(c);
                    return Some(cycle);
                }
                if state[c] == 0 {
                    if let Some(cy) = visit(g, c, state, stack) {
                        return Some(cy);
                    }
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        for v in 0..n {
            if state[v] == 0 {
                if let Some(cy) = visit(self, v, &mut state, &mut stack) {
                    return Some(cy);
                }
            }
        }
        None
    }

    /// Restricts the node set, keeping the edges among `keep`.
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> Result<MixedGraph> {
        let names: Vec<&str> = keep.iter().map(|&i| self.names[i].as_str()).collect();
        let mut g = MixedGraph::new(&names, self.kind)?;
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate().skip(i + 1) {
                if let (Some(ma), Some(mb)) = (self.mark(a, b), self.mark(b, a)) {
                    g.add_edge(i, j, ma, mb)?;
                }
            }
        }
        Ok(g)
    }

    /// Same graph with nodes reordered; `order[k]` is the old index of new node `k`.
    pub fn permuted(&self, order: &[NodeId]) -> Result<MixedGraph> {
        if order.len() != self.len() || order.iter().collect::<BTreeSet<_>>().len() != self.len() {
            return Err(Error::Input("permutation must list every node once".into()));
        }
        self.induced_subgraph(order)
    }

    /// Compares graphs by node names and marks, ignoring node order.
    pub fn same_structure(&self, other: &MixedGraph) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut map = Vec::with_capacity(self.len());
        for name in &self.names {
            match other.node(name) {
                Ok(j) => map.push(j),
                Err(_) => return false,
            }
        }
        for a in 0..self.len() {
            for b in 0..self.len() {
                if a != b && self.mark(b, a) != other.mark(map[b], map[a]) {
                    return false;
                }
            }
        }
        true
    }
}

fn descendants_of(g: &MixedGraph, x: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for c in g.children(v) {
            if c != x && seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

impl fmt::Display for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.kind.as_str(), self.edge_strings().join(", "))
    }
}

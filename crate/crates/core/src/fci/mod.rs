//! FCI: skeleton search, Possible-D-SEP pruning, collider orientation and
//! the circle-resolving orientation rules, producing a PAG.
//!
//! Selection bias is not modelled, so the rules that introduce undirected
//! edges (R5-R7) are absent and tail-tail edges never appear.

mod orient;
mod skeleton;

pub use orient::{apply_knowledge, apply_orientation_rules, orient_colliders, Rule};
pub use skeleton::{possible_dsep, possible_dsep_prune, skeleton_search, SearchStats};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ci::{ChiSquareTest, CiTest, DiscreteStatistic, FisherZTest};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{descendants, EndpointMark, GraphKind, MixedGraph, NodeId};
use crate::knowledge::BackgroundKnowledge;

fn unordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Separating sets recorded when edges were removed.
///
/// Pairs removed because knowledge forbids their adjacency have no
/// separating set; they are tracked separately and skipped by collider
/// orientation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepSetMap {
    sets: BTreeMap<(NodeId, NodeId), Vec<NodeId>>,
    forbidden: BTreeSet<(NodeId, NodeId)>,
}

impl SepSetMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `set` for the pair; the members of the pair are dropped from it.
    pub fn insert(&mut self, a: NodeId, b: NodeId, set: &[NodeId]) {
        let mut s: Vec<NodeId> = set.iter().copied().filter(|&v| v != a && v != b).collect();
        s.sort_unstable();
        s.dedup();
        self.sets.insert(unordered(a, b), s);
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<&[NodeId]> {
        self.sets.get(&unordered(a, b)).map(Vec::as_slice)
    }

    pub fn mark_forbidden(&mut self, a: NodeId, b: NodeId) {
        self.forbidden.insert(unordered(a, b));
    }

    pub fn is_forbidden(&self, a: NodeId, b: NodeId) -> bool {
        self.forbidden.contains(&unordered(a, b))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), &[NodeId])> {
        self.sets.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Which independence test a dataset-driven run uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    #[default]
    ChiSquare,
    GSquare,
    FisherZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FciConfig {
    pub alpha: f64,
    /// `None` means unlimited.
    pub max_cond_size: Option<usize>,
    pub enable_possible_dsep: bool,
    pub test: TestKind,
}

impl Default for FciConfig {
    fn default() -> Self {
        Self { alpha: 0.05, max_cond_size: None, enable_possible_dsep: true, test: TestKind::ChiSquare }
    }
}

impl FciConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Input(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub tests: usize,
    /// Discrete tests that had zero degrees of freedom.
    pub uninformative_tests: usize,
    pub edges_initial: usize,
    pub edges_after_skeleton: usize,
    pub edges_after_possible_dsep: usize,
    pub edges_final: usize,
    /// Times each orientation rule changed the graph.
    pub rule_firings: BTreeMap<String, usize>,
    pub knowledge_orientations: usize,
    pub conflicts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FciOutput {
    pub pag: MixedGraph,
    pub sepsets: SepSetMap,
    pub diagnostics: Diagnostics,
}

/// Runs the full pipeline on any test.
pub fn fci_run<T: CiTest + ?Sized>(test: &T, knowledge: &BackgroundKnowledge, cfg: &FciConfig) -> Result<FciOutput> {
    cfg.validate()?;
    let names = test.variables();
    if names.len() < 2 {
        return Err(Error::Input("FCI needs at least two variables".into()));
    }
    if let Some(m) = knowledge.max_node() {
        if m >= names.len() {
            return Err(Error::Input(format!("knowledge references node {m} outside {} variables", names.len())));
        }
    }
    let mut diag = Diagnostics { edges_initial: names.len() * (names.len() - 1) / 2, ..Default::default() };

    let (skeleton, mut sepsets, stats) = skeleton_search(test, knowledge, cfg)?;
    diag.tests += stats.tests;
    diag.uninformative_tests += stats.uninformative;
    diag.edges_after_skeleton = skeleton.edge_count();

    let mut graph = skeleton;
    if cfg.enable_possible_dsep {
        let provisional = orient_colliders(&graph, &sepsets)?;
        let (pruned, pruned_sets, stats) = possible_dsep_prune(&provisional, &sepsets, test, knowledge, cfg)?;
        diag.tests += stats.tests;
        diag.uninformative_tests += stats.uninformative;
        graph = pruned;
        sepsets = pruned_sets;
    }
    diag.edges_after_possible_dsep = graph.edge_count();

    let mut firings = BTreeMap::new();
    let mut conflicts = Vec::new();
    let colliders = orient::orient_colliders_counted(&mut graph, &sepsets, &mut conflicts)?;
    firings.insert(Rule::R0.to_string(), colliders);
    diag.knowledge_orientations = apply_knowledge(&mut graph, knowledge)?;
    let mut guard = orient::Guard::default();
    let counts = orient::run_rules(&mut graph, &sepsets, &mut guard)?;
    conflicts.append(&mut guard.conflicts);
    for (rule, count) in counts {
        firings.insert(rule.to_string(), count);
    }
    diag.rule_firings = firings;
    conflicts.extend(knowledge_colliders(&graph, &sepsets));
    for c in &conflicts {
        log::warn!("{c}");
    }
    diag.conflicts = conflicts;
    graph.set_kind(GraphKind::Pag);

    for (a, b) in knowledge.non_ancestor_pairs() {
        if descendants(&graph, a)?.contains(&b) {
            return Err(Error::Knowledge(format!(
                "learned graph has a directed path {} -> ... -> {} despite the non-ancestor constraint",
                graph.name(a),
                graph.name(b)
            )));
        }
    }
    if let Some(v) = graph.validate().first() {
        return Err(Error::Internal(format!("FCI produced an invalid PAG: {v}")));
    }
    diag.edges_final = graph.edge_count();
    Ok(FciOutput { pag: graph, sepsets, diagnostics: diag })
}

// Unshielded colliders whose middle node is in the separating set of the
// ends. Only knowledge arrowheads produce these; the knowledge is kept.
fn knowledge_colliders(g: &MixedGraph, sepsets: &SepSetMap) -> Vec<String> {
    let mut out = Vec::new();
    for c in 0..g.len() {
        let nb: Vec<NodeId> = g.neighbors(c).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if g.is_adjacent(a, b) || sepsets.is_forbidden(a, b) {
                    continue;
                }
                let separates = sepsets.get(a, b).is_some_and(|s| s.contains(&c));
                if separates && g.mark(c, a) == Some(EndpointMark::Arrow) && g.mark(c, b) == Some(EndpointMark::Arrow) {
                    out.push(format!(
                        "knowledge makes {} a collider between {} and {}, but {} separates them",
                        g.name(c),
                        g.name(a),
                        g.name(b),
                        g.name(c)
                    ));
                }
            }
        }
    }
    out
}

/// Runs FCI on a dataset with the test selected by `cfg.test`.
pub fn fci_run_dataset(data: &Dataset, knowledge: &BackgroundKnowledge, cfg: &FciConfig) -> Result<FciOutput> {
    cfg.validate()?;
    match cfg.test {
        TestKind::ChiSquare => fci_run(&ChiSquareTest::new(data, cfg.alpha, DiscreteStatistic::Pearson)?, knowledge, cfg),
        TestKind::GSquare => fci_run(&ChiSquareTest::new(data, cfg.alpha, DiscreteStatistic::GSquare)?, knowledge, cfg),
        TestKind::FisherZ => fci_run(&FisherZTest::new(data, cfg.alpha)?, knowledge, cfg),
    }
}

//! Adjacency search: the depth-wise skeleton phase and Possible-D-SEP pruning.
//!
//! Within one depth the adjacency sets are frozen, every pair is searched
//! independently (in parallel), and removals are applied afterwards in edge
//! order. The result is the same as a serial run and does not depend on the
//! order in which pairs are visited.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rayon::prelude::*;

use super::{FciConfig, SepSetMap};
use crate::ci::CiTest;
use crate::error::{Error, Result};
use crate::graph::{EndpointMark, MixedGraph, NodeId};
use crate::knowledge::BackgroundKnowledge;

/// Test counts for one search phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub tests: usize,
    pub uninformative: usize,
}

impl SearchStats {
    fn add(&mut self, other: SearchStats) {
        self.tests += other.tests;
        self.uninformative += other.uninformative;
    }
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order until it
/// returns `Some`.
fn first_subset<T>(items: &[NodeId], k: usize, mut f: impl FnMut(&[NodeId]) -> Result<Option<T>>) -> Result<Option<T>> {
    let n = items.len();
    if k > n {
        return Ok(None);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut subset: Vec<NodeId> = idx.iter().map(|&i| items[i]).collect();
    loop {
        if let Some(found) = f(&subset)? {
            return Ok(Some(found));
        }
        // advance to the next combination
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return Ok(None);
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in pos..k {
            subset[j] = items[idx[j]];
        }
    }
}

struct PairSearch {
    separator: Option<Vec<NodeId>>,
    stats: SearchStats,
}

/// Looks for a separating set of `(a, b)`, trying each size in `sizes` and,
/// within a size, each candidate list in turn.
fn find_separator<T: CiTest + ?Sized>(
    test: &T,
    a: NodeId,
    b: NodeId,
    candidates: &[Vec<NodeId>],
    sizes: impl Iterator<Item = usize>,
) -> Result<PairSearch> {
    let mut stats = SearchStats::default();
    for k in sizes {
        for cands in candidates {
            let found = first_subset(cands, k, |s| {
                let r = test.test(a, b, s).map_err(|e| query_error(test, a, b, s, e))?;
                stats.tests += 1;
                stats.uninformative += r.uninformative as usize;
                Ok(r.independent.then(|| s.to_vec()))
            })?;
            if found.is_some() {
                return Ok(PairSearch { separator: found, stats });
            }
        }
    }
    Ok(PairSearch { separator: None, stats })
}

fn query_error<T: CiTest + ?Sized>(test: &T, a: NodeId, b: NodeId, s: &[NodeId], e: Error) -> Error {
    let names = test.variables();
    let name = |i: NodeId| names.get(i).cloned().unwrap_or_else(|| i.to_string());
    Error::Query { x: name(a), y: name(b), s: s.iter().map(|&v| name(v)).collect(), source: Box::new(e) }
}

/// Depth-wise edge removal from the complete graph.
///
/// At depth `k`, each adjacent pair `(x, y)` is tested against every
/// `k`-subset of `adj(x) \ {y}`, then of `adj(y) \ {x}`, in lexicographic
/// order; the first independence removes the edge and records the set.
/// Forbidden pairs start out removed; required pairs are never tested.
pub fn skeleton_search<T: CiTest + ?Sized>(
    test: &T,
    knowledge: &BackgroundKnowledge,
    cfg: &FciConfig,
) -> Result<(MixedGraph, SepSetMap, SearchStats)> {
    let names = test.variables();
    if names.len() < 2 {
        return Err(Error::Input("skeleton search needs at least two variables".into()));
    }
    let mut g = MixedGraph::complete_circles(names)?;
    let mut sepsets = SepSetMap::new();
    for (a, b) in knowledge.forbidden_pairs() {
        g.remove_edge(a, b);
        sepsets.mark_forbidden(a, b);
    }
    let mut stats = SearchStats::default();
    let n = g.len();
    for depth in 0.. {
        if cfg.max_cond_size.is_some_and(|m| depth > m) {
            break;
        }
        let adj: Vec<Vec<NodeId>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
        let pairs: Vec<(NodeId, NodeId)> = g
            .edges()
            .into_iter()
            .map(|e| (e.a, e.b))
            .filter(|&(a, b)| !knowledge.is_required(a, b))
            .filter(|&(a, b)| adj[a].len() > depth || adj[b].len() > depth)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let outcomes: Vec<PairSearch> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let ca: Vec<NodeId> = adj[a].iter().copied().filter(|&v| v != b).collect();
                let cb: Vec<NodeId> = adj[b].iter().copied().filter(|&v| v != a).collect();
                find_separator(test, a, b, &[ca, cb], std::iter::once(depth))
            })
            .collect::<Result<_>>()?;
        for (&(a, b), outcome) in pairs.iter().zip(outcomes) {
            stats.add(outcome.stats);
            if let Some(sep) = outcome.separator {
                g.remove_edge(a, b);
                sepsets.insert(a, b, &sep);
            }
        }
    }
    Ok((g, sepsets, stats))
}

/// Possible-D-SEP of `x`: nodes reachable from `x` along paths on which every
/// interior node is a collider or lies in a triangle with its path neighbours.
pub fn possible_dsep(g: &MixedGraph, x: NodeId) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut queue = VecDeque::new();
    for w in g.neighbors(x) {
        out.insert(w);
        seen.insert((x, w));
        queue.push_back((x, w));
    }
    while let Some((u, v)) = queue.pop_front() {
        for t in g.neighbors(v) {
            if t == u || t == x {
                continue;
            }
            let collider = g.mark(v, u) == Some(EndpointMark::Arrow) && g.mark(v, t) == Some(EndpointMark::Arrow);
            if (collider || g.is_adjacent(u, t)) && seen.insert((v, t)) {
                out.insert(t);
                queue.push_back((v, t));
            }
        }
    }
    out
}

/// Retests every remaining edge against subsets of the endpoints'
/// Possible-D-SEP sets (computed on `g`, which should carry collider
/// orientations). Returns the pruned skeleton with all marks reset to
/// circles and the augmented separating sets.
pub fn possible_dsep_prune<T: CiTest + ?Sized>(
    g: &MixedGraph,
    sepsets: &SepSetMap,
    test: &T,
    knowledge: &BackgroundKnowledge,
    cfg: &FciConfig,
) -> Result<(MixedGraph, SepSetMap, SearchStats)> {
    let n = g.len();
    let pds: Vec<Vec<NodeId>> = (0..n).map(|x| possible_dsep(g, x).into_iter().collect()).collect();
    let pairs: Vec<(NodeId, NodeId)> = g
        .edges()
        .into_iter()
        .map(|e| (e.a, e.b))
        .filter(|&(a, b)| !knowledge.is_required(a, b))
        .collect();
    let outcomes: Vec<PairSearch> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let ca: Vec<NodeId> = pds[a].iter().copied().filter(|&v| v != b).collect();
            let cb: Vec<NodeId> = pds[b].iter().copied().filter(|&v| v != a).collect();
            let largest = ca.len().max(cb.len());
            let top = cfg.max_cond_size.map_or(largest, |m| m.min(largest));
            find_separator(test, a, b, &[ca, cb], 1..=top)
        })
        .collect::<Result<_>>()?;

    let mut out = g.clone();
    out.reset_to_circles();
    let mut sets = sepsets.clone();
    let mut stats = SearchStats::default();
    for (&(a, b), outcome) in pairs.iter().zip(outcomes) {
        stats.add(outcome.stats);
        if let Some(sep) = outcome.separator {
            out.remove_edge(a, b);
            sets.insert(a, b, &sep);
        }
    }
    Ok((out, sets, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::CiOracle;
    use crate::graph::GraphKind;

    fn subsets(items: &[NodeId], k: usize) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        first_subset::<()>(items, k, |s| {
            out.push(s.to_vec());
            Ok(None)
        })
        .unwrap();
        out
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(&[1, 4, 7], 2), vec![vec![1, 4], vec![1, 7], vec![4, 7]]);
        assert_eq!(subsets(&[1, 4], 0), vec![Vec::<NodeId>::new()]);
        assert!(subsets(&[1], 2).is_empty());
        assert_eq!(subsets(&[0, 1, 2, 3, 4], 3).len(), 10);
    }

    fn shapes_oracle() -> CiOracle {
        let truth = MixedGraph::from_edge_specs(
            &["U1", "U2", "H", "V", "C", "R", "Y"],
            GraphKind::Dag,
            &["U1 --> H", "U1 --> V", "U2 --> C", "H --> R", "C --> R", "V --> Y", "C --> Y"],
        )
        .unwrap();
        CiOracle::new(truth, &["H", "V", "R", "Y"]).unwrap()
    }

    #[test]
    fn shapes_skeleton() {
        let o = shapes_oracle();
        let (g, sepsets, stats) = skeleton_search(&o, &BackgroundKnowledge::new(), &FciConfig::default()).unwrap();
        assert_eq!(g.edge_strings(), vec!["H o-o V", "H o-o R", "V o-o Y", "R o-o Y"]);
        assert_eq!(sepsets.get(0, 3), Some(&[1][..]));
        assert_eq!(sepsets.get(1, 2), Some(&[0][..]));
        assert_eq!(sepsets.len(), 2);
        assert!(stats.tests > 0);

        let depth0 = FciConfig { max_cond_size: Some(0), ..Default::default() };
        let (g0, s0, _) = skeleton_search(&o, &BackgroundKnowledge::new(), &depth0).unwrap();
        assert_eq!(g0.edge_count(), 6);
        assert!(s0.is_empty());
    }

    #[test]
    fn independent_nodes_vanish_at_depth_zero() {
        let truth = MixedGraph::new(&["A", "B", "C"], GraphKind::Dag).unwrap();
        let o = CiOracle::fully_observed(truth).unwrap();
        let (g, sepsets, stats) = skeleton_search(&o, &BackgroundKnowledge::new(), &FciConfig::default()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.tests, 3);
        assert_eq!(sepsets.get(0, 2), Some(&[][..]));
    }

    #[test]
    fn pdsep_leaves_shapes_truth_alone() {
        let o = shapes_oracle();
        let (g, sepsets, _) = skeleton_search(&o, &BackgroundKnowledge::new(), &FciConfig::default()).unwrap();
        let oriented = super::super::orient_colliders(&g, &sepsets).unwrap();
        let h = 0;
        assert_eq!(possible_dsep(&oriented, h), BTreeSet::from([1, 2, 3]));
        let (pruned, sets, _) =
            possible_dsep_prune(&oriented, &sepsets, &o, &BackgroundKnowledge::new(), &FciConfig::default()).unwrap();
        assert_eq!(pruned, g);
        assert_eq!(sets, sepsets);

        let empty = MixedGraph::new(&["H", "V", "R", "Y"], GraphKind::Pag).unwrap();
        let (p, _, st) =
            possible_dsep_prune(&empty, &SepSetMap::new(), &o, &BackgroundKnowledge::new(), &FciConfig::default()).unwrap();
        assert_eq!(p, empty);
        assert_eq!(st.tests, 0);
    }
}

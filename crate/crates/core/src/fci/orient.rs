//! Collider orientation, knowledge, and the circle-resolving rules.
//!
//! Every rule only turns circles into tails or arrowheads. Knowledge that
//! would overwrite a definite mark aborts the run; a rule clash on noisy data
//! is recorded and the existing mark wins.

use std::collections::BTreeMap;
use std::fmt;

use super::SepSetMap;
use crate::error::{Error, Result};
use crate::graph::{EndpointMark, MixedGraph, NodeId};
use crate::knowledge::BackgroundKnowledge;

use EndpointMark::{Arrow, Circle, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    R0,
    R1,
    R2,
    R3,
    R4,
    R8,
    R9,
    R10,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Fixed sweep order.
const SWEEP: [Rule; 7] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R8, Rule::R9, Rule::R10];

/// Cap on node expansions for one uncovered-path search.
const PATH_SEARCH_BUDGET: usize = 200_000;

/// Sets the mark at `at` on `at *-* other`. Returns whether it changed.
fn orient(g: &mut MixedGraph, at: NodeId, other: NodeId, mark: EndpointMark) -> Result<bool> {
    match g.mark(at, other) {
        Some(current) if current == mark => Ok(false),
        Some(Circle) => {
            g.set_mark(at, other, mark);
            Ok(true)
        }
        Some(current) => Err(Error::Knowledge(format!(
            "cannot overwrite {} with {} at `{}` on edge {}",
            current.as_str(),
            mark.as_str(),
            g.name(at),
            g.edge_string(at, other).unwrap_or_default()
        ))),
        None => Err(Error::Internal(format!("no edge {}-{}", g.name(at), g.name(other)))),
    }
}

/// Mark writes made by the rules.
///
/// Rules write tails only over circles, so the one possible clash is an
/// arrowhead landing on a tail. That comes from sampling error; the tail is
/// kept and the clash recorded.
#[derive(Debug, Default)]
pub(super) struct Guard {
    pub(super) conflicts: Vec<String>,
}

impl Guard {
    fn orient(&mut self, g: &mut MixedGraph, at: NodeId, other: NodeId, mark: EndpointMark, rule: Rule) -> Result<bool> {
        match g.mark(at, other) {
            Some(current) if current == mark => Ok(false),
            Some(Circle) => {
                g.set_mark(at, other, mark);
                Ok(true)
            }
            Some(current) => {
                self.conflicts.push(format!(
                    "{rule} would overwrite the {} at {} on edge {} (wanted {}); kept the {0}",
                    current.as_str(),
                    g.name(at),
                    g.edge_string(at, other).unwrap_or_default(),
                    mark.as_str()
                ));
                Ok(false)
            }
            None => Err(Error::Internal(format!("no edge {}-{}", g.name(at), g.name(other)))),
        }
    }
}

/// R0 on a copy of `g`: each unshielded triple `x *-* z *-* y` with `z`
/// outside the separating set of `(x, y)` becomes `x *-> z <-* y`.
pub fn orient_colliders(g: &MixedGraph, sepsets: &SepSetMap) -> Result<MixedGraph> {
    let mut out = g.clone();
    orient_colliders_counted(&mut out, sepsets, &mut Vec::new())?;
    Ok(out)
}

pub(super) fn orient_colliders_counted(
    g: &mut MixedGraph,
    sepsets: &SepSetMap,
    conflicts: &mut Vec<String>,
) -> Result<usize> {
    let n = g.len();
    let mut fired = 0;
    for z in 0..n {
        let nbrs: Vec<NodeId> = g.neighbors(z).collect();
        for (i, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[i + 1..] {
                if g.is_adjacent(x, y) || sepsets.is_forbidden(x, y) {
                    continue;
                }
                let sep = sepsets.get(x, y).ok_or_else(|| {
                    Error::Internal(format!("no separating set for non-adjacent {}, {}", g.name(x), g.name(y)))
                })?;
                if sep.contains(&z) {
                    continue;
                }
                fired += 1;
                for end in [x, y] {
                    match g.mark(z, end) {
                        Some(Circle) => g.set_mark(z, end, Arrow),
                        Some(Tail) => conflicts.push(format!(
                            "collider {} {} {} would overwrite a tail at {}; kept the tail",
                            g.name(x),
                            g.name(z),
                            g.name(y),
                            g.name(z)
                        )),
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(fired)
}

/// Applies non-ancestor knowledge: if `a` cannot be an ancestor of `b`, the
/// edge `a *-* b` gets an arrowhead at `a`. Returns the number of marks set.
pub fn apply_knowledge(g: &mut MixedGraph, knowledge: &BackgroundKnowledge) -> Result<usize> {
    let mut changed = 0;
    for (a, b) in knowledge.non_ancestor_pairs() {
        if a >= g.len() || b >= g.len() {
            return Err(Error::Input(format!("knowledge references node outside {} variables", g.len())));
        }
        if g.is_adjacent(a, b) && orient(g, a, b, Arrow)? {
            changed += 1;
        }
    }
    Ok(changed)
}

/// Applies knowledge, then R1-R4 and R8-R10 until nothing changes.
pub fn apply_orientation_rules(
    g: &MixedGraph,
    sepsets: &SepSetMap,
    knowledge: &BackgroundKnowledge,
) -> Result<MixedGraph> {
    let mut out = g.clone();
    apply_knowledge(&mut out, knowledge)?;
    let mut guard = Guard::default();
    run_rules(&mut out, sepsets, &mut guard)?;
    for c in &guard.conflicts {
        log::warn!("{c}");
    }
    Ok(out)
}

/// Runs the rule sweep to a fixpoint and reports how often each rule fired.
pub(super) fn run_rules(g: &mut MixedGraph, sepsets: &SepSetMap, guard: &mut Guard) -> Result<BTreeMap<Rule, usize>> {
    let mut counts: BTreeMap<Rule, usize> = SWEEP.iter().map(|&r| (r, 0)).collect();
    loop {
        let mut changed = false;
        for rule in SWEEP {
            let fired = match rule {
                Rule::R1 => rule1(g, guard)?,
                Rule::R2 => rule2(g, guard)?,
                Rule::R3 => rule3(g, guard)?,
                Rule::R4 => rule4(g, sepsets, guard)?,
                Rule::R8 => rule8(g, guard)?,
                Rule::R9 => rule9(g, guard)?,
                Rule::R10 => rule10(g, guard)?,
                Rule::R0 => 0,
            };
            if fired > 0 {
                *counts.get_mut(&rule).expect("rule listed") += fired;
                changed = true;
            }
        }
        if !changed {
            return Ok(counts);
        }
    }
}

fn nbrs(g: &MixedGraph, v: NodeId) -> Vec<NodeId> {
    g.neighbors(v).collect()
}

fn is(g: &MixedGraph, at: NodeId, other: NodeId, mark: EndpointMark) -> bool {
    g.mark(at, other) == Some(mark)
}

/// `a *-o b` edges can still become `a -> b` or `a <-> b`: a potentially
/// directed step from `a` to `b` needs no arrowhead at `a` and no tail at `b`.
fn potentially_directed(g: &MixedGraph, a: NodeId, b: NodeId) -> bool {
    match (g.mark(a, b), g.mark(b, a)) {
        (Some(at_a), Some(at_b)) => at_a != Arrow && at_b != Tail,
        _ => false,
    }
}

// R1: a *-> b o-* c, a and c not adjacent  =>  b -> c
fn rule1(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for b in 0..g.len() {
        for a in nbrs(g, b) {
            for c in nbrs(g, b) {
                if c == a || !is(g, b, a, Arrow) || !is(g, b, c, Circle) || g.is_adjacent(a, c) {
                    continue;
                }
                let t = guard.orient(g, b, c, Tail, Rule::R1)?;
                let h = guard.orient(g, c, b, Arrow, Rule::R1)?;
                fired += (t || h) as usize;
            }
        }
    }
    Ok(fired)
}

// R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c
fn rule2(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for a in 0..g.len() {
        for c in nbrs(g, a) {
            if !is(g, c, a, Circle) {
                continue;
            }
            let hit = nbrs(g, a).into_iter().filter(|&b| b != c && g.is_adjacent(b, c)).any(|b| {
                (g.is_directed(a, b) && is(g, c, b, Arrow)) || (is(g, b, a, Arrow) && g.is_directed(b, c))
            });
            if hit && guard.orient(g, c, a, Arrow, Rule::R2)? {
                fired += 1;
            }
        }
    }
    Ok(fired)
}

// R3: a *-> b <-* c, a *-o d o-* c, a and c not adjacent, d *-o b  =>  d *-> b
fn rule3(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for b in 0..g.len() {
        for d in nbrs(g, b) {
            if !is(g, b, d, Circle) {
                continue;
            }
            let around: Vec<NodeId> = nbrs(g, b)
                .into_iter()
                .filter(|&v| v != d && is(g, b, v, Arrow) && g.is_adjacent(v, d) && is(g, d, v, Circle))
                .collect();
            let hit = around
                .iter()
                .enumerate()
                .any(|(i, &a)| around[i + 1..].iter().any(|&c| !g.is_adjacent(a, c)));
            if hit && guard.orient(g, b, d, Arrow, Rule::R3)? {
                fired += 1;
            }
        }
    }
    Ok(fired)
}

/// Finds a discriminating path `<theta, ..., alpha, beta, gamma>` for `beta`
/// and returns `(theta, alpha)`: every node between `theta` and `beta` is a
/// collider on the path and a parent of `gamma`, and `theta` is not adjacent
/// to `gamma`.
fn discriminating_path(g: &MixedGraph, beta: NodeId, gamma: NodeId) -> Option<(NodeId, NodeId)> {
    let n = g.len();
    for alpha in nbrs(g, beta) {
        if alpha == gamma || !is(g, alpha, beta, Arrow) || !g.is_directed(alpha, gamma) {
            continue;
        }
        let mut visited = vec![false; n];
        visited[gamma] = true;
        visited[beta] = true;
        visited[alpha] = true;
        let mut stack = vec![alpha];
        while let Some(cur) = stack.pop() {
            for t in nbrs(g, cur) {
                if visited[t] || !is(g, cur, t, Arrow) {
                    continue;
                }
                if !g.is_adjacent(t, gamma) {
                    return Some((t, alpha));
                }
                if is(g, t, cur, Arrow) && g.is_directed(t, gamma) {
                    visited[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    None
}

// R4: discriminating path for beta with beta o-* gamma
fn rule4(g: &mut MixedGraph, sepsets: &SepSetMap, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for gamma in 0..g.len() {
        for beta in nbrs(g, gamma) {
            if !is(g, beta, gamma, Circle) {
                continue;
            }
            let Some((theta, alpha)) = discriminating_path(g, beta, gamma) else {
                continue;
            };
            if sepsets.is_forbidden(theta, gamma) {
                continue;
            }
            let sep = sepsets.get(theta, gamma).ok_or_else(|| {
                Error::Internal(format!("no separating set for {}, {}", g.name(theta), g.name(gamma)))
            })?;
            let changed = if sep.contains(&beta) {
                guard.orient(g, beta, gamma, Tail, Rule::R4)? | guard.orient(g, gamma, beta, Arrow, Rule::R4)?
            } else {
                guard.orient(g, beta, alpha, Arrow, Rule::R4)?
                    | guard.orient(g, alpha, beta, Arrow, Rule::R4)?
                    | guard.orient(g, beta, gamma, Arrow, Rule::R4)?
                    | guard.orient(g, gamma, beta, Arrow, Rule::R4)?
            };
            fired += changed as usize;
        }
    }
    Ok(fired)
}

/// `a o-> c` edges, the antecedent of R8-R10.
fn circle_arrow_edges(g: &MixedGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for a in 0..g.len() {
        for c in g.neighbors(a) {
            if is(g, a, c, Circle) && is(g, c, a, Arrow) {
                out.push((a, c));
            }
        }
    }
    out
}

// R8: a -> b -> c or a -o b -> c, with a o-> c  =>  a -> c
fn rule8(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for (a, c) in circle_arrow_edges(g) {
        if !(is(g, a, c, Circle) && is(g, c, a, Arrow)) {
            continue;
        }
        let hit = nbrs(g, a).into_iter().filter(|&b| b != c).any(|b| {
            g.is_directed(b, c) && (g.is_directed(a, b) || (is(g, a, b, Tail) && is(g, b, a, Circle)))
        });
        if hit && guard.orient(g, a, c, Tail, Rule::R8)? {
            fired += 1;
        }
    }
    Ok(fired)
}

/// Whether an uncovered potentially directed path continues from `prev -> cur`
/// to `goal` without revisiting `on_path` nodes.
fn uncovered_pd_path(
    g: &MixedGraph,
    prev: NodeId,
    cur: NodeId,
    goal: NodeId,
    on_path: &mut [bool],
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    for t in nbrs(g, cur) {
        if on_path[t] || t == prev || g.is_adjacent(prev, t) || !potentially_directed(g, cur, t) {
            continue;
        }
        if t == goal {
            return true;
        }
        on_path[t] = true;
        let found = uncovered_pd_path(g, cur, t, goal, on_path, budget);
        on_path[t] = false;
        if found {
            return true;
        }
    }
    false
}

fn budget_exhausted(budget: usize, rule: Rule) {
    if budget == 0 {
        log::warn!("{rule}: uncovered path search budget exhausted; rule may under-orient");
    }
}

// R9: a o-> c and an uncovered p.d. path <a, b, d, ..., c> with b, c not adjacent  =>  a -> c
fn rule9(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let n = g.len();
    let mut fired = 0;
    for (a, c) in circle_arrow_edges(g) {
        if !(is(g, a, c, Circle) && is(g, c, a, Arrow)) {
            continue;
        }
        let mut budget = PATH_SEARCH_BUDGET;
        let mut hit = false;
        for b in nbrs(g, a) {
            if b == c || g.is_adjacent(b, c) || !potentially_directed(g, a, b) {
                continue;
            }
            let mut on_path = vec![false; n];
            on_path[a] = true;
            on_path[b] = true;
            if uncovered_pd_path(g, a, b, c, &mut on_path, &mut budget) {
                hit = true;
                break;
            }
        }
        budget_exhausted(budget, Rule::R9);
        if hit && guard.orient(g, a, c, Tail, Rule::R9)? {
            fired += 1;
        }
    }
    Ok(fired)
}

/// First nodes `m` of uncovered p.d. paths `<a, m, ..., target>`.
fn first_steps(g: &MixedGraph, a: NodeId, target: NodeId, exclude: NodeId, budget: &mut usize) -> Vec<NodeId> {
    let n = g.len();
    let mut out = Vec::new();
    for m in nbrs(g, a) {
        if m == exclude || !potentially_directed(g, a, m) {
            continue;
        }
        if m == target {
            out.push(m);
            continue;
        }
        let mut on_path = vec![false; n];
        on_path[a] = true;
        on_path[m] = true;
        if uncovered_pd_path(g, a, m, target, &mut on_path, budget) {
            out.push(m);
        }
    }
    out
}

// R10: a o-> c, b -> c <- d, uncovered p.d. paths a..b and a..d whose
// second nodes m, w are distinct and non-adjacent  =>  a -> c
fn rule10(g: &mut MixedGraph, guard: &mut Guard) -> Result<usize> {
    let mut fired = 0;
    for (a, c) in circle_arrow_edges(g) {
        if !(is(g, a, c, Circle) && is(g, c, a, Arrow)) {
            continue;
        }
        let parents: Vec<NodeId> = g.parents(c).filter(|&p| p != a).collect();
        if parents.len() < 2 {
            continue;
        }
        let mut budget = PATH_SEARCH_BUDGET;
        let starts: Vec<Vec<NodeId>> = parents.iter().map(|&p| first_steps(g, a, p, c, &mut budget)).collect();
        budget_exhausted(budget, Rule::R10);
        let mut hit = false;
        'pairs: for i in 0..parents.len() {
            for j in i + 1..parents.len() {
                for &m in &starts[i] {
                    for &w in &starts[j] {
                        if m != w && !g.is_adjacent(m, w) {
                            hit = true;
                            break 'pairs;
                        }
                    }
                }
            }
        }
        if hit && guard.orient(g, a, c, Tail, Rule::R10)? {
            fired += 1;
        }
    }
    Ok(fired)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn pag(names: &[&str], specs: &[&str]) -> MixedGraph {
        MixedGraph::from_edge_specs(names, GraphKind::Pag, specs).unwrap()
    }

    const FIG: [&str; 4] = ["H", "V", "R", "Yhat"];

    fn shapes_sepsets() -> SepSetMap {
        let mut s = SepSetMap::new();
        s.insert(0, 3, &[1]);
        s.insert(1, 2, &[0]);
        s
    }

    #[test]
    fn colliders_on_shapes_skeleton() {
        let skel = pag(&FIG, &["H o-o V", "H o-o R", "V o-o Yhat", "R o-o Yhat"]);
        let g = orient_colliders(&skel, &shapes_sepsets()).unwrap();
        // H - R - Yhat: R not in sepset(H, Yhat) = {V}; V - Yhat - R: Yhat not in sepset(V, R) = {H}
        assert_eq!(g.edge_strings(), vec!["H o-o V", "H o-> R", "V o-> Yhat", "R <-> Yhat"]);
    }

    #[test]
    fn missing_sepset_is_internal_error() {
        let skel = pag(&["A", "B", "C"], &["A o-o B", "B o-o C"]);
        assert!(matches!(orient_colliders(&skel, &SepSetMap::new()), Err(Error::Internal(_))));
        let shielded = pag(&["A", "B", "C"], &["A o-o B", "B o-o C", "A o-o C"]);
        assert_eq!(orient_colliders(&shielded, &SepSetMap::new()).unwrap(), shielded);
    }

    #[test]
    fn knowledge_then_rules_gives_population_pag() {
        let skel = pag(&FIG, &["H o-o V", "H o-o R", "V o-o Yhat", "R o-o Yhat"]);
        let collided = orient_colliders(&skel, &shapes_sepsets()).unwrap();
        let mut k = BackgroundKnowledge::new();
        k.add_non_ancestor_of_all(3, 4).unwrap();
        let g = apply_orientation_rules(&collided, &shapes_sepsets(), &k).unwrap();
        assert_eq!(g, pag(&FIG, &["H o-o V", "H o-> R", "R <-> Yhat", "V o-> Yhat"]));
    }

    #[test]
    fn chain_without_arrowheads_stays_circular() {
        let g = pag(&["A", "B", "C"], &["A o-o B", "B o-o C"]);
        let mut s = SepSetMap::new();
        s.insert(0, 2, &[1]);
        let out = apply_orientation_rules(&g, &s, &BackgroundKnowledge::new()).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn rule1_orients_away_from_arrowhead() {
        let g = pag(&["A", "B", "C"], &["A o-> B", "B o-o C"]);
        let mut s = SepSetMap::new();
        s.insert(0, 2, &[1]);
        let out = apply_orientation_rules(&g, &s, &BackgroundKnowledge::new()).unwrap();
        assert_eq!(out.edge_strings(), vec!["A o-> B", "B --> C"]);
    }

    #[test]
    fn rule2_adds_arrowhead() {
        // A -> B o-> C? use A -> B *-> C with A *-o C
        let mut g = pag(&["A", "B", "C"], &["A --> B", "B <-> C", "A o-o C"]);
        assert_eq!(rule2(&mut g, &mut Guard::default()).unwrap(), 1);
        assert_eq!(g.edge_string(0, 2).unwrap(), "A o-> C");
    }

    #[test]
    fn rule3_adds_arrowhead() {
        let mut g = pag(&["A", "B", "C", "D"], &["A o-> B", "C o-> B", "A o-o D", "C o-o D", "D o-o B"]);
        assert_eq!(rule3(&mut g, &mut Guard::default()).unwrap(), 1);
        assert_eq!(g.edge_string(3, 1).unwrap(), "D o-> B");
    }

    #[test]
    fn rule4_both_branches() {
        // theta *-> alpha <-> beta o-o gamma, alpha -> gamma, theta not adjacent to gamma
        let base = pag(&["T", "A", "B", "G"], &["T o-> A", "A <-> B", "A --> G", "B o-o G"]);
        let mut s = SepSetMap::new();
        s.insert(0, 3, &[1, 2]);
        s.insert(0, 2, &[1]);
        let mut g = base.clone();
        assert_eq!(rule4(&mut g, &s, &mut Guard::default()).unwrap(), 1);
        assert_eq!(g.edge_string(2, 3).unwrap(), "B --> G");

        let mut s2 = SepSetMap::new();
        s2.insert(0, 3, &[1]);
        s2.insert(0, 2, &[1]);
        let mut g = base;
        assert_eq!(rule4(&mut g, &s2, &mut Guard::default()).unwrap(), 1);
        assert_eq!(g.edge_string(2, 3).unwrap(), "B <-> G");
    }

    #[test]
    fn rule8_tail() {
        let mut g = pag(&["A", "B", "C"], &["A --> B", "B --> C", "A o-> C"]);
        assert_eq!(rule8(&mut g, &mut Guard::default()).unwrap(), 1);
        assert!(g.is_directed(0, 2));
    }

    #[test]
    fn rule9_tail() {
        // A o-> C, uncovered p.d. path A o-o B o-> D --> C... with B, C not adjacent
        let mut g = pag(&["A", "B", "D", "C"], &["A o-> C", "A o-o B", "B o-> D", "D --> C"]);
        assert_eq!(rule9(&mut g, &mut Guard::default()).unwrap(), 1);
        assert!(g.is_directed(0, 3));
    }

    #[test]
    fn rule10_tail() {
        // A o-> C, B -> C <- D, A o-o B and A o-o D with B, D non-adjacent
        let mut g = pag(&["A", "B", "D", "C"], &["A o-> C", "B --> C", "D --> C", "A o-o B", "A o-o D"]);
        assert_eq!(rule10(&mut g, &mut Guard::default()).unwrap(), 1);
        assert!(g.is_directed(0, 3));
    }

    #[test]
    fn rule_clash_keeps_the_tail_and_is_recorded() {
        // as in rule4_both_branches, but B --> A already carries a tail at B
        let mut g = pag(&["T", "A", "B", "G"], &["T o-> A", "B --> A", "A --> G", "B o-o G"]);
        let mut s = SepSetMap::new();
        s.insert(0, 3, &[1]);
        s.insert(0, 2, &[1]);
        let mut guard = Guard::default();
        assert_eq!(rule4(&mut g, &s, &mut guard).unwrap(), 1);
        assert_eq!(g.edge_string(2, 3).unwrap(), "B <-> G");
        assert_eq!(g.edge_string(2, 1).unwrap(), "B --> A");
        assert_eq!(guard.conflicts, ["R4 would overwrite the tail at B on edge B --> A (wanted arrow); kept the tail"]);
    }

    #[test]
    fn overwrite_is_a_knowledge_error() {
        let mut g = pag(&["A", "B"], &["A --> B"]);
        let mut k = BackgroundKnowledge::new();
        k.add_non_ancestor(0, 1).unwrap();
        let err = apply_knowledge(&mut g, &k).unwrap_err();
        assert!(matches!(err, Error::Knowledge(ref m) if m.contains("A --> B")), "{err}");
    }
}

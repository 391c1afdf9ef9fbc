//! Brute-force reference implementations used by integration tests.
//!
//! Nothing here shares code with the library's search routines: separation
//! is decided by enumerating simple paths, and PAGs are derived from the
//! full set of Markov-equivalent MAGs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pagexplain::{EndpointMark, GraphKind, MixedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use EndpointMark::{Arrow, Circle, Tail};

/// `a -> b` in a graph without circles.
fn directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    g.mark(a, b) == Some(Tail) && g.mark(b, a) == Some(Arrow)
}

/// Nodes with a directed path into some member of `z`, plus `z` itself.
pub fn ancestor_set(g: &MixedGraph, z: &[usize]) -> Vec<bool> {
    let mut an = vec![false; g.len()];
    let mut stack: Vec<usize> = z.to_vec();
    while let Some(v) = stack.pop() {
        if an[v] {
            continue;
        }
        an[v] = true;
        for u in 0..g.len() {
            if directed(g, u, v) && !an[u] {
                stack.push(u);
            }
        }
    }
    an
}

/// True when no simple path between `x` and `y` is open given `z`.
pub fn separated_by_paths(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> bool {
    let an = ancestor_set(g, z);
    let mut in_z = vec![false; g.len()];
    for &v in z {
        in_z[v] = true;
    }
    let mut path = vec![x];
    let mut on = vec![false; g.len()];
    on[x] = true;
    !open_path(g, &mut path, &mut on, y, &in_z, &an)
}

fn open_path(g: &MixedGraph, path: &mut Vec<usize>, on: &mut [bool], y: usize, in_z: &[bool], an: &[bool]) -> bool {
    let cur = *path.last().unwrap();
    for next in 0..g.len() {
        if on[next] || !g.is_adjacent(cur, next) {
            continue;
        }
        if path.len() >= 2 {
            let prev = path[path.len() - 2];
            let collider = g.mark(cur, prev) == Some(Arrow) && g.mark(cur, next) == Some(Arrow);
            let ok = if collider { an[cur] } else { !in_z[cur] };
            if !ok {
                continue;
            }
        }
        if next == y {
            return true;
        }
        path.push(next);
        on[next] = true;
        let found = open_path(g, path, on, y, in_z, an);
        on[next] = false;
        path.pop();
        if found {
            return true;
        }
    }
    false
}

/// All subsets of `items` in order of size, then lexicographically.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..(1 << items.len()))
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Independence facts among `observed` (indices into `truth`):
/// key `(i, j, S)` over positions in `observed`, `i < j`.
pub type Facts = BTreeMap<(usize, usize, Vec<usize>), bool>;

pub fn facts_of(truth: &MixedGraph, observed: &[usize]) -> Facts {
    let k = observed.len();
    let mut facts = Facts::new();
    for i in 0..k {
        for j in i + 1..k {
            let rest: Vec<usize> = (0..k).filter(|&v| v != i && v != j).collect();
            for s in subsets(&rest) {
                let z: Vec<usize> = s.iter().map(|&v| observed[v]).collect();
                facts.insert((i, j, s), separated_by_paths(truth, observed[i], observed[j], &z));
            }
        }
    }
    facts
}

fn has_directed_path(g: &MixedGraph, from: usize, to: usize) -> bool {
    let an = ancestor_set(g, &[to]);
    an[from]
}

/// No directed cycles and no bidirected edge between a node and its ancestor.
pub fn is_ancestral(g: &MixedGraph) -> bool {
    for a in 0..g.len() {
        for b in 0..g.len() {
            if a == b || !g.is_adjacent(a, b) {
                continue;
            }
            if directed(g, a, b) && has_directed_path(g, b, a) {
                return false;
            }
            let bidirected = g.mark(a, b) == Some(Arrow) && g.mark(b, a) == Some(Arrow);
            if bidirected && has_directed_path(g, a, b) {
                return false;
            }
        }
    }
    true
}

/// Every directed/bidirected MAG over `names` whose separation statements
/// equal `facts`.
pub fn mag_class(names: &[String], facts: &Facts) -> Vec<MixedGraph> {
    let k = names.len();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let separable = facts.iter().any(|((a, b, _), &sep)| *a == i && *b == j && sep);
            if !separable {
                edges.push((i, j));
            }
        }
    }
    let mut out = Vec::new();
    let total = 3usize.pow(edges.len() as u32);
    for code in 0..total {
        let mut g = MixedGraph::new(names, GraphKind::Mag).unwrap();
        let mut c = code;
        for &(a, b) in &edges {
            let (ma, mb) = match c % 3 {
                0 => (Tail, Arrow),
                1 => (Arrow, Tail),
                _ => (Arrow, Arrow),
            };
            c /= 3;
            g.add_edge(a, b, ma, mb).unwrap();
        }
        if !is_ancestral(&g) {
            continue;
        }
        if facts.iter().all(|((a, b, s), &sep)| separated_by_paths(&g, *a, *b, s) == sep) {
            out.push(g);
        }
    }
    out
}

/// Marks shared by every member of the class; everything else is a circle.
pub fn pag_of_class(class: &[MixedGraph]) -> Option<MixedGraph> {
    let first = class.first()?;
    let mut pag = MixedGraph::new(first.names(), GraphKind::Pag).unwrap();
    for e in first.edges() {
        let shared = |at: usize, other: usize| {
            let m = first.mark(at, other);
            if class.iter().all(|g| g.mark(at, other) == m) {
                m.unwrap()
            } else {
                Circle
            }
        };
        pag.add_edge(e.a, e.b, shared(e.a, e.b), shared(e.b, e.a)).unwrap();
    }
    Some(pag)
}

/// Reference PAG for `truth` observed on `observed`.
pub fn reference_pag(truth: &MixedGraph, observed: &[usize]) -> MixedGraph {
    let names: Vec<String> = observed.iter().map(|&i| truth.name(i).to_string()).collect();
    let facts = facts_of(truth, observed);
    let class = mag_class(&names, &facts);
    pag_of_class(&class).expect("the true MAG is always in its own class")
}

/// Random DAG on `n` nodes named `X0..`; node order is a topological order.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p_edge: f64) -> MixedGraph {
    let names: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
    let mut g = MixedGraph::new(&names, GraphKind::Dag).unwrap();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p_edge {
                g.add_directed(a, b).unwrap();
            }
        }
    }
    g
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted `a op b` strings, for comparing graphs over the same names.
pub fn edge_set(g: &MixedGraph) -> Vec<String> {
    let mut v = g.edge_strings();
    v.sort();
    v
}

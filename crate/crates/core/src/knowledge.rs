//! Background knowledge: non-ancestor constraints and forced adjacencies.
//!
//! Text form, one directive per line (`#` starts a comment):
//!
//! ```text
//! nonancestor Yhat *      # Yhat is not an ancestor of any other variable
//! forbid H Yhat
//! require V Yhat
//! ```

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackgroundKnowledge {
    non_ancestor: BTreeSet<(NodeId, NodeId)>,
    forbidden: BTreeSet<(NodeId, NodeId)>,
    required: BTreeSet<(NodeId, NodeId)>,
}

fn unordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl BackgroundKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    /// `a` cannot be an ancestor of `b`.
    pub fn add_non_ancestor(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        if a == b {
            return Err(Error::Input("non-ancestor constraint must name two distinct nodes".into()));
        }
        self.non_ancestor.insert((a, b));
        Ok(())
    }

    /// `target` is a non-ancestor of every other of the `n` variables.
    pub fn add_non_ancestor_of_all(&mut self, target: NodeId, n: usize) -> Result<()> {
        for other in (0..n).filter(|&o| o != target) {
            self.add_non_ancestor(target, other)?;
        }
        Ok(())
    }

    pub fn forbid(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        let pair = self.pair(a, b)?;
        if self.required.contains(&pair) {
            return Err(Error::Knowledge(format!("adjacency {a}-{b} is both required and forbidden")));
        }
        self.forbidden.insert(pair);
        Ok(())
    }

    pub fn require(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        let pair = self.pair(a, b)?;
        if self.forbidden.contains(&pair) {
            return Err(Error::Knowledge(format!("adjacency {a}-{b} is both required and forbidden")));
        }
        self.required.insert(pair);
        Ok(())
    }

    fn pair(&self, a: NodeId, b: NodeId) -> Result<(NodeId, NodeId)> {
        if a == b {
            return Err(Error::Input("adjacency constraint must name two distinct nodes".into()));
        }
        Ok(unordered(a, b))
    }

    pub fn non_ancestor_pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.non_ancestor.iter().copied()
    }

    pub fn is_forbidden(&self, a: NodeId, b: NodeId) -> bool {
        self.forbidden.contains(&unordered(a, b))
    }

    pub fn is_required(&self, a: NodeId, b: NodeId) -> bool {
        self.required.contains(&unordered(a, b))
    }

    pub fn forbidden_pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.forbidden.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.non_ancestor.is_empty() && self.forbidden.is_empty() && self.required.is_empty()
    }

    /// Highest node index referenced, if any.
    pub fn max_node(&self) -> Option<NodeId> {
        self.non_ancestor
            .iter()
            .chain(&self.forbidden)
            .chain(&self.required)
            .map(|&(a, b)| a.max(b))
            .max()
    }

    /// Adds everything in `other`.
    pub fn merge(&mut self, other: &BackgroundKnowledge) -> Result<()> {
        for &(a, b) in &other.non_ancestor {
            self.add_non_ancestor(a, b)?;
        }
        for &(a, b) in &other.forbidden {
            self.forbid(a, b)?;
        }
        for &(a, b) in &other.required {
            self.require(a, b)?;
        }
        Ok(())
    }

    /// Parses the line-oriented text form against an ordered variable list.
    pub fn parse<S: AsRef<str>>(text: &str, names: &[S]) -> Result<Self> {
        let lookup = |name: &str, line_no: usize| -> Result<NodeId> {
            names
                .iter()
                .position(|n| n.as_ref() == name)
                .ok_or_else(|| Error::Input(format!("knowledge line {line_no}: unknown variable `{name}`")))
        };
        let mut k = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [directive, a, b] = parts[..] else {
                return Err(Error::Input(format!("knowledge line {line_no}: expected `<directive> <node> <node>`")));
            };
            let a = lookup(a, line_no)?;
            let targets: Vec<NodeId> = if b == "*" {
                if directive != "nonancestor" {
                    return Err(Error::Input(format!("knowledge line {line_no}: `*` is only valid with nonancestor")));
                }
                (0..names.len()).filter(|&o| o != a).collect()
            } else {
                vec![lookup(b, line_no)?]
            };
            for b in targets {
                match directive {
                    "nonancestor" => k.add_non_ancestor(a, b)?,
                    "forbid" => k.forbid(a, b)?,
                    "require" => k.require(a, b)?,
                    other => {
                        return Err(Error::Input(format!("knowledge line {line_no}: unknown directive `{other}`")))
                    }
                }
            }
        }
        Ok(k)
    }
}

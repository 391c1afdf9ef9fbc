use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EndpointMark, MixedGraph, NodeId};
use crate::error::{Error, Result};

/// What a PAG says about a feature's causal relation to a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// `feature -> target`
    DefiniteCause,
    /// `feature o-> target`: a cause, confounded, or both.
    PossibleCause,
    /// `feature <-> target`: associated only through latent common causes.
    ConfoundedOnly,
    NoRelation,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 4] =
        [EdgeClass::DefiniteCause, EdgeClass::PossibleCause, EdgeClass::ConfoundedOnly, EdgeClass::NoRelation];

    pub fn is_cause(self) -> bool {
        matches!(self, EdgeClass::DefiniteCause | EdgeClass::PossibleCause)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeClass::DefiniteCause => "definite_cause",
            EdgeClass::PossibleCause => "possible_cause",
            EdgeClass::ConfoundedOnly => "confounded_only",
            EdgeClass::NoRelation => "no_relation",
        })
    }
}

/// Classifies the edge between `feature` and `target`.
///
/// Edges whose target end is still a circle (`o-o`, `-o`) leave the feature a
/// possible ancestor, so they count as [`EdgeClass::PossibleCause`]. An
/// arrowhead at the feature means the feature is not an ancestor of the
/// target; a tail at the target in that case contradicts the usual
/// "target is a non-ancestor" knowledge and is logged.
pub fn classify_edge(g: &MixedGraph, feature: NodeId, target: NodeId) -> Result<EdgeClass> {
    g.check(feature)?;
    g.check(target)?;
    if feature == target {
        return Err(Error::Input(format!("cannot classify `{}` against itself", g.name(feature))));
    }
    use EndpointMark::*;
    let (Some(at_feature), Some(at_target)) = (g.mark(feature, target), g.mark(target, feature)) else {
        return Ok(EdgeClass::NoRelation);
    };
    Ok(match (at_feature, at_target) {
        (Tail, Arrow) => EdgeClass::DefiniteCause,
        (Circle, Arrow) => EdgeClass::PossibleCause,
        (Arrow, Arrow) => EdgeClass::ConfoundedOnly,
        (Circle | Tail, Circle) => EdgeClass::PossibleCause,
        (Arrow, Tail) => {
            log::warn!(
                "`{}` is oriented as a cause of `{}`; target-non-ancestor knowledge is violated",
                g.name(target),
                g.name(feature)
            );
            EdgeClass::NoRelation
        }
        (Arrow, Circle) | (Tail, Tail) | (Circle, Tail) => EdgeClass::NoRelation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn population_pag() -> MixedGraph {
        MixedGraph::from_edge_specs(
            &["H", "V", "R", "Yhat"],
            GraphKind::Pag,
            &["H o-o V", "H o-> R", "R <-> Yhat", "V o-> Yhat"],
        )
        .unwrap()
    }

    #[test]
    fn population_pag_classes() {
        let g = population_pag();
        let t = g.node("Yhat").unwrap();
        assert_eq!(classify_edge(&g, 1, t).unwrap(), EdgeClass::PossibleCause);
        assert_eq!(classify_edge(&g, 2, t).unwrap(), EdgeClass::ConfoundedOnly);
        assert_eq!(classify_edge(&g, 0, t).unwrap(), EdgeClass::NoRelation);
        assert!(classify_edge(&g, t, t).is_err());
    }

    #[test]
    fn every_mark_pair_is_classified() {
        use EndpointMark::*;
        for a in [Tail, Arrow, Circle] {
            for b in [Tail, Arrow, Circle] {
                let mut g = MixedGraph::new(&["Z", "T"], GraphKind::Pag).unwrap();
                g.add_edge(0, 1, a, b).unwrap();
                let class = classify_edge(&g, 0, 1).unwrap();
                assert!(EdgeClass::ALL.contains(&class));
            }
        }
        let g = MixedGraph::from_edge_specs(&["Z", "T"], GraphKind::Pag, &["Z --> T"]).unwrap();
        assert_eq!(classify_edge(&g, 0, 1).unwrap(), EdgeClass::DefiniteCause);
        let g = MixedGraph::from_edge_specs(&["Z", "T"], GraphKind::Pag, &["Z <-- T"]).unwrap();
        assert_eq!(classify_edge(&g, 0, 1).unwrap(), EdgeClass::NoRelation);
    }
}

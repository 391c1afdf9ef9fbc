//! Causal explanations of black-box predictors from partial ancestral graphs.
//!
//! The crate covers mixed-graph primitives, conditional-independence tests,
//! FCI with background knowledge, bootstrap stability of feature-to-target
//! edges and a small ground-truth simulator.

pub mod ci;
pub mod data;
pub mod error;
pub mod fci;
pub mod graph;
pub mod knowledge;
pub mod sim;
pub mod stability;
pub mod stats;

pub use ci::{CiOracle, CiTest, CiTestResult, ChiSquareTest, DiscreteStatistic, FisherZTest};
pub use data::{Column, ColumnData, ColumnKind, Dataset, Schema};
pub use error::{Error, Result};
pub use fci::{fci_run, fci_run_dataset, Diagnostics, FciConfig, FciOutput, Rule, SepSetMap, TestKind};
pub use graph::{classify_edge, EdgeClass, EndpointMark, GraphKind, MixedGraph, NodeId, Violation};
pub use knowledge::BackgroundKnowledge;
pub use stability::{run_stability, StabilityConfig, StabilityReport};

//! Fixtures shared by the benchmarks.

use pagexplain::sim::sample_dataset;
use pagexplain::Dataset;

/// Simulated observational data without the hidden shape.
pub fn shapes_dataset(n: usize, seed: u64) -> Dataset {
    sample_dataset(n, seed, false).expect("simulation")
}

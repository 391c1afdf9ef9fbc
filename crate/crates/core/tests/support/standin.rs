//! Synthetic datasets shaped like the real-data experiments.
#![allow(dead_code)]

use pagexplain::{Column, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Binary features from a sparse random DAG plus a `levels`-valued target
/// driven by the first three features.
pub fn stand_in(n_rows: usize, n_features: usize, levels: u32, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parents: Vec<Vec<(usize, f64)>> = Vec::new();
    for v in 0..n_features {
        let mut pa = Vec::new();
        for u in 0..v {
            if pa.len() < 3 && rng.random_bool(2.0 / n_features as f64 + 0.05) {
                pa.push((u, if rng.random_bool(0.5) { 1.2 } else { -1.2 }));
            }
        }
        parents.push(pa);
    }
    let mut cols = vec![Vec::with_capacity(n_rows); n_features];
    let mut target = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = vec![0u32; n_features];
        for v in 0..n_features {
            let eta: f64 = -0.3 + parents[v].iter().map(|&(u, w)| w * row[u] as f64).sum::<f64>();
            row[v] = rng.random_bool(1.0 / (1.0 + (-eta).exp())) as u32;
        }
        let signal = (row[0] + 2 * row[1] + 4 * row[2]) % levels;
        target.push(if rng.random_bool(0.8) { signal } else { rng.random_range(0..levels) });
        for v in 0..n_features {
            cols[v].push(row[v]);
        }
    }
    let mut columns: Vec<Column> =
        cols.into_iter().enumerate().map(|(i, c)| Column::categorical(format!("Z{}", i + 1), 2, c)).collect();
    columns.push(Column::categorical("Yhat", levels, target));
    Dataset::new(columns).unwrap()
}

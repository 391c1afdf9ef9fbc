//! Bootstrap stability invariants.

use pagexplain::sim::{simulate_explanation_data, PredictorMode};
use pagexplain::stability::Resampling;
use pagexplain::{run_stability, BackgroundKnowledge, Column, Dataset, EdgeClass, FciConfig, StabilityConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(replicates: usize, base_seed: u64) -> StabilityConfig {
    StabilityConfig {
        replicates,
        base_seed,
        fci: FciConfig::default(),
        target: "Yhat".into(),
        resampling: Resampling::Bootstrap,
    }
}

fn noise(n: usize, features: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Column> = (0..features)
        .map(|i| Column::categorical(format!("X{i}"), 2, (0..n).map(|_| rng.random_range(0..2)).collect()))
        .collect();
    cols.push(Column::categorical("Yhat", 2, (0..n).map(|_| rng.random_range(0..2)).collect()));
    Dataset::new(cols).unwrap()
}

#[test]
fn more_replicates_extend_the_same_sequence() {
    let d = simulate_explanation_data(1500, 3, false, PredictorMode::Logistic { seed: 3 }, "Yhat").unwrap().dataset;
    let short = run_stability(&d, &BackgroundKnowledge::new(), &config(6, 11)).unwrap();
    let long = run_stability(&d, &BackgroundKnowledge::new(), &config(12, 11)).unwrap();
    assert_eq!(short.per_replicate[..], long.per_replicate[..6]);
}

#[test]
fn independent_target_is_rarely_called_a_cause() {
    let d = noise(800, 4, 5);
    let rep = run_stability(&d, &BackgroundKnowledge::new(), &config(40, 1)).unwrap();
    for f in &rep.features {
        assert!(f.cause_frequency <= 0.2, "{}: {}", f.feature, f.cause_frequency);
        assert_eq!(f.modal_class(), EdgeClass::NoRelation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frequencies_are_a_distribution(seed in 0u64..1000, replicates in 1usize..6) {
        let d = noise(200, 3, seed);
        let rep = run_stability(&d, &BackgroundKnowledge::new(), &config(replicates, seed)).unwrap();
        prop_assert_eq!(rep.successful_replicates, replicates);
        for f in &rep.features {
            let total: f64 = EdgeClass::ALL.iter().map(|&c| f.frequency(c)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert_eq!(f.counts.iter().sum::<usize>(), replicates);
            let cause = f.frequency(EdgeClass::DefiniteCause) + f.frequency(EdgeClass::PossibleCause);
            prop_assert!((f.cause_frequency - cause).abs() < 1e-12);
        }
    }
}

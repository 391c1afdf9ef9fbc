//! Bootstrap edge stability.
//!
//! FCI is re-run on resampled copies of the data with the target declared a
//! non-ancestor of every feature, and each feature's relation to the target
//! is tallied across replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fci::{fci_run_dataset, FciConfig};
use crate::graph::{classify_edge, EdgeClass};
use crate::knowledge::BackgroundKnowledge;

/// How each replicate is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// `n` rows with replacement.
    #[default]
    Bootstrap,
    /// `floor(fraction * n)` rows without replacement.
    Subsample { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub replicates: usize,
    pub base_seed: u64,
    pub fci: FciConfig,
    pub target: String,
    #[serde(default)]
    pub resampling: Resampling,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index`; independent of how replicates are scheduled.
pub fn replicate_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(index as u64))
}

/// `n` rows drawn uniformly with replacement.
pub fn bootstrap_replicate(d: &Dataset, seed: u64) -> Result<Dataset> {
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::Input("cannot resample an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    Ok(d.select_rows(&rows))
}

/// `floor(fraction * n)` distinct rows, in draw order.
pub fn subsample_replicate(d: &Dataset, seed: u64, fraction: f64) -> Result<Dataset> {
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::Input("cannot resample an empty dataset".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Input(format!("subsample fraction must lie in (0, 1], got {fraction}")));
    }
    let m = ((fraction * n as f64).floor() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        rows.swap(i, j);
    }
    rows.truncate(m);
    Ok(d.select_rows(&rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassFrequencies {
    pub definite_cause: f64,
    pub possible_cause: f64,
    pub confounded_only: f64,
    pub no_relation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureStability {
    pub feature: String,
    /// Counts indexed like [`EdgeClass::ALL`].
    pub counts: [usize; 4],
    pub frequencies: ClassFrequencies,
    /// Frequency of `feature -> target` or `feature o-> target`.
    pub cause_frequency: f64,
}

impl FeatureStability {
    /// Most frequent class; ties go to the earlier class in [`EdgeClass::ALL`].
    pub fn modal_class(&self) -> EdgeClass {
        let mut best = 0;
        for i in 1..4 {
            if self.counts[i] > self.counts[best] {
                best = i;
            }
        }
        EdgeClass::ALL[best]
    }

    pub fn frequency(&self, class: EdgeClass) -> f64 {
        match class {
            EdgeClass::DefiniteCause => self.frequencies.definite_cause,
            EdgeClass::PossibleCause => self.frequencies.possible_cause,
            EdgeClass::ConfoundedOnly => self.frequencies.confounded_only,
            EdgeClass::NoRelation => self.frequencies.no_relation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    /// Class per feature, in [`StabilityReport::features`] order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<EdgeClass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub target: String,
    pub replicates: usize,
    pub successful_replicates: usize,
    pub features: Vec<FeatureStability>,
    pub per_replicate: Vec<ReplicateOutcome>,
}

impl StabilityReport {
    pub fn feature(&self, name: &str) -> Option<&FeatureStability> {
        self.features.iter().find(|f| f.feature == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report JSON") + "\n"
    }

    /// `feature,def_cause,poss_cause,confounded,none,cause_frequency`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,def_cause,poss_cause,confounded,none,cause_frequency\n");
        for f in &self.features {
            let q = &f.frequencies;
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                csv_field(&f.feature),
                q.definite_cause,
                q.possible_cause,
                q.confounded_only,
                q.no_relation,
                f.cause_frequency
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs FCI on every replicate and aggregates feature classifications.
///
/// `knowledge` is merged with `nonancestor target *`. Replicates that fail
/// are recorded and left out of the denominators.
pub fn run_stability(d: &Dataset, knowledge: &BackgroundKnowledge, cfg: &StabilityConfig) -> Result<StabilityReport> {
    if cfg.replicates == 0 {
        return Err(Error::Input("at least one replicate is required".into()));
    }
    cfg.fci.validate()?;
    let target = d.index_of(&cfg.target)?;
    let mut full = knowledge.clone();
    full.add_non_ancestor_of_all(target, d.n_cols())?;
    let features: Vec<usize> = (0..d.n_cols()).filter(|&i| i != target).collect();

    let per_replicate: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|index| {
            let seed = replicate_seed(cfg.base_seed, index);
            let outcome = (|| -> Result<Vec<EdgeClass>> {
                let sample = match cfg.resampling {
                    Resampling::Bootstrap => bootstrap_replicate(d, seed)?,
                    Resampling::Subsample { fraction } => subsample_replicate(d, seed, fraction)?,
                };
                let out = fci_run_dataset(&sample, &full, &cfg.fci)?;
                features.iter().map(|&f| classify_edge(&out.pag, f, target)).collect()
            })();
            match outcome {
                Ok(classes) => ReplicateOutcome { index, seed, classes: Some(classes), error: None },
                Err(e) => {
                    log::warn!("replicate {index} failed: {e}");
                    ReplicateOutcome { index, seed, classes: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect();

    let successful = per_replicate.iter().filter(|r| r.classes.is_some()).count();
    if successful == 0 {
        let first = per_replicate.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Input(format!("all {} replicates failed; first error: {first}", cfg.replicates)));
    }
    let mut counts = vec![[0usize; 4]; features.len()];
    for classes in per_replicate.iter().filter_map(|r| r.classes.as_ref()) {
        for (slot, class) in counts.iter_mut().zip(classes) {
            slot[class.index()] += 1;
        }
    }
    let denom = successful as f64;
    let features = features
        .iter()
        .zip(counts)
        .map(|(&f, c)| {
            let freq = |i: usize| c[i] as f64 / denom;
            FeatureStability {
                feature: d.column(f).name.clone(),
                counts: c,
                frequencies: ClassFrequencies {
                    definite_cause: freq(0),
                    possible_cause: freq(1),
                    confounded_only: freq(2),
                    no_relation: freq(3),
                },
                cause_frequency: (c[0] + c[1]) as f64 / denom,
            }
        })
        .collect();
    Ok(StabilityReport {
        target: cfg.target.clone(),
        replicates: cfg.replicates,
        successful_replicates: successful,
        features,
        per_replicate,
    })
}

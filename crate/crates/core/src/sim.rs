//! Ground-truth simulation of the shape-image experiment.
//!
//! Two uniform latents drive four binary shape indicators and a binary
//! response:
//!
//! ```text
//! U1, U2 ~ Uniform(0, 1)
//! H ~ Bern(U1)        V ~ Bern(1 - U1)        C ~ Bern(U2)
//! R ~ Bern(expit(0.75 H + 0.5 C))
//! Y ~ Bern(expit(-0.5 + 2.5 V + 1.75 C))
//! ```
//!
//! Images are not rendered; a surrogate predictor stands in for the image
//! classifier and produces the prediction column.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::error::{Error, Result};
use crate::graph::{GraphKind, MixedGraph};

/// Logistic function, evaluated without overflow for large `|t|`.
pub fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

const TRUTH_NODES: [&str; 7] = ["U1", "U2", "H", "V", "C", "R", "Y"];
const TRUTH_EDGES: [(&str, &str); 7] =
    [("U1", "H"), ("U1", "V"), ("U2", "C"), ("H", "R"), ("C", "R"), ("V", "Y"), ("C", "Y")];

/// The data-generating DAG over `U1, U2, H, V, C, R, Y`.
pub fn truth_dag() -> MixedGraph {
    truth_dag_with_target("Y")
}

/// [`truth_dag`] with the response node renamed (e.g. to `Yhat`).
pub fn truth_dag_with_target(target: &str) -> MixedGraph {
    let rename = |n: &'static str| if n == "Y" { target } else { n };
    let names: Vec<&str> = TRUTH_NODES.iter().map(|&n| rename(n)).collect();
    let mut g = MixedGraph::new(&names, GraphKind::Dag).expect("distinct truth names");
    for (a, b) in TRUTH_EDGES {
        let (a, b) = (g.node(rename(a)).expect("node"), g.node(rename(b)).expect("node"));
        g.add_directed(a, b).expect("fresh edge");
    }
    g
}

/// One draw of the structural equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample {
    pub u1: f64,
    pub u2: f64,
    pub h: u32,
    pub v: u32,
    pub c: u32,
    pub r: u32,
    pub y: u32,
}

fn bern(rng: &mut ChaCha8Rng, p: f64) -> u32 {
    (rng.random::<f64>() < p) as u32
}

/// Row `i` comes from its own ChaCha stream, so rows can be drawn in any order.
pub fn sample_row(seed: u64, row: u64) -> SimSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let h = bern(&mut rng, u1);
    let v = bern(&mut rng, 1.0 - u1);
    let c = bern(&mut rng, u2);
    let r = bern(&mut rng, expit(0.75 * h as f64 + 0.5 * c as f64));
    let y = bern(&mut rng, expit(-0.5 + 2.5 * v as f64 + 1.75 * c as f64));
    SimSample { u1, u2, h, v, c, r, y }
}

pub fn sample_rows(n: usize, seed: u64) -> Vec<SimSample> {
    (0..n as u64).into_par_iter().map(|i| sample_row(seed, i)).collect()
}

/// Observed columns `H, V, [C,] R, Y`; the latents are never exported.
pub fn sample_dataset(n: usize, seed: u64, include_c: bool) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let rows = sample_rows(n, seed);
    let col = |name: &str, f: fn(&SimSample) -> u32| Column::categorical(name, 2, rows.iter().map(f).collect());
    let mut columns = vec![col("H", |s| s.h), col("V", |s| s.v)];
    if include_c {
        columns.push(col("C", |s| s.c));
    }
    columns.push(col("R", |s| s.r));
    columns.push(col("Y", |s| s.y));
    Dataset::new(columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PredictorMode {
    /// Prediction equals the response.
    Perfect,
    /// Logistic regression on the shape indicators, thresholded at 0.5.
    /// `seed` picks the 70/30 train/held-out split.
    Logistic { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SurrogateOutput {
    /// Input with the response replaced by the prediction column.
    pub dataset: Dataset,
    /// `(name, value)` with the intercept first; empty in perfect mode.
    pub coefficients: Vec<(String, f64)>,
    pub heldout_accuracy: Option<f64>,
}

impl SurrogateOutput {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

const SHAPES: [&str; 4] = ["H", "V", "C", "R"];

/// Replaces column `Y` by a prediction column named `target`.
pub fn surrogate_predictor(d: &Dataset, mode: PredictorMode, target: &str) -> Result<SurrogateOutput> {
    let yi = d.index_of("Y")?;
    let (y, _) = d.categorical(yi)?;
    match mode {
        PredictorMode::Perfect => {
            let mut out = d.clone();
            out.rename_column("Y", target)?;
            Ok(SurrogateOutput { dataset: out, coefficients: Vec::new(), heldout_accuracy: None })
        }
        PredictorMode::Logistic { seed } => {
            let predictors: Vec<(&str, &[u32])> = SHAPES
                .iter()
                .filter_map(|&s| d.index_of(s).ok().map(|i| d.categorical(i).map(|(v, _)| (s, v))))
                .collect::<Result<_>>()?;
            let n = d.n_rows();
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let n_train = ((n as f64) * 0.7).round().max(1.0) as usize;
            let (train, test) = order.split_at(n_train.min(n));
            let row = |r: usize| -> Vec<f64> {
                std::iter::once(1.0).chain(predictors.iter().map(|(_, v)| v[r] as f64)).collect()
            };
            let x: Vec<Vec<f64>> = train.iter().map(|&r| row(r)).collect();
            let yt: Vec<f64> = train.iter().map(|&r| y[r] as f64).collect();
            let beta = fit_logistic(&x, &yt)?;
            let predict = |r: usize| -> u32 {
                let eta: f64 = row(r).iter().zip(&beta).map(|(a, b)| a * b).sum();
                (expit(eta) > 0.5) as u32
            };
            let yhat: Vec<u32> = (0..n).map(predict).collect();
            let heldout_accuracy = (!test.is_empty())
                .then(|| test.iter().filter(|&&r| yhat[r] == y[r]).count() as f64 / test.len() as f64);
            let mut out = d.clone();
            out.replace_column("Y", Column::categorical(target, 2, yhat))?;
            let coefficients = std::iter::once(("intercept".to_string(), beta[0]))
                .chain(predictors.iter().zip(&beta[1..]).map(|((name, _), &b)| (name.to_string(), b)))
                .collect();
            Ok(SurrogateOutput { dataset: out, coefficients, heldout_accuracy })
        }
    }
}

/// Maximum-likelihood logistic regression by Newton ascent on the
/// log-likelihood; stops once the largest coefficient step is below 1e-8.
/// Rows of `x` should include the intercept column.
pub fn fit_logistic(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::Fit("logistic fit needs matching non-empty inputs".into()));
    }
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 || positives == n {
        return Err(Error::Fit("response has a single class".into()));
    }
    let p = x[0].len();
    let design = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let target = DVector::from_column_slice(y);
    let mut beta = DVector::zeros(p);
    for _ in 0..200 {
        let eta = &design * &beta;
        let mu = eta.map(expit);
        let grad = design.transpose() * (&target - &mu);
        let w = mu.map(|m| m * (1.0 - m));
        let mut hess = DMatrix::zeros(p, p);
        for i in 0..n {
            let row = design.row(i);
            hess += w[i] * row.transpose() * row;
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Fit("information matrix is singular".into()))?
            .solve(&grad);
        beta += &step;
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Fit("coefficients diverged (separable data?)".into()));
        }
        if step.amax() < 1e-8 {
            return Ok(beta.iter().copied().collect());
        }
    }
    Err(Error::Fit("logistic fit did not converge".into()))
}

/// Samples with `C`, derives the prediction column, then drops `C` unless
/// `include_c`. This is what the command-line `simulate` writes.
pub fn simulate_explanation_data(
    n: usize,
    seed: u64,
    include_c: bool,
    mode: PredictorMode,
    target: &str,
) -> Result<SurrogateOutput> {
    let full = sample_dataset(n, seed, true)?;
    let mut out = surrogate_predictor(&full, mode, target)?;
    if !include_c {
        out.dataset = out.dataset.drop_column("C")?;
    }
    Ok(out)
}

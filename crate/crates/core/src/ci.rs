//! Conditional-independence tests behind one interface.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;
use thread_local::ThreadLocal;

use crate::data::{ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::graph::{d_separated, GraphKind, MixedGraph, NodeId};
use crate::stats::{chi2_sf, normal_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
    pub alpha: f64,
    /// No stratum carried information (discrete tests with `dof == 0`);
    /// reported as independent.
    pub uninformative: bool,
}

impl CiTestResult {
    fn from_p(statistic: f64, dof: usize, p_value: f64, alpha: f64) -> Self {
        Self { statistic, dof, p_value, independent: p_value > alpha, alpha, uninformative: false }
    }
}

/// A conditional-independence decision procedure over a fixed variable list.
///
/// Implementations are pure functions of the query, so they can be
/// evaluated from many threads at once.
pub trait CiTest: Send + Sync {
    fn variables(&self) -> &[String];

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> Result<CiTestResult>;
}

fn check_query(n_vars: usize, x: usize, y: usize, s: &[usize]) -> Result<()> {
    if x >= n_vars || y >= n_vars || s.iter().any(|&v| v >= n_vars) {
        return Err(Error::Input(format!("variable index out of range ({n_vars} variables)")));
    }
    if x == y {
        return Err(Error::Input("independence query needs two distinct variables".into()));
    }
    if s.contains(&x) || s.contains(&y) {
        return Err(Error::Input("conditioning set contains a tested variable".into()));
    }
    Ok(())
}

/// Discrete test statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteStatistic {
    /// Pearson's X².
    #[default]
    Pearson,
    /// Likelihood-ratio G².
    GSquare,
}

/// Pearson chi-square test of `x _||_ y | s` on categorical columns.
pub fn chi_square_test(d: &Dataset, x: usize, y: usize, s: &[usize], alpha: f64) -> Result<CiTestResult> {
    discrete_test(d, x, y, s, alpha, DiscreteStatistic::Pearson)
}

/// Likelihood-ratio variant of [`chi_square_test`].
pub fn g_square_test(d: &Dataset, x: usize, y: usize, s: &[usize], alpha: f64) -> Result<CiTestResult> {
    discrete_test(d, x, y, s, alpha, DiscreteStatistic::GSquare)
}

/// Joint tables up to this many cells (or four per row, if larger) are
/// counted in a flat array.
const DENSE_TABLE_LIMIT: u64 = 1 << 20;

/// Stratified contingency-table test.
///
/// Each joint configuration of `s` contributes the statistic of its own
/// `x` by `y` table. Rows and columns with zero margin are dropped from that
/// stratum's degrees of freedom; a stratum with fewer than two non-empty rows
/// or columns contributes nothing.
pub fn discrete_test(
    d: &Dataset,
    x: usize,
    y: usize,
    s: &[usize],
    alpha: f64,
    statistic: DiscreteStatistic,
) -> Result<CiTestResult> {
    let q = Query::new(d, x, y, s)?;
    let counts = if q.dense() {
        let mut cell = q.pair_cells();
        let mut stride = q.cells as u32;
        for &(v, a) in &q.cond {
            add_column(&mut cell, v, stride);
            stride *= a;
        }
        dense_counts(&cell, q.radix as usize * q.cells)
    } else {
        q.sparse_counts()
    };
    Ok(stratified_statistic(&counts, q.ax, q.ay, alpha, statistic))
}

/// A validated query with `x < y`.
struct Query<'d> {
    n: usize,
    x: usize,
    y: usize,
    xv: &'d [u32],
    yv: &'d [u32],
    ax: usize,
    ay: usize,
    cells: usize,
    cond: Vec<(&'d [u32], u32)>,
    radix: u64,
}

impl<'d> Query<'d> {
    fn new(d: &'d Dataset, x: usize, y: usize, s: &[usize]) -> Result<Self> {
        check_query(d.n_cols(), x, y, s)?;
        if d.n_rows() == 0 {
            return Err(Error::Input("empty dataset".into()));
        }
        // canonical order keeps the floating-point sum identical under x <-> y
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let (xv, ax) = d.categorical(x)?;
        let (yv, ay) = d.categorical(y)?;
        let cond: Vec<(&[u32], u32)> = s.iter().map(|&c| d.categorical(c)).collect::<Result<_>>()?;
        let mut radix: u64 = 1;
        for &(_, a) in &cond {
            radix = radix
                .checked_mul(a as u64)
                .ok_or_else(|| Error::Input("conditioning set has too many joint configurations".into()))?;
        }
        let (ax, ay) = (ax as usize, ay as usize);
        Ok(Self { n: d.n_rows(), x, y, xv, yv, ax, ay, cells: ax * ay, cond, radix })
    }

    fn dense(&self) -> bool {
        self.radix.saturating_mul(self.cells as u64) <= DENSE_TABLE_LIMIT.max(4 * self.n as u64)
    }

    fn pair_cells(&self) -> Vec<u32> {
        let ay = self.ay as u32;
        self.xv.iter().zip(self.yv).map(|(&a, &b)| a * ay + b).collect()
    }

    /// Tables for the strata that occur, in increasing key order, which is
    /// the order the dense layout visits them in.
    fn sparse_counts(&self) -> Vec<u32> {
        let mut keys = vec![0u64; self.n];
        for &(v, a) in self.cond.iter().rev() {
            keys.iter_mut().zip(v).for_each(|(k, &c)| *k = *k * a as u64 + c as u64);
        }
        let mut distinct = keys.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let stratum_of: HashMap<u64, usize> = distinct.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut counts = vec![0u32; distinct.len() * self.cells];
        for r in 0..self.n {
            counts[stratum_of[&keys[r]] * self.cells + self.xv[r] as usize * self.ay + self.yv[r] as usize] += 1;
        }
        counts
    }
}

fn add_column(cell: &mut [u32], v: &[u32], stride: u32) {
    cell.iter_mut().zip(v).for_each(|(k, &c)| *k += c * stride);
}

fn dense_counts(cell: &[u32], len: usize) -> Vec<u32> {
    let mut counts = vec![0u32; len];
    for &k in cell {
        counts[k as usize] += 1;
    }
    counts
}

/// Sums the per-stratum statistic over consecutive `ax` by `ay` tables.
fn stratified_statistic(counts: &[u32], ax: usize, ay: usize, alpha: f64, statistic: DiscreteStatistic) -> CiTestResult {
    let mut stat = 0.0;
    let mut dof = 0usize;
    let mut rows = vec![0u64; ax];
    let mut cols = vec![0u64; ay];
    for table in counts.chunks_exact(ax * ay) {
        rows.iter_mut().for_each(|v| *v = 0);
        cols.iter_mut().for_each(|v| *v = 0);
        for i in 0..ax {
            for j in 0..ay {
                let c = table[i * ay + j] as u64;
                rows[i] += c;
                cols[j] += c;
            }
        }
        if rows.iter().all(|&v| v == 0) {
            continue;
        }
        let nz_rows = rows.iter().filter(|&&v| v > 0).count();
        let nz_cols = cols.iter().filter(|&&v| v > 0).count();
        if nz_rows < 2 || nz_cols < 2 {
            continue;
        }
        dof += (nz_rows - 1) * (nz_cols - 1);
        let total: u64 = rows.iter().sum();
        let total = total as f64;
        for i in (0..ax).filter(|&i| rows[i] > 0) {
            for j in (0..ay).filter(|&j| cols[j] > 0) {
                let observed = table[i * ay + j] as f64;
                let expected = rows[i] as f64 * cols[j] as f64 / total;
                stat += match statistic {
                    DiscreteStatistic::Pearson => (observed - expected).powi(2) / expected,
                    DiscreteStatistic::GSquare if observed > 0.0 => 2.0 * observed * (observed / expected).ln(),
                    DiscreteStatistic::GSquare => 0.0,
                };
            }
        }
    }
    let stat = stat.max(0.0);
    if dof == 0 {
        return CiTestResult { statistic: stat, dof, p_value: 1.0, independent: true, alpha, uninformative: true };
    }
    CiTestResult::from_p(stat, dof, chi2_sf(stat, dof), alpha)
}

/// Cell indices for the last queried pair and conditioning prefix.
///
/// `levels[i]` holds the cell index of every row after adding the first `i`
/// conditioning columns. Searches visit subsets in lexicographic order, so
/// consecutive queries usually share all but the last column.
#[derive(Default)]
struct CellCache {
    pair: Option<(usize, usize)>,
    set: Vec<usize>,
    levels: Vec<Vec<u32>>,
}

/// Discrete test bound to a dataset.
pub struct ChiSquareTest<'a> {
    data: &'a Dataset,
    names: Vec<String>,
    alpha: f64,
    statistic: DiscreteStatistic,
    cache: ThreadLocal<RefCell<CellCache>>,
}

impl std::fmt::Debug for ChiSquareTest<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChiSquareTest").field("alpha", &self.alpha).field("statistic", &self.statistic).finish()
    }
}

impl<'a> ChiSquareTest<'a> {
    pub fn new(data: &'a Dataset, alpha: f64, statistic: DiscreteStatistic) -> Result<Self> {
        check_alpha(alpha)?;
        for c in data.columns() {
            if !matches!(c.kind, ColumnKind::Categorical { .. }) {
                return Err(Error::Type(format!("chi-square test needs categorical columns; `{}` is continuous", c.name)));
            }
        }
        if data.n_rows() == 0 {
            return Err(Error::Input("empty dataset".into()));
        }
        Ok(Self { data, names: data.names(), alpha, statistic, cache: ThreadLocal::new() })
    }
}

impl CiTest for ChiSquareTest<'_> {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> Result<CiTestResult> {
        let q = Query::new(self.data, x, y, s)?;
        if !q.dense() {
            return discrete_test(self.data, x, y, s, self.alpha, self.statistic);
        }
        let mut cache = self.cache.get_or_default().borrow_mut();
        let cache = &mut *cache;
        if cache.pair != Some((q.x, q.y)) {
            cache.pair = Some((q.x, q.y));
            cache.set.clear();
            cache.levels.clear();
            cache.levels.push(q.pair_cells());
        }
        // the last column is folded into the count; only the prefix is kept
        let (prefix, last) = match s.split_last() {
            Some((&l, p)) => (p, Some(l)),
            None => (s, None),
        };
        let keep = cache.set.iter().zip(prefix).take_while(|(a, b)| a == b).count();
        cache.set.truncate(keep);
        cache.levels.truncate(keep + 1);
        let mut stride = q.cells as u32 * q.cond[..keep].iter().map(|&(_, a)| a).product::<u32>();
        for (&c, &(v, a)) in prefix[keep..].iter().zip(&q.cond[keep..]) {
            let prev = &cache.levels[cache.levels.len() - 1];
            let next: Vec<u32> = prev.iter().zip(v).map(|(&k, &c)| k + c * stride).collect();
            stride *= a;
            cache.set.push(c);
            cache.levels.push(next);
        }
        let base = &cache.levels[prefix.len()];
        let mut counts = vec![0u32; q.radix as usize * q.cells];
        match last {
            Some(_) => {
                let v = q.cond[prefix.len()].0;
                for (&k, &c) in base.iter().zip(v) {
                    counts[(k + c * stride) as usize] += 1;
                }
            }
            None => base.iter().for_each(|&k| counts[k as usize] += 1),
        }
        Ok(stratified_statistic(&counts, q.ax, q.ay, self.alpha, self.statistic))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn correlation_matrix(columns: &[&[f64]]) -> DMatrix<f64> {
    let k = columns.len();
    let n = columns.first().map_or(0, |c| c.len()) as f64;
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centred.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut m = DMatrix::identity(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = if norms[i] > 0.0 && norms[j] > 0.0 { dot / (norms[i] * norms[j]) } else { f64::NAN };
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    m
}

fn fisher_z_from_corr(corr: &DMatrix<f64>, idx: &[usize], n: usize, cond: usize, alpha: f64) -> Result<CiTestResult> {
    if n <= cond + 3 {
        return Err(Error::Input(format!("Fisher z needs n > |S| + 3 (n = {n}, |S| = {cond})")));
    }
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| corr[(idx[i], idx[j])]);
    if sub.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("constant column in correlation submatrix".into()));
    }
    let chol = sub
        .cholesky()
        .ok_or_else(|| Error::Degenerate("singular correlation submatrix".into()))?;
    if chol.l_dirty().diagonal().iter().any(|&d| d < 1e-7) {
        return Err(Error::Degenerate("singular correlation submatrix".into()));
    }
    let precision = chol.inverse();
    let denom = (precision[(0, 0)] * precision[(1, 1)]).sqrt();
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::Degenerate("singular correlation submatrix".into()));
    }
    let limit = 1.0 - 1e-15;
    let rho = (-precision[(0, 1)] / denom).clamp(-limit, limit);
    let z = ((n - cond - 3) as f64).sqrt() * rho.atanh();
    let stat = z.abs();
    Ok(CiTestResult::from_p(stat, n - cond - 3, normal_two_sided(stat), alpha))
}

/// Fisher's z test of zero partial correlation on continuous columns.
pub fn fisher_z_test(d: &Dataset, x: usize, y: usize, s: &[usize], alpha: f64) -> Result<CiTestResult> {
    check_query(d.n_cols(), x, y, s)?;
    let mut cols = vec![d.continuous(x)?, d.continuous(y)?];
    for &c in s {
        cols.push(d.continuous(c)?);
    }
    let corr = correlation_matrix(&cols);
    let idx: Vec<usize> = (0..cols.len()).collect();
    fisher_z_from_corr(&corr, &idx, d.n_rows(), s.len(), alpha)
}

/// Fisher z test with the full correlation matrix computed once.
#[derive(Debug, Clone)]
pub struct FisherZTest {
    names: Vec<String>,
    corr: DMatrix<f64>,
    n: usize,
    alpha: f64,
}

impl FisherZTest {
    pub fn new(data: &Dataset, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let cols: Vec<&[f64]> = (0..data.n_cols()).map(|i| data.continuous(i)).collect::<Result<_>>()?;
        Ok(Self { names: data.names(), corr: correlation_matrix(&cols), n: data.n_rows(), alpha })
    }
}

impl CiTest for FisherZTest {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> Result<CiTestResult> {
        check_query(self.names.len(), x, y, s)?;
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let mut idx = vec![x, y];
        idx.extend_from_slice(s);
        fisher_z_from_corr(&self.corr, &idx, self.n, s.len(), self.alpha)
    }
}

/// Population-limit test: answers queries by d-separation in a known DAG
/// restricted to an observed subset of its nodes.
#[derive(Debug, Clone)]
pub struct CiOracle {
    truth: MixedGraph,
    observed: Vec<NodeId>,
    names: Vec<String>,
}

impl CiOracle {
    pub fn new<S: AsRef<str>>(truth: MixedGraph, observed: &[S]) -> Result<Self> {
        if truth.kind() != GraphKind::Dag {
            return Err(Error::Input("oracle truth must be a DAG".into()));
        }
        if let Some(v) = truth.validate().first() {
            return Err(Error::Input(format!("oracle truth is not a valid DAG: {v}")));
        }
        let mut ids = Vec::with_capacity(observed.len());
        for name in observed {
            let id = truth.node(name.as_ref())?;
            if ids.contains(&id) {
                return Err(Error::Input(format!("`{}` observed twice", name.as_ref())));
            }
            ids.push(id);
        }
        let names = observed.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(Self { truth, observed: ids, names })
    }

    /// Observes every node of the truth.
    pub fn fully_observed(truth: MixedGraph) -> Result<Self> {
        let names = truth.names().to_vec();
        Self::new(truth, &names)
    }

    pub fn truth(&self) -> &MixedGraph {
        &self.truth
    }

    /// Query by name; latent names are an input error.
    pub fn query(&self, x: &str, y: &str, s: &[&str]) -> Result<bool> {
        let find = |name: &str| {
            self.names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Input(format!("`{name}` is not an observed variable")))
        };
        let s: Vec<NodeId> = s.iter().map(|n| find(n)).collect::<Result<_>>()?;
        oracle_test(self, find(x)?, find(y)?, &s)
    }
}

/// d-separation of observed variables `x`, `y` given `s` in the oracle's DAG.
pub fn oracle_test(o: &CiOracle, x: NodeId, y: NodeId, s: &[NodeId]) -> Result<bool> {
    check_query(o.observed.len(), x, y, s)?;
    let map = |v: NodeId| o.observed[v];
    let s: Vec<NodeId> = s.iter().copied().map(map).collect();
    d_separated(&o.truth, map(x), map(y), &s)
}

impl CiTest for CiOracle {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> Result<CiTestResult> {
        let independent = oracle_test(self, x, y, s)?;
        Ok(CiTestResult {
            statistic: 0.0,
            dof: 0,
            p_value: if independent { 1.0 } else { 0.0 },
            independent,
            alpha: 0.5,
            uninformative: false,
        })
    }
}

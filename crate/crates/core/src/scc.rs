//! Stratum-adjusted correlation between contact maps.
//!
//! Entries are grouped by bin separation `k`, a Pearson-type covariance and
//! variance is taken per stratum, and the strata are combined with weights
//! `card(N_k)`:
//!
//! ```text
//! SCC(X, Y) = sum_k card_k * Cov(X_k, Y_k) / sum_k card_k * sqrt(Var(X_k) * Var(Y_k))
//! ```
//!
//! Statistics are population moments. Strata with fewer than two entries or
//! with zero variance on either side are skipped.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ingest::ContactMap;

/// Which index pairs make up a stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StratumConvention {
    /// `(i, j)` with `j - i = k`.
    #[default]
    UpperTriangle,
    /// Both `(i, j)` and `(j, i)`; every entry appears twice.
    BothOrders,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SccOptions {
    /// Largest separation `k` to include; `None` keeps every stratum.
    pub max_separation: Option<usize>,
    pub convention: StratumConvention,
}

/// Aligned entries of two maps at one bin separation.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub k: usize,
    pub entries_x: Vec<f64>,
    pub entries_y: Vec<f64>,
}

fn check_shapes(x: &ContactMap, y: &ContactMap) -> Result<()> {
    if x.n_bins() != y.n_bins() || x.bin_size() != y.bin_size() {
        return Err(Error::Dimension(format!(
            "contact maps differ in shape: {} bins of {} bp vs {} bins of {} bp",
            x.n_bins(),
            x.bin_size(),
            y.n_bins(),
            y.bin_size()
        )));
    }
    Ok(())
}

fn max_k(n: usize, opts: SccOptions) -> usize {
    let full = n.saturating_sub(1);
    opts.max_separation.map_or(full, |cap| cap.min(full))
}

fn diagonal(dense: &[f64], n: usize, k: usize, convention: StratumConvention) -> Vec<f64> {
    let upper = (0..n - k).map(|i| dense[i * n + i + k]);
    match convention {
        StratumConvention::UpperTriangle => upper.collect(),
        StratumConvention::BothOrders => upper.chain((0..n - k).map(|i| dense[(i + k) * n + i])).collect(),
    }
}

/// Splits two equally shaped maps into strata `k = 1 ..= n_bins - 1`.
pub fn strata(x: &ContactMap, y: &ContactMap, opts: SccOptions) -> Result<Vec<Stratum>> {
    check_shapes(x, y)?;
    let n = x.n_bins();
    let (dx, dy) = (x.to_dense(), y.to_dense());
    Ok((1..=max_k(n, opts))
        .map(|k| Stratum {
            k,
            entries_x: diagonal(&dx, n, k, opts.convention),
            entries_y: diagonal(&dy, n, k, opts.convention),
        })
        .collect())
}

/// Centered strata of a single map, precomputed once so that each pairwise
/// comparison is a sequence of dot products.
#[derive(Debug, Clone)]
pub struct StratifiedMap {
    n_bins: usize,
    bin_size: u64,
    strata: Vec<CenteredStratum>,
}

#[derive(Debug, Clone)]
struct CenteredStratum {
    centered: Vec<f64>,
    /// Population variance; `None` when the stratum is degenerate.
    var: Option<f64>,
}

fn center(values: &[f64]) -> CenteredStratum {
    let card = values.len();
    if card < 2 {
        return CenteredStratum { centered: Vec::new(), var: None };
    }
    let mean = values.iter().sum::<f64>() / card as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = dot(&centered, &centered) / card as f64;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Constant strata can leave rounding residue in the centered values.
    let degenerate = var <= (1e-12 * scale) * (1e-12 * scale) || var == 0.0;
    CenteredStratum { centered, var: (!degenerate).then_some(var) }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl StratifiedMap {
    pub fn new(map: &ContactMap, opts: SccOptions) -> Self {
        let n = map.n_bins();
        let dense = map.to_dense();
        let strata = (1..=max_k(n, opts)).map(|k| center(&diagonal(&dense, n, k, opts.convention))).collect();
        Self { n_bins: n, bin_size: map.bin_size(), strata }
    }

    /// True when at least one stratum has positive variance.
    pub fn has_signal(&self) -> bool {
        self.strata.iter().any(|s| s.var.is_some())
    }

    /// SCC against another stratified map of the same shape.
    pub fn scc(&self, other: &StratifiedMap) -> Result<f64> {
        if self.n_bins != other.n_bins || self.bin_size != other.bin_size || self.strata.len() != other.strata.len() {
            return Err(Error::Dimension("stratified maps differ in shape".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in self.strata.iter().zip(&other.strata) {
            let (Some(va), Some(vb)) = (a.var, b.var) else { continue };
            let card = a.centered.len() as f64;
            let cov = dot(&a.centered, &b.centered) / card;
            num += card * cov;
            den += card * (va * vb).sqrt();
        }
        if den == 0.0 {
            return Err(Error::Degenerate("no stratum has positive variance in both maps".into()));
        }
        Ok((num / den).clamp(-1.0, 1.0))
    }

    /// Distance `sqrt(2 - 2 SCC)`; the self-similarities are exactly one.
    pub fn d_scc(&self, other: &StratifiedMap) -> Result<f64> {
        if !self.has_signal() || !other.has_signal() {
            return Err(Error::Degenerate("a contact map has no stratum with positive variance".into()));
        }
        Ok(distance_from_similarity(self.scc(other)?))
    }
}

/// `sqrt(2 - 2 s)`, clamping a radicand that is negative only by rounding.
pub fn distance_from_similarity(s: f64) -> f64 {
    let radicand = 2.0 - 2.0 * s;
    if radicand < 0.0 {
        debug_assert!(radicand > -1e-12, "similarity {s} above one");
        0.0
    } else {
        radicand.sqrt()
    }
}

/// Stratum-adjusted correlation coefficient of two contact maps.
pub fn scc(x: &ContactMap, y: &ContactMap, opts: SccOptions) -> Result<f64> {
    check_shapes(x, y)?;
    StratifiedMap::new(x, opts).scc(&StratifiedMap::new(y, opts))
}

/// `sqrt(SCC(x,x) + SCC(y,y) - 2 SCC(x,y))` with unit self-similarities.
pub fn d_scc(x: &ContactMap, y: &ContactMap, opts: SccOptions) -> Result<f64> {
    check_shapes(x, y)?;
    StratifiedMap::new(x, opts).d_scc(&StratifiedMap::new(y, opts))
}

/// Dense symmetric matrix indexed by sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("{} values for a {n}x{n} matrix", values.len())));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Pairwise `d_SCC` values; symmetric with a zero diagonal.
pub type DistanceMatrix = SquareMatrix;
/// Pairwise SCC values; symmetric with a unit diagonal.
pub type SimilarityMatrix = SquareMatrix;

/// Pairwise SCC similarities and `d_SCC` distances over a sample collection.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseScc {
    pub similarity: SimilarityMatrix,
    pub distance: DistanceMatrix,
}

/// Computes all pairwise similarities and distances.
///
/// Pairs are evaluated independently and written to disjoint cells, so the
/// result does not depend on the execution strategy.
pub fn pairwise(samples: &[ContactMap], opts: SccOptions, exec: Execution) -> Result<PairwiseScc> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("pairwise distances need at least 2 samples, got {n}")));
    }
    for (idx, s) in samples.iter().enumerate().skip(1) {
        check_shapes(&samples[0], s).map_err(|e| Error::Dimension(format!("sample {idx}: {e}")))?;
    }
    let stratified = exec::map_slice(exec, samples, |m| StratifiedMap::new(m, opts));
    if let Some(bad) = stratified.iter().position(|s| !s.has_signal()) {
        return Err(Error::Degenerate(format!("sample {bad} has no stratum with positive variance")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let sims = exec::map_slice(exec, &pairs, |&(a, b)| stratified[a].scc(&stratified[b]));

    let mut similarity = SquareMatrix::zeros(n);
    let mut distance = SquareMatrix::zeros(n);
    for i in 0..n {
        similarity.set(i, i, 1.0);
    }
    for (&(a, b), s) in pairs.iter().zip(sims) {
        let s = s.map_err(|e| Error::Degenerate(format!("pair ({a}, {b}): {e}")))?;
        let d = distance_from_similarity(s);
        similarity.set(a, b, s);
        similarity.set(b, a, s);
        distance.set(a, b, d);
        distance.set(b, a, d);
    }
    Ok(PairwiseScc { similarity, distance })
}

/// `d_SCC` distance matrix; see [`pairwise`].
pub fn pairwise_distances(samples: &[ContactMap], opts: SccOptions, exec: Execution) -> Result<DistanceMatrix> {
    pairwise(samples, opts, exec).map(|p| p.distance)
}

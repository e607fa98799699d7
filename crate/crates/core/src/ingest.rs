//! Fragment-pair ingestion: parsing, binning, smoothing and band markers.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Default upper bound of the near band, in basepairs.
pub const DEFAULT_NEAR_MAX: u64 = 2_000_000;
/// Default lower bound of the mitotic band, in basepairs.
pub const DEFAULT_MITOTIC_MIN: u64 = 2_000_000;
/// Default upper bound of the mitotic band, in basepairs.
pub const DEFAULT_MITOTIC_MAX: u64 = 12_000_000;

/// One ligated fragment pair on a single chromosome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentPairRecord {
    pub sample_id: String,
    pub pos_a: u64,
    pub pos_b: u64,
}

/// Supported fragment-pair text layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairFormat {
    /// `sample_id<TAB>pos_a<TAB>pos_b`, `#` comment lines allowed.
    #[default]
    Tsv3,
}

/// Parses fragment pairs from tab-separated text.
pub fn parse_pairs<R: BufRead>(reader: R, format: PairFormat) -> Result<Vec<FragmentPairRecord>> {
    let PairFormat::Tsv3 = format;
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let coord = |s: &str| {
            s.trim().parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric coordinate {s:?}"),
            })
        };
        records.push(FragmentPairRecord {
            sample_id: fields[0].to_string(),
            pos_a: coord(fields[1])?,
            pos_b: coord(fields[2])?,
        });
    }
    Ok(records)
}

/// Sparse symmetric contact matrix over equally sized genomic bins.
///
/// Only the upper triangle (`i <= j`) is stored; lookups are symmetric.
/// Zero entries are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMap {
    n_bins: usize,
    bin_size: u64,
    upper: BTreeMap<(usize, usize), f64>,
}

impl ContactMap {
    pub fn new(n_bins: usize, bin_size: u64) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::Parameter("n_bins must be positive".into()));
        }
        if bin_size == 0 {
            return Err(Error::Parameter("bin_size must be positive".into()));
        }
        Ok(Self { n_bins, bin_size, upper: BTreeMap::new() })
    }

    /// Builds a map from a dense row-major matrix. Only the upper triangle
    /// is read; the caller is responsible for symmetry of the source.
    pub fn from_dense(n_bins: usize, bin_size: u64, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_bins * n_bins {
            return Err(Error::Dimension(format!(
                "dense buffer has {} entries, expected {}",
                dense.len(),
                n_bins * n_bins
            )));
        }
        let mut map = Self::new(n_bins, bin_size)?;
        for i in 0..n_bins {
            for j in i..n_bins {
                map.set(i, j, dense[i * n_bins + j])?;
            }
        }
        Ok(map)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn bin_size(&self) -> u64 {
        self.bin_size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.upper.get(&key).copied().unwrap_or(0.0)
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i >= self.n_bins || j >= self.n_bins {
            return Err(Error::Dimension(format!("index ({i}, {j}) outside {} bins", self.n_bins)));
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Parameter(format!("contact value {value} must be finite and non-negative")));
        }
        let key = if i <= j { (i, j) } else { (j, i) };
        if value == 0.0 {
            self.upper.remove(&key);
        } else {
            self.upper.insert(key, value);
        }
        Ok(())
    }

    fn add(&mut self, i: usize, j: usize, value: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.upper.entry(key).or_insert(0.0) += value;
    }

    /// Non-zero upper-triangle entries `(i, j, value)` with `i <= j`, row-major.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.upper.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    /// Dense row-major copy of the full symmetric matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_bins;
        let mut dense = vec![0.0; n * n];
        for (&(i, j), &v) in &self.upper {
            dense[i * n + j] = v;
            dense[j * n + i] = v;
        }
        dense
    }

    /// Sum over the upper triangle including the diagonal.
    pub fn upper_total(&self) -> f64 {
        self.upper.values().sum()
    }
}

/// Bins fragment pairs into a symmetric contact map.
///
/// Each record adds one to the unordered bin pair `{pos_a / bin_size, pos_b / bin_size}`.
pub fn bin_pairs(records: &[FragmentPairRecord], bin_size: u64, n_bins: usize) -> Result<ContactMap> {
    let mut map = ContactMap::new(n_bins, bin_size)?;
    let limit = n_bins as u64 * bin_size;
    for (idx, rec) in records.iter().enumerate() {
        for pos in [rec.pos_a, rec.pos_b] {
            if pos >= limit {
                return Err(Error::Range {
                    record: idx,
                    message: format!(
                        "position {pos} of sample {} is beyond {n_bins} bins of {bin_size} bp",
                        rec.sample_id
                    ),
                });
            }
        }
        let i = (rec.pos_a / bin_size) as usize;
        let j = (rec.pos_b / bin_size) as usize;
        map.add(i, j, 1.0);
    }
    Ok(map)
}

/// Mean filter over a `(2h+1) x (2h+1)` window, truncated at the borders.
///
/// Each output cell is divided by the number of in-range window cells, so
/// constant matrices are fixed points. `h = 0` returns the input unchanged.
pub fn smooth(map: &ContactMap, h: usize) -> ContactMap {
    if h == 0 {
        return map.clone();
    }
    let n = map.n_bins;
    let dense = map.to_dense();
    // Summed-area table with a zero border row and column.
    let w = n + 1;
    let mut sat = vec![0.0; w * w];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += dense[i * n + j];
            sat[(i + 1) * w + j + 1] = sat[i * w + j + 1] + row;
        }
    }
    let mut out = ContactMap { n_bins: n, bin_size: map.bin_size, upper: BTreeMap::new() };
    for i in 0..n {
        let (r0, r1) = (i.saturating_sub(h), (i + h).min(n - 1) + 1);
        for j in i..n {
            let (c0, c1) = (j.saturating_sub(h), (j + h).min(n - 1) + 1);
            let cells = ((r1 - r0) * (c1 - c0)) as f64;
            let sum = window_sum(&dense, n, r0, r1, c0, c1, &sat, w);
            let v = sum / cells;
            if v > 0.0 {
                out.upper.insert((i, j), v);
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn window_sum(dense: &[f64], n: usize, r0: usize, r1: usize, c0: usize, c1: usize, sat: &[f64], w: usize) -> f64 {
    // Direct summation for small windows keeps results exact for integer
    // inputs; the summed-area table is used once the window gets large.
    let area = (r1 - r0) * (c1 - c0);
    if area <= 49 {
        let mut s = 0.0;
        for r in r0..r1 {
            for c in c0..c1 {
                s += dense[r * n + c];
            }
        }
        s
    } else {
        let s = sat[r1 * w + c1] - sat[r0 * w + c1] - sat[r1 * w + c0] + sat[r0 * w + c0];
        s.max(0.0)
    }
}

/// Separation thresholds for the band markers, in basepairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandThresholds {
    pub near_max: u64,
    pub mitotic_min: u64,
    pub mitotic_max: u64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        Self { near_max: DEFAULT_NEAR_MAX, mitotic_min: DEFAULT_MITOTIC_MIN, mitotic_max: DEFAULT_MITOTIC_MAX }
    }
}

impl BandThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.near_max == 0 || self.near_max > self.mitotic_min || self.mitotic_min >= self.mitotic_max {
            return Err(Error::Parameter(format!(
                "band thresholds must satisfy 0 < near_max <= mitotic_min < mitotic_max, got {} / {} / {}",
                self.near_max, self.mitotic_min, self.mitotic_max
            )));
        }
        Ok(())
    }
}

/// Fractions of off-diagonal contacts in the near and mitotic bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFractions {
    pub near: f64,
    pub mitotic: f64,
}

/// Fraction of upper-triangle off-diagonal contact mass whose separation
/// `|i - j| * bin_size` falls in `(0, near_max)` and in `[mitotic_min, mitotic_max]`.
pub fn band_fractions(map: &ContactMap, bands: BandThresholds) -> Result<BandFractions> {
    bands.validate()?;
    let (mut total, mut near, mut mitotic) = (0.0, 0.0, 0.0);
    for (i, j, v) in map.upper_entries() {
        if i == j {
            continue;
        }
        let sep = (j - i) as u64 * map.bin_size;
        total += v;
        if sep < bands.near_max {
            near += v;
        }
        if sep >= bands.mitotic_min && sep <= bands.mitotic_max {
            mitotic += v;
        }
    }
    if total <= 0.0 {
        return Err(Error::Degenerate("contact map has no off-diagonal contacts".into()));
    }
    Ok(BandFractions { near: near / total, mitotic: mitotic / total })
}

/// Groups records by sample id, preserving first-appearance order of ids.
pub fn split_by_sample(records: Vec<FragmentPairRecord>) -> Vec<(String, Vec<FragmentPairRecord>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<FragmentPairRecord>> = BTreeMap::new();
    for rec in records {
        if !groups.contains_key(&rec.sample_id) {
            order.push(rec.sample_id.clone());
        }
        groups.entry(rec.sample_id.clone()).or_default().push(rec);
    }
    order
        .into_iter()
        .map(|id| {
            let recs = groups.remove(&id).unwrap_or_default();
            (id, recs)
        })
        .collect()
}

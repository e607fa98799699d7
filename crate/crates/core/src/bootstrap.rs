//! Bootstrap confidence for Mapper features.
//!
//! Each iteration resamples the points with replacement, rebuilds the Mapper
//! with the base clustering scale and cover, and records the multivariate
//! bottleneck distance between its diagrams and the base diagrams. The
//! empirical distribution of those distances gives a confidence radius `d_c`
//! and a confidence level for every diagram point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mapper::{build_mapper, HypercubeCover, MetricDataset, NodeFunction};
use crate::persistence::{diagonal_distance, mapper_diagrams, per_coordinate_bottleneck, DiagramPoint, ExtendedDiagram};
use crate::spectral::FilterValues;

pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_CONFIDENCE: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub n_iterations: usize,
    pub seed: u64,
    pub confidence_level: f64,
}

impl BootstrapConfig {
    pub fn new(n_iterations: usize, seed: u64, confidence_level: f64) -> Result<Self> {
        let cfg = Self { n_iterations, seed, confidence_level };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::Parameter("bootstrap needs at least one iteration".into()));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::Parameter(format!("confidence level {} outside (0, 1)", self.confidence_level)));
        }
        Ok(())
    }
}

/// `n` indices drawn uniformly with replacement.
pub fn resample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Generator for iteration `i`: the stream `seed + i`.
pub fn iteration_rng(seed: u64, iteration: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(iteration as u64))
}

/// Everything needed to rebuild Mappers on resampled points.
#[derive(Debug, Clone, Copy)]
pub struct MapperSetup<'a> {
    pub data: &'a MetricDataset,
    pub filters: &'a FilterValues,
    pub cover: &'a HypercubeCover,
    pub delta: f64,
    pub node_function: NodeFunction,
}

impl MapperSetup<'_> {
    /// Per-coordinate bottleneck distances between `base` and the Mapper of
    /// the points in `indices` (duplicates collapsed). `None` when that
    /// Mapper has no nodes.
    pub fn distance_to(&self, base: &[ExtendedDiagram], indices: &[usize]) -> Result<Option<Vec<f64>>> {
        let mut unique = indices.to_vec();
        unique.sort_unstable();
        unique.dedup();
        let data = self.data.restrict(&unique);
        let filters = self.filters.restrict(&unique);
        let graph = build_mapper(&data, &filters, self.cover, self.delta, self.node_function, Execution::Sequential)?;
        if graph.is_empty() {
            return Ok(None);
        }
        let diagrams = mapper_diagrams(&graph)?;
        per_coordinate_bottleneck(base, &diagrams).map(Some)
    }
}

/// Raw bootstrap output, in iteration order.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistances {
    /// Multivariate distance per iteration; `inf` for empty Mappers.
    pub distances: Vec<f64>,
    /// Per-coordinate distances per iteration.
    pub per_coordinate: Vec<Vec<f64>>,
    pub n_empty: usize,
}

/// Runs the bootstrap. Iterations are independent and may run in parallel;
/// the output does not depend on the execution strategy.
pub fn bootstrap_distances(
    setup: MapperSetup<'_>,
    base: &[ExtendedDiagram],
    config: &BootstrapConfig,
    exec: Execution,
) -> Result<BootstrapDistances> {
    config.validate()?;
    let p = setup.filters.p();
    if base.len() != p {
        return Err(Error::Dimension(format!("{} base diagrams for {p} filter coordinates", base.len())));
    }
    let n = setup.data.n();
    let runs = exec::map_indices(exec, config.n_iterations, |i| {
        let indices = resample(n, &mut iteration_rng(config.seed, i));
        setup.distance_to(base, &indices)
    });
    let mut out = BootstrapDistances { distances: Vec::new(), per_coordinate: Vec::new(), n_empty: 0 };
    for run in runs {
        match run? {
            Some(per) => {
                out.distances.push(per.iter().copied().fold(0.0, f64::max));
                out.per_coordinate.push(per);
            }
            None => {
                out.n_empty += 1;
                out.distances.push(f64::INFINITY);
                out.per_coordinate.push(vec![f64::INFINITY; p]);
            }
        }
    }
    Ok(out)
}

/// Right-continuous inverse of the empirical CDF: the `ceil(level * N)`-th
/// smallest value.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    // tolerate level * N landing a hair above an integer
    let k = ((level * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

/// Confidence attached to one diagram point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfidence {
    pub coordinate: usize,
    #[serde(flatten)]
    pub point: DiagramPoint,
    pub size: f64,
    /// Fraction of bootstrap distances at most `size`.
    pub confidence: f64,
    /// The box of radius `d_c` around the point misses the diagonal.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceReport {
    pub config: BootstrapConfig,
    #[serde(serialize_with = "ser_values")]
    pub distances: Vec<f64>,
    #[serde(serialize_with = "ser_value")]
    pub d_c: f64,
    pub n_infinite: usize,
    /// Quantile of each coordinate's own distances, when available.
    #[serde(serialize_with = "ser_values")]
    pub per_coordinate_d_c: Vec<f64>,
    pub per_point: Vec<PointConfidence>,
}

fn ser_value<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

fn ser_values<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Finite(*x))?;
    }
    seq.end()
}

struct Finite(f64);

impl Serialize for Finite {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_value(&self.0, s)
    }
}

/// Confidence radius and per-point confidence from bootstrap distances.
pub fn confidence_report(base: &[ExtendedDiagram], distances: &[f64], config: &BootstrapConfig) -> Result<ConfidenceReport> {
    config.validate()?;
    if distances.is_empty() {
        return Err(Error::Degenerate("no bootstrap distances".into()));
    }
    if distances.iter().any(|d| d.is_nan()) {
        return Err(Error::Parameter("bootstrap distances contain NaN".into()));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d_c = empirical_quantile(&sorted, config.confidence_level);
    let n = sorted.len() as f64;
    let per_point = base
        .iter()
        .flat_map(|d| d.points.iter().map(move |p| (d.coordinate, *p)))
        .map(|(coordinate, point)| {
            let size = diagonal_distance(&point);
            let covered = sorted.partition_point(|&x| x <= size);
            PointConfidence { coordinate, point, size, confidence: covered as f64 / n, significant: size > d_c }
        })
        .collect();
    Ok(ConfidenceReport {
        config: *config,
        n_infinite: sorted.iter().filter(|d| d.is_infinite()).count(),
        distances: sorted,
        d_c,
        per_coordinate_d_c: Vec::new(),
        per_point,
    })
}

impl BootstrapDistances {
    /// [`confidence_report`] plus per-coordinate radii.
    pub fn report(&self, base: &[ExtendedDiagram], config: &BootstrapConfig) -> Result<ConfidenceReport> {
        let mut report = confidence_report(base, &self.distances, config)?;
        let p = self.per_coordinate.first().map_or(0, Vec::len);
        report.per_coordinate_d_c = (0..p)
            .map(|s| {
                let mut col: Vec<f64> = self.per_coordinate.iter().map(|row| row[s]).collect();
                col.sort_by(f64::total_cmp);
                empirical_quantile(&col, config.confidence_level)
            })
            .collect();
        Ok(report)
    }
}

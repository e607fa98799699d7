//! Multivariate Mapper with automatic parameter selection.
//!
//! The clustering scale is the Hausdorff distance between the data and a
//! random subsample of size `n / ln(n)^(1 + beta)`. Each cover side has
//! resolution `max{|f_s(x) - f_s(y)| : d(x, y) <= delta} / g_s`, with the gain
//! `g_s` in `(1/3, 1/2)`. Under these parameters single-linkage Mapper and the
//! Mapper of the `delta`-neighborhood graph agree.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::scc::SquareMatrix;
use crate::spectral::FilterValues;
use crate::union_find::DisjointSet;

pub const DEFAULT_BETA: f64 = 0.05;
pub const DEFAULT_DELTA_DRAWS: usize = 10;
pub const DEFAULT_GAIN: f64 = 0.4;

/// Finite metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDataset {
    dist: SquareMatrix,
}

impl MetricDataset {
    pub fn new(dist: SquareMatrix) -> Result<Self> {
        let n = dist.n();
        if n == 0 {
            return Err(Error::Dimension("empty distance matrix".into()));
        }
        for i in 0..n {
            if dist.get(i, i) != 0.0 {
                return Err(Error::Parameter(format!("non-zero diagonal at {i}")));
            }
            for j in i + 1..n {
                let (a, b) = (dist.get(i, j), dist.get(j, i));
                if a != b {
                    return Err(Error::Parameter(format!("asymmetric distance at ({i}, {j})")));
                }
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::Parameter(format!("invalid distance {a} at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dist })
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.dist
    }

    /// Sub-dataset on `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> MetricDataset {
        let k = indices.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in indices {
            values.extend(indices.iter().map(|&j| self.dist.get(i, j)));
        }
        MetricDataset { dist: SquareMatrix::from_row_major(k, values).expect("square by construction") }
    }
}

/// Subsample size `round(n / ln(n)^(1 + beta))`, clamped to `[1, n - 1]`.
pub fn subsample_size(n: usize, beta: f64) -> Result<usize> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    if n < 3 {
        return Err(Error::Parameter(format!("delta selection needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let s = (nf / nf.ln().powf(1.0 + beta)).round() as usize;
    Ok(s.clamp(1, n - 1))
}

/// Hausdorff distance between the dataset and one of its subsets: the largest
/// distance from any point to its nearest subset member.
pub fn hausdorff_to_subset(data: &MetricDataset, subset: &[usize]) -> f64 {
    (0..data.n())
        .map(|i| subset.iter().map(|&j| data.dist(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Outcome of the clustering-scale selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub subsample_size: usize,
    /// Hausdorff distance of every draw, in draw order.
    pub draws: Vec<f64>,
}

/// Selects `delta` as the (lower) median Hausdorff distance over `draws`
/// seeded uniform subsamples of size [`subsample_size`]. Draw `i` uses the
/// stream `seed + i`.
pub fn select_delta(data: &MetricDataset, beta: f64, draws: usize, seed: u64, exec: Execution) -> Result<DeltaEstimate> {
    if draws == 0 {
        return Err(Error::Parameter("delta selection needs at least one draw".into()));
    }
    let n = data.n();
    let s = subsample_size(n, beta)?;
    let hausdorff = exec::map_indices(exec, draws, |d| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(d as u64));
        let mut subset = index::sample(&mut rng, n, s).into_vec();
        subset.sort_unstable();
        hausdorff_to_subset(data, &subset)
    });
    let mut sorted = hausdorff.clone();
    sorted.sort_by(f64::total_cmp);
    let delta = sorted[(sorted.len() - 1) / 2];
    if !(delta > 0.0) {
        return Err(Error::Degenerate(format!("selected delta is {delta}; the data has too many coincident points")));
    }
    Ok(DeltaEstimate { delta, subsample_size: s, draws: hausdorff })
}

/// The `delta`-neighborhood graph: `i ~ j` iff `d(i, j) <= delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    pub delta: f64,
    adjacency: Vec<Vec<usize>>,
}

impl NeighborhoodGraph {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Edges `(i, j)` with `i < j`, lexicographically ordered.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }
}

pub fn neighborhood_graph(data: &MetricDataset, delta: f64) -> Result<NeighborhoodGraph> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let n = data.n();
    let adjacency = (0..n).map(|i| (0..n).filter(|&j| j != i && data.dist(i, j) <= delta).collect()).collect();
    Ok(NeighborhoodGraph { delta, adjacency })
}

/// One side of the hypercube cover: `count` intervals of length `resolution`
/// starting at `start`, consecutive ones offset by `resolution * (1 - gain)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverAxis {
    pub start: f64,
    pub resolution: f64,
    pub gain: f64,
    pub count: usize,
}

impl CoverAxis {
    /// Smallest layout anchored at `min` whose last interval reaches `max`.
    pub fn fit(min: f64, max: f64, resolution: f64, gain: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::Degenerate(format!("cover resolution must be positive, got {resolution}")));
        }
        if !(gain > 0.0 && gain < 1.0) {
            return Err(Error::Parameter(format!("gain must lie in (0, 1), got {gain}")));
        }
        let mut axis = CoverAxis { start: min, resolution, gain, count: 1 };
        let step = axis.step();
        // jump close to the answer, then settle with the exact interval arithmetic
        let guess = ((max - min - resolution) / step).ceil();
        if guess > MAX_INTERVALS as f64 {
            return Err(Error::Parameter(format!("cover would need more than {MAX_INTERVALS} intervals")));
        }
        axis.count = (guess.max(0.0) as usize + 1).max(1);
        while axis.count > 1 && axis.interval(axis.count - 2).1 >= max {
            axis.count -= 1;
        }
        while axis.interval(axis.count - 1).1 < max {
            axis.count += 1;
        }
        Ok(axis)
    }

    pub fn step(&self) -> f64 {
        self.resolution * (1.0 - self.gain)
    }

    /// Closed interval `a`.
    pub fn interval(&self, a: usize) -> (f64, f64) {
        let lo = self.start + a as f64 * self.step();
        (lo, lo + self.resolution)
    }

    /// Indices of the intervals containing `v`, ascending.
    pub fn containing(&self, v: f64) -> Vec<usize> {
        let approx = ((v - self.start) / self.step()).floor();
        if !approx.is_finite() {
            return Vec::new();
        }
        let hi = (approx as i64 + 1).min(self.count as i64 - 1);
        let lo = (approx as i64 - 2).max(0);
        (lo..=hi)
            .map(|a| a as usize)
            .filter(|&a| {
                let (l, h) = self.interval(a);
                l <= v && v <= h
            })
            .collect()
    }
}

const MAX_INTERVALS: usize = 1 << 20;

/// Product cover of `p` interval layouts. Element ids enumerate interval
/// index tuples lexicographically, first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypercubeCover {
    pub axes: Vec<CoverAxis>,
}

impl HypercubeCover {
    pub fn p(&self) -> usize {
        self.axes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn element_id(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.axes).fold(0, |id, (&a, axis)| id * axis.count + a)
    }

    pub fn element_tuple(&self, mut id: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.axes.len()];
        for (slot, axis) in tuple.iter_mut().zip(&self.axes).rev() {
            *slot = id % axis.count;
            id /= axis.count;
        }
        tuple
    }

    /// Centre of element `id`, per coordinate.
    pub fn midpoint(&self, id: usize) -> Vec<f64> {
        self.element_tuple(id)
            .iter()
            .zip(&self.axes)
            .map(|(&a, axis)| {
                let (lo, hi) = axis.interval(a);
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Ids of all elements whose hypercube contains `point`, ascending.
    pub fn elements_containing(&self, point: &[f64]) -> Vec<usize> {
        let per_axis: Vec<Vec<usize>> = self.axes.iter().zip(point).map(|(axis, &v)| axis.containing(v)).collect();
        if per_axis.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut ids = vec![0usize];
        for (choices, axis) in per_axis.iter().zip(&self.axes) {
            ids = ids.iter().flat_map(|&id| choices.iter().map(move |&a| id * axis.count + a)).collect();
        }
        ids
    }
}

/// Largest filter variation across `delta`-close pairs, per coordinate.
pub fn max_edge_variation(filters: &FilterValues, data: &MetricDataset, delta: f64) -> Vec<f64> {
    let mut spans = vec![0.0f64; filters.p()];
    let n = data.n();
    for i in 0..n {
        for j in i + 1..n {
            if data.dist(i, j) <= delta {
                for (s, span) in spans.iter_mut().enumerate() {
                    *span = span.max((filters.get(i, s) - filters.get(j, s)).abs());
                }
            }
        }
    }
    spans
}

/// Cover with per-side resolution `max_edge_variation / gain`, anchored at the
/// minimum of each filter coordinate.
pub fn auto_cover(filters: &FilterValues, delta: f64, data: &MetricDataset, gains: &[f64]) -> Result<HypercubeCover> {
    if filters.n_samples() != data.n() {
        return Err(Error::Dimension(format!("{} filter rows for {} samples", filters.n_samples(), data.n())));
    }
    if gains.len() != filters.p() {
        return Err(Error::Dimension(format!("{} gains for {} filter coordinates", gains.len(), filters.p())));
    }
    for &g in gains {
        if !(g > 1.0 / 3.0 && g < 0.5) {
            return Err(Error::Parameter(format!("gain {g} outside (1/3, 1/2)")));
        }
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let spans = max_edge_variation(filters, data, delta);
    let mut axes = Vec::with_capacity(gains.len());
    for (s, (&span, &g)) in spans.iter().zip(gains).enumerate() {
        if span == 0.0 {
            return Err(Error::Degenerate(format!("filter {s} is constant on every delta-close pair")));
        }
        let col = filters.column(s);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        axes.push(CoverAxis::fit(min, max, span / g, g)?);
    }
    Ok(HypercubeCover { axes })
}

/// Value attached to each Mapper node, per filter coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeFunction {
    /// Mean filter value over the node's members.
    #[default]
    Mean,
    /// Centre of the node's cover element.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperNode {
    pub id: usize,
    pub cover_element: usize,
    /// Sample indices, ascending.
    pub members: Vec<usize>,
    pub values: Vec<f64>,
}

/// 1-skeleton of the nerve of the clustered preimage cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperGraph {
    pub nodes: Vec<MapperNode>,
    /// `(a, b)` with `a < b`, ascending.
    pub edges: Vec<(usize, usize)>,
}

impl MapperGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_components(&self) -> usize {
        let mut ds = DisjointSet::new(self.nodes.len());
        let mut c = self.nodes.len();
        for &(a, b) in &self.edges {
            if ds.union(a, b) {
                c -= 1;
            }
        }
        c
    }

    /// First Betti number of the graph, `E - V + C`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.n_components() - self.nodes.len()
    }

    /// Node values for filter coordinate `s`.
    pub fn node_values(&self, s: usize) -> Vec<f64> {
        self.nodes.iter().map(|n| n.values[s]).collect()
    }

    /// Labeling-independent description: nodes keyed by cover element and
    /// member set, edges expressed through those keys.
    pub fn canonical_form(&self) -> CanonicalForm {
        let key = |i: usize| (self.nodes[i].cover_element, self.nodes[i].members.clone());
        let nodes = (0..self.nodes.len()).map(key).collect();
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (ka, kb) = (key(a), key(b));
                if ka <= kb {
                    (ka, kb)
                } else {
                    (kb, ka)
                }
            })
            .collect();
        (nodes, edges)
    }

    /// Isomorphism that respects cover-element labels and member sets.
    pub fn labeled_isomorphic(&self, other: &MapperGraph) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

fn preimages(filters: &FilterValues, cover: &HypercubeCover) -> Vec<(usize, Vec<usize>)> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..filters.n_samples() {
        for id in cover.elements_containing(filters.row(i)) {
            map.entry(id).or_default().push(i);
        }
    }
    map.into_iter().collect()
}

fn assemble(
    clusters: Vec<(usize, Vec<Vec<usize>>)>,
    filters: &FilterValues,
    cover: &HypercubeCover,
    node_function: NodeFunction,
) -> MapperGraph {
    let mut nodes = Vec::new();
    let mut by_sample: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (element, groups) in clusters {
        for members in groups {
            let id = nodes.len();
            for &m in &members {
                by_sample.entry(m).or_default().push(id);
            }
            let values = match node_function {
                NodeFunction::Mean => (0..filters.p())
                    .map(|s| members.iter().map(|&m| filters.get(m, s)).sum::<f64>() / members.len() as f64)
                    .collect(),
                NodeFunction::Midpoint => cover.midpoint(element),
            };
            nodes.push(MapperNode { id, cover_element: element, members, values });
        }
    }
    let mut edges = BTreeSet::new();
    for ids in by_sample.values() {
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    MapperGraph { nodes, edges: edges.into_iter().collect() }
}

fn check_inputs(n: usize, filters: &FilterValues, cover: &HypercubeCover) -> Result<()> {
    if filters.n_samples() != n {
        return Err(Error::Dimension(format!("{} filter rows for {n} samples", filters.n_samples())));
    }
    if filters.p() != cover.p() {
        return Err(Error::Dimension(format!("{} filter coordinates for a {}-dimensional cover", filters.p(), cover.p())));
    }
    Ok(())
}

/// A node keyed by cover element and member set.
pub type NodeKey = (usize, Vec<usize>);

/// Node keys and edges between them.
pub type CanonicalForm = (BTreeSet<NodeKey>, BTreeSet<(NodeKey, NodeKey)>);

/// Mapper with single-linkage clustering at scale `delta` inside each
/// preimage. Nodes are ordered by cover element, then smallest member.
pub fn build_mapper(
    data: &MetricDataset,
    filters: &FilterValues,
    cover: &HypercubeCover,
    delta: f64,
    node_function: NodeFunction,
    exec: Execution,
) -> Result<MapperGraph> {
    check_inputs(data.n(), filters, cover)?;
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let pre = preimages(filters, cover);
    let clusters = exec::map_slice(exec, &pre, |(element, members)| {
        let mut ds = DisjointSet::new(members.len());
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                if data.dist(members[a], members[b]) <= delta {
                    ds.union(a, b);
                }
            }
        }
        let groups = ds.groups().into_iter().map(|g| g.into_iter().map(|k| members[k]).collect()).collect();
        (*element, groups)
    });
    Ok(assemble(clusters, filters, cover, node_function))
}

/// Mapper whose clusters are the connected components of the subgraph of `g`
/// induced on each preimage.
pub fn mapper_of_graph(
    g: &NeighborhoodGraph,
    filters: &FilterValues,
    cover: &HypercubeCover,
    node_function: NodeFunction,
) -> Result<MapperGraph> {
    check_inputs(g.n(), filters, cover)?;
    let pre = preimages(filters, cover);
    let mut inside = vec![false; g.n()];
    let mut seen = vec![false; g.n()];
    let mut clusters = Vec::with_capacity(pre.len());
    for (element, members) in pre {
        members.iter().for_each(|&m| inside[m] = true);
        let mut groups = Vec::new();
        for &start in &members {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in g.neighbors(v) {
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            groups.push(comp);
        }
        for &m in &members {
            inside[m] = false;
            seen[m] = false;
        }
        clusters.push((element, groups));
    }
    Ok(assemble(clusters, filters, cover, node_function))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> MetricDataset {
        let n = points.len();
        let v = (0..n * n).map(|k| (points[k / n] - points[k % n]).abs()).collect();
        MetricDataset::new(SquareMatrix::from_row_major(n, v).unwrap()).unwrap()
    }

    fn planar(points: &[(f64, f64)]) -> MetricDataset {
        let n = points.len();
        let v = (0..n * n)
            .map(|k| {
                let (a, b) = (points[k / n], points[k % n]);
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            })
            .collect();
        MetricDataset::new(SquareMatrix::from_row_major(n, v).unwrap()).unwrap()
    }

    fn circle(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect()
    }

    fn coords(points: &[(f64, f64)]) -> FilterValues {
        FilterValues::from_rows(&points.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn dataset_validation() {
        let bad = SquareMatrix::from_row_major(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        assert!(MetricDataset::new(bad).is_err());
        let bad = SquareMatrix::from_row_major(2, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(MetricDataset::new(bad).is_err());
    }

    #[test]
    fn subsample_formula() {
        assert_eq!(subsample_size(1171, 0.05).unwrap(), 150);
        let direct = (1171.0f64 / 1171.0f64.ln().powf(1.05)).round();
        assert_eq!(direct, 150.0);
        assert_eq!(subsample_size(3, 0.05).unwrap(), 2);
        assert!(matches!(subsample_size(2, 0.05), Err(Error::Parameter(_))));
        assert!(matches!(subsample_size(10, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn hausdorff_examples() {
        let data = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(hausdorff_to_subset(&data, &[0, 3]), 2.0);
        assert_eq!(hausdorff_to_subset(&data, &[0, 1, 2, 3]), 0.0);
    }

    #[test]
    fn coincident_points_give_degenerate_delta() {
        let data = line(&[1.0; 6]);
        assert!(matches!(select_delta(&data, 0.05, 3, 0, Execution::Sequential), Err(Error::Degenerate(_))));
    }

    #[test]
    fn select_delta_is_seeded_median() {
        let data = planar(&circle(40));
        let a = select_delta(&data, 0.05, 7, 11, Execution::Parallel).unwrap();
        let b = select_delta(&data, 0.05, 7, 11, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.draws.len(), 7);
        let mut sorted = a.draws.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(a.delta, sorted[3]);
    }

    #[test]
    fn neighborhood_thresholds() {
        let data = line(&[0.0, 1.0, 3.0, 6.0]);
        assert!(neighborhood_graph(&data, 0.5).unwrap().edges().is_empty());
        assert_eq!(neighborhood_graph(&data, 6.0).unwrap().edges().len(), 6);
        // closed ball
        assert_eq!(neighborhood_graph(&data, 1.0).unwrap().edges(), vec![(0, 1)]);
    }

    #[test]
    fn neighborhood_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(f64, f64)> = (0..10).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
        let data = planar(&pts);
        let g = neighborhood_graph(&data, 0.4).unwrap();
        let mut want = Vec::new();
        for i in 0..10 {
            for j in i + 1..10 {
                if data.dist(i, j) <= 0.4 {
                    want.push((i, j));
                }
            }
        }
        assert_eq!(g.edges(), want);
    }

    #[test]
    fn cover_layout_example() {
        let axis = CoverAxis::fit(0.0, 1.0, 0.3, 0.4).unwrap();
        assert_eq!(axis.count, 5);
        let expected = [(0.0, 0.3), (0.18, 0.48), (0.36, 0.66), (0.54, 0.84), (0.72, 1.02)];
        for (a, (lo, hi)) in expected.iter().enumerate() {
            let (l, h) = axis.interval(a);
            assert!((l - lo).abs() < 1e-12 && (h - hi).abs() < 1e-12);
        }
        assert!((axis.step() - 0.18).abs() < 1e-15);
        assert_eq!(axis.containing(0.2), vec![0, 1]);
        assert_eq!(axis.containing(1.0), vec![4]);
        assert_eq!(axis.containing(0.0), vec![0]);
    }

    #[test]
    fn cover_resolution_from_single_pair() {
        let data = line(&[0.0, 1.0, 10.0]);
        let filters = FilterValues::from_rows(&[vec![0.0], vec![0.12], vec![0.5]]).unwrap();
        let cover = auto_cover(&filters, 1.5, &data, &[0.4]).unwrap();
        assert!((cover.axes[0].resolution - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cover_errors() {
        let data = line(&[0.0, 1.0, 10.0]);
        let flat = FilterValues::from_rows(&[vec![1.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(auto_cover(&flat, 1.5, &data, &[0.4]), Err(Error::Degenerate(_))));
        assert!(matches!(auto_cover(&flat, 1.5, &data, &[0.5]), Err(Error::Parameter(_))));
        assert!(matches!(auto_cover(&flat, 1.5, &data, &[0.3]), Err(Error::Parameter(_))));
    }

    #[test]
    fn circle_cover_matches_edge_enumeration() {
        let pts = circle(36);
        let data = planar(&pts);
        let filters = coords(&pts);
        let delta = 0.4;
        let cover = auto_cover(&filters, delta, &data, &[0.4, 0.45]).unwrap();
        for (s, g) in [(0usize, 0.4), (1, 0.45)] {
            let mut want = 0.0f64;
            for e in neighborhood_graph(&data, delta).unwrap().edges() {
                let (a, b) = if s == 0 { (pts[e.0].0, pts[e.1].0) } else { (pts[e.0].1, pts[e.1].1) };
                want = want.max((a - b).abs());
            }
            assert!((cover.axes[s].resolution - want / g).abs() < 1e-12);
            let (_, hi) = cover.axes[s].interval(cover.axes[s].count - 1);
            assert!(hi >= filters.column(s).iter().copied().fold(f64::MIN, f64::max));
        }
    }

    #[test]
    fn element_ids_round_trip() {
        let cover = HypercubeCover {
            axes: vec![
                CoverAxis { start: 0.0, resolution: 1.0, gain: 0.4, count: 3 },
                CoverAxis { start: 0.0, resolution: 1.0, gain: 0.4, count: 4 },
            ],
        };
        for id in 0..cover.n_elements() {
            assert_eq!(cover.element_id(&cover.element_tuple(id)), id);
        }
        assert_eq!(cover.elements_containing(&[0.7, 0.1]), vec![0, 4]);
    }

    #[test]
    fn single_cluster_and_disjoint_clusters() {
        let data = line(&[0.0, 0.1, 0.2]);
        let filters = FilterValues::from_rows(&[vec![0.0], vec![0.1], vec![0.2]]).unwrap();
        let cover = HypercubeCover { axes: vec![CoverAxis { start: 0.0, resolution: 1.0, gain: 0.4, count: 1 }] };
        let m = build_mapper(&data, &filters, &cover, 1.0, NodeFunction::Mean, Execution::Sequential).unwrap();
        assert_eq!(m.nodes.len(), 1);
        assert!(m.edges.is_empty());
        assert!((m.nodes[0].values[0] - 0.1).abs() < 1e-12);

        let data = line(&[0.0, 0.1, 50.0, 50.1]);
        let filters = FilterValues::from_rows(&[vec![0.0], vec![0.1], vec![5.0], vec![5.1]]).unwrap();
        let cover = HypercubeCover { axes: vec![CoverAxis::fit(0.0, 5.1, 1.0, 0.4).unwrap()] };
        let m = build_mapper(&data, &filters, &cover, 1.0, NodeFunction::Mean, Execution::Sequential).unwrap();
        assert_eq!(m.nodes.len(), 2);
        assert!(m.edges.is_empty());
    }

    #[test]
    fn empty_graph_gives_singletons() {
        let data = line(&[0.0, 1.0, 2.0]);
        let g = neighborhood_graph(&data, 0.5).unwrap();
        let filters = FilterValues::from_rows(&[vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let cover = HypercubeCover { axes: vec![CoverAxis { start: 0.0, resolution: 1.0, gain: 0.4, count: 1 }] };
        let m = mapper_of_graph(&g, &filters, &cover, NodeFunction::Mean).unwrap();
        assert_eq!(m.nodes.iter().map(|n| n.members.clone()).collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn graph_mapper_components_match_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let pts: Vec<(f64, f64)> = (0..30).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
            let data = planar(&pts);
            let g = neighborhood_graph(&data, 0.2).unwrap();
            let filters = coords(&pts);
            let cover = HypercubeCover {
                axes: vec![CoverAxis::fit(0.0, 1.0, 0.5, 0.4).unwrap(), CoverAxis::fit(0.0, 1.0, 0.5, 0.4).unwrap()],
            };
            let m = mapper_of_graph(&g, &filters, &cover, NodeFunction::Mean).unwrap();
            for node in &m.nodes {
                let members: Vec<usize> =
                    (0..30).filter(|&i| cover.elements_containing(filters.row(i)).contains(&node.cover_element)).collect();
                let mut ds = DisjointSet::new(members.len());
                for (a, b) in g.edges() {
                    if let (Ok(x), Ok(y)) = (members.binary_search(&a), members.binary_search(&b)) {
                        ds.union(x, y);
                    }
                }
                let groups: Vec<Vec<usize>> =
                    ds.groups().into_iter().map(|grp| grp.into_iter().map(|k| members[k]).collect()).collect();
                assert!(groups.contains(&node.members));
            }
        }
    }

    #[test]
    fn evenly_spaced_circle_has_one_cycle() {
        let pts = circle(60);
        let data = planar(&pts);
        let filters = coords(&pts);
        let est = select_delta(&data, DEFAULT_BETA, DEFAULT_DELTA_DRAWS, 7, Execution::Parallel).unwrap();
        let cover = auto_cover(&filters, est.delta, &data, &[DEFAULT_GAIN; 2]).unwrap();
        let m = build_mapper(&data, &filters, &cover, est.delta, NodeFunction::Mean, Execution::Parallel).unwrap();
        assert_eq!(m.cycle_rank(), 1);
        assert_eq!(m.n_components(), 1);
        let g = neighborhood_graph(&data, est.delta).unwrap();
        assert!(m.labeled_isomorphic(&mapper_of_graph(&g, &filters, &cover, NodeFunction::Mean).unwrap()));
        let seq = build_mapper(&data, &filters, &cover, est.delta, NodeFunction::Mean, Execution::Sequential).unwrap();
        assert_eq!(m, seq);
    }

    #[test]
    fn mapper_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<(f64, f64)> = (0..80).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let data = planar(&pts);
        let filters = coords(&pts);
        let cover = auto_cover(&filters, 0.25, &data, &[0.4, 0.4]).unwrap();
        let m = build_mapper(&data, &filters, &cover, 0.25, NodeFunction::Mean, Execution::Parallel).unwrap();
        // every sample appears, clusters partition each preimage
        let mut by_element: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for n in &m.nodes {
            assert!(!n.members.is_empty());
            by_element.entry(n.cover_element).or_default().extend(&n.members);
        }
        for (id, mut members) in by_element {
            members.sort_unstable();
            let want: Vec<usize> = (0..80).filter(|&i| cover.elements_containing(filters.row(i)).contains(&id)).collect();
            assert_eq!(members, want);
        }
        let covered: BTreeSet<usize> = m.nodes.iter().flat_map(|n| n.members.iter().copied()).collect();
        assert_eq!(covered.len(), 80);
        // edges iff shared members
        for a in 0..m.nodes.len() {
            for b in a + 1..m.nodes.len() {
                let share = m.nodes[a].members.iter().any(|x| m.nodes[b].members.contains(x));
                assert_eq!(share, m.edges.contains(&(a, b)));
            }
        }
        // ordering
        let keys: Vec<(usize, usize)> = m.nodes.iter().map(|n| (n.cover_element, n.members[0])).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));

        // larger delta never splits clusters further
        let bigger = build_mapper(&data, &filters, &cover, 0.5, NodeFunction::Mean, Execution::Parallel).unwrap();
        for id in 0..cover.n_elements() {
            let count = |g: &MapperGraph| g.nodes.iter().filter(|n| n.cover_element == id).count();
            assert!(count(&bigger) <= count(&m));
        }

        // scaling distances, delta and filters together changes nothing
        let c = 4.0;
        let scaled = MetricDataset::new(
            SquareMatrix::from_row_major(80, data.matrix().as_slice().iter().map(|v| v * c).collect()).unwrap(),
        )
        .unwrap();
        let sf = FilterValues::from_rows(&pts.iter().map(|&(x, y)| vec![x * c, y * c]).collect::<Vec<_>>()).unwrap();
        let sc = auto_cover(&sf, 0.25 * c, &scaled, &[0.4, 0.4]).unwrap();
        let ms = build_mapper(&scaled, &sf, &sc, 0.25 * c, NodeFunction::Mean, Execution::Parallel).unwrap();
        assert_eq!(ms.edges, m.edges);
        assert_eq!(
            ms.nodes.iter().map(|n| (n.cover_element, &n.members)).collect::<Vec<_>>(),
            m.nodes.iter().map(|n| (n.cover_element, &n.members)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn midpoint_node_function() {
        let data = line(&[0.0, 0.1]);
        let filters = FilterValues::from_rows(&[vec![0.0], vec![0.1]]).unwrap();
        let cover = HypercubeCover { axes: vec![CoverAxis { start: 0.0, resolution: 1.0, gain: 0.4, count: 1 }] };
        let m = build_mapper(&data, &filters, &cover, 1.0, NodeFunction::Midpoint, Execution::Sequential).unwrap();
        assert_eq!(m.nodes[0].values, vec![0.5]);
    }
}

//! Extended persistence of graphs and bottleneck distances between diagrams.
//!
//! The extended filtration of a graph with vertex function `f` is the
//! ascending lower-star filtration followed by the descending filtration of
//! the cone over the superlevel sets. It is realised as one boundary matrix
//! over Z/2:
//!
//! ```text
//! [cone apex] [vertices and edges by increasing f] [apex*v, apex*e by decreasing f]
//! ```
//!
//! Pairs are typed by where their two simplices live:
//!
//! | birth simplex  | death simplex     | kind |
//! |----------------|-------------------|------|
//! | vertex         | edge              | Ord0 |
//! | vertex         | cone edge         | Ext0 |
//! | edge           | cone triangle     | Ext1 |
//! | cone edge      | cone triangle     | Rel1 |
//!
//! Ties in `f` are broken by vertex index; reported coordinates always use the
//! unperturbed values. Zero-length Ord0 and Rel1 pairs are dropped; Ext0 and
//! Ext1 points are kept so that their counts equal the number of components
//! and the cycle rank.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::MapperGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PointKind {
    Ord0,
    Ext0,
    Ext1,
    Rel1,
}

impl PointKind {
    pub const ALL: [PointKind; 4] = [PointKind::Ord0, PointKind::Ext0, PointKind::Ext1, PointKind::Rel1];

    pub fn name(self) -> &'static str {
        match self {
            PointKind::Ord0 => "Ord0",
            PointKind::Ext0 => "Ext0",
            PointKind::Ext1 => "Ext1",
            PointKind::Rel1 => "Rel1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PointKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub kind: PointKind,
    pub birth: f64,
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(kind: PointKind, birth: f64, death: f64) -> Self {
        Self { kind, birth, death }
    }

    /// Sup-norm distance to the diagonal.
    pub fn size(&self) -> f64 {
        diagonal_distance(self)
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
    }
}

/// `|death - birth| / 2`.
pub fn diagonal_distance(p: &DiagramPoint) -> f64 {
    (p.death - p.birth).abs() / 2.0
}

/// Extended persistence diagram for one filter coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDiagram {
    pub coordinate: usize,
    /// Sorted by kind, then birth, then death.
    pub points: Vec<DiagramPoint>,
}

impl ExtendedDiagram {
    pub fn new(coordinate: usize, mut points: Vec<DiagramPoint>) -> Self {
        points.sort_by(DiagramPoint::cmp_key);
        Self { coordinate, points }
    }

    pub fn count(&self, kind: PointKind) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }

    pub fn of_kind(&self, kind: PointKind) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(move |p| p.kind == kind)
    }
}

#[derive(Clone, Copy)]
enum Cell {
    Apex,
    Vertex(usize),
    Edge(usize),
    ConeEdge(usize),
    ConeTriangle(usize),
}

/// Extended diagram of a simple graph on `values.len()` vertices.
pub fn graph_diagram(values: &[f64], edges: &[(usize, usize)], coordinate: usize) -> Result<ExtendedDiagram> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Degenerate("extended persistence of an empty graph".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("node value {v} is not finite")));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n || a == b {
            return Err(Error::Parameter(format!("invalid edge ({a}, {b}) for {n} nodes")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::Parameter(format!("duplicate edge ({a}, {b})")));
        }
    }

    // rank[v]: position of v in the (value, index) order
    let mut by_value: Vec<usize> = (0..n).collect();
    by_value.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut rank = vec![0; n];
    for (r, &v) in by_value.iter().enumerate() {
        rank[v] = r;
    }
    let (hi, lo): (Vec<usize>, Vec<usize>) = edges
        .iter()
        .map(|&(a, b)| if rank[a] > rank[b] { (a, b) } else { (b, a) })
        .unzip();

    // ascending edges grouped under their upper endpoint, descending cone
    // triangles under their lower endpoint
    let mut up_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut down_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in 0..edges.len() {
        up_edges[hi[e]].push(e);
        down_edges[lo[e]].push(e);
    }
    for list in &mut up_edges {
        list.sort_by_key(|&e| (rank[lo[e]], e));
    }
    for list in &mut down_edges {
        list.sort_by_key(|&e| (std::cmp::Reverse(rank[hi[e]]), e));
    }

    let total = 1 + 2 * (n + edges.len());
    let mut cells = Vec::with_capacity(total);
    let mut vertex_col = vec![0; n];
    let mut edge_col = vec![0; edges.len()];
    let mut cone_col = vec![0; n];
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(total);

    cells.push(Cell::Apex);
    columns.push(Vec::new());
    for &v in &by_value {
        vertex_col[v] = cells.len();
        cells.push(Cell::Vertex(v));
        columns.push(Vec::new());
        for &e in &up_edges[v] {
            edge_col[e] = cells.len();
            cells.push(Cell::Edge(e));
            columns.push(sorted_pair(vertex_col[hi[e]], vertex_col[lo[e]]));
        }
    }
    for &v in by_value.iter().rev() {
        cone_col[v] = cells.len();
        cells.push(Cell::ConeEdge(v));
        columns.push(vec![0, vertex_col[v]]);
        for &e in &down_edges[v] {
            cells.push(Cell::ConeTriangle(e));
            let mut col = vec![edge_col[e], cone_col[hi[e]], cone_col[lo[e]]];
            col.sort_unstable();
            columns.push(col);
        }
    }

    let pairs = reduce(&mut columns);
    let value_of_vertex = |v: usize| values[v];
    let up_value = |e: usize| values[hi[e]];
    let down_value = |e: usize| values[lo[e]];

    let mut points = Vec::new();
    for (birth, death) in pairs {
        let point = match (cells[birth], cells[death]) {
            (Cell::Vertex(v), Cell::Edge(e)) => DiagramPoint::new(PointKind::Ord0, value_of_vertex(v), up_value(e)),
            (Cell::Vertex(v), Cell::ConeEdge(u)) => DiagramPoint::new(PointKind::Ext0, value_of_vertex(v), values[u]),
            (Cell::Edge(e), Cell::ConeTriangle(t)) => DiagramPoint::new(PointKind::Ext1, up_value(e), down_value(t)),
            (Cell::ConeEdge(v), Cell::ConeTriangle(t)) => DiagramPoint::new(PointKind::Rel1, values[v], down_value(t)),
            _ => unreachable!("pairing outside the extended filtration"),
        };
        let keep = match point.kind {
            PointKind::Ord0 | PointKind::Rel1 => point.birth != point.death,
            PointKind::Ext0 | PointKind::Ext1 => true,
        };
        if keep {
            points.push(point);
        }
    }
    Ok(ExtendedDiagram::new(coordinate, points))
}

fn sorted_pair(a: usize, b: usize) -> Vec<usize> {
    if a < b {
        vec![a, b]
    } else {
        vec![b, a]
    }
}

/// Standard column reduction. Returns `(birth, death)` column index pairs.
fn reduce(columns: &mut [Vec<usize>]) -> Vec<(usize, usize)> {
    let mut owner: Vec<Option<usize>> = vec![None; columns.len()];
    let mut pairs = Vec::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match owner[low] {
                Some(k) => {
                    let (left, right) = columns.split_at_mut(j);
                    right[0] = symmetric_difference(&right[0], &left[k]);
                }
                None => {
                    owner[low] = Some(j);
                    pairs.push((low, j));
                    break;
                }
            }
        }
    }
    pairs
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Extended diagram of a Mapper graph under node values of coordinate `s`.
pub fn extended_diagram(g: &MapperGraph, s: usize) -> Result<ExtendedDiagram> {
    if g.is_empty() {
        return Err(Error::Degenerate("Mapper graph has no nodes".into()));
    }
    if g.nodes.iter().any(|n| s >= n.values.len()) {
        return Err(Error::Dimension(format!("coordinate {s} missing from node values")));
    }
    graph_diagram(&g.node_values(s), &g.edges, s)
}

/// Diagrams of every filter coordinate of a Mapper graph.
pub fn mapper_diagrams(g: &MapperGraph) -> Result<Vec<ExtendedDiagram>> {
    let p = g.nodes.first().map_or(0, |n| n.values.len());
    (0..p).map(|s| extended_diagram(g, s)).collect()
}

/// Bottleneck distance with kind-restricted matching: points pair only with
/// points of their own kind or with the diagonal. The result is the maximum
/// over kinds.
pub fn bottleneck(d1: &ExtendedDiagram, d2: &ExtendedDiagram) -> f64 {
    PointKind::ALL
        .iter()
        .map(|&k| {
            let a: Vec<(f64, f64)> = d1.of_kind(k).map(|p| (p.birth, p.death)).collect();
            let b: Vec<(f64, f64)> = d2.of_kind(k).map(|p| (p.birth, p.death)).collect();
            bottleneck_points(&a, &b)
        })
        .fold(0.0, f64::max)
}

#[inline]
fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

#[inline]
fn diag(a: (f64, f64)) -> f64 {
    (a.1 - a.0).abs() / 2.0
}

/// Exact bottleneck distance between two planar multisets: the smallest
/// candidate cost at which a perfect matching exists in the augmented
/// bipartite graph.
pub fn bottleneck_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = a.iter().chain(b).map(|&p| diag(p)).collect();
    for &p in a {
        candidates.extend(b.iter().map(|&q| linf(p, q)));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate is always feasible (everything to the diagonal)
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Perfect matching test. Left side: `a` then diagonal copies of `b`; right
/// side: `b` then diagonal copies of `a`.
fn feasible(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> bool {
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            if linf(p, q) <= t {
                adj[i].push(j);
            }
        }
        if diag(p) <= t {
            adj[i].push(m + i);
        }
    }
    for (j, &q) in b.iter().enumerate() {
        if diag(q) <= t {
            adj[n + j].push(j);
        }
        adj[n + j].extend(m..m + n);
    }
    hopcroft_karp(&adj, size) == size
}

/// Maximum bipartite matching size; `adj[l]` lists right vertices of `l`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    const NIL: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut matched = 0;
    loop {
        // BFS layering from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = match_r[r];
                if next == NIL {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut iter = vec![0usize; n_left];
        for l in 0..n_left {
            if match_l[l] == NIL && augment(l, adj, &mut match_l, &mut match_r, &mut dist, &mut iter) {
                matched += 1;
            }
        }
    }
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    iter: &mut [usize],
) -> bool {
    while iter[l] < adj[l].len() {
        let r = adj[l][iter[l]];
        iter[l] += 1;
        let next = match_r[r];
        let ok = next == usize::MAX
            || (dist[next] == dist[l] + 1 && augment(next, adj, match_l, match_r, dist, iter));
        if ok {
            match_l[l] = r;
            match_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// Per-coordinate bottleneck distances between two lists of diagrams.
pub fn per_coordinate_bottleneck(m1: &[ExtendedDiagram], m2: &[ExtendedDiagram]) -> Result<Vec<f64>> {
    if m1.len() != m2.len() {
        return Err(Error::Dimension(format!("{} diagrams vs {}", m1.len(), m2.len())));
    }
    Ok(m1.iter().zip(m2).map(|(a, b)| bottleneck(a, b)).collect())
}

/// Maximum over coordinates of the per-coordinate bottleneck distance.
pub fn multivariate_bottleneck(m1: &[ExtendedDiagram], m2: &[ExtendedDiagram]) -> Result<f64> {
    Ok(per_coordinate_bottleneck(m1, m2)?.into_iter().fold(0.0, f64::max))
}

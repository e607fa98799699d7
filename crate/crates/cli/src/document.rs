//! JSON and DOT forms of a Mapper graph, with per-node metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use hicmapper::mapper::{DeltaEstimate, HypercubeCover, MapperGraph, MapperNode, NodeFunction};

use crate::error::{CliError, CliResult};

/// Per-sample numeric columns keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl Metadata {
    /// CSV with header `sample_id,<col>,...` and numeric cells.
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let err = |line: usize, msg: String| CliError::Input(format!("{source}:{line}: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty metadata file".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("sample_id") {
            return Err(err(1, "header must start with sample_id".into()));
        }
        let columns: Vec<String> = cols.map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != columns.len() + 1 {
                return Err(err(i + 2, format!("expected {} fields", columns.len() + 1)));
            }
            let values = f[1..]
                .iter()
                .map(|v| v.trim().parse::<f64>().map_err(|_| err(i + 2, format!("not a number: {v:?}"))))
                .collect::<CliResult<Vec<_>>>()?;
            if rows.insert(f[0].to_string(), values).is_some() {
                return Err(err(i + 2, format!("duplicate sample id {:?}", f[0])));
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn merge(&mut self, other: Metadata) -> CliResult<()> {
        if let Some(dup) = other.columns.iter().find(|c| self.columns.contains(c)) {
            return Err(CliError::Parameter(format!("metadata column {dup:?} given twice")));
        }
        let width = self.columns.len();
        let keys: Vec<String> = self.rows.keys().chain(other.rows.keys()).cloned().collect();
        for key in keys {
            let mut row = self.rows.remove(&key).unwrap_or_else(|| vec![f64::NAN; width]);
            row.extend(other.rows.get(&key).cloned().unwrap_or_else(|| vec![f64::NAN; other.columns.len()]));
            self.rows.insert(key, row);
        }
        self.columns.extend(other.columns);
        Ok(())
    }

    /// Column means over the given members; every member must have a row
    /// with values for every column.
    fn node_means(&self, members: &[usize], sample_ids: &[String]) -> CliResult<BTreeMap<String, f64>> {
        if self.columns.is_empty() {
            return Ok(BTreeMap::new());
        }
        let mut sums = vec![0.0; self.columns.len()];
        for &m in members {
            let id = &sample_ids[m];
            let row = self.rows.get(id).ok_or_else(|| CliError::Input(format!("no metadata for sample {id:?}")))?;
            if let Some(c) = row.iter().position(|v| v.is_nan()) {
                return Err(CliError::Input(format!("sample {id:?} has no value for metadata column {:?}", self.columns[c])));
            }
            sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        let n = members.len() as f64;
        Ok(self.columns.iter().cloned().zip(sums.into_iter().map(|s| s / n)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub cover_element: usize,
    pub members: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, f64>,
}

/// Contents of `mapper.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperDocument {
    pub sample_ids: Vec<String>,
    pub beta: f64,
    pub seed: u64,
    pub delta: DeltaEstimate,
    pub cover: HypercubeCover,
    pub node_function: NodeFunction,
    pub n_components: usize,
    pub cycle_rank: usize,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<(usize, usize)>,
}

impl MapperDocument {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: &MapperGraph,
        sample_ids: &[String],
        beta: f64,
        seed: u64,
        delta: DeltaEstimate,
        cover: HypercubeCover,
        node_function: NodeFunction,
        metadata: &Metadata,
    ) -> CliResult<Self> {
        let nodes = graph
            .nodes
            .iter()
            .map(|n| {
                Ok(NodeRecord {
                    id: n.id,
                    cover_element: n.cover_element,
                    members: n.members.clone(),
                    values: n.values.clone(),
                    metadata: metadata.node_means(&n.members, sample_ids)?,
                })
            })
            .collect::<CliResult<_>>()?;
        Ok(Self {
            sample_ids: sample_ids.to_vec(),
            beta,
            seed,
            delta,
            cover,
            node_function,
            n_components: graph.n_components(),
            cycle_rank: graph.cycle_rank(),
            nodes,
            edges: graph.edges.clone(),
        })
    }

    pub fn graph(&self) -> MapperGraph {
        MapperGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| MapperNode { id: n.id, cover_element: n.cover_element, members: n.members.clone(), values: n.values.clone() })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("mapper document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, source: &std::path::Path) -> CliResult<Self> {
        let doc: Self =
            serde_json::from_str(text).map_err(|e| CliError::Json { path: source.to_path_buf(), message: e.to_string() })?;
        let n = doc.sample_ids.len();
        let bad_member = doc.nodes.iter().flat_map(|x| &x.members).any(|&m| m >= n);
        let bad_edge = doc.edges.iter().any(|&(a, b)| a >= b || b >= doc.nodes.len());
        let ids_ok = doc.nodes.iter().enumerate().all(|(i, x)| x.id == i);
        if bad_member || bad_edge || !ids_ok {
            return Err(CliError::Json { path: source.to_path_buf(), message: "inconsistent node or edge indices".into() });
        }
        Ok(doc)
    }

    /// Undirected DOT graph. Every node carries its size, cover element,
    /// filter values `f1..fp` and metadata means as attributes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph mapper {\n");
        for n in &self.nodes {
            let _ = write!(out, "  n{} [label=\"{}\", size=\"{}\", cover_element=\"{}\"", n.id, n.id, n.members.len(), n.cover_element);
            for (s, v) in n.values.iter().enumerate() {
                let _ = write!(out, ", f{}=\"{v}\"", s + 1);
            }
            for (k, v) in &n.metadata {
                let _ = write!(out, ", \"{}\"=\"{v}\"", k.replace('\\', "\\\\").replace('"', "\\\""));
            }
            out.push_str("];\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -- n{b};");
        }
        out.push_str("}\n");
        out
    }
}

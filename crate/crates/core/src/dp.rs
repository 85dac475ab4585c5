// SPDX-License-Identifier: MIT OR Apache-2.0

//! Joint alignment and segmentation as a longest path in a DAG.
//!
//! Vertices:
//!
//! - `Start` and `Terminal`;
//! - `2N - 1` alignment vertices `Align(j1, j2)` with `j1 = 0` or `j2 = 0`,
//!   meaning "sequence `i` is examined from position `j_i`";
//! - segmentation vertices `Seg(j1, j2, s)` pairing position `j1` of the
//!   first difference sequence with position `j2` of the second as the start
//!   of the same region. The state `s` records which sequence is one sample
//!   ahead relative to the alignment: `0` neither, `1` the first, `2` the
//!   second. Pairs with `j1 = 1` or `j2 = 1` only carry `s = 0`, giving
//!   `3N^2 - 4N + 2` segmentation vertices in total.
//!
//! Every edge into `Seg(j1, j2, .)` has weight `W(j1, j2, v)`; edges out of
//! `Start` and into `Terminal` weigh zero. The state machine only admits
//! moves that keep each region count, and every cumulative count, within
//! one sample across the two sequences.
//!
//! Among maximum-weight paths the search prefers the fewest edges, so
//! zero-weight segmentation vertices only appear when no path of the same
//! weight avoids them.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::difference::DifferenceSequence;
use crate::threshold::Segmentation;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    Start,
    Align(usize, usize),
    Seg(usize, usize, u8),
    Terminal,
}

impl Vertex {
    fn position_sum(self) -> usize {
        match self {
            Vertex::Start => 0,
            Vertex::Align(a, b) | Vertex::Seg(a, b, _) => a + b,
            Vertex::Terminal => usize::MAX,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Start => write!(f, "start"),
            Vertex::Align(a, b) => write!(f, "({a}, {b})"),
            Vertex::Seg(a, b, s) => write!(f, "({a}, {b}, {s})"),
            Vertex::Terminal => write!(f, "terminal"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// Gated indicator.
    #[default]
    W1,
    /// Gated product `d1 * d2`.
    W2,
    /// Gated `min(d1^2, d2^2)`.
    W3,
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "w1" => Ok(WeightKind::W1),
            "w2" => Ok(WeightKind::W2),
            "w3" => Ok(WeightKind::W3),
            other => Err(Error::InvalidParameter(format!("unknown weight kind {other:?}"))),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::W1 => "w1",
            WeightKind::W2 => "w2",
            WeightKind::W3 => "w3",
        })
    }
}

/// The pair passes the gate when both components share a sign and both
/// have magnitude at least `v`.
pub fn edge_weight(kind: WeightKind, a: f64, b: f64, v: f64) -> f64 {
    if !(a * b > 0.0 && a.abs() >= v && b.abs() >= v) {
        return 0.0;
    }
    match kind {
        WeightKind::W1 => 1.0,
        WeightKind::W2 => a * b,
        WeightKind::W3 => (a * a).min(b * b),
    }
}

#[derive(Clone, Debug)]
pub struct AlignmentGraph {
    n: usize,
    v: f64,
    kind: WeightKind,
    /// Topologically ordered: by position sum, `Start` first, `Terminal` last.
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    /// Outgoing `(target, weight)` lists, sorted by target vertex.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl AlignmentGraph {
    pub fn sequence_len(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.v
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn alignment_vertex_count(&self) -> usize {
        self.vertices.iter().filter(|v| matches!(v, Vertex::Align(..))).count()
    }

    pub fn segmentation_vertex_count(&self) -> usize {
        self.vertices.iter().filter(|v| matches!(v, Vertex::Seg(..))).count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, from: Vertex) -> Vec<(Vertex, f64)> {
        self.index
            .get(&from)
            .map(|&u| self.adjacency[u].iter().map(|&(t, w)| (self.vertices[t], w)).collect())
            .unwrap_or_default()
    }

    pub fn edge(&self, from: Vertex, to: Vertex) -> Option<f64> {
        let (&u, &t) = (self.index.get(&from)?, self.index.get(&to)?);
        self.adjacency[u].iter().find(|&&(x, _)| x == t).map(|&(_, w)| w)
    }

    /// Total weight of a vertex sequence, or `None` if some step is not an edge.
    pub fn path_weight(&self, path: &[Vertex]) -> Option<f64> {
        path.windows(2)
            .try_fold(0.0, |acc, w| Some(acc + self.edge(w[0], w[1])?))
    }

    /// Every `Start -> Terminal` path, up to `cap` of them. Intended for
    /// small graphs.
    pub fn all_paths(&self, cap: usize) -> (Vec<Vec<Vertex>>, bool) {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        let truncated = self.walk(&mut stack, &mut out, cap, &|_, _| true);
        (out, truncated)
    }

    /// Depth-first walk from the top of `stack`, following edges accepted by
    /// `keep`. Returns `true` when `cap` cut the enumeration short.
    fn walk(
        &self,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<Vertex>>,
        cap: usize,
        keep: &dyn Fn(usize, &(usize, f64)) -> bool,
    ) -> bool {
        let u = *stack.last().expect("non-empty stack");
        if self.vertices[u] == Vertex::Terminal {
            if out.len() == cap {
                return true;
            }
            out.push(stack.iter().map(|&i| self.vertices[i]).collect());
            return false;
        }
        for edge in &self.adjacency[u] {
            if !keep(u, edge) {
                continue;
            }
            stack.push(edge.0);
            let truncated = self.walk(stack, out, cap, keep);
            stack.pop();
            if truncated {
                return true;
            }
        }
        false
    }

    /// Graphviz rendering; edges along `highlight` paths are drawn bold.
    pub fn to_dot(&self, highlight: &[Vec<Vertex>]) -> String {
        let mut marked = std::collections::HashSet::new();
        for path in highlight {
            for w in path.windows(2) {
                marked.insert((w[0], w[1]));
            }
        }
        let mut out = String::from("digraph alignment {\n  rankdir=LR;\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "  v{i} [label=\"{v}\"];");
        }
        for (u, edges) in self.adjacency.iter().enumerate() {
            for &(t, w) in edges {
                let style = if marked.contains(&(self.vertices[u], self.vertices[t])) {
                    ", color=red, penwidth=2.5"
                } else {
                    ""
                };
                let _ = writeln!(out, "  v{u} -> v{t} [label=\"{w}\"{style}];");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_graph(
    d1: &DifferenceSequence,
    d2: &DifferenceSequence,
    v: f64,
    kind: WeightKind,
) -> Result<AlignmentGraph> {
    if d1.len() != d2.len() {
        return Err(Error::LengthMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    let n = d1.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sequences need at least two samples, got {n}"
        )));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {v}")));
    }

    let mut vertices = vec![Vertex::Start];
    vertices.push(Vertex::Align(0, 0));
    for j in 1..n {
        vertices.push(Vertex::Align(0, j));
        vertices.push(Vertex::Align(j, 0));
    }
    for j1 in 1..=n {
        for j2 in 1..=n {
            vertices.push(Vertex::Seg(j1, j2, 0));
            if j1 > 1 && j2 > 1 {
                vertices.push(Vertex::Seg(j1, j2, 1));
                vertices.push(Vertex::Seg(j1, j2, 2));
            }
        }
    }
    vertices.push(Vertex::Terminal);
    vertices.sort_by_key(|&x| (x.position_sum(), x));
    let index: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &x)| (x, i)).collect();

    let weight = |j1: usize, j2: usize| edge_weight(kind, d1.at(j1), d2.at(j2), v);
    let seg = |j1: usize, j2: usize, s: u8| (index[&Vertex::Seg(j1, j2, s)], weight(j1, j2));
    let terminal = index[&Vertex::Terminal];

    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (u, &vertex) in vertices.iter().enumerate() {
        let out = &mut adjacency[u];
        match vertex {
            Vertex::Start => {
                out.extend(
                    vertices
                        .iter()
                        .filter(|x| matches!(x, Vertex::Align(..)))
                        .map(|x| (index[x], 0.0)),
                );
            }
            Vertex::Align(j1, j2) => {
                for k in 1..=n - j1.max(j2) {
                    out.push(seg(j1 + k, j2 + k, 0));
                }
            }
            Vertex::Seg(j1, j2, s) => {
                out.push((terminal, 0.0));
                if j1 < n && j2 < n {
                    for k in 1..=n - j1.max(j2) {
                        out.push(seg(j1 + k, j2 + k, s));
                    }
                }
                // The first sequence gains a sample on the next region.
                if j1 + 1 < n && j2 < n && s != 1 {
                    let to = if s == 0 { 1 } else { 0 };
                    for k in 1..=n - (j1 + 1).max(j2) {
                        out.push(seg(j1 + k + 1, j2 + k, to));
                    }
                }
                // The second sequence gains a sample on the next region.
                if j1 < n && j2 + 1 < n && s != 2 {
                    let to = if s == 0 { 2 } else { 0 };
                    for k in 1..=n - j1.max(j2 + 1) {
                        out.push(seg(j1 + k, j2 + k + 1, to));
                    }
                }
            }
            Vertex::Terminal => {}
        }
        out.sort_by_key(|&(t, _)| vertices[t]);
    }

    Ok(AlignmentGraph {
        n,
        v,
        kind,
        vertices,
        index,
        adjacency,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub weight: f64,
    /// Edges on each optimal path.
    pub edges: usize,
    /// Optimal paths in lexicographic vertex order, at most `cap` of them.
    pub paths: Vec<Vec<Vertex>>,
    /// Number of optimal paths (saturating).
    pub optimal_count: u64,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug)]
struct Best {
    weight: f64,
    edges: usize,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        self.weight > other.weight || (self.weight == other.weight && self.edges < other.edges)
    }

    fn ties(&self, other: &Best) -> bool {
        self.weight == other.weight && self.edges == other.edges
    }
}

/// Maximum-weight `Start -> Terminal` paths, fewest edges first among
/// equal weights, enumerated up to `cap`.
pub fn longest_paths(graph: &AlignmentGraph, cap: usize) -> PathResult {
    let count = graph.vertices.len();
    let mut best: Vec<Option<Best>> = vec![None; count];
    let mut ways: Vec<u64> = vec![0; count];
    best[count - 1] = Some(Best { weight: 0.0, edges: 0 });
    ways[count - 1] = 1;
    for u in (0..count - 1).rev() {
        let mut here: Option<Best> = None;
        let mut n_ways = 0u64;
        for &(t, w) in &graph.adjacency[u] {
            let Some(next) = best[t] else { continue };
            let cand = Best {
                weight: w + next.weight,
                edges: next.edges + 1,
            };
            match here {
                Some(h) if h.ties(&cand) => n_ways = n_ways.saturating_add(ways[t]),
                Some(h) if !cand.better_than(&h) => {}
                _ => {
                    here = Some(cand);
                    n_ways = ways[t];
                }
            }
        }
        best[u] = here;
        ways[u] = n_ways;
    }

    let Some(root) = best[0] else {
        return PathResult {
            weight: 0.0,
            edges: 0,
            paths: Vec::new(),
            optimal_count: 0,
            truncated: false,
        };
    };
    let on_optimum = |u: usize, &(t, w): &(usize, f64)| match (best[u], best[t]) {
        (Some(h), Some(next)) => h.ties(&Best {
            weight: w + next.weight,
            edges: next.edges + 1,
        }),
        _ => false,
    };
    let mut paths = Vec::new();
    let mut stack = vec![0usize];
    let truncated = graph.walk(&mut stack, &mut paths, cap, &on_optimum);
    PathResult {
        weight: root.weight,
        edges: root.edges,
        paths,
        optimal_count: ways[0],
        truncated,
    }
}

/// Alignment and per-sequence boundaries read off a path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSegmentation {
    /// The alignment vertex `(k1, k2)`.
    pub alignment: (usize, usize),
    pub boundaries1: Vec<usize>,
    pub boundaries2: Vec<usize>,
}

impl PathSegmentation {
    /// Implied number of regions (segmentation vertices minus one).
    pub fn regions(&self) -> usize {
        self.boundaries1.len().saturating_sub(1)
    }

    /// Usable for reconstruction only with at least one region.
    pub fn is_valid(&self) -> bool {
        self.boundaries1.len() >= 2
    }

    pub fn segmentations(&self) -> Result<(Segmentation, Segmentation)> {
        Ok((
            Segmentation::new(self.boundaries1.clone())?,
            Segmentation::new(self.boundaries2.clone())?,
        ))
    }

    /// Offset of the second sequence relative to the first.
    pub fn shift(&self) -> i64 {
        self.alignment.1 as i64 - self.alignment.0 as i64
    }
}

pub fn path_to_segmentation(path: &[Vertex]) -> Result<PathSegmentation> {
    let alignment = path
        .iter()
        .find_map(|v| match v {
            Vertex::Align(a, b) => Some((*a, *b)),
            _ => None,
        })
        .unwrap_or((0, 0));
    let (boundaries1, boundaries2): (Vec<usize>, Vec<usize>) = path
        .iter()
        .filter_map(|v| match v {
            Vertex::Seg(a, b, _) => Some((*a, *b)),
            _ => None,
        })
        .unzip();
    if boundaries1.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(PathSegmentation {
        alignment,
        boundaries1,
        boundaries2,
    })
}

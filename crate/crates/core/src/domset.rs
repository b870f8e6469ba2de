//! Minimum dominating set with vertex variables `y_i` and directed-edge
//! variables `x_{j→i}`.
//!
//! `A`: every `x ∈ {0, θ}`, every `y ∈ {0, η}`, each vertex is dominating or
//! has an in-edge at `θ`, and at most `|D|` vertices are dominating.
//! `B`: all out-edge copies of a vertex agree with it, `x_{j→i}/θ = y_j/η`.
//! `θ` and `η` are the per-coordinate metric scales, so the unit-scale
//! formulation has `x ∈ {0,1}` and `y ∈ {0,1}`.

use std::sync::Arc;

use crate::concur::ConcurGroups;
use crate::error::{Error, Result};
use crate::metric::Granularity;
use crate::pair::ConstraintPair;
use crate::point::{Layout, Partition};

/// Simple undirected graph with its doubled edge set `E_2`: undirected edge
/// `e = {u, v}` (`u < v`) yields directed edges `2e = u→v` and `2e+1 = v→u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(u32, u32)>,
    in_offsets: Vec<usize>,
    in_edges: Vec<usize>,
    out_offsets: Vec<usize>,
    out_edges: Vec<usize>,
}

fn csr(n: usize, keyed: impl Iterator<Item = (usize, usize)> + Clone) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for (k, _) in keyed.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut items = vec![0; offsets[n]];
    for (k, item) in keyed {
        items[fill[k]] = item;
        fill[k] += 1;
    }
    (offsets, items)
}

impl Graph {
    /// # Errors
    /// Self-loops, duplicate edges and out-of-range endpoints.
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::config("edges", format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::config("edges", format!("self-loop at {u}")));
            }
            norm.push((u.min(v) as u32, u.max(v) as u32));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::config(
                "edges",
                format!("duplicate edge ({},{})", w[0].0, w[0].1),
            ));
        }
        let directed = || {
            norm.iter()
                .enumerate()
                .flat_map(|(e, &(u, v))| [(2 * e, u as usize, v as usize), (2 * e + 1, v as usize, u as usize)])
        };
        let (in_offsets, in_edges) = csr(num_vertices, directed().map(|(d, _, to)| (to, d)));
        let (out_offsets, out_edges) = csr(num_vertices, directed().map(|(d, from, _)| (from, d)));
        Ok(Graph {
            num_vertices,
            edges: norm,
            in_offsets,
            in_edges,
            out_offsets,
            out_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `|E_2|`.
    pub fn num_directed(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// `(from, to)` of directed edge `d`.
    pub fn directed(&self, d: usize) -> (usize, usize) {
        let (u, v) = self.edges[d / 2];
        if d % 2 == 0 {
            (u as usize, v as usize)
        } else {
            (v as usize, u as usize)
        }
    }

    /// Directed edges `j→i` into `i`.
    pub fn in_edges(&self, i: usize) -> &[usize] {
        &self.in_edges[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    /// Directed edges `j→i` out of `j`.
    pub fn out_edges(&self, j: usize) -> &[usize] {
        &self.out_edges[self.out_offsets[j]..self.out_offsets[j + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_edges(i).iter().map(move |&d| self.directed(d).0)
    }

    /// Whether every vertex is in `set` or adjacent to a member.
    pub fn is_dominating(&self, set: &[usize]) -> bool {
        let mut covered = vec![false; self.num_vertices];
        for &j in set {
            covered[j] = true;
            for i in self.neighbors(j) {
                covered[i] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }
}

/// Queens' graph: squares of an `order × order` board (row-major ids),
/// adjacent when they share a row, column or diagonal.
pub fn queens_graph(order: usize) -> Graph {
    let mut edges = Vec::new();
    for a in 0..order * order {
        let (r1, c1) = (a / order, a % order);
        for b in a + 1..order * order {
            let (r2, c2) = (b / order, b % order);
            if r1 == r2 || c1 == c2 || r1.abs_diff(r2) == c1.abs_diff(c2) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(order * order, edges).expect("queens edges are simple")
}

/// Parses a `u v` edge list (0-indexed, `#` comments). An optional
/// `n <count>` line fixes the vertex count; otherwise it is one more than the
/// largest id.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("invalid vertex id `{s}`")))
        };
        match fields.as_slice() {
            ["n", count] if declared.is_none() && edges.is_empty() => declared = Some(num(count)?),
            [u, v] => edges.push((num(u)?, num(v)?)),
            _ => return Err(Error::parse(line_no, format!("expected `u v`, got `{line}`"))),
        }
    }
    let n = declared.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    Graph::new(n, edges).map_err(|e| Error::parse(0, e.to_string()))
}

/// Dominating set of size at most `target` as a [`ConstraintPair`].
///
/// Layout: block `x` (one real per directed edge, in `E_2` order) followed by
/// block `y` (one real per vertex).
#[derive(Debug, Clone)]
pub struct DomsetProblem {
    graph: Graph,
    target: usize,
    layout: Arc<Layout>,
    concur: ConcurGroups,
}

impl DomsetProblem {
    pub fn new(graph: Graph, target: usize) -> Result<Self> {
        if target == 0 {
            return Err(Error::config("target", "dominating set size must be >= 1"));
        }
        let ne = graph.num_directed();
        let layout = Layout::new([("x", ne), ("y", graph.num_vertices())]);
        let mut concur = ConcurGroups::new();
        for j in 0..graph.num_vertices() {
            concur.push(std::iter::once(ne + j).chain(graph.out_edges(j).iter().copied()));
        }
        Ok(DomsetProblem {
            graph,
            target,
            layout,
            concur,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Coordinate of `y_i`.
    pub fn y_index(&self, i: usize) -> usize {
        self.graph.num_directed() + i
    }

    /// Exact discrete encoding of `set` at the given scales.
    pub fn encode(&self, set: &[usize], scales: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.layout.total_dim()];
        for &j in set {
            let yi = self.y_index(j);
            v[yi] = scales[yi];
            for &d in self.graph.out_edges(j) {
                v[d] = scales[d];
            }
        }
        v
    }
}

impl ConstraintPair for DomsetProblem {
    type Solution = Vec<usize>;

    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Base state, per-vertex costs `d_1`, `d_0`, then the `|D|` largest
    /// `d_0 - d_1 > 0` become dominating (ties to the lower vertex id).
    ///
    /// An isolated vertex has `d_0 = ∞`; if more than `|D|` such vertices
    /// exist the surplus is left undominated and the output lies outside `A`.
    fn project_a(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        let g = &self.graph;
        let ne = g.num_directed();
        for d in 0..ne {
            out[d] = if x[d] >= 0.5 * scales[d] { scales[d] } else { 0.0 };
        }
        let nv = g.num_vertices();
        let mut jmax = vec![usize::MAX; nv];
        let mut want: Vec<(f64, usize)> = Vec::new();
        for i in 0..nv {
            let yi = ne + i;
            out[yi] = 0.0;
            let eta = scales[yi];
            let d1 = eta * eta - 2.0 * eta * x[yi];
            let mut d0 = f64::INFINITY;
            for &d in g.in_edges(i) {
                let cost = scales[d] * scales[d] - 2.0 * scales[d] * x[d];
                if cost < d0 {
                    d0 = cost;
                    jmax[i] = d;
                }
            }
            let d0 = d0.max(0.0);
            if d0 > d1 {
                want.push((d0 - d1, i));
            }
        }
        want.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut dominating = vec![false; nv];
        for &(_, i) in want.iter().take(self.target) {
            dominating[i] = true;
            out[ne + i] = scales[ne + i];
        }
        for i in 0..nv {
            if !dominating[i] && jmax[i] != usize::MAX {
                out[jmax[i]] = scales[jmax[i]];
            }
        }
    }

    fn project_b(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        self.concur.project(x, scales, out);
    }

    fn verify(&self, candidate: &[f64], scales: &[f64]) -> Option<Vec<usize>> {
        let ne = self.graph.num_directed();
        let set: Vec<usize> = (0..self.graph.num_vertices())
            .filter(|&i| candidate[ne + i] > 0.5 * scales[ne + i])
            .collect();
        (set.len() <= self.target && self.graph.is_dominating(&set)).then_some(set)
    }

    /// `by_type`: `[x, y]`. `by_type_location`: one group per directed edge
    /// and one per vertex.
    fn partition(&self, granularity: Granularity) -> Result<Partition> {
        let ne = self.graph.num_directed();
        let nv = self.graph.num_vertices();
        match granularity {
            Granularity::None | Granularity::ByType => {
                Partition::from_blocks(&self.layout, &[("x", &["x"]), ("y", &["y"])])
            }
            Granularity::ByTypeLocation => {
                let labels = (0..ne)
                    .map(|d| format!("x[{d}]"))
                    .chain((0..nv).map(|i| format!("y[{i}]")))
                    .collect();
                Partition::from_assignment(labels, (0..(ne + nv) as u32).collect())
            }
            other => Err(Error::UnsupportedGranularity(other.name())),
        }
    }
}

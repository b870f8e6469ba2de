//! Boolean generative networks: learn an OR/NOT circuit whose outputs cover
//! every data string for some setting of the latent inputs.
//!
//! One copy of the layered network is kept per data string. Each candidate
//! edge carries a wire variable `w = (w_1, w_2)` and a truth copy `x` of its
//! source node; each non-input node carries its truth value `y`. The three
//! wire states sit at the vertices of an isosceles triangle:
//!
//! ```text
//! no wire      (0, 0)
//! wire         (ω, -σ/2)
//! negated wire (ω, +σ/2)
//! ```
//!
//! `x ∈ {0, θ}`, `y ∈ {0, η}`. All four metric parameters are per-coordinate
//! scales, so the same formulas cover tuning by type, location and item.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::concur::ConcurGroups;
use crate::error::{Error, Result};
use crate::metric::Granularity;
use crate::pair::ConstraintPair;
use crate::point::{Layout, Partition};

/// Largest supported input layer (all `2^M` inputs are enumerated).
pub const MAX_INPUTS: usize = 16;
/// Largest supported output layer (a data string is one `u64`).
pub const MAX_OUTPUTS: usize = 64;

/// Fully connected layered architecture. Nodes are numbered layer by layer;
/// candidate edges are grouped by target node, sources ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    layers: Vec<usize>,
    layer_start: Vec<usize>,
    edges: Vec<(u32, u32)>,
    in_offsets: Vec<usize>,
    out_offsets: Vec<usize>,
    out_edges: Vec<usize>,
}

impl Architecture {
    pub fn new(layers: &[usize]) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::config("layers", "need an input and an output layer"));
        }
        if layers.iter().any(|&s| s == 0) {
            return Err(Error::config("layers", "empty layer"));
        }
        if layers[0] > MAX_INPUTS {
            return Err(Error::config("layers", format!("at most {MAX_INPUTS} inputs")));
        }
        if *layers.last().unwrap() > MAX_OUTPUTS {
            return Err(Error::config("layers", format!("at most {MAX_OUTPUTS} outputs")));
        }
        let mut layer_start = vec![0];
        for &s in layers {
            layer_start.push(layer_start.last().unwrap() + s);
        }
        let num_nodes = *layer_start.last().unwrap();
        let mut edges = Vec::new();
        let mut in_offsets = vec![0];
        for l in 1..layers.len() {
            for j in layer_start[l]..layer_start[l + 1] {
                for i in layer_start[l - 1]..layer_start[l] {
                    edges.push((i as u32, j as u32));
                }
                in_offsets.push(edges.len());
            }
        }
        let mut out_lists = vec![Vec::new(); num_nodes];
        for (e, &(i, _)) in edges.iter().enumerate() {
            out_lists[i as usize].push(e);
        }
        let mut out_offsets = vec![0];
        let mut out_edges = Vec::new();
        for list in out_lists {
            out_edges.extend(list);
            out_offsets.push(out_edges.len());
        }
        Ok(Architecture {
            layers: layers.to_vec(),
            layer_start,
            edges,
            in_offsets,
            out_offsets,
            out_edges,
        })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    /// `M`.
    pub fn num_inputs(&self) -> usize {
        self.layers[0]
    }

    /// `N`.
    pub fn num_outputs(&self) -> usize {
        *self.layers.last().unwrap()
    }

    pub fn num_nodes(&self) -> usize {
        *self.layer_start.last().unwrap()
    }

    /// Nodes above the input layer; each has a `y` variable.
    pub fn num_gates(&self) -> usize {
        self.num_nodes() - self.num_inputs()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(source, target)` of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        let (i, j) = self.edges[e];
        (i as usize, j as usize)
    }

    pub fn is_output(&self, node: usize) -> bool {
        node >= self.layer_start[self.layers.len() - 1]
    }

    /// First node of the output layer.
    pub fn output_start(&self) -> usize {
        self.layer_start[self.layers.len() - 1]
    }

    /// Candidate in-edges of non-input node `node`.
    pub fn in_edges(&self, node: usize) -> std::ops::Range<usize> {
        let g = node - self.num_inputs();
        self.in_offsets[g]..self.in_offsets[g + 1]
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[self.out_offsets[node]..self.out_offsets[node + 1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireState {
    Absent,
    Wire,
    Negated,
}

impl WireState {
    pub const ALL: [WireState; 3] = [WireState::Absent, WireState::Wire, WireState::Negated];

    /// Point in the triangle with unit `ω` and `σ`.
    pub fn unit_point(self) -> (f64, f64) {
        match self {
            WireState::Absent => (0.0, 0.0),
            WireState::Wire => (1.0, -0.5),
            WireState::Negated => (1.0, 0.5),
        }
    }

    /// Truth value passed along the wire when its source carries `source`.
    pub fn passes_true(self, source: bool) -> bool {
        match self {
            WireState::Absent => false,
            WireState::Wire => source,
            WireState::Negated => !source,
        }
    }
}

/// The three wire-state points for separations `σ` and `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireGeometry {
    pub sigma: f64,
    pub omega: f64,
}

impl WireGeometry {
    pub fn point(&self, state: WireState) -> (f64, f64) {
        let (a, b) = state.unit_point();
        (a * self.omega, b * self.sigma)
    }
}

/// Wire state for every candidate edge. Every non-input node ORs its
/// incoming wires; a node with no wires outputs `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanCircuit {
    arch: Architecture,
    wires: Vec<WireState>,
}

impl BooleanCircuit {
    pub fn new(arch: Architecture, wires: Vec<WireState>) -> Result<Self> {
        if wires.len() != arch.num_edges() {
            return Err(Error::LayoutMismatch {
                expected: arch.num_edges(),
                found: wires.len(),
            });
        }
        Ok(BooleanCircuit { arch, wires })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn wires(&self) -> &[WireState] {
        &self.wires
    }

    pub fn wire_count(&self) -> usize {
        self.wires.iter().filter(|&&w| w != WireState::Absent).count()
    }

    /// Values of every node on input bits `input` (bit `i` = input node `i`).
    pub fn node_values(&self, input: u64) -> Vec<bool> {
        let arch = &self.arch;
        let mut val = vec![false; arch.num_nodes()];
        for (i, v) in val.iter_mut().enumerate().take(arch.num_inputs()) {
            *v = (input >> i) & 1 == 1;
        }
        for j in arch.num_inputs()..arch.num_nodes() {
            val[j] = arch
                .in_edges(j)
                .any(|e| self.wires[e].passes_true(val[arch.edge(e).0]));
        }
        val
    }

    /// Output string (bit `t` = output node `t`) on one input.
    pub fn eval(&self, input: u64) -> u64 {
        let start = self.arch.output_start();
        self.node_values(input)[start..]
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &b)| acc | (u64::from(b) << t))
    }

    /// Output string for each of the `2^M` inputs, in input order.
    ///
    /// All inputs are evaluated at once, one bit per input pattern.
    pub fn eval_all(&self) -> Vec<u64> {
        let arch = &self.arch;
        let m = arch.num_inputs();
        let patterns = 1usize << m;
        let words = patterns.div_ceil(64);
        let tail = if patterns % 64 == 0 {
            u64::MAX
        } else {
            (1u64 << (patterns % 64)) - 1
        };
        let mut val = vec![0u64; arch.num_nodes() * words];
        for i in 0..m {
            for w in 0..words {
                let mut bits = 0u64;
                for b in 0..64.min(patterns - 64 * w) {
                    if ((64 * w + b) >> i) & 1 == 1 {
                        bits |= 1 << b;
                    }
                }
                val[i * words + w] = bits;
            }
        }
        for j in m..arch.num_nodes() {
            for w in 0..words {
                let mut acc = 0u64;
                for e in arch.in_edges(j) {
                    let src = val[arch.edge(e).0 * words + w];
                    match self.wires[e] {
                        WireState::Absent => {}
                        WireState::Wire => acc |= src,
                        WireState::Negated => acc |= !src,
                    }
                }
                val[j * words + w] = if w == words - 1 { acc & tail } else { acc };
            }
        }
        let start = arch.output_start();
        (0..patterns)
            .map(|p| {
                let (w, b) = (p / 64, p % 64);
                (0..arch.num_outputs()).fold(0u64, |acc, t| {
                    acc | (((val[(start + t) * words + w] >> b) & 1) << t)
                })
            })
            .collect()
    }

    /// Whether every string in `data` is produced by some input.
    pub fn covers(&self, data: &[u64]) -> bool {
        let produced: HashSet<u64> = self.eval_all().into_iter().collect();
        data.iter().all(|d| produced.contains(d))
    }

    /// One `source target negated` line per wire.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (e, &w) in self.wires.iter().enumerate() {
            if w != WireState::Absent {
                let (i, j) = self.arch.edge(e);
                writeln!(out, "{i} {j} {}", u8::from(w == WireState::Negated)).unwrap();
            }
        }
        out
    }

    /// Human-readable gates, e.g. `n5 = OR(n0, !n2)`.
    pub fn gate_listing(&self) -> String {
        let arch = &self.arch;
        let mut out = String::new();
        for j in arch.num_inputs()..arch.num_nodes() {
            let terms: Vec<String> = arch
                .in_edges(j)
                .filter_map(|e| {
                    let i = arch.edge(e).0;
                    match self.wires[e] {
                        WireState::Absent => None,
                        WireState::Wire => Some(format!("n{i}")),
                        WireState::Negated => Some(format!("!n{i}")),
                    }
                })
                .collect();
            let rhs = if terms.is_empty() {
                "false".to_string()
            } else {
                format!("OR({})", terms.join(", "))
            };
            writeln!(out, "n{j} = {rhs}").unwrap();
        }
        out
    }
}

/// `bits` as a string of `len` characters, character `t` = bit `t`.
pub fn format_bits(bits: u64, len: usize) -> String {
    (0..len)
        .map(|t| if (bits >> t) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses one binary string per line (blank lines and `#` comments skipped).
/// All strings must have length `len`.
pub fn parse_dataset(text: &str, len: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.len() != len {
            return Err(Error::parse(
                idx + 1,
                format!("expected {len} bits, got {}", line.len()),
            ));
        }
        let mut bits = 0u64;
        for (t, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << t,
                _ => return Err(Error::parse(idx + 1, format!("invalid bit `{ch}`"))),
            }
        }
        out.push(bits);
    }
    Ok(out)
}

/// Sorted (as strings) and deduplicated.
pub fn canonical_dataset(mut data: Vec<u64>, len: usize) -> Vec<u64> {
    data.sort_by_cached_key(|&d| format_bits(d, len));
    data.dedup();
    data
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub circuit: BooleanCircuit,
    pub data: Vec<u64>,
    /// Seed that produced the circuit (differs from the request after
    /// resampling a degenerate circuit).
    pub seed: u64,
    pub resamples: usize,
}

/// Random ground-truth circuit with two in-wires per non-input node (one if
/// only one candidate exists), fair-coin negations, and its full set of
/// distinct output strings.
///
/// Circuits with a single distinct output are resampled at `seed + 1`, …
pub fn generate_dataset(arch: &Architecture, seed: u64) -> GeneratedData {
    let mut resamples = 0;
    loop {
        let s = seed.wrapping_add(resamples as u64);
        let mut rng = ChaCha20Rng::seed_from_u64(s);
        let mut wires = vec![WireState::Absent; arch.num_edges()];
        for j in arch.num_inputs()..arch.num_nodes() {
            let range = arch.in_edges(j);
            let k = 2.min(range.len());
            for pick in sample(&mut rng, range.len(), k) {
                wires[range.start + pick] = if rng.gen_bool(0.5) {
                    WireState::Negated
                } else {
                    WireState::Wire
                };
            }
        }
        let circuit = BooleanCircuit::new(arch.clone(), wires).expect("wire count matches");
        let data = canonical_dataset(circuit.eval_all(), arch.num_outputs());
        if data.len() > 1 {
            return GeneratedData {
                circuit,
                data,
                seed: s,
                resamples,
            };
        }
        resamples += 1;
    }
}

/// Scales and current values of one in-edge, as seen by its target node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeVars {
    pub w1: f64,
    pub w2: f64,
    pub x: f64,
    /// `ω`, `σ`, `θ` of this coordinate.
    pub omega: f64,
    pub sigma: f64,
    pub theta: f64,
}

/// Discrete choice for one in-edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeChoice {
    pub wire: WireState,
    pub source: bool,
}

impl EdgeVars {
    fn cost(&self, c: EdgeChoice) -> f64 {
        let (a, b) = c.wire.unit_point();
        let (p1, p2) = (a * self.omega, b * self.sigma);
        let px = if c.source { self.theta } else { 0.0 };
        (self.w1 - p1).powi(2) + (self.w2 - p2).powi(2) + (self.x - px).powi(2)
    }

    /// Best choice of each kind: (no wire, wire passing false, wire passing true).
    fn options(&self) -> [(f64, EdgeChoice); 3] {
        let best = |cands: &[EdgeChoice]| {
            cands
                .iter()
                .map(|&c| (self.cost(c), c))
                .fold(None, |acc: Option<(f64, EdgeChoice)>, cur| match acc {
                    Some(a) if a.0 <= cur.0 => Some(a),
                    _ => Some(cur),
                })
                .unwrap()
        };
        let ch = |wire, source| EdgeChoice { wire, source };
        [
            best(&[ch(WireState::Absent, false), ch(WireState::Absent, true)]),
            best(&[ch(WireState::Wire, false), ch(WireState::Negated, true)]),
            best(&[ch(WireState::Wire, true), ch(WireState::Negated, false)]),
        ]
    }
}

/// Nearest valid local configuration of one gate: per-edge choices and the
/// node's truth value.
///
/// `y` is the node's current value with scale `eta`; `clamp` fixes the truth
/// value (output nodes); `cap` bounds the number of wires. Returns `None`
/// only when no valid configuration exists (clamped `true` with no in-edges
/// or a zero cap).
pub fn project_gate(
    edges: &[EdgeVars],
    y: f64,
    eta: f64,
    clamp: Option<bool>,
    cap: Option<usize>,
) -> Option<(Vec<EdgeChoice>, bool)> {
    let opts: Vec<[(f64, EdgeChoice); 3]> = edges.iter().map(EdgeVars::options).collect();
    let cy = [y * y, (y - eta) * (y - eta)];
    let branches: &[bool] = match clamp {
        Some(false) => &[false],
        Some(true) => &[true],
        None => &[false, true],
    };
    let mut best: Option<(f64, Vec<EdgeChoice>, bool)> = None;
    for &high in branches {
        let found = match cap {
            None => branch_uncapped(&opts, high),
            Some(k) => branch_capped(&opts, high, k),
        };
        if let Some((cost, choice)) = found {
            let total = cost + cy[usize::from(high)];
            if best.as_ref().is_none_or(|b| total < b.0) {
                best = Some((total, choice, high));
            }
        }
    }
    best.map(|(_, c, h)| (c, h))
}

fn branch_uncapped(opts: &[[(f64, EdgeChoice); 3]], high: bool) -> Option<(f64, Vec<EdgeChoice>)> {
    let lows: Vec<(f64, EdgeChoice)> = opts
        .iter()
        .map(|o| if o[1].0 < o[0].0 { o[1] } else { o[0] })
        .collect();
    if !high {
        return Some((lows.iter().map(|l| l.0).sum(), lows.iter().map(|l| l.1).collect()));
    }
    let mut cost = 0.0;
    let mut choice = Vec::with_capacity(opts.len());
    let mut any_true = false;
    let mut forced: Option<(f64, usize)> = None;
    for (e, (o, low)) in opts.iter().zip(&lows).enumerate() {
        let gap = o[2].0 - low.0;
        if gap < 0.0 {
            cost += o[2].0;
            choice.push(o[2].1);
            any_true = true;
        } else {
            cost += low.0;
            choice.push(low.1);
            if forced.is_none_or(|f| gap < f.0) {
                forced = Some((gap, e));
            }
        }
    }
    if !any_true {
        let (gap, e) = forced?;
        cost += gap;
        choice[e] = opts[e][2].1;
    }
    Some((cost, choice))
}

/// DP over edges with state (wires used, any wire passing true).
fn branch_capped(
    opts: &[[(f64, EdgeChoice); 3]],
    high: bool,
    cap: usize,
) -> Option<(f64, Vec<EdgeChoice>)> {
    let states = (cap + 1) * 2;
    let idx = |c: usize, h: bool| c * 2 + usize::from(h);
    let mut cost = vec![f64::INFINITY; states];
    cost[idx(0, false)] = 0.0;
    // back[e][state] = (previous state, option kind)
    let mut back = vec![vec![(usize::MAX, 0u8); states]; opts.len()];
    for (e, o) in opts.iter().enumerate() {
        let mut next = vec![f64::INFINITY; states];
        for c in 0..=cap {
            for h in [false, true] {
                let cur = cost[idx(c, h)];
                if cur == f64::INFINITY {
                    continue;
                }
                for (kind, &(oc, _)) in o.iter().enumerate() {
                    let (nc, nh) = match kind {
                        0 => (c, h),
                        1 => (c + 1, h),
                        _ => (c + 1, true),
                    };
                    if nc > cap {
                        continue;
                    }
                    let s = idx(nc, nh);
                    if cur + oc < next[s] {
                        next[s] = cur + oc;
                        back[e][s] = (idx(c, h), kind as u8);
                    }
                }
            }
        }
        cost = next;
    }
    let end = (0..=cap)
        .map(|c| idx(c, high))
        .filter(|&s| cost[s] < f64::INFINITY)
        .min_by(|&a, &b| cost[a].total_cmp(&cost[b]))?;
    let total = cost[end];
    let mut choice = Vec::with_capacity(opts.len());
    let mut s = end;
    for e in (0..opts.len()).rev() {
        let (prev, kind) = back[e][s];
        choice.push(opts[e][kind as usize].1);
        s = prev;
    }
    choice.reverse();
    Some((total, choice))
}

/// BGN training problem as a [`ConstraintPair`].
///
/// Layout is type-major: blocks `w1`, `w2`, `x` (each `D × |edges|`, copy
/// major) then `y` (`D × gates`).
#[derive(Debug, Clone)]
pub struct BgnProblem {
    arch: Architecture,
    data: Vec<u64>,
    layout: Arc<Layout>,
    concur: ConcurGroups,
    fan_in_cap: Option<usize>,
}

impl BgnProblem {
    pub fn new(arch: Architecture, data: Vec<u64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::config("data", "dataset is empty"));
        }
        let n = arch.num_outputs();
        if n < 64 && data.iter().any(|&d| d >> n != 0) {
            return Err(Error::config("data", format!("strings longer than {n} bits")));
        }
        let d = data.len();
        let (ne, ng) = (arch.num_edges(), arch.num_gates());
        let layout = Layout::new([("w1", d * ne), ("w2", d * ne), ("x", d * ne), ("y", d * ng)]);
        let mut p = BgnProblem {
            arch,
            data,
            layout,
            concur: ConcurGroups::new(),
            fan_in_cap: None,
        };
        let mut concur = ConcurGroups::new();
        for k in 0..d {
            for node in 0..p.arch.output_start() {
                let ys = (node >= p.arch.num_inputs()).then(|| p.y(k, node));
                let xs = p.arch.out_edges(node).iter().map(|&e| p.x(k, e));
                concur.push(ys.into_iter().chain(xs));
            }
        }
        for e in 0..ne {
            concur.push((0..d).map(|k| p.w1(k, e)));
            concur.push((0..d).map(|k| p.w2(k, e)));
        }
        p.concur = concur;
        Ok(p)
    }

    /// Rejects local configurations with more than `cap` wires into a node.
    pub fn with_fan_in_cap(mut self, cap: Option<usize>) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::config("fan_in_cap", "must be >= 1"));
        }
        self.fan_in_cap = cap;
        Ok(self)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    /// `D`.
    pub fn copies(&self) -> usize {
        self.data.len()
    }

    pub fn w1(&self, k: usize, e: usize) -> usize {
        k * self.arch.num_edges() + e
    }

    pub fn w2(&self, k: usize, e: usize) -> usize {
        (self.copies() + k) * self.arch.num_edges() + e
    }

    pub fn x(&self, k: usize, e: usize) -> usize {
        (2 * self.copies() + k) * self.arch.num_edges() + e
    }

    pub fn y(&self, k: usize, node: usize) -> usize {
        3 * self.copies() * self.arch.num_edges()
            + k * self.arch.num_gates()
            + (node - self.arch.num_inputs())
    }

    /// Exact encoding of `circuit` with latent input `inputs[k]` for copy `k`.
    pub fn encode(&self, circuit: &BooleanCircuit, inputs: &[u64], scales: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.layout.total_dim()];
        for (k, &input) in inputs.iter().enumerate() {
            let vals = circuit.node_values(input);
            for e in 0..self.arch.num_edges() {
                let (p1, p2) = circuit.wires[e].unit_point();
                let (i1, i2, ix) = (self.w1(k, e), self.w2(k, e), self.x(k, e));
                v[i1] = p1 * scales[i1];
                v[i2] = p2 * scales[i2];
                if vals[self.arch.edge(e).0] {
                    v[ix] = scales[ix];
                }
            }
            for node in self.arch.num_inputs()..self.arch.num_nodes() {
                let iy = self.y(k, node);
                if vals[node] {
                    v[iy] = scales[iy];
                }
            }
        }
        v
    }

    /// Latent input producing each data string under `circuit`, if any.
    pub fn latent_inputs(&self, circuit: &BooleanCircuit) -> Option<Vec<u64>> {
        let outputs = circuit.eval_all();
        self.data
            .iter()
            .map(|d| outputs.iter().position(|o| o == d).map(|p| p as u64))
            .collect()
    }

    /// Snaps the copy-averaged wire variables to the nearest wire state.
    pub fn extract_circuit(&self, candidate: &[f64], scales: &[f64]) -> BooleanCircuit {
        let d = self.copies();
        let ne = self.arch.num_edges();
        let wires = (0..ne)
            .map(|e| {
                let g1 = self.concur.group(self.w_group(e));
                let g2 = self.concur.group(self.w_group(e) + 1);
                let u1 = self.concur.latent(self.w_group(e), candidate, scales);
                let u2 = self.concur.latent(self.w_group(e) + 1, candidate, scales);
                let a1 = g1.iter().map(|&c| scales[c] * scales[c]).sum::<f64>() / d as f64;
                let a2 = g2.iter().map(|&c| scales[c] * scales[c]).sum::<f64>() / d as f64;
                let dist = |s: WireState| {
                    let (p1, p2) = s.unit_point();
                    a1 * (u1 - p1).powi(2) + a2 * (u2 - p2).powi(2)
                };
                WireState::ALL
                    .into_iter()
                    .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
                    .unwrap()
            })
            .collect();
        BooleanCircuit::new(self.arch.clone(), wires).expect("wire count matches")
    }

    fn w_group(&self, e: usize) -> usize {
        self.copies() * self.arch.output_start() + 2 * e
    }

    fn edge_vars(&self, x: &[f64], scales: &[f64], k: usize, e: usize) -> EdgeVars {
        let (i1, i2, ix) = (self.w1(k, e), self.w2(k, e), self.x(k, e));
        EdgeVars {
            w1: x[i1],
            w2: x[i2],
            x: x[ix],
            omega: scales[i1],
            sigma: scales[i2],
            theta: scales[ix],
        }
    }
}

impl ConstraintPair for BgnProblem {
    type Solution = BooleanCircuit;

    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn project_a(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        let arch = &self.arch;
        let mut local = Vec::new();
        for k in 0..self.copies() {
            for node in arch.num_inputs()..arch.num_nodes() {
                let range = arch.in_edges(node);
                local.clear();
                local.extend(range.clone().map(|e| self.edge_vars(x, scales, k, e)));
                let iy = self.y(k, node);
                let clamp = arch
                    .is_output(node)
                    .then(|| (self.data[k] >> (node - arch.output_start())) & 1 == 1);
                let Some((choice, high)) =
                    project_gate(&local, x[iy], scales[iy], clamp, self.fan_in_cap)
                else {
                    // clamped true with no way to pass true: keep the clamp
                    for e in range {
                        let ev = self.edge_vars(x, scales, k, e);
                        out[self.w1(k, e)] = 0.0;
                        out[self.w2(k, e)] = 0.0;
                        out[self.x(k, e)] = if ev.x >= 0.5 * ev.theta { ev.theta } else { 0.0 };
                    }
                    out[iy] = scales[iy];
                    continue;
                };
                for (e, c) in range.zip(choice) {
                    let (p1, p2) = c.wire.unit_point();
                    let (i1, i2, ix) = (self.w1(k, e), self.w2(k, e), self.x(k, e));
                    out[i1] = p1 * scales[i1];
                    out[i2] = p2 * scales[i2];
                    out[ix] = if c.source { scales[ix] } else { 0.0 };
                }
                out[iy] = if high { scales[iy] } else { 0.0 };
            }
        }
    }

    fn project_b(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        self.concur.project(x, scales, out);
    }

    fn verify(&self, candidate: &[f64], scales: &[f64]) -> Option<BooleanCircuit> {
        let circuit = self.extract_circuit(candidate, scales);
        circuit.covers(&self.data).then_some(circuit)
    }

    /// `by_type`: `[w1, w2, x, y]`. `by_type_location`: one group per edge and
    /// wire type plus one per gate `y`, shared across copies.
    /// `by_type_location_item`: one group per coordinate.
    fn partition(&self, granularity: Granularity) -> Result<Partition> {
        let (d, ne, ng) = (self.copies(), self.arch.num_edges(), self.arch.num_gates());
        match granularity {
            Granularity::None | Granularity::ByType => Partition::from_blocks(
                &self.layout,
                &[("w1", &["w1"]), ("w2", &["w2"]), ("x", &["x"]), ("y", &["y"])],
            ),
            Granularity::ByTypeLocation => {
                let mut labels = Vec::with_capacity(3 * ne + ng);
                for t in ["w1", "w2", "x"] {
                    labels.extend((0..ne).map(|e| format!("{t}[{e}]")));
                }
                let inputs = self.arch.num_inputs();
                labels.extend((0..ng).map(|g| format!("y[{}]", g + inputs)));
                let mut group_of = Vec::with_capacity(self.layout.total_dim());
                for t in 0..3 {
                    for _ in 0..d {
                        group_of.extend((0..ne).map(|e| (t * ne + e) as u32));
                    }
                }
                for _ in 0..d {
                    group_of.extend((0..ng).map(|g| (3 * ne + g) as u32));
                }
                Partition::from_assignment(labels, group_of)
            }
            Granularity::ByTypeLocationItem => {
                let dim = self.layout.total_dim();
                let labels = (0..dim).map(|c| format!("c{c}")).collect();
                Partition::from_assignment(labels, (0..dim as u32).collect())
            }
        }
    }
}

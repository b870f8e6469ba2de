//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use projfeas::bgn::{Architecture, EdgeChoice, EdgeVars, WireState};
use projfeas::domset::Graph;
use projfeas::sat::SatInstance;
use projfeas::{run, ConstraintPair, RunConfig, RunTrace, Scheme, TunerConfig};

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Nearest satisfying `±s` tuple for one clause by enumeration.
pub fn brute_clause(signs: &[f64], scales: &[f64], x: &[f64]) -> f64 {
    let k = signs.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        let v: Vec<f64> = (0..k)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    scales[i]
                } else {
                    -scales[i]
                }
            })
            .collect();
        if (0..k).any(|i| signs[i] * v[i] > 0.0) {
            best = best.min(sq_dist(&v, x));
        }
    }
    best
}

/// Nearest point of the dominating-set `A` by enumeration over every
/// discrete state (`2^(|E_2| + |V|)`).
pub fn brute_domset(g: &Graph, target: usize, x: &[f64], scales: &[f64]) -> f64 {
    let ne = g.num_directed();
    let nv = g.num_vertices();
    let dim = ne + nv;
    let mut best = f64::INFINITY;
    for mask in 0u64..(1 << dim) {
        let on = |c: usize| mask >> c & 1 == 1;
        if (0..nv).filter(|&i| on(ne + i)).count() > target {
            continue;
        }
        let ok = (0..nv).all(|i| on(ne + i) || g.in_edges(i).iter().any(|&d| on(d)));
        if !ok {
            continue;
        }
        let d: f64 = (0..dim)
            .map(|c| {
                let v = if on(c) { scales[c] } else { 0.0 };
                (x[c] - v).powi(2)
            })
            .sum();
        best = best.min(d);
    }
    best
}

/// Nearest valid configuration of one gate by enumeration over
/// `(3 wire states × 2 source values)^edges × 2`.
pub fn brute_gate(edges: &[EdgeVars], y: f64, eta: f64, clamp: Option<bool>) -> f64 {
    let m = edges.len();
    let mut best = f64::INFINITY;
    for code in 0..6usize.pow(m as u32) {
        let mut c = code;
        let mut cost = 0.0;
        let mut any_true = false;
        for e in edges {
            let (wire, source) = (WireState::ALL[c % 3], (c / 3) % 2 == 1);
            c /= 6;
            let (p1, p2) = wire.unit_point();
            let px = if source { e.theta } else { 0.0 };
            cost +=
                (e.w1 - p1 * e.omega).powi(2) + (e.w2 - p2 * e.sigma).powi(2) + (e.x - px).powi(2);
            any_true |= wire.passes_true(source);
        }
        if clamp.is_some_and(|h| h != any_true) {
            continue;
        }
        let yv = if any_true { eta } else { 0.0 };
        best = best.min(cost + (y - yv).powi(2));
    }
    best
}

/// Cost of a gate configuration, checking it is valid.
pub fn gate_cost(
    edges: &[EdgeVars],
    y: f64,
    eta: f64,
    choice: &[EdgeChoice],
    high: bool,
) -> Option<f64> {
    let any_true = choice.iter().any(|c| c.wire.passes_true(c.source));
    if any_true != high || choice.len() != edges.len() {
        return None;
    }
    let mut cost = (y - if high { eta } else { 0.0 }).powi(2);
    for (e, c) in edges.iter().zip(choice) {
        let (p1, p2) = c.wire.unit_point();
        let px = if c.source { e.theta } else { 0.0 };
        cost += (e.w1 - p1 * e.omega).powi(2) + (e.w2 - p2 * e.sigma).powi(2) + (e.x - px).powi(2);
    }
    Some(cost)
}

pub fn clause_eval(inst: &SatInstance, assignment: &[bool]) -> bool {
    inst.clauses()
        .all(|cl| cl.iter().any(|l| assignment[l.var as usize] == !l.negated))
}

/// Plain DPLL with unit propagation. Returns a satisfying assignment.
pub fn dpll(inst: &SatInstance) -> Option<Vec<bool>> {
    let clauses: Vec<Vec<i32>> = inst
        .clauses()
        .map(|cl| {
            cl.iter()
                .map(|l| (l.var as i32 + 1) * if l.negated { -1 } else { 1 })
                .collect()
        })
        .collect();
    let mut assign = vec![0i8; inst.num_vars() + 1];
    if solve(&clauses, &mut assign) {
        Some(assign[1..].iter().map(|&a| a >= 0).collect())
    } else {
        None
    }
}

fn lit_value(assign: &[i8], lit: i32) -> i8 {
    let v = assign[lit.unsigned_abs() as usize];
    if lit > 0 {
        v
    } else {
        -v
    }
}

fn solve(clauses: &[Vec<i32>], assign: &mut Vec<i8>) -> bool {
    let mut trail = Vec::new();
    loop {
        let mut unit = None;
        for cl in clauses {
            let mut open = None;
            let mut n_open = 0;
            let mut sat = false;
            for &l in cl {
                match lit_value(assign, l) {
                    1 => {
                        sat = true;
                        break;
                    }
                    0 => {
                        n_open += 1;
                        open = Some(l);
                    }
                    _ => {}
                }
            }
            if sat {
                continue;
            }
            if n_open == 0 {
                for v in trail {
                    assign[v] = 0;
                }
                return false;
            }
            if n_open == 1 {
                unit = open;
                break;
            }
        }
        match unit {
            Some(l) => {
                let v = l.unsigned_abs() as usize;
                assign[v] = if l > 0 { 1 } else { -1 };
                trail.push(v);
            }
            None => break,
        }
    }
    // branch on the first open variable of the shortest open clause
    let mut pick = None;
    let mut best_len = usize::MAX;
    for cl in clauses {
        if cl.iter().any(|&l| lit_value(assign, l) == 1) {
            continue;
        }
        let open: Vec<i32> = cl
            .iter()
            .copied()
            .filter(|&l| lit_value(assign, l) == 0)
            .collect();
        if open.len() < best_len {
            best_len = open.len();
            pick = open.first().copied();
        }
    }
    let Some(l) = pick else {
        return true;
    };
    let v = l.unsigned_abs() as usize;
    for val in [if l > 0 { 1 } else { -1 }, if l > 0 { -1 } else { 1 }] {
        assign[v] = val;
        if solve(clauses, assign) {
            return true;
        }
    }
    assign[v] = 0;
    for v in trail {
        assign[v] = 0;
    }
    false
}

/// Squares attacked by a queen, by walking its eight move directions.
pub fn queen_moves(order: usize, square: usize) -> Vec<usize> {
    let (r, c) = ((square / order) as i64, (square % order) as i64);
    let n = order as i64;
    let mut out = Vec::new();
    for (dr, dc) in [
        (0, 1),
        (0, -1),
        (1, 0),
        (-1, 0),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ] {
        let (mut rr, mut cc) = (r + dr, c + dc);
        while (0..n).contains(&rr) && (0..n).contains(&cc) {
            out.push((rr * n + cc) as usize);
            rr += dr;
            cc += dc;
        }
    }
    out
}

/// Whether `set` dominates the order-`order` board, by queen moves.
pub fn queens_dominate(order: usize, set: &[usize]) -> bool {
    let mut covered = vec![false; order * order];
    for &q in set {
        covered[q] = true;
        for s in queen_moves(order, q) {
            covered[s] = true;
        }
    }
    covered.into_iter().all(|c| c)
}

pub fn dominates(g: &Graph, set: &[usize]) -> bool {
    (0..g.num_vertices()).all(|i| {
        set.contains(&i)
            || g.edges().iter().any(|&(u, v)| {
                let (u, v) = (u as usize, v as usize);
                (u == i && set.contains(&v)) || (v == i && set.contains(&u))
            })
    })
}

/// Plain per-input evaluation of a wire assignment.
pub fn eval_circuit(arch: &Architecture, wires: &[WireState], input: u64) -> u64 {
    let mut val = vec![false; arch.num_nodes()];
    for (i, v) in val.iter_mut().enumerate().take(arch.num_inputs()) {
        *v = input >> i & 1 == 1;
    }
    for e in 0..arch.num_edges() {
        let (i, j) = arch.edge(e);
        match wires[e] {
            WireState::Absent => {}
            WireState::Wire => val[j] |= val[i],
            WireState::Negated => val[j] |= !val[i],
        }
    }
    let start = arch.num_nodes() - arch.num_outputs();
    (0..arch.num_outputs()).fold(0, |acc, t| acc | (u64::from(val[start + t]) << t))
}

pub fn covers(arch: &Architecture, wires: &[WireState], data: &[u64]) -> bool {
    let outs: Vec<u64> = (0..1u64 << arch.num_inputs())
        .map(|p| eval_circuit(arch, wires, p))
        .collect();
    data.iter().all(|d| outs.contains(d))
}

/// Seeded trials `0..trials` sharing a master seed.
pub fn run_trials<C: ConstraintPair>(
    scheme: &Scheme,
    cp: &C,
    trials: u64,
    config: &RunConfig,
    tuner: Option<&TunerConfig>,
) -> Vec<RunTrace<C::Solution>> {
    (0..trials)
        .map(|t| run(scheme, cp, &config.clone().with_trial(t), tuner).expect("run succeeds"))
        .collect()
}

/// Largest total variation of `series` over any window of `window`
/// consecutive samples.
pub fn max_window_variation(series: &[f64], window: usize) -> f64 {
    let steps: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if steps.is_empty() {
        return 0.0;
    }
    let w = window.min(steps.len());
    let mut cur: f64 = steps[..w].iter().sum();
    let mut best = cur;
    for i in w..steps.len() {
        cur += steps[i] - steps[i - w];
        best = best.max(cur);
    }
    best
}

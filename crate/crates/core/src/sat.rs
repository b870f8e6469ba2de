//! CNF satisfiability in the divide-and-concur edge-variable space.
//!
//! Every occurrence of variable `v` in clause `c` is an edge `c→v` carrying
//! one real `x_{c→v}`; the literal sign is `n_{c→v} = ±1`. `A` asks every
//! clause to be satisfied by its own `±1` copies, `B` asks all copies of a
//! variable to agree.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::concur::ConcurGroups;
use crate::error::{Error, Result};
use crate::pair::ConstraintPair;
use crate::point::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    /// Zero-based variable index.
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    /// DIMACS literal: `var+1`, negative when negated.
    pub fn from_dimacs(lit: i64) -> Literal {
        Literal {
            var: (lit.unsigned_abs() - 1) as u32,
            negated: lit < 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    /// `n_{c→v}`.
    pub fn sign(self) -> f64 {
        if self.negated {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var as usize] != self.negated
    }
}

/// CNF formula with a flat edge index: clause `c` owns edges
/// `offsets[c]..offsets[c+1]` in literal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatInstance {
    num_vars: usize,
    literals: Vec<Literal>,
    offsets: Vec<usize>,
}

impl SatInstance {
    /// # Errors
    /// Empty clauses, out-of-range variables and repeated variables within a
    /// clause are rejected.
    pub fn new(num_vars: usize, clauses: impl IntoIterator<Item = Vec<Literal>>) -> Result<Self> {
        let mut inst = SatInstance {
            num_vars,
            literals: Vec::new(),
            offsets: vec![0],
        };
        for (c, clause) in clauses.into_iter().enumerate() {
            inst.push_clause(clause)
                .map_err(|reason| Error::config("clauses", format!("clause {c}: {reason}")))?;
        }
        Ok(inst)
    }

    fn push_clause(&mut self, clause: Vec<Literal>) -> Result<(), String> {
        if clause.is_empty() {
            return Err("empty clause".into());
        }
        for (i, lit) in clause.iter().enumerate() {
            if lit.var as usize >= self.num_vars {
                return Err(format!(
                    "variable {} out of range 1..={}",
                    lit.var + 1,
                    self.num_vars
                ));
            }
            if let Some(prev) = clause[..i].iter().find(|p| p.var == lit.var) {
                return Err(if prev.negated == lit.negated {
                    format!("duplicate literal {}", lit.to_dimacs())
                } else {
                    format!("complementary literals on variable {}", lit.var + 1)
                });
            }
        }
        self.literals.extend(clause);
        self.offsets.push(self.literals.len());
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `|E|`.
    pub fn num_edges(&self) -> usize {
        self.literals.len()
    }

    pub fn clause(&self, c: usize) -> &[Literal] {
        &self.literals[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Literal]> {
        (0..self.num_clauses()).map(|c| self.clause(c))
    }

    /// Edge id of position `p` in clause `c`.
    pub fn edge(&self, c: usize, p: usize) -> usize {
        debug_assert!(self.offsets[c] + p < self.offsets[c + 1]);
        self.offsets[c] + p
    }

    pub fn edge_range(&self, c: usize) -> std::ops::Range<usize> {
        self.offsets[c]..self.offsets[c + 1]
    }

    /// Literal carried by edge `e`.
    pub fn edge_literal(&self, e: usize) -> Literal {
        self.literals[e]
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.num_vars
            && self.clauses().all(|cl| cl.iter().any(|l| l.eval(assignment)))
    }
}

/// Parses DIMACS CNF. Clauses may span lines; a `%` line ends the clause
/// section (SATLIB convention).
pub fn parse_dimacs(text: &str) -> Result<SatInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut inst: Option<SatInstance> = None;
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate header"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", v, c] => v.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let (v, c) = parsed
                .ok_or_else(|| Error::parse(line_no, format!("malformed header `{line}`")))?;
            header = Some((v, c));
            inst = Some(SatInstance {
                num_vars: v,
                literals: Vec::with_capacity(3 * c),
                offsets: vec![0],
            });
            continue;
        }
        let Some(inst) = inst.as_mut() else {
            return Err(Error::parse(line_no, "clause before `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid literal `{tok}`")))?;
            if lit == 0 {
                let clause = std::mem::take(&mut current);
                inst.push_clause(clause)
                    .map_err(|reason| Error::parse(line_no, reason))?;
            } else {
                current.push(Literal::from_dimacs(lit));
            }
        }
    }

    let (Some((_, declared)), Some(inst)) = (header, inst) else {
        return Err(Error::parse(last_line, "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(Error::parse(last_line, "unterminated clause"));
    }
    if inst.num_clauses() != declared {
        return Err(Error::parse(
            last_line,
            format!(
                "header declares {declared} clauses, found {}",
                inst.num_clauses()
            ),
        ));
    }
    Ok(inst)
}

/// Canonical DIMACS text: header, then one clause per line.
pub fn emit_dimacs(inst: &SatInstance) -> String {
    let mut out = format!("p cnf {} {}\n", inst.num_vars, inst.num_clauses());
    for clause in inst.clauses() {
        for lit in clause {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// DIMACS-style solution line (`v 1 -2 3 ... 0`).
pub fn solution_line(assignment: &[bool]) -> String {
    let mut out = String::from("v");
    for (i, &val) in assignment.iter().enumerate() {
        let v = i as i64 + 1;
        write!(out, " {}", if val { v } else { -v }).unwrap();
    }
    out.push_str(" 0");
    out
}

/// Uniform random 3-SAT: each clause has three distinct variables, each
/// negated with probability 1/2.
///
/// # Panics
/// If `num_vars < 3`.
pub fn random_3sat(num_vars: usize, num_clauses: usize, seed: u64) -> SatInstance {
    assert!(num_vars >= 3, "random_3sat needs at least 3 variables");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut literals = Vec::with_capacity(3 * num_clauses);
    let mut offsets = Vec::with_capacity(num_clauses + 1);
    offsets.push(0);
    for _ in 0..num_clauses {
        for v in sample(&mut rng, num_vars, 3) {
            literals.push(Literal {
                var: v as u32,
                negated: rng.gen_bool(0.5),
            });
        }
        offsets.push(literals.len());
    }
    SatInstance {
        num_vars,
        literals,
        offsets,
    }
}

/// [`SatInstance`] as a [`ConstraintPair`] over `|E|` edge reals.
///
/// With non-unit scales the discrete copies are `±s_{c→v}`; the cheapest
/// repair of an unsatisfied clause is then the edge maximizing `n s x`.
#[derive(Debug, Clone)]
pub struct SatProblem {
    inst: SatInstance,
    layout: Arc<Layout>,
    signs: Vec<f64>,
    copies: ConcurGroups,
}

impl SatProblem {
    pub fn new(inst: SatInstance) -> Self {
        let mut per_var: Vec<Vec<usize>> = vec![Vec::new(); inst.num_vars];
        for (e, lit) in inst.literals.iter().enumerate() {
            per_var[lit.var as usize].push(e);
        }
        let mut copies = ConcurGroups::new();
        for edges in per_var {
            copies.push(edges);
        }
        SatProblem {
            layout: Layout::flat("x", inst.num_edges()),
            signs: inst.literals.iter().map(|l| l.sign()).collect(),
            inst,
            copies,
        }
    }

    pub fn instance(&self) -> &SatInstance {
        &self.inst
    }

    /// Concur average `x̄_v` of every variable (0 for unused variables).
    pub fn variable_means(&self, x: &[f64], scales: &[f64]) -> Vec<f64> {
        (0..self.copies.len())
            .map(|v| {
                if self.copies.group(v).is_empty() {
                    0.0
                } else {
                    self.copies.latent(v, x, scales)
                }
            })
            .collect()
    }
}

impl ConstraintPair for SatProblem {
    type Solution = Vec<bool>;

    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn project_a(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        for c in 0..self.inst.num_clauses() {
            let range = self.inst.edge_range(c);
            let mut satisfied = false;
            let mut best: Option<(f64, u32, usize)> = None;
            for e in range.clone() {
                let s = scales[e];
                out[e] = if x[e] >= 0.0 { s } else { -s };
                let n = self.signs[e];
                if n * x[e] > 0.0 || (x[e] == 0.0 && n > 0.0) {
                    satisfied = true;
                }
                let gain = n * s * x[e];
                let var = self.inst.literals[e].var;
                let better = match best {
                    None => true,
                    Some((g, v, _)) => gain > g || (gain == g && var < v),
                };
                if better {
                    best = Some((gain, var, e));
                }
            }
            if !satisfied {
                if let Some((_, _, e)) = best {
                    out[e] = self.signs[e] * scales[e];
                }
            }
        }
    }

    fn project_b(&self, x: &[f64], scales: &[f64], out: &mut [f64]) {
        self.copies.project(x, scales, out);
    }

    fn verify(&self, candidate: &[f64], scales: &[f64]) -> Option<Vec<bool>> {
        let assignment: Vec<bool> = self
            .variable_means(candidate, scales)
            .into_iter()
            .map(|m| m >= 0.0)
            .collect();
        self.inst.satisfied_by(&assignment).then_some(assignment)
    }
}

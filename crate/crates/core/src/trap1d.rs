//! One-dimensional model of trapping and escape under `DR_n[δ]`.
//!
//! The finite set is replaced by a single point `a` and the hyperplane by its
//! proximal point `b`, both on a line. The coordinate is measured from `b`
//! with `a` at `-Δ`; in this frame
//!
//! ```text
//! DR_n[δ](x) = γ x + c,   q = (1-δ)²,
//! γ = 1 - [n(1-q) - q(1-q^n)] / [(1+n)(1-q)],
//! c = (1-γ) ((1-δ)/δ) Δ,
//! ```
//!
//! with fixed point `x* = c/(1-γ) = ((1-δ)/δ) Δ` and `DR_1[0](x) = x + Δ`.
//! [`oracle_step`] evaluates the map by explicit reflector composition and is
//! the independent check on the closed forms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pair::ConstraintPair;
use crate::point::Layout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapModel {
    /// Distance `Δ` between the trap point and the hyperplane.
    pub gap: f64,
    /// Number of double reflections `n`.
    pub reflections: usize,
    pub delta: f64,
}

impl TrapModel {
    pub fn new(gap: f64, reflections: usize, delta: f64) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::config("gap", format!("{gap} must be positive")));
        }
        if reflections == 0 {
            return Err(Error::config("n", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::config("delta", format!("{delta} not in [0,1]")));
        }
        Ok(TrapModel {
            gap,
            reflections,
            delta,
        })
    }

    /// Position of the trap point `a`.
    pub fn trap_point(&self) -> f64 {
        -self.gap
    }
}

/// Closed-form slope and offset `(γ, c)` of the 1D map.
///
/// Evaluated as `1-γ = Σ_{r=1..n} (1-q^r) / (1+n)`, algebraically identical
/// to the closed form and free of cancellation at small `δ`.
pub fn gamma_c(model: &TrapModel) -> Result<(f64, f64)> {
    let delta = model.delta;
    if delta == 0.0 {
        return Err(Error::Domain(
            "delta = 0 has no closed form; use oracle_step".into(),
        ));
    }
    let n = model.reflections;
    let ln_q = 2.0 * (-delta).ln_1p();
    let sum: f64 = (1..=n).map(|r| -(r as f64 * ln_q).exp_m1()).sum();
    let one_minus_gamma = sum / (n as f64 + 1.0);
    let gamma = 1.0 - one_minus_gamma;
    let c = one_minus_gamma * ((1.0 - delta) / delta) * model.gap;
    Ok((gamma, c))
}

/// Non-solution fixed point `x* = ((1-δ)/δ) Δ`.
pub fn fixed_point(model: &TrapModel) -> Result<f64> {
    if model.delta == 0.0 {
        return Err(Error::Domain("delta = 0 puts the fixed point at infinity".into()));
    }
    Ok((1.0 - model.delta) / model.delta * model.gap)
}

/// `DR_n[δ](x)` by explicit composition of the relaxed reflectors.
pub fn oracle_step(model: &TrapModel, x: f64) -> f64 {
    let d = model.delta;
    let a = model.trap_point();
    let reflect_a = |v: f64| (2.0 - d) * a - (1.0 - d) * v;
    let reflect_b = |v: f64| (2.0 - d) * 0.0 - (1.0 - d) * v;
    let mut cur = x;
    let mut sum = x;
    for _ in 0..model.reflections {
        cur = reflect_b(reflect_a(cur));
        sum += cur;
    }
    sum / (model.reflections as f64 + 1.0)
}

/// `(γ, c)` read off the oracle by two evaluations. Also valid at `δ = 0`.
pub fn oracle_affine_fit(model: &TrapModel) -> (f64, f64) {
    let c = oracle_step(model, 0.0);
    (oracle_step(model, 1.0) - c, c)
}

/// One row of a `(δ, γ, c, x*)` sweep table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub gap: f64,
    pub delta: f64,
    pub gamma: f64,
    pub c: f64,
    /// `None` at `δ = 0`.
    pub fixed_point: Option<f64>,
}

/// Full grid over `ns × gaps × deltas`, closed forms where defined and the
/// oracle fit at `δ = 0`.
pub fn sweep(ns: &[usize], gaps: &[f64], deltas: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(ns.len() * gaps.len() * deltas.len());
    for &n in ns {
        for &gap in gaps {
            for &delta in deltas {
                let model = TrapModel::new(gap, n, delta)?;
                let (gamma, c) = if delta == 0.0 {
                    oracle_affine_fit(&model)
                } else {
                    gamma_c(&model)?
                };
                rows.push(SweepRow {
                    n,
                    gap,
                    delta,
                    gamma,
                    c,
                    fixed_point: fixed_point(&model).ok(),
                });
            }
        }
    }
    Ok(rows)
}

/// The model as a [`ConstraintPair`]: `A = {-Δ}`, `B = {0}` on the line.
#[derive(Debug, Clone)]
pub struct TrapPair {
    layout: Arc<Layout>,
    gap: f64,
}

impl TrapPair {
    pub fn new(gap: f64) -> Self {
        TrapPair {
            layout: Layout::flat("x", 1),
            gap,
        }
    }
}

impl ConstraintPair for TrapPair {
    type Solution = ();

    fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    fn project_a(&self, _x: &[f64], _scales: &[f64], out: &mut [f64]) {
        out[0] = -self.gap;
    }

    fn project_b(&self, _x: &[f64], _scales: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    /// The two sets never meet.
    fn verify(&self, _candidate: &[f64], _scales: &[f64]) -> Option<()> {
        None
    }
}

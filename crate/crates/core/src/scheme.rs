//! Reflectors and the two Douglas-Rachford iteration schemes.
//!
//! * [`Scheme::RelaxedDr`]: `x ↦ (1-β/2) x + (β/2) R_B(R_A(x))`, `β ∈ ]0,2[`.
//! * [`Scheme::AveragedDoubleReflect`]: `x ↦ 1/(1+n) Σ_{r=0..n} (R_B[δ]∘R_A[δ])^r(x)`
//!   with the relaxed reflector `R[δ](x) = (2-δ) P(x) - (1-δ) x`.
//!
//! `DR_1[0]` (n = 1, δ = 0) coincides with the relaxed scheme at β = 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::ConstraintPair;
use crate::point::PointVector;

/// Iteration rule applied to the search point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Scheme {
    RelaxedDr { beta: f64 },
    AveragedDoubleReflect { n: usize, delta: f64 },
}

impl Scheme {
    pub fn relaxed(beta: f64) -> Result<Self> {
        let s = Scheme::RelaxedDr { beta };
        s.validate()?;
        Ok(s)
    }

    pub fn averaged(n: usize, delta: f64) -> Result<Self> {
        let s = Scheme::AveragedDoubleReflect { n, delta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::RelaxedDr { beta } => {
                if !(beta > 0.0 && beta < 2.0) {
                    return Err(Error::config("beta", format!("{beta} not in ]0,2[")));
                }
            }
            Scheme::AveragedDoubleReflect { n, delta } => {
                if n == 0 {
                    return Err(Error::config("n", "number of double reflections must be >= 1"));
                }
                check_delta(delta)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::RelaxedDr { beta } => write!(f, "RDR[beta={beta}]"),
            Scheme::AveragedDoubleReflect { n, delta } => write!(f, "DR_{n}[{delta}]"),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::config("delta", format!("{delta} not in [0,1]")))
    }
}

fn check_scales(dim: usize, scales: &[f64]) -> Result<()> {
    if scales.len() != dim {
        return Err(Error::LayoutMismatch {
            expected: dim,
            found: scales.len(),
        });
    }
    Ok(())
}

/// `(2-δ) P(x) - (1-δ) x`.
pub fn reflector<F>(project: F, x: &PointVector, delta: f64) -> Result<PointVector>
where
    F: FnOnce(&PointVector) -> Result<PointVector>,
{
    check_delta(delta)?;
    let p = project(x)?;
    p.lincomb(2.0 - delta, x, -(1.0 - delta))
}

/// One step of the relaxed Douglas-Rachford iteration.
pub fn relaxed_dr_step<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    scales: &[f64],
    beta: f64,
) -> Result<PointVector> {
    let scheme = Scheme::relaxed(beta)?;
    step_point(x, cp, scales, &scheme)
}

/// One step of the averaged double-reflector iteration `DR_n[δ]`.
pub fn avg_double_reflect_step<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    scales: &[f64],
    n: usize,
    delta: f64,
) -> Result<PointVector> {
    let scheme = Scheme::averaged(n, delta)?;
    step_point(x, cp, scales, &scheme)
}

/// Applies `scheme` once to `x`.
pub fn step_point<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    scales: &[f64],
    scheme: &Scheme,
) -> Result<PointVector> {
    scheme.validate()?;
    check_layout(x, cp, scales)?;
    let mut ws = Workspace::new(x.dim());
    let mut next = x.clone();
    ws.evaluate(cp, x.values(), scales);
    ws.step(cp, scheme, next.values_mut(), scales);
    Ok(next)
}

/// `P_A(x) - P_B(R_A(x))` with the plain (δ = 0) reflector.
pub fn constraint_residual<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    scales: &[f64],
) -> Result<PointVector> {
    check_layout(x, cp, scales)?;
    let mut ws = Workspace::new(x.dim());
    ws.evaluate(cp, x.values(), scales);
    let mut r = PointVector::zeros(x.layout().clone());
    ws.residual_into(r.values_mut());
    Ok(r)
}

/// Constraint error `|P_A(x) - P_B(R_A(x))|`.
pub fn constraint_error<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    scales: &[f64],
) -> Result<f64> {
    Ok(constraint_residual(x, cp, scales)?.norm())
}

fn check_layout<C: ConstraintPair + ?Sized>(x: &PointVector, cp: &C, scales: &[f64]) -> Result<()> {
    if x.layout().as_ref() != cp.layout().as_ref() {
        return Err(Error::LayoutMismatch {
            expected: cp.dim(),
            found: x.dim(),
        });
    }
    check_scales(x.dim(), scales)
}

/// Scratch buffers for allocation-free iteration.
///
/// [`Workspace::evaluate`] caches `P_A(x)`, `R_A(x)` and `P_B(R_A(x))` for the
/// current point; [`Workspace::step`] reuses them, so it must follow an
/// `evaluate` on the same `x` and scales.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub(crate) pa: Vec<f64>,
    ra: Vec<f64>,
    pub(crate) pbra: Vec<f64>,
    cur: Vec<f64>,
    refl: Vec<f64>,
    proj: Vec<f64>,
    acc: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        Workspace {
            pa: vec![0.0; dim],
            ra: vec![0.0; dim],
            pbra: vec![0.0; dim],
            cur: vec![0.0; dim],
            refl: vec![0.0; dim],
            proj: vec![0.0; dim],
            acc: vec![0.0; dim],
        }
    }

    pub(crate) fn evaluate<C: ConstraintPair + ?Sized>(&mut self, cp: &C, x: &[f64], scales: &[f64]) {
        cp.project_a(x, scales, &mut self.pa);
        for ((r, &p), &xi) in self.ra.iter_mut().zip(&self.pa).zip(x) {
            *r = 2.0 * p - xi;
        }
        cp.project_b(&self.ra, scales, &mut self.pbra);
    }

    pub(crate) fn residual(&self) -> impl Iterator<Item = f64> + '_ {
        self.pa.iter().zip(&self.pbra).map(|(a, b)| a - b)
    }

    pub(crate) fn residual_into(&self, out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(self.residual()) {
            *o = r;
        }
    }

    pub(crate) fn step<C: ConstraintPair + ?Sized>(
        &mut self,
        cp: &C,
        scheme: &Scheme,
        x: &mut [f64],
        scales: &[f64],
    ) {
        match *scheme {
            Scheme::RelaxedDr { beta } => {
                let keep = 1.0 - beta / 2.0;
                let half = beta / 2.0;
                for ((xi, &pb), &ra) in x.iter_mut().zip(&self.pbra).zip(&self.ra) {
                    let rbra = 2.0 * pb - ra;
                    *xi = keep * *xi + half * rbra;
                }
            }
            Scheme::AveragedDoubleReflect { n, delta } => {
                let (a, b) = (2.0 - delta, 1.0 - delta);
                self.acc.copy_from_slice(x);
                self.cur.copy_from_slice(x);
                for r in 0..n {
                    if r > 0 {
                        cp.project_a(&self.cur, scales, &mut self.proj);
                    } else {
                        self.proj.copy_from_slice(&self.pa);
                    }
                    for ((q, &p), &c) in self.refl.iter_mut().zip(&self.proj).zip(&self.cur) {
                        *q = a * p - b * c;
                    }
                    cp.project_b(&self.refl, scales, &mut self.proj);
                    for (((c, acc), &p), &q) in self
                        .cur
                        .iter_mut()
                        .zip(self.acc.iter_mut())
                        .zip(&self.proj)
                        .zip(&self.refl)
                    {
                        *c = a * p - b * q;
                        *acc += *c;
                    }
                }
                let inv = 1.0 / (n as f64 + 1.0);
                for (xi, &acc) in x.iter_mut().zip(&self.acc) {
                    *xi = acc * inv;
                }
            }
        }
    }
}

//! The two-constraint abstraction every problem encoding implements.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::Granularity;
use crate::point::{Layout, Partition, PointVector};

/// A feasibility problem posed as the intersection of two constraint sets.
///
/// `A` is the discrete/combinatorial set and `B` the linear (averaging) set.
/// Both projections are pure functions of the input point and the current
/// per-coordinate metric scales. Scales are absorbed into the discrete target
/// values and averaging weights, so the ambient distance is always Euclidean.
pub trait ConstraintPair: Sync {
    /// Exact discrete solution recovered by [`ConstraintPair::verify`].
    type Solution: Clone + Send + std::fmt::Debug;

    fn layout(&self) -> &Arc<Layout>;

    fn project_a(&self, x: &[f64], scales: &[f64], out: &mut [f64]);

    fn project_b(&self, x: &[f64], scales: &[f64], out: &mut [f64]);

    /// Extracts a discrete candidate from `candidate` and returns it iff it
    /// satisfies the problem's exact combinatorial constraints.
    fn verify(&self, candidate: &[f64], scales: &[f64]) -> Option<Self::Solution>;

    /// Grouping of coordinates into metric groups at `granularity`.
    ///
    /// The default treats every coordinate as one variable type.
    fn partition(&self, granularity: Granularity) -> Result<Partition> {
        match granularity {
            Granularity::None | Granularity::ByType => {
                Partition::single("x", self.layout().total_dim())
            }
            other => Err(Error::UnsupportedGranularity(other.name())),
        }
    }

    fn dim(&self) -> usize {
        self.layout().total_dim()
    }

    fn project_a_point(&self, x: &PointVector, scales: &[f64]) -> Result<PointVector> {
        self.apply(x, scales, Self::project_a)
    }

    fn project_b_point(&self, x: &PointVector, scales: &[f64]) -> Result<PointVector> {
        self.apply(x, scales, Self::project_b)
    }

    #[doc(hidden)]
    fn apply(
        &self,
        x: &PointVector,
        scales: &[f64],
        f: fn(&Self, &[f64], &[f64], &mut [f64]),
    ) -> Result<PointVector> {
        let layout = self.layout();
        if x.layout().as_ref() != layout.as_ref() {
            return Err(Error::LayoutMismatch {
                expected: layout.total_dim(),
                found: x.dim(),
            });
        }
        if scales.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch {
                expected: layout.total_dim(),
                found: scales.len(),
            });
        }
        let mut out = PointVector::zeros(layout.clone());
        f(self, x.values(), scales, out.values_mut());
        Ok(out)
    }
}

/// All-ones scales: the unweighted metric.
pub fn unit_scales(dim: usize) -> Vec<f64> {
    vec![1.0; dim]
}

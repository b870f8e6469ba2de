//! Iterative projection solvers for nonconvex feasibility problems.
//!
//! A problem is the intersection of a discrete set `A` and an averaging set
//! `B` ([`ConstraintPair`]). [`run`] iterates a [`Scheme`] under a tunable
//! per-group metric ([`MetricState`]) until a verified solution appears or the
//! iteration cap is reached.

pub mod bgn;
pub mod concur;
pub mod diagnostics;
pub mod domset;
pub mod error;
pub mod metric;
pub mod pair;
pub mod point;
pub mod run;
pub mod sat;
pub mod scheme;
pub mod trap1d;

pub use error::{Error, Result};
pub use metric::{Granularity, MetricState, TunerConfig, TypedErrors, UpdateMode};
pub use pair::{unit_scales, ConstraintPair};
pub use point::{Layout, Partition, PointVector};
pub use run::{run, Outcome, RunConfig, RunTrace, TraceOptions};
pub use scheme::Scheme;

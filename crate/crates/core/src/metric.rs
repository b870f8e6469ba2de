//! Adaptive tuning of metric parameters from per-group constraint errors.
//!
//! Each metric group `i` owns a positive scale `η_i`. Every iteration the
//! normalized rms error of the group is
//!
//! ```text
//! ε_i = (1/η_i) sqrt(|P_A(x)_i - P_B(R_A(x))_i|² / l_i),   ε = sqrt(Σ ε_i² / k)
//! ```
//!
//! and the scales move towards equalizing the errors:
//!
//! * mean-relative: `η_i ← η_i (1 + α (ε_i/ε - 1))`
//! * first-anchored: `η_0 = 1`, `η_i ← η_i (1 + α (ε_i/ε_0 - 1))` for `i > 0`.
//!
//! For `0 ≤ α < 1` each multiplier is at least `1 - α`, so scales stay positive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::ConstraintPair;
use crate::point::{Partition, PointVector};
use crate::scheme::constraint_residual;

/// How finely metric parameters are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Scales fixed at their initial values.
    None,
    ByType,
    ByTypeLocation,
    ByTypeLocationItem,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::None,
        Granularity::ByType,
        Granularity::ByTypeLocation,
        Granularity::ByTypeLocationItem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Granularity::None => "none",
            Granularity::ByType => "by_type",
            Granularity::ByTypeLocation => "by_type_location",
            Granularity::ByTypeLocationItem => "by_type_location_item",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::config("granularity", format!("unknown value `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    #[default]
    MeanRelative,
    FirstAnchored,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_relative" => Ok(UpdateMode::MeanRelative),
            "first_anchored" => Ok(UpdateMode::FirstAnchored),
            _ => Err(Error::config("mode", format!("unknown value `{s}`"))),
        }
    }
}

/// Parameters of the adaptive tuner attached to a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    pub granularity: Granularity,
    pub alpha: f64,
    #[serde(default)]
    pub mode: UpdateMode,
    /// Apply the update every `cadence` iterations.
    #[serde(default = "one")]
    pub cadence: usize,
    /// Initial value of every metric parameter.
    #[serde(default = "unit")]
    pub initial: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl TunerConfig {
    pub fn new(granularity: Granularity, alpha: f64) -> Self {
        TunerConfig {
            granularity,
            alpha,
            mode: UpdateMode::MeanRelative,
            cadence: 1,
            initial: 1.0,
        }
    }

    pub fn with_mode(mut self, mode: UpdateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", format!("{} not in [0,1)", self.alpha)));
        }
        if self.cadence == 0 {
            return Err(Error::config("cadence", "must be >= 1"));
        }
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(Error::config("initial", "metric parameters must be positive"));
        }
        Ok(())
    }
}

/// Per-group normalized rms errors and their rms aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedErrors {
    pub per_group: Vec<f64>,
    pub aggregate: f64,
}

impl TypedErrors {
    /// Computes group errors from the residual `P_A(x) - P_B(R_A(x))`.
    ///
    /// Each coordinate is normalized by its own scale, which equals the group
    /// parameter whenever `partition` is the tuner's partition.
    pub fn from_residual(
        residual: impl IntoIterator<Item = f64>,
        partition: &Partition,
        scales: &[f64],
    ) -> Self {
        let mut sums = vec![0.0; partition.num_groups()];
        for (c, r) in residual.into_iter().enumerate() {
            let v = r / scales[c];
            sums[partition.group_of(c)] += v * v;
        }
        let per_group: Vec<f64> = sums
            .iter()
            .zip(partition.sizes())
            .map(|(s, &l)| (s / l as f64).sqrt())
            .collect();
        let k = per_group.len() as f64;
        let aggregate = (per_group.iter().map(|e| e * e).sum::<f64>() / k).sqrt();
        TypedErrors {
            per_group,
            aggregate,
        }
    }
}

/// Result of one call to [`MetricState::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Applied,
    /// Reference error was zero (or tuning disabled); nothing changed.
    Skipped,
}

/// Current metric parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricState {
    granularity: Granularity,
    partition: Partition,
    params: Vec<f64>,
    alpha: f64,
    mode: UpdateMode,
    cadence: usize,
}

impl MetricState {
    /// `partition` must be the problem's partition at `config.granularity`
    /// (its by-type partition when the granularity is `None`).
    pub fn new(partition: Partition, config: &TunerConfig) -> Result<Self> {
        config.validate()?;
        let mut params = vec![config.initial; partition.num_groups()];
        if config.mode == UpdateMode::FirstAnchored && config.granularity != Granularity::None {
            params[0] = 1.0;
        }
        Ok(MetricState {
            granularity: config.granularity,
            partition,
            params,
            alpha: config.alpha,
            mode: config.mode,
            cadence: config.cadence,
        })
    }

    /// Fixed unit metric over `partition`.
    pub fn fixed(partition: Partition) -> Self {
        let params = vec![1.0; partition.num_groups()];
        MetricState {
            granularity: Granularity::None,
            partition,
            params,
            alpha: 0.0,
            mode: UpdateMode::MeanRelative,
            cadence: 1,
        }
    }

    /// Builds the state for `cp`, choosing the right partition.
    pub fn for_problem<C: ConstraintPair + ?Sized>(cp: &C, config: &TunerConfig) -> Result<Self> {
        let granularity = match config.granularity {
            Granularity::None => Granularity::ByType,
            g => g,
        };
        let partition = cp.partition(granularity)?;
        MetricState::new(partition, config)
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> UpdateMode {
        self.mode
    }

    pub fn cadence(&self) -> usize {
        self.cadence
    }

    /// Number of parameters the tuner may change.
    pub fn tunable_count(&self) -> usize {
        match (self.granularity, self.mode) {
            (Granularity::None, _) => 0,
            (_, UpdateMode::MeanRelative) => self.params.len(),
            (_, UpdateMode::FirstAnchored) => self.params.len() - 1,
        }
    }

    /// Per-coordinate scales implied by the current parameters.
    pub fn scales(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.partition.dim()];
        self.write_scales(&mut s);
        s
    }

    pub fn write_scales(&self, out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(self.partition.assignment()) {
            *o = self.params[g as usize];
        }
    }

    /// Applies one metric update from errors computed on this state's partition.
    pub fn update(&mut self, errors: &TypedErrors) -> UpdateOutcome {
        assert_eq!(errors.per_group.len(), self.params.len(), "error grouping mismatch");
        if self.granularity == Granularity::None || self.alpha == 0.0 {
            return UpdateOutcome::Skipped;
        }
        let alpha = self.alpha;
        match self.mode {
            UpdateMode::MeanRelative => {
                let eps = errors.aggregate;
                if !(eps > 0.0) {
                    return UpdateOutcome::Skipped;
                }
                for (eta, &e) in self.params.iter_mut().zip(&errors.per_group) {
                    *eta *= 1.0 + alpha * (e / eps - 1.0);
                }
            }
            UpdateMode::FirstAnchored => {
                let eps0 = errors.per_group[0];
                if !(eps0 > 0.0) {
                    return UpdateOutcome::Skipped;
                }
                self.params[0] = 1.0;
                for (eta, &e) in self.params.iter_mut().zip(&errors.per_group).skip(1) {
                    *eta *= 1.0 + alpha * (e / eps0 - 1.0);
                }
            }
        }
        assert!(
            self.params.iter().all(|&p| p > 0.0 && p.is_finite()),
            "metric parameters must stay positive"
        );
        UpdateOutcome::Applied
    }
}

/// Normalized errors of `x` grouped by the state's partition.
pub fn typed_errors<C: ConstraintPair + ?Sized>(
    x: &PointVector,
    cp: &C,
    state: &MetricState,
) -> Result<TypedErrors> {
    let scales = state.scales();
    let r = constraint_residual(x, cp, &scales)?;
    Ok(TypedErrors::from_residual(
        r.values().iter().copied(),
        state.partition(),
        &scales,
    ))
}

//! Seeded run loop with solution detection and trace capture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::TraceMatrix;
use crate::error::{Error, Result};
use crate::metric::{Granularity, MetricState, TunerConfig, TypedErrors, UpdateOutcome};
use crate::pair::ConstraintPair;
use crate::point::Partition;
use crate::scheme::{Scheme, Workspace};

/// What to record while iterating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Sample every `stride` iterations (iteration 0 included).
    pub stride: usize,
    /// Total and per-type constraint errors.
    pub errors: bool,
    /// Per-type metric values (mean scale of the type's coordinates).
    pub metric: bool,
    /// Iterate snapshots for trajectory PCA.
    pub iterates: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            stride: 10,
            errors: true,
            metric: true,
            iterates: false,
        }
    }
}

impl TraceOptions {
    /// Record nothing but the outcome.
    pub fn none() -> Self {
        TraceOptions {
            stride: 1,
            errors: false,
            metric: false,
            iterates: false,
        }
    }

    fn any(&self) -> bool {
        self.errors || self.metric || self.iterates
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub max_iterations: usize,
    /// Master seed shared by all trials of an experiment.
    pub seed: u64,
    /// Trial index; selects the RNG stream.
    pub trial: u64,
    pub init_range: (f64, f64),
    pub error_tolerance: f64,
    pub trace: TraceOptions,
}

impl RunConfig {
    pub fn new(max_iterations: usize, seed: u64) -> Self {
        RunConfig {
            max_iterations,
            seed,
            trial: 0,
            init_range: (0.0, 1.0),
            error_tolerance: 1e-8,
            trace: TraceOptions::default(),
        }
    }

    pub fn with_trial(mut self, trial: u64) -> Self {
        self.trial = trial;
        self
    }

    pub fn with_trace(mut self, trace: TraceOptions) -> Self {
        self.trace = trace;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be >= 1"));
        }
        let (lo, hi) = self.init_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::config("init_range", format!("[{lo}, {hi}] is empty")));
        }
        if self.trace.stride == 0 {
            return Err(Error::config("stride", "must be >= 1"));
        }
        Ok(())
    }
}

/// RNG stream for one trial. Depends only on `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The initial iterate of a trial: every coordinate uniform in `init_range`.
pub fn initial_point(dim: usize, config: &RunConfig) -> Vec<f64> {
    let mut rng = trial_rng(config.seed, config.trial);
    let (lo, hi) = config.init_range;
    (0..dim).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect()
}

/// FNV-1a over the bit patterns of `values`.
pub fn hash_values(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Solved { iteration: usize },
    Capped,
}

impl Outcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, Outcome::Solved { .. })
    }
}

/// Sampled time series of one run, stored column-wise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub iterations: Vec<usize>,
    /// Unnormalized constraint error `|P_A(x) - P_B(R_A(x))|`.
    pub error: Vec<f64>,
    /// Normalized rms error over the variable types, `sqrt(Σ ε_i² / k)`.
    pub aggregate: Vec<f64>,
    pub type_labels: Vec<String>,
    /// Row-major `rows × type_labels.len()`.
    pub typed_errors: Vec<f64>,
    /// Row-major `rows × type_labels.len()`.
    pub metric: Vec<f64>,
}

impl Series {
    pub fn rows(&self) -> usize {
        self.iterations.len()
    }

    pub fn typed_row(&self, row: usize) -> &[f64] {
        let k = self.type_labels.len();
        &self.typed_errors[row * k..(row + 1) * k]
    }

    pub fn metric_row(&self, row: usize) -> &[f64] {
        let k = self.type_labels.len();
        &self.metric[row * k..(row + 1) * k]
    }

    /// Time series of one metric column.
    pub fn metric_column(&self, col: usize) -> Vec<f64> {
        let k = self.type_labels.len();
        self.metric.iter().skip(col).step_by(k).copied().collect()
    }
}

/// Everything recorded about one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<S> {
    pub scheme: Scheme,
    pub trial: u64,
    pub outcome: Outcome,
    pub solution: Option<S>,
    /// Scheme steps applied before stopping.
    pub iterations: usize,
    pub final_error: f64,
    /// First iteration whose constraint error fell below the tolerance.
    pub tolerance_reached_at: Option<usize>,
    pub init_hash: u64,
    pub metric_updates: usize,
    pub final_params: Vec<f64>,
    pub series: Series,
    pub snapshots: Option<TraceMatrix>,
}

impl<S> RunTrace<S> {
    pub fn solved(&self) -> bool {
        self.outcome.is_solved()
    }
}

struct Recorder<'a> {
    opts: &'a TraceOptions,
    types: Partition,
    series: Series,
    snapshots: Option<TraceMatrix>,
    last: Option<usize>,
}

impl<'a> Recorder<'a> {
    fn new(opts: &'a TraceOptions, types: Partition, dim: usize) -> Self {
        let series = Series {
            type_labels: types.labels().to_vec(),
            ..Series::default()
        };
        Recorder {
            opts,
            types,
            series,
            snapshots: opts.iterates.then(|| TraceMatrix::new(dim, opts.stride)),
            last: None,
        }
    }

    fn record(&mut self, t: usize, ws: &Workspace, err: f64, x: &[f64], scales: &[f64]) {
        if !self.opts.any() || self.last == Some(t) {
            return;
        }
        self.last = Some(t);
        self.series.iterations.push(t);
        if self.opts.errors {
            self.series.error.push(err);
            let typed = TypedErrors::from_residual(ws.residual(), &self.types, scales);
            self.series.aggregate.push(typed.aggregate);
            self.series.typed_errors.extend(typed.per_group);
        }
        if self.opts.metric {
            let mut sums = vec![0.0; self.types.num_groups()];
            for (c, &s) in scales.iter().enumerate() {
                sums[self.types.group_of(c)] += s;
            }
            for (s, &l) in sums.iter().zip(self.types.sizes()) {
                self.series.metric.push(s / l as f64);
            }
        }
        if let Some(m) = self.snapshots.as_mut() {
            m.push(t, x);
        }
    }
}

/// Runs one seeded trial of `scheme` on `cp`.
///
/// Iteration `t` evaluates the constraint error at `x_t`, checks the concur
/// candidate `P_B(R_A(x_t))` with [`ConstraintPair::verify`], then steps to
/// `x_{t+1}` and finally lets the tuner update the metric from the errors of
/// `x_t`. The run stops at the first verified candidate or after
/// `max_iterations` steps.
pub fn run<C: ConstraintPair + ?Sized>(
    scheme: &Scheme,
    cp: &C,
    config: &RunConfig,
    tuner: Option<&TunerConfig>,
) -> Result<RunTrace<C::Solution>> {
    scheme.validate()?;
    config.validate()?;
    let dim = cp.dim();
    let types = cp.partition(Granularity::ByType)?;
    let mut state = match tuner {
        Some(t) => MetricState::for_problem(cp, t)?,
        None => MetricState::fixed(types.clone()),
    };
    let tuning = state.tunable_count() > 0 && state.alpha() > 0.0;
    let cadence = state.cadence();
    let mut scales = state.scales();

    let mut x = initial_point(dim, config);
    let init_hash = hash_values(&x);
    let mut ws = Workspace::new(dim);
    let mut rec = Recorder::new(&config.trace, types, dim);
    let stride = config.trace.stride;

    let mut tolerance_reached_at = None;
    let mut metric_updates = 0;
    let mut t = 0;
    let (outcome, solution, final_error) = loop {
        ws.evaluate(cp, &x, &scales);
        let err = ws.residual().map(|r| r * r).sum::<f64>().sqrt();
        if !err.is_finite() {
            return Err(Error::NonFinite { iteration: t });
        }
        if t % stride == 0 {
            rec.record(t, &ws, err, &x, &scales);
        }
        if tolerance_reached_at.is_none() && err < config.error_tolerance {
            tolerance_reached_at = Some(t);
        }
        if let Some(sol) = cp.verify(&ws.pbra, &scales) {
            rec.record(t, &ws, err, &x, &scales);
            break (Outcome::Solved { iteration: t }, Some(sol), err);
        }
        if t == config.max_iterations {
            rec.record(t, &ws, err, &x, &scales);
            break (Outcome::Capped, None, err);
        }
        ws.step(cp, scheme, &mut x, &scales);
        t += 1;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { iteration: t });
        }
        if tuning && t % cadence == 0 {
            let errors = TypedErrors::from_residual(ws.residual(), state.partition(), &scales);
            if state.update(&errors) == UpdateOutcome::Applied {
                state.write_scales(&mut scales);
                metric_updates += 1;
            }
        }
    };

    Ok(RunTrace {
        scheme: *scheme,
        trial: config.trial,
        outcome,
        solution,
        iterations: t,
        final_error,
        tolerance_reached_at,
        init_hash,
        metric_updates,
        final_params: state.params().to_vec(),
        series: rec.series,
        snapshots: rec.snapshots,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::point::Layout;

    /// Two lines through the origin in the plane; solutions only at 0.
    struct Lines {
        layout: Arc<Layout>,
    }

    impl Lines {
        fn new() -> Self {
            Lines {
                layout: Layout::flat("p", 2),
            }
        }
    }

    fn project_line(x: &[f64], dir: (f64, f64), out: &mut [f64]) {
        let n = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        let (ux, uy) = (dir.0 / n, dir.1 / n);
        let t = x[0] * ux + x[1] * uy;
        out[0] = t * ux;
        out[1] = t * uy;
    }

    impl ConstraintPair for Lines {
        type Solution = [f64; 2];
        fn layout(&self) -> &Arc<Layout> {
            &self.layout
        }
        fn project_a(&self, x: &[f64], _s: &[f64], out: &mut [f64]) {
            project_line(x, (1.0, 0.5), out);
        }
        fn project_b(&self, x: &[f64], _s: &[f64], out: &mut [f64]) {
            project_line(x, (1.0, -2.0), out);
        }
        fn verify(&self, c: &[f64], _s: &[f64]) -> Option<[f64; 2]> {
            (c[0].hypot(c[1]) < 1e-9).then(|| [c[0], c[1]])
        }
    }

    #[test]
    fn convex_lines_converge() {
        let cp = Lines::new();
        let scheme = Scheme::relaxed(0.5).unwrap();
        let trace = run(&scheme, &cp, &RunConfig::new(1000, 7), None).unwrap();
        assert!(trace.solved());
        assert!(trace.iterations <= 1000);
        assert!(trace.final_error < 1e-8);
        assert!(trace.tolerance_reached_at.is_some());
    }

    #[test]
    fn runs_are_deterministic() {
        let cp = Lines::new();
        let scheme = Scheme::averaged(2, 0.3).unwrap();
        let cfg = RunConfig::new(50, 99).with_trial(3).with_trace(TraceOptions {
            stride: 1,
            iterates: true,
            ..TraceOptions::default()
        });
        let a = run(&scheme, &cp, &cfg, None).unwrap();
        let b = run(&scheme, &cp, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trial_streams_differ_and_repeat() {
        let cfg = RunConfig::new(1, 5);
        let x0 = initial_point(16, &cfg);
        let x1 = initial_point(16, &cfg.clone().with_trial(1));
        assert_ne!(x0, x1);
        assert_eq!(x0, initial_point(16, &cfg));
        assert!(x0.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn trace_rows_bounded_by_stride() {
        let cp = Lines::new();
        let scheme = Scheme::relaxed(0.1).unwrap();
        let mut cfg = RunConfig::new(95, 1);
        cfg.trace.stride = 10;
        let trace = run(&scheme, &cp, &cfg, None).unwrap();
        assert!(trace.series.rows() <= 95 / 10 + 2);
        assert_eq!(trace.series.iterations[0], 0);
        assert_eq!(*trace.series.iterations.last().unwrap(), trace.iterations);
    }

    #[test]
    fn invalid_config() {
        let cp = Lines::new();
        let scheme = Scheme::relaxed(0.5).unwrap();
        assert!(run(&scheme, &cp, &RunConfig::new(0, 1), None).is_err());
        let mut cfg = RunConfig::new(10, 1);
        cfg.init_range = (1.0, 1.0);
        assert!(run(&scheme, &cp, &cfg, None).is_err());
    }

    /// A pair whose B projection blows up.
    struct Divergent {
        layout: Arc<Layout>,
    }

    impl ConstraintPair for Divergent {
        type Solution = ();
        fn layout(&self) -> &Arc<Layout> {
            &self.layout
        }
        fn project_a(&self, x: &[f64], _s: &[f64], out: &mut [f64]) {
            out.copy_from_slice(x);
        }
        fn project_b(&self, x: &[f64], _s: &[f64], out: &mut [f64]) {
            for (o, v) in out.iter_mut().zip(x) {
                *o = v * 1e200 + 1.0;
            }
        }
        fn verify(&self, _c: &[f64], _s: &[f64]) -> Option<()> {
            None
        }
    }

    #[test]
    fn non_finite_iterate_aborts() {
        let cp = Divergent {
            layout: Layout::flat("x", 3),
        };
        let scheme = Scheme::relaxed(1.0).unwrap();
        let err = run(&scheme, &cp, &RunConfig::new(100, 1), None).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }
}

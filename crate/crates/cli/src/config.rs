//! Experiment configuration files (TOML).
//!
//! ```toml
//! [problem]
//! kind = "domset"
//! queens = 12
//! target = 6
//!
//! [scheme]
//! variant = "relaxed_dr"
//! beta = 0.5
//!
//! [tuner]
//! granularity = "by_type"
//! alpha = [0.0, 1e-5, 1e-4, 1e-3]
//! mode = "first_anchored"
//!
//! [run]
//! trials = 100
//! max_iterations = 1_000_000
//! seed = 1
//! ```
//!
//! Any scheme or tuner number may be given as a list; the experiment runs
//! the full cartesian grid.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use projfeas::{Granularity, UpdateMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T> From<T> for OneOrMany<T> {
    fn from(v: T) -> Self {
        OneOrMany::One(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sat,
    Domset,
    Bgn,
    Trap1d,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sat => "sat",
            ProblemKind::Domset => "domset",
            ProblemKind::Bgn => "bgn",
            ProblemKind::Trap1d => "trap1d",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: Option<ProblemKind>,

    /// sat: DIMACS file.
    pub cnf: Option<PathBuf>,
    /// sat: random instance `[vars, clauses]` with `instance_seed`.
    pub random: Option<[usize; 2]>,
    pub instance_seed: Option<u64>,

    /// domset: queens' graph order, or an edge-list file.
    pub queens: Option<usize>,
    pub graph: Option<PathBuf>,
    pub target: Option<usize>,

    /// bgn: layer sizes, and either a dataset file or a ground-truth seed.
    pub layers: Option<Vec<usize>>,
    pub data: Option<PathBuf>,
    pub circuit_seed: Option<u64>,
    pub fan_in_cap: Option<usize>,

    /// trap1d grid.
    pub n: Option<OneOrMany<usize>>,
    pub gap: Option<OneOrMany<f64>>,
    pub delta: Option<OneOrMany<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    RelaxedDr,
    AveragedDoubleReflect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub beta: Option<OneOrMany<f64>>,
    pub n: Option<OneOrMany<usize>>,
    pub delta: Option<OneOrMany<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunerSection {
    pub granularity: OneOrMany<Granularity>,
    #[serde(default = "zero_alpha")]
    pub alpha: OneOrMany<f64>,
    #[serde(default)]
    pub mode: UpdateMode,
    #[serde(default = "one")]
    pub cadence: usize,
}

fn zero_alpha() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_cap")]
    pub max_iterations: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Write per-trial series and metadata.
    #[serde(default)]
    pub trace: bool,
    /// Also snapshot iterates and write their 2D PCA.
    #[serde(default)]
    pub iterates: bool,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

fn default_trials() -> u64 {
    10
}

fn default_cap() -> usize {
    10_000
}

fn one_u64() -> u64 {
    1
}

fn default_stride() -> usize {
    10
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            trials: default_trials(),
            max_iterations: default_cap(),
            seed: 1,
            stride: default_stride(),
            trace: false,
            iterates: false,
            out: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: ProblemConfig,
    pub scheme: Option<SchemeConfig>,
    pub tuner: Option<TunerSection>,
    #[serde(default)]
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes input file paths relative to the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.problem.cnf, &mut self.problem.graph, &mut self.problem.data]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Checks the problem kind against the subcommand and fills defaults.
    pub fn for_kind(mut self, kind: ProblemKind) -> Result<Self> {
        match self.problem.kind {
            Some(k) if k != kind => bail!(
                "problem.kind: config is for `{}` but the `{}` subcommand was used",
                k.name(),
                kind.name()
            ),
            _ => self.problem.kind = Some(kind),
        }
        if self.scheme.is_none() {
            self.scheme = Some(default_scheme(kind));
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.trials == 0 {
            bail!("run.trials: must be >= 1");
        }
        if self.run.max_iterations == 0 {
            bail!("run.max_iterations: must be >= 1");
        }
        if self.run.stride == 0 {
            bail!("run.stride: must be >= 1");
        }
        if let Some(s) = &self.scheme {
            let empty = |v: &Option<OneOrMany<f64>>| matches!(v, Some(OneOrMany::Many(x)) if x.is_empty());
            if empty(&s.beta) || empty(&s.delta) || matches!(&s.n, Some(OneOrMany::Many(x)) if x.is_empty()) {
                bail!("scheme: parameter grids must be nonempty");
            }
        }
        if let Some(t) = &self.tuner {
            if t.granularity.values().is_empty() || t.alpha.values().is_empty() {
                bail!("tuner: grids must be nonempty");
            }
        }
        Ok(())
    }
}

/// β = 0.5 for domset, β = 0.8 for BGN, `DR_3[0.005]` for SAT.
pub fn default_scheme(kind: ProblemKind) -> SchemeConfig {
    match kind {
        ProblemKind::Sat | ProblemKind::Trap1d => SchemeConfig {
            variant: Variant::AveragedDoubleReflect,
            beta: None,
            n: Some(3.into()),
            delta: Some(0.005.into()),
        },
        ProblemKind::Domset => SchemeConfig {
            variant: Variant::RelaxedDr,
            beta: Some(0.5.into()),
            n: None,
            delta: None,
        },
        ProblemKind::Bgn => SchemeConfig {
            variant: Variant::RelaxedDr,
            beta: Some(0.8.into()),
            n: None,
            delta: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grids_and_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            [problem]
            kind = "sat"
            random = [150, 630]
            [scheme]
            variant = "averaged_double_reflect"
            n = 3
            delta = [0.001, 0.005]
            [run]
            trials = 4
            "#,
        )
        .unwrap();
        let s = cfg.scheme.as_ref().unwrap();
        assert_eq!(s.delta.as_ref().unwrap().values(), vec![0.001, 0.005]);
        assert_eq!(s.n.as_ref().unwrap().values(), vec![3]);
        assert_eq!(cfg.run.max_iterations, 10_000);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("[run]\ntrails = 3\n").unwrap_err();
        assert!(err.to_string().contains("trails"));
    }

    #[test]
    fn kind_mismatch_names_the_field() {
        let cfg: ExperimentConfig = toml::from_str("[problem]\nkind = \"bgn\"\n").unwrap();
        let err = cfg.for_kind(ProblemKind::Sat).unwrap_err();
        assert!(err.to_string().starts_with("problem.kind"));
    }

    #[test]
    fn tuner_section() {
        let cfg: ExperimentConfig = toml::from_str(
            "[tuner]\ngranularity = [\"none\", \"by_type_location\"]\nalpha = 1e-4\n",
        )
        .unwrap();
        let t = cfg.tuner.unwrap();
        assert_eq!(
            t.granularity.values(),
            vec![Granularity::None, Granularity::ByTypeLocation]
        );
        assert_eq!(t.mode, UpdateMode::MeanRelative);
    }
}

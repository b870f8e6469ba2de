//! Grid expansion, parallel trial execution and result files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use projfeas::diagnostics::{
    format_summary_table, pca_2d, summarize, write_pca_csv, write_series_csv, write_summary_csv,
    SummaryRow, TrialRecord,
};
use projfeas::{run, ConstraintPair, Granularity, RunConfig, RunTrace, Scheme, TraceOptions, TunerConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, RunSection, Variant};

/// One configuration of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub label: String,
    pub scheme: Scheme,
    pub tuner: Option<TunerConfig>,
}

/// Cartesian product of the scheme and tuner grids, scheme-major.
pub fn expand_grid(cfg: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    let s = cfg.scheme.as_ref().context("scheme: section missing")?;
    let schemes: Vec<Scheme> = match s.variant {
        Variant::RelaxedDr => {
            let betas = s.beta.as_ref().context("scheme.beta: required for relaxed_dr")?;
            betas
                .values()
                .into_iter()
                .map(|b| Scheme::relaxed(b).context("scheme.beta"))
                .collect::<Result<_>>()?
        }
        Variant::AveragedDoubleReflect => {
            let ns = s.n.as_ref().context("scheme.n: required for averaged_double_reflect")?;
            let ds = s
                .delta
                .as_ref()
                .context("scheme.delta: required for averaged_double_reflect")?;
            let mut out = Vec::new();
            for n in ns.values() {
                for d in ds.values() {
                    out.push(Scheme::averaged(n, d).with_context(|| format!("scheme (n={n}, delta={d})"))?);
                }
            }
            out
        }
    };

    let tuners: Vec<Option<TunerConfig>> = match &cfg.tuner {
        None => vec![None],
        Some(t) => {
            let mut out = Vec::new();
            for g in t.granularity.values() {
                if g == Granularity::None {
                    out.push(None);
                    continue;
                }
                for a in t.alpha.values() {
                    let mut tc = TunerConfig::new(g, a).with_mode(t.mode);
                    tc.cadence = t.cadence;
                    tc.validate().context("tuner")?;
                    out.push(Some(tc));
                }
            }
            out
        }
    };

    let mut grid = Vec::with_capacity(schemes.len() * tuners.len());
    for scheme in &schemes {
        for tuner in &tuners {
            let label = match (tuner, &cfg.tuner) {
                (Some(t), _) => format!("{scheme} {} alpha={}", t.granularity, t.alpha),
                (None, Some(_)) => format!("{scheme} none"),
                (None, None) => scheme.to_string(),
            };
            grid.push(GridPoint {
                label,
                scheme: *scheme,
                tuner: tuner.clone(),
            });
        }
    }
    Ok(grid)
}

/// Result of one (grid point, trial) job.
struct Job<S> {
    grid: usize,
    record: TrialRecord,
    trace: RunTrace<S>,
}

/// What a problem writes per solved trial.
pub type SolutionWriter<'a, S> = &'a (dyn Fn(&S) -> String + Sync);

#[derive(Serialize)]
struct TraceMeta<'a> {
    label: &'a str,
    scheme: Scheme,
    tuner: Option<&'a TunerConfig>,
    seed: u64,
    trial: u64,
    outcome: projfeas::Outcome,
    iterations: usize,
    final_error: f64,
    tolerance_reached_at: Option<usize>,
    init_hash: String,
    metric_updates: usize,
    final_params: &'a [f64],
    pca_eigenvalues: Option<[f64; 2]>,
}

/// Runs every trial of every grid point. Trials share their initial
/// iterate across grid points, and results are merged in (grid, trial)
/// order regardless of scheduling.
pub fn run_grid<C: ConstraintPair>(
    cp: &C,
    grid: &[GridPoint],
    run_cfg: &RunSection,
    solution: SolutionWriter<'_, C::Solution>,
) -> Result<Vec<SummaryRow>> {
    let trace = if run_cfg.trace || run_cfg.iterates {
        TraceOptions {
            stride: run_cfg.stride,
            errors: true,
            metric: true,
            iterates: run_cfg.iterates,
        }
    } else {
        TraceOptions::none()
    };
    let base = RunConfig::new(run_cfg.max_iterations, run_cfg.seed).with_trace(trace);
    base.validate().context("run")?;

    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..run_cfg.trials).map(move |t| (g, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run_cfg.threads)
        .build()
        .context("run.threads")?;
    let results: Vec<Job<C::Solution>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t)| {
                let point = &grid[g];
                let start = Instant::now();
                let trace = run(&point.scheme, cp, &base.clone().with_trial(t), point.tuner.as_ref())
                    .with_context(|| format!("running `{}` trial {t}", point.label))?;
                let secs = start.elapsed().as_secs_f64();
                Ok(Job {
                    grid: g,
                    record: TrialRecord::from_trace(&point.label, &trace, Some(secs)),
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // every grid point must start trial t from the same iterate
    let trials = run_cfg.trials as usize;
    for t in 0..trials {
        let h = &results[t].record.init_hash;
        for g in 1..grid.len() {
            ensure!(
                results[g * trials + t].record.init_hash == *h,
                "initial iterate of trial {t} differs between grid points"
            );
        }
    }

    let records: Vec<TrialRecord> = results.iter().map(|j| j.record.clone()).collect();
    let rows = summarize(&records);

    if let Some(out) = &run_cfg.out {
        let sol_dir = out.join("solutions");
        let trace_dir = out.join("traces");
        for job in &results {
            let stem = format!("g{:02}_t{:04}", job.grid, job.trace.trial);
            if let Some(s) = &job.trace.solution {
                fs::create_dir_all(&sol_dir).with_context(|| format!("creating {}", sol_dir.display()))?;
                write_text(&sol_dir.join(format!("{stem}.txt")), &solution(s))?;
            }
            if run_cfg.trace || run_cfg.iterates {
                fs::create_dir_all(&trace_dir).with_context(|| format!("creating {}", trace_dir.display()))?;
                write_trace(&trace_dir, &stem, &grid[job.grid], run_cfg.seed, &job.trace)?;
            }
        }
        write_outputs(out, &records, &rows)?;
    }
    Ok(rows)
}

fn write_trace<S>(dir: &Path, stem: &str, point: &GridPoint, seed: u64, tr: &RunTrace<S>) -> Result<()> {
    let path = dir.join(format!("{stem}.csv"));
    write_series_csv(&tr.series, create(&path)?).with_context(|| format!("writing {}", path.display()))?;

    let mut eig = None;
    if let Some(snap) = &tr.snapshots {
        if snap.rows() >= 2 {
            let pca = pca_2d(snap).context("trajectory PCA")?;
            eig = Some(pca.eigenvalues);
            let path = dir.join(format!("{stem}_pca.csv"));
            write_pca_csv(snap.iterations(), &pca, create(&path)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let meta = TraceMeta {
        label: &point.label,
        scheme: point.scheme,
        tuner: point.tuner.as_ref(),
        seed,
        trial: tr.trial,
        outcome: tr.outcome,
        iterations: tr.iterations,
        final_error: tr.final_error,
        tolerance_reached_at: tr.tolerance_reached_at,
        init_hash: format!("{:016x}", tr.init_hash),
        metric_updates: tr.metric_updates,
        final_params: &tr.final_params,
        pca_eigenvalues: eig,
    };
    let path = dir.join(format!("{stem}.json"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `summary.csv` (deterministic), `summary.txt` and `trials.csv`.
pub fn write_outputs(out: &Path, records: &[TrialRecord], rows: &[SummaryRow]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("summary.csv");
    write_summary_csv(rows, create(&path)?).with_context(|| format!("writing {}", path.display()))?;
    write_text(&out.join("summary.txt"), &format_summary_table(rows))?;
    let path = out.join("trials.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for r in records {
        w.serialize(r).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        out.push(rec.with_context(|| format!("{}: record {}", path.display(), i + 1))?);
    }
    if out.is_empty() {
        bail!("{}: no trial records", path.display());
    }
    Ok(out)
}

pub fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

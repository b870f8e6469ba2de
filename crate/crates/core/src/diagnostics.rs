//! Trajectory PCA, per-type error/metric series export and summary tables.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::run::{RunTrace, Series};

/// Sampled iterates, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix {
    dim: usize,
    stride: usize,
    iterations: Vec<usize>,
    data: Vec<f64>,
}

impl TraceMatrix {
    pub fn new(dim: usize, stride: usize) -> Self {
        TraceMatrix {
            dim,
            stride,
            iterations: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn from_rows(stride: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut m = TraceMatrix::new(dim, stride);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::LayoutMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            m.push(i * stride, r);
        }
        Ok(m)
    }

    pub fn push(&mut self, iteration: usize, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.iterations.push(iteration);
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        self.iterations.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Iterates projected onto their two leading principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca2d {
    /// `(p1, p2)` per row, divided by `sqrt(dim)`.
    pub points: Vec<(f64, f64)>,
    /// Eigenvalues of the centered scatter matrix for the two axes.
    pub eigenvalues: [f64; 2],
    /// The trajectory spans fewer than two directions; `p2` is all zero.
    pub rank_deficient: bool,
}

/// PCA of the trajectory. Uses whichever of the row Gram matrix or the column
/// covariance is smaller; both have the same nonzero spectrum.
pub fn pca_2d(m: &TraceMatrix) -> Result<Pca2d> {
    let (r, d) = (m.rows(), m.dim());
    if r < 2 || d < 2 {
        return Err(Error::config("trace", "PCA needs at least 2 rows and 2 columns"));
    }
    let mut c = DMatrix::from_row_slice(r, d, &m.data);
    for j in 0..d {
        let mean = c.column(j).mean();
        c.column_mut(j).add_scalar_mut(-mean);
    }

    let (eig, gram) = if r <= d {
        (SymmetricEigen::new(&c * c.transpose()), true)
    } else {
        (SymmetricEigen::new(c.transpose() * &c), false)
    };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let scale = 1.0 / (d as f64).sqrt();
    let mut eigenvalues = [0.0; 2];
    let mut scores = [vec![0.0; r], vec![0.0; r]];
    let mut rank_deficient = false;
    for k in 0..2 {
        let lambda = eig.eigenvalues[order[k]].max(0.0);
        eigenvalues[k] = lambda;
        if lambda <= 1e-12 * top.max(f64::MIN_POSITIVE) || lambda == 0.0 {
            rank_deficient = true;
            continue;
        }
        let v = eig.eigenvectors.column(order[k]);
        let s: Vec<f64> = if gram {
            v.iter().map(|u| u * lambda.sqrt()).collect()
        } else {
            (&c * v).iter().copied().collect()
        };
        // sign convention: largest-magnitude score is positive
        let pivot = s.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        scores[k] = s.into_iter().map(|v| v * sign * scale).collect();
    }
    let points = scores[0].iter().copied().zip(scores[1].iter().copied()).collect();
    Ok(Pca2d {
        points,
        eigenvalues,
        rank_deficient,
    })
}

/// Outcome of one trial, the unit aggregated by [`summarize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub label: String,
    pub trial: u64,
    pub solved: bool,
    pub iterations: usize,
    #[serde(default)]
    pub seconds: Option<f64>,
    #[serde(default)]
    pub init_hash: Option<String>,
}

impl TrialRecord {
    pub fn from_trace<S>(label: &str, trace: &RunTrace<S>, seconds: Option<f64>) -> Self {
        TrialRecord {
            label: label.to_string(),
            trial: trace.trial,
            solved: trace.solved(),
            iterations: trace.iterations,
            seconds,
            init_hash: Some(format!("{:016x}", trace.init_hash)),
        }
    }
}

/// One row of a successes/trials table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub successes: usize,
    pub trials: usize,
    pub total_iterations: u64,
    /// Total iterations over all trials divided by the number of successes.
    pub iterations_per_solution: Option<f64>,
    pub iterations_per_second: Option<f64>,
}

impl SummaryRow {
    pub fn rate(&self) -> String {
        format!("{}/{}", self.successes, self.trials)
    }

    pub fn per_solution(&self) -> String {
        match self.iterations_per_solution {
            Some(v) => format_sci(v),
            None => "—".to_string(),
        }
    }
}

fn format_sci(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let mantissa = v / 10f64.powi(exp);
    if exp < 3 {
        format!("{v:.0}")
    } else {
        format!("{mantissa:.2}e{exp}")
    }
}

/// Aggregates trials by label, keeping labels in first-appearance order.
pub fn summarize<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: HashMap<String, (usize, usize, u64, f64, bool)> = HashMap::new();
    for r in records {
        let e = acc.entry(r.label.clone()).or_insert_with(|| {
            order.push(r.label.clone());
            (0, 0, 0, 0.0, true)
        });
        e.0 += r.solved as usize;
        e.1 += 1;
        e.2 += r.iterations as u64;
        match r.seconds {
            Some(s) => e.3 += s,
            None => e.4 = false,
        }
    }
    order
        .into_iter()
        .map(|label| {
            let (successes, trials, total, secs, timed) = acc[&label];
            SummaryRow {
                iterations_per_solution: (successes > 0).then(|| total as f64 / successes as f64),
                iterations_per_second: (timed && secs > 0.0).then(|| total as f64 / secs),
                label,
                successes,
                trials,
                total_iterations: total,
            }
        })
        .collect()
}

/// Deterministic CSV of a summary (no timing columns).
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["config", "successes", "trials", "total_iterations", "iterations_per_solution"])?;
    for r in rows {
        out.write_record([
            r.label.clone(),
            r.successes.to_string(),
            r.trials.to_string(),
            r.total_iterations.to_string(),
            r.iterations_per_solution.map(|v| format!("{v}")).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Aligned text table including iterations/second when available.
pub fn format_summary_table(rows: &[SummaryRow]) -> String {
    let header = ["config", "successes/trials", "iterations/solution", "iterations/second"];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.rate(),
                r.per_solution(),
                r.iterations_per_second.map(|v| format!("{v:.2}")).unwrap_or_else(|| "—".into()),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    let mut s = line(&header.map(String::from));
    s.push('\n');
    s.push_str(&widths.map(|w| "-".repeat(w)).join("-+-"));
    s.push('\n');
    for row in &body {
        s.push_str(&line(row));
        s.push('\n');
    }
    s
}

/// Columns: `iter, epsilon, eps_<type>..., eta_<type>..., constraint_error`.
///
/// `epsilon` is the normalized aggregate of the per-type errors and
/// `constraint_error` the unnormalized distance `|P_A(x) - P_B(R_A(x))|`.
pub fn write_series_csv<W: Write>(series: &Series, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let has_errors = !series.error.is_empty();
    let has_metric = !series.metric.is_empty();
    let mut header = vec!["iter".to_string()];
    if has_errors {
        header.push("epsilon".into());
        header.extend(series.type_labels.iter().map(|l| format!("eps_{l}")));
    }
    if has_metric {
        header.extend(series.type_labels.iter().map(|l| format!("eta_{l}")));
    }
    if has_errors {
        header.push("constraint_error".into());
    }
    out.write_record(&header)?;
    for row in 0..series.rows() {
        let mut rec = vec![series.iterations[row].to_string()];
        if has_errors {
            rec.push(series.aggregate[row].to_string());
            rec.extend(series.typed_row(row).iter().map(f64::to_string));
        }
        if has_metric {
            rec.extend(series.metric_row(row).iter().map(f64::to_string));
        }
        if has_errors {
            rec.push(series.error[row].to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns: `iter, p1, p2`.
pub fn write_pca_csv<W: Write>(iterations: &[usize], pca: &Pca2d, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iter", "p1", "p2"])?;
    for (it, (p1, p2)) in iterations.iter().zip(&pca.points) {
        out.write_record([it.to_string(), p1.to_string(), p2.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

//! `projfeas`: run projection-solver experiments from a config file.

mod config;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use projfeas::bgn::{canonical_dataset, format_bits, generate_dataset, parse_dataset, Architecture, BgnProblem};
use projfeas::diagnostics::{format_summary_table, summarize};
use projfeas::domset::{parse_edge_list, queens_graph, DomsetProblem};
use projfeas::sat::{emit_dimacs, parse_dimacs, random_3sat, solution_line, SatProblem};
use projfeas::trap1d::sweep;

use config::{ExperimentConfig, OneOrMany, ProblemKind};
use experiment::{expand_grid, read_trials, run_grid, write_outputs, write_text};

#[derive(Parser)]
#[command(name = "projfeas", version, about = "Iterative projection solvers for feasibility problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boolean satisfiability (DIMACS CNF or random 3-SAT).
    Sat {
        #[command(flatten)]
        run: RunArgs,
        /// DIMACS CNF file.
        #[arg(long)]
        cnf: Option<PathBuf>,
        /// Random 3-SAT instance, `VARS,CLAUSES`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        random: Option<Vec<usize>>,
        #[arg(long)]
        instance_seed: Option<u64>,
    },
    /// Dominating set of bounded size.
    Domset {
        #[command(flatten)]
        run: RunArgs,
        /// Queens' graph of this board order.
        #[arg(long)]
        queens: Option<usize>,
        /// Edge-list file.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Maximum dominating-set size.
        #[arg(long)]
        target: Option<usize>,
    },
    /// Boolean generative network fitted to a dataset.
    Bgn {
        #[command(flatten)]
        run: RunArgs,
        /// Layer sizes, e.g. `4,8,8`.
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        /// Dataset file, one binary string per line.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Generate the dataset from a random circuit with this seed.
        #[arg(long)]
        circuit_seed: Option<u64>,
    },
    /// Affine map of the one-dimensional trap model over a parameter grid.
    Trap1d {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        gap: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        /// Directory for `trap1d.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-aggregate `trials.csv` files from earlier runs.
    Summarize {
        #[arg(required = true)]
        trials: Vec<PathBuf>,
        /// Directory for the merged summary files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Options shared by the solver subcommands; they override the config file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write per-trial error and metric series.
    #[arg(long, overrides_with = "no_trace")]
    trace: bool,
    #[arg(long, overrides_with = "trace")]
    no_trace: bool,
}

impl RunArgs {
    fn load(&self, kind: ProblemKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        }
        .for_kind(kind)?;
        let r = &mut cfg.run;
        if let Some(v) = self.seed {
            r.seed = v;
        }
        if let Some(v) = self.trials {
            r.trials = v;
        }
        if let Some(v) = self.max_iters {
            r.max_iterations = v;
        }
        if let Some(v) = &self.out {
            r.out = Some(v.clone());
        }
        if let Some(v) = self.threads {
            r.threads = v;
        }
        if self.trace {
            r.trace = true;
        }
        if self.no_trace {
            r.trace = false;
            r.iterates = false;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sat {
            run,
            cnf,
            random,
            instance_seed,
        } => {
            let mut cfg = run.load(ProblemKind::Sat)?;
            let p = &mut cfg.problem;
            if cnf.is_some() {
                p.cnf = cnf;
                p.random = None;
            }
            if let Some(r) = random {
                p.random = Some([r[0], r[1]]);
                p.cnf = None;
            }
            p.instance_seed = instance_seed.or(p.instance_seed);
            run_sat(cfg)
        }
        Command::Domset {
            run,
            queens,
            graph,
            target,
        } => {
            let mut cfg = run.load(ProblemKind::Domset)?;
            let p = &mut cfg.problem;
            if queens.is_some() {
                p.queens = queens;
                p.graph = None;
            }
            if graph.is_some() {
                p.graph = graph;
                p.queens = None;
            }
            p.target = target.or(p.target);
            run_domset(cfg)
        }
        Command::Bgn {
            run,
            layers,
            data,
            circuit_seed,
        } => {
            let mut cfg = run.load(ProblemKind::Bgn)?;
            let p = &mut cfg.problem;
            p.layers = layers.or(p.layers.take());
            if data.is_some() {
                p.data = data;
                p.circuit_seed = None;
            }
            if circuit_seed.is_some() {
                p.circuit_seed = circuit_seed;
                p.data = None;
            }
            run_bgn(cfg)
        }
        Command::Trap1d {
            config,
            n,
            gap,
            delta,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            }
            .for_kind(ProblemKind::Trap1d)?;
            let p = &mut cfg.problem;
            if let Some(v) = n {
                p.n = Some(OneOrMany::Many(v));
            }
            if let Some(v) = gap {
                p.gap = Some(OneOrMany::Many(v));
            }
            if let Some(v) = delta {
                p.delta = Some(OneOrMany::Many(v));
            }
            if out.is_some() {
                cfg.run.out = out;
            }
            run_trap1d(cfg)
        }
        Command::Summarize { trials, out } => {
            let mut records = Vec::new();
            for path in &trials {
                records.extend(read_trials(path)?);
            }
            let rows = summarize(&records);
            print!("{}", format_summary_table(&rows));
            if let Some(out) = out {
                write_outputs(&out, &records, &rows)?;
            }
            Ok(())
        }
    }
}

/// Validates the config, prepares the output directory and records the
/// resolved configuration there.
fn prepare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    if let Some(out) = &cfg.run.out {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let json = serde_json::to_string_pretty(cfg)?;
        write_text(&out.join("config.json"), &(json + "\n"))?;
    }
    Ok(())
}

fn write_input(cfg: &ExperimentConfig, name: &str, text: &str) -> Result<()> {
    match &cfg.run.out {
        Some(out) => write_text(&out.join(name), text),
        None => Ok(()),
    }
}

fn finish(rows: Vec<projfeas::diagnostics::SummaryRow>) {
    print!("{}", format_summary_table(&rows));
}

fn run_sat(cfg: ExperimentConfig) -> Result<()> {
    let p = &cfg.problem;
    let inst = match (&p.cnf, p.random) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("problem.cnf: reading {}", path.display()))?;
            parse_dimacs(&text).with_context(|| format!("problem.cnf: {}", path.display()))?
        }
        (None, Some([v, c])) => {
            if v < 3 {
                bail!("problem.random: need at least 3 variables");
            }
            random_3sat(v, c, p.instance_seed.unwrap_or(0))
        }
        (None, None) => bail!("problem.cnf or problem.random: one is required for sat"),
    };
    prepare(&cfg)?;
    write_input(&cfg, "instance.cnf", &emit_dimacs(&inst))?;
    let grid = expand_grid(&cfg)?;
    let cp = SatProblem::new(inst);
    finish(run_grid(&cp, &grid, &cfg.run, &|a: &Vec<bool>| solution_line(a) + "\n")?);
    Ok(())
}

fn run_domset(cfg: ExperimentConfig) -> Result<()> {
    let p = &cfg.problem;
    let graph = match (p.queens, &p.graph) {
        (Some(order), _) => {
            if order == 0 {
                bail!("problem.queens: board order must be >= 1");
            }
            queens_graph(order)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("problem.graph: reading {}", path.display()))?;
            parse_edge_list(&text).with_context(|| format!("problem.graph: {}", path.display()))?
        }
        (None, None) => bail!("problem.queens or problem.graph: one is required for domset"),
    };
    let target = p.target.context("problem.target: required for domset")?;
    let cp = DomsetProblem::new(graph, target).context("problem.target")?;
    prepare(&cfg)?;
    let grid = expand_grid(&cfg)?;
    let fmt = |set: &Vec<usize>| {
        let ids: Vec<String> = set.iter().map(usize::to_string).collect();
        ids.join(" ") + "\n"
    };
    finish(run_grid(&cp, &grid, &cfg.run, &fmt)?);
    Ok(())
}

fn run_bgn(cfg: ExperimentConfig) -> Result<()> {
    let p = &cfg.problem;
    let layers = p.layers.as_ref().context("problem.layers: required for bgn")?;
    let arch = Architecture::new(layers).context("problem.layers")?;
    let n_out = arch.num_outputs();
    let (data, truth) = match &p.data {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("problem.data: reading {}", path.display()))?;
            let data = parse_dataset(&text, n_out).with_context(|| format!("problem.data: {}", path.display()))?;
            (canonical_dataset(data, n_out), None)
        }
        None => {
            let g = generate_dataset(&arch, p.circuit_seed.unwrap_or(0));
            (g.data.clone(), Some(g))
        }
    };
    let cp = BgnProblem::new(arch, data.clone())
        .context("problem.data")?
        .with_fan_in_cap(p.fan_in_cap)
        .context("problem.fan_in_cap")?;
    prepare(&cfg)?;
    let lines: String = data.iter().map(|&d| format_bits(d, n_out) + "\n").collect();
    write_input(&cfg, "dataset.txt", &lines)?;
    if let Some(g) = &truth {
        let text = format!("# seed {}\n{}", g.seed, g.circuit.gate_listing());
        write_input(&cfg, "ground_truth.txt", &text)?;
    }
    let grid = expand_grid(&cfg)?;
    let fmt = |c: &projfeas::bgn::BooleanCircuit| format!("{}\n{}", c.edge_list(), c.gate_listing());
    finish(run_grid(&cp, &grid, &cfg.run, &fmt)?);
    Ok(())
}

fn run_trap1d(cfg: ExperimentConfig) -> Result<()> {
    let p = &cfg.problem;
    let ns = p.n.as_ref().map(|v| v.values()).unwrap_or_else(|| vec![1, 3]);
    let gaps = p.gap.as_ref().map(|v| v.values()).unwrap_or_else(|| vec![0.01]);
    let deltas = p
        .delta
        .as_ref()
        .map(|v| v.values())
        .unwrap_or_else(|| vec![0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1]);
    let rows = sweep(&ns, &gaps, &deltas).context("problem (n, gap, delta)")?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "gap", "delta", "gamma", "c", "fixed_point"])?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            r.gap.to_string(),
            r.delta.to_string(),
            r.gamma.to_string(),
            r.c.to_string(),
            r.fixed_point.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    let text = String::from_utf8(w.into_inner()?)?;
    match &cfg.run.out {
        Some(out) => {
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            write_text(&out.join("trap1d.csv"), &text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

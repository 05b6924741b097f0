use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rasqp::active_set::{active_set_report, ACTIVE_TOL};
use rasqp::harness::{profile_inputs, read_results, write_results};
use rasqp::profile::{performance_profile, CostMetric};
use rasqp::registry::build_problem;
use rasqp::sweep::{run_jobs, worker_count};
use rasqp::trace::write_trace;
use rasqp::{execute, Method, RunRecord, Settings};

#[derive(Parser)]
#[command(name = "ra-sqp", version, about = "Retrospective-approximation SQP benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem and write its trace.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Aggregate results file.
        #[arg(long)]
        results: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run a problem × method × seed grid.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        problems: Vec<String>,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        /// `a..b` or a comma list.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long, default_value = "sweep")]
        out_dir: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Performance profile from a sweep's results file.
    Profile {
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long, value_enum, default_value = "grad-evals")]
        metric: MetricArg,
        #[arg(long, default_value = "profile.csv")]
        output: PathBuf,
    },
    /// Active-set stability of a run against a det-sqp reference.
    ActiveSet {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "grad_evals", alias = "grad-evals")]
    GradEvals,
    #[value(name = "solver_iters", alias = "solver-iters")]
    SolverIters,
}

fn layered(config: &Option<PathBuf>, flags: &Settings) -> anyhow::Result<Settings> {
    let mut s = match config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    s.overlay(flags);
    Ok(s)
}

fn parse_seeds(spec: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {spec}");
        }
        return Ok((a..b).collect());
    }
    spec.split(',').map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}"))).collect()
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn report(rec: &RunRecord) {
    let row = rec.summary();
    println!(
        "{} {} seed={} status={} outer={} grad_evals={} violation={:.3e} stationarity={:.3e}",
        row.problem, row.method, row.seed, row.status, row.outer_iterations, row.grad_evals, row.final_violation,
        row.final_stationarity
    );
}

fn run_one(config: &Option<PathBuf>, results: &Option<PathBuf>, flags: &Settings) -> anyhow::Result<()> {
    let cfg = layered(config, flags)?.resolve()?;
    let data = match &cfg.problem.data {
        Some(p) => Some(std::sync::Arc::new(rasqp::libsvm::read_libsvm(p)?)),
        None => None,
    };
    let rec = execute(&cfg, data)?;
    let out = cfg.output.clone().unwrap_or_else(|| {
        PathBuf::from(format!("{}_{}_{}.csv", cfg.problem.name, cfg.method, cfg.seed))
    });
    write_trace(&rec.trace(), create(&out)?)?;
    if let Some(path) = results {
        write_results(&[rec.summary()], create(path)?)?;
    }
    report(&rec);
    Ok(())
}

fn sweep(
    config: &Option<PathBuf>,
    problems: &[String],
    methods: &[Method],
    seeds: &str,
    out_dir: &Path,
    flags: &Settings,
) -> anyhow::Result<()> {
    let base = layered(config, flags)?;
    let seeds = parse_seeds(seeds)?;
    let mut jobs = Vec::new();
    for p in problems {
        for &m in methods {
            for &s in &seeds {
                let mut cfg = base.resolve_with(p, m, s)?;
                cfg.output = Some(out_dir.join("traces").join(format!("{p}_{m}_{s}.csv")));
                jobs.push(cfg);
            }
        }
    }
    let threads = worker_count();
    let mut trace_err = None;
    let records = run_jobs(&jobs, threads, |i, rec| match rec {
        Ok(r) => {
            report(r);
            let path = jobs[i].output.as_ref().expect("sweep sets outputs");
            if let Err(e) = create(path).and_then(|w| Ok(write_trace(&r.trace(), w)?)) {
                trace_err.get_or_insert(e);
            }
        }
        Err(e) => eprintln!("{} {} seed={}: {e}", jobs[i].problem.name, jobs[i].method, jobs[i].seed),
    })?;
    if let Some(e) = trace_err {
        return Err(e);
    }
    let mut rows = Vec::new();
    for rec in records {
        rows.push(rec?.summary());
    }
    write_results(&rows, create(&out_dir.join("results.csv"))?)?;
    Ok(())
}

fn profile(inputs: &Path, tol: f64, metric: MetricArg, output: &Path) -> anyhow::Result<()> {
    let metric = match metric {
        MetricArg::GradEvals => CostMetric::GradEvals,
        MetricArg::SolverIters => CostMetric::SolverIters,
    };
    let file = File::open(inputs).with_context(|| format!("opening {}", inputs.display()))?;
    let rows = read_results(file)?;
    let inputs = profile_inputs(&rows, tol, metric)?;
    if !inputs.iter().any(|i| i.cost.is_some()) {
        bail!("no method solved any instance at tolerance {tol:e}");
    }
    let mut w = csv::Writer::from_writer(create(output)?);
    w.write_record(["method", "tau", "fraction", "metric", "tol"])?;
    for curve in performance_profile(&inputs) {
        for (tau, frac) in &curve.points {
            w.write_record([curve.method.clone(), tau.to_string(), frac.to_string(), metric.as_str().into(), tol.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn active_set(config: &Option<PathBuf>, flags: &Settings) -> anyhow::Result<()> {
    let cfg = layered(config, flags)?.resolve()?;
    let data = match &cfg.problem.data {
        Some(p) => Some(std::sync::Arc::new(rasqp::libsvm::read_libsvm(p)?)),
        None => None,
    };
    let rec = execute(&cfg, data.clone())?;
    let mut ref_cfg = cfg.clone();
    ref_cfg.method = Method::DetSqp;
    ref_cfg.sampling = None;
    ref_cfg.stop = None;
    let reference = execute(&ref_cfg, data.clone())?;
    let (out, ref_out) = match (&rec.outcome, &reference.outcome) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => bail!("solver failed: {e}"),
    };
    let problem = build_problem(&cfg.problem, cfg.seed, data)?;
    let mut iterates = vec![(-1i64, problem.initial_point())];
    iterates.extend(out.trace.iter().map(|r| (r.k as i64, r.x.clone())));
    let rows = active_set_report(problem.as_ref(), &iterates, &ref_out.x, ACTIVE_TOL)?;
    let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("active_set.csv"));
    let mut w = csv::Writer::from_writer(create(&path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    report(&rec);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Run { config, results, settings } => run_one(config, results, settings),
        Command::Sweep { config, problems, methods, seeds, out_dir, settings } => {
            sweep(config, problems, methods, seeds, out_dir, settings)
        }
        Command::Profile { inputs, tol, metric, output } => profile(inputs, *tol, *metric, output),
        Command::ActiveSet { config, settings } => active_set(config, settings),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Benchmark CLI for the subsampled trust-region solvers.
//!
//! Three subcommands: `run` executes an experiment described by a config
//! file (flags override file keys), `bench` runs a built-in comparison on
//! a synthetic problem, and `probe-rates` measures convergence order
//! against the known minimizer of a synthetic quadratic.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, bad
//! config file, bad dataset syntax), 3 when every repetition of every
//! solver aborted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use iretr_core::data::synth_quadratic;
use iretr_core::harness::{
    emit_metrics, rate_probe, run_experiment, run_solver, summarize, ComparisonRow, ExperimentSpec,
    OutputFormat, ProblemSource, RatePoint, SolverKind, PROBLEM_SEED_XOR,
};
use iretr_core::losses::LossFamily;
use iretr_core::schedule::{Sampler, SchedulePolicy};
use iretr_core::solver::SolverConfig;
use iretr_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "iretr-bench",
    about = "Finite-sum trust-region solver benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a config file.
    Run(RunArgs),
    /// Run the built-in solver comparison on a synthetic problem.
    Bench(BenchArgs),
    /// Measure convergence order on a synthetic quadratic with known
    /// minimizer.
    ProbeRates(ProbeArgs),
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// Base seed; repetition r runs with seed base_seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeded repetitions per solver.
    #[arg(long)]
    reps: Option<usize>,
    /// Loss family for dataset problems: logistic_l2 or sigmoid_ls.
    #[arg(long)]
    loss: Option<String>,
    /// Keep only the iretr variant with this sample schedule (dynamic or
    /// geometric) in the default solver list. Conflicts with --solver.
    #[arg(long)]
    policy: Option<String>,
    /// Solver to run (repeatable): iretr_d, iretr_gg, statr_sh, statr_fh.
    /// Default: all four.
    #[arg(long = "solver")]
    solvers: Vec<String>,
    /// Stem for report files; writes {stem}_summary.{ext} and
    /// {stem}_trajectory.{ext}.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Config file (TOML, flat keys; see README for the schema).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Problem source: synth_logistic, synth_quadratic, libsvm or csv.
    #[arg(long, default_value = "synth_logistic")]
    problem: String,
    /// Components (rows) for synthetic sources.
    #[arg(long, default_value_t = 10000)]
    n: usize,
    /// Dimension for synthetic sources.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Class separation of the synthetic logistic data.
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Smallest per-component eigenvalue of the synthetic quadratic.
    #[arg(long, default_value_t = 1.0)]
    lambda_min: f64,
    /// Largest per-component eigenvalue of the synthetic quadratic.
    #[arg(long, default_value_t = 100.0)]
    lambda_max: f64,
    /// Dataset file for libsvm/csv sources.
    #[arg(long)]
    path: Option<PathBuf>,
    /// Fraction of rows used for training; the rest form a held-out set.
    #[arg(long, default_value_t = 1.0)]
    train_fraction: f64,
    /// Stopping tolerance (gradient norm and relative f-stall).
    #[arg(long)]
    phi: Option<f64>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    /// Solver to probe: iretr_d, iretr_gg, statr_sh or statr_fh.
    #[arg(long, default_value = "statr_fh")]
    solver: String,
    /// Components of the synthetic quadratic.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Dimension of the synthetic quadratic.
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 2.0)]
    lambda_max: f64,
    /// CG relative residual tolerance; tight values expose the
    /// fast local regime of full-Hessian steps.
    #[arg(long, default_value_t = 1e-10)]
    cg_rel_tol: f64,
    /// Hessian subsample fraction used by statr_sh and the iretr kinds.
    #[arg(long, default_value_t = 0.1)]
    hessian_fraction: f64,
    /// Base seed; repetition r runs with seed base_seed + r.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Seeds to probe.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Stem for the rate file; writes {stem}_rates.{ext}.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rate file format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

/// Flat config file: every key optional, unknown keys rejected. Keys
/// mirror the experiment, solver, and schedule fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    // experiment
    name: Option<String>,
    problem: Option<String>,
    n: Option<usize>,
    dim: Option<usize>,
    separation: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    path: Option<PathBuf>,
    loss: Option<String>,
    solvers: Option<Vec<String>>,
    repetitions: Option<usize>,
    base_seed: Option<u64>,
    train_fraction: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    // solver
    delta0: Option<f64>,
    tau: Option<f64>,
    eta: Option<f64>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
    theta0: Option<f64>,
    eps_g: Option<f64>,
    phi: Option<f64>,
    max_outer: Option<usize>,
    success_expand_threshold: Option<f64>,
    radius_reset_floor: Option<f64>,
    shrink_cap: Option<usize>,
    cg_rel_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    record_iterates: Option<bool>,
    // schedule
    policy: Option<String>,
    growth: Option<f64>,
    gamma: Option<f64>,
    relax_scale: Option<f64>,
    n0_fraction: Option<f64>,
    upper_guard: Option<f64>,
    hessian_fraction: Option<f64>,
    refined_full_rule: Option<bool>,
}

fn parse_solvers(names: &[String]) -> Result<Vec<SolverKind>> {
    names.iter().map(|s| SolverKind::parse(s)).collect()
}

/// Default solver list, optionally restricted to one iretr variant.
fn default_solvers(policy: Option<SchedulePolicy>) -> Vec<SolverKind> {
    match policy {
        None => SolverKind::ALL.to_vec(),
        Some(SchedulePolicy::Dynamic) => {
            vec![SolverKind::IretrD, SolverKind::StatrSh, SolverKind::StatrFh]
        }
        Some(SchedulePolicy::Geometric) => {
            vec![
                SolverKind::IretrGg,
                SolverKind::StatrSh,
                SolverKind::StatrFh,
            ]
        }
    }
}

fn build_source(
    problem: &str,
    n: Option<usize>,
    dim: Option<usize>,
    separation: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    path: Option<PathBuf>,
) -> Result<ProblemSource> {
    let need = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| Error::InvalidArgument(format!("{problem} needs `{what}`")))
    };
    match problem {
        "synth_logistic" => Ok(ProblemSource::SynthLogistic {
            n: need(n, "n")?,
            dim: need(dim, "dim")?,
            separation: separation.unwrap_or(3.0),
        }),
        "synth_quadratic" => Ok(ProblemSource::SynthQuadratic {
            n: need(n, "n")?,
            dim: need(dim, "dim")?,
            lambda_min: lambda_min.unwrap_or(1.0),
            lambda_max: lambda_max.unwrap_or(100.0),
        }),
        "libsvm" => {
            let path = path
                .ok_or_else(|| Error::InvalidArgument("libsvm source needs `path`".to_string()))?;
            Ok(ProblemSource::Libsvm { path })
        }
        "csv" => {
            let path =
                path.ok_or_else(|| Error::InvalidArgument("csv source needs `path`".to_string()))?;
            Ok(ProblemSource::Csv { path })
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown problem `{other}` (expected synth_logistic, synth_quadratic, libsvm or csv)"
        ))),
    }
}

fn apply_file_solver_keys(cfg: &mut SolverConfig, f: &FileConfig) {
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = f.$field { cfg.$field = v; } )* };
    }
    set!(
        delta0,
        tau,
        eta,
        zeta1,
        zeta2,
        theta0,
        eps_g,
        phi,
        max_outer,
        success_expand_threshold,
        radius_reset_floor,
        shrink_cap,
        cg_rel_tol,
        cg_max_iter,
        record_iterates
    );
    macro_rules! set_sched {
        ($($field:ident),*) => { $( if let Some(v) = f.$field { cfg.schedule.$field = v; } )* };
    }
    set_sched!(
        growth,
        gamma,
        relax_scale,
        n0_fraction,
        upper_guard,
        hessian_fraction,
        refined_full_rule
    );
}

fn spec_from_file(args: &RunArgs) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(&args.config)?;
    let file: FileConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        line: e
            .span()
            .map(|s| line_of_offset(&text, s.start))
            .unwrap_or(0),
        msg: format!(
            "{} is not a valid config: {}",
            args.config.display(),
            e.message()
        ),
    })?;
    let common = &args.common;

    let mut config = SolverConfig::default();
    apply_file_solver_keys(&mut config, &file);

    let policy = match common.policy.as_deref().or(file.policy.as_deref()) {
        Some(p) => Some(SchedulePolicy::parse(p)?),
        None => None,
    };
    if let Some(p) = policy {
        config.schedule.policy = p;
    }

    let explicit = if !common.solvers.is_empty() {
        if common.policy.is_some() {
            return Err(Error::InvalidArgument(
                "use either --policy or an explicit --solver list, not both".to_string(),
            ));
        }
        Some(parse_solvers(&common.solvers)?)
    } else if let Some(names) = &file.solvers {
        Some(parse_solvers(names)?)
    } else {
        None
    };
    let solvers = explicit.unwrap_or_else(|| default_solvers(policy));

    let problem = file
        .problem
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("config file needs a `problem` key".to_string()))?;
    let source = build_source(
        problem,
        file.n,
        file.dim,
        file.separation,
        file.lambda_min,
        file.lambda_max,
        file.path.clone(),
    )?;
    let loss = match common.loss.as_deref().or(file.loss.as_deref()) {
        Some(l) => LossFamily::parse(l)?,
        None => LossFamily::LogisticL2,
    };
    let format = match common.format.as_deref().or(file.format.as_deref()) {
        Some(f) => OutputFormat::parse(f)?,
        None => OutputFormat::Csv,
    };
    let name = file.name.clone().unwrap_or_else(|| problem.to_string());

    Ok(ExperimentSpec {
        name,
        source,
        loss,
        solvers,
        repetitions: common.reps.or(file.repetitions).unwrap_or(10),
        base_seed: common.seed.or(file.base_seed).unwrap_or(42),
        train_fraction: file.train_fraction.unwrap_or(1.0),
        config,
        out: common.out.clone().or(file.out.clone()),
        format,
    })
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn spec_from_bench(args: &BenchArgs) -> Result<ExperimentSpec> {
    let common = &args.common;
    let policy = match common.policy.as_deref() {
        Some(p) => Some(SchedulePolicy::parse(p)?),
        None => None,
    };
    let solvers = if !common.solvers.is_empty() {
        if common.policy.is_some() {
            return Err(Error::InvalidArgument(
                "use either --policy or an explicit --solver list, not both".to_string(),
            ));
        }
        parse_solvers(&common.solvers)?
    } else {
        default_solvers(policy)
    };
    let source = build_source(
        &args.problem,
        Some(args.n),
        Some(args.dim),
        Some(args.separation),
        Some(args.lambda_min),
        Some(args.lambda_max),
        args.path.clone(),
    )?;
    let loss = match common.loss.as_deref() {
        Some(l) => LossFamily::parse(l)?,
        None => LossFamily::LogisticL2,
    };
    let format = match common.format.as_deref() {
        Some(f) => OutputFormat::parse(f)?,
        None => OutputFormat::Csv,
    };
    let mut config = SolverConfig::default();
    if let Some(p) = policy {
        config.schedule.policy = p;
    }
    if let Some(phi) = args.phi {
        config.phi = phi;
    }
    Ok(ExperimentSpec {
        name: args.problem.clone(),
        source,
        loss,
        solvers,
        repetitions: common.reps.unwrap_or(10),
        base_seed: common.seed.unwrap_or(42),
        train_fraction: args.train_fraction,
        config,
        out: common.out.clone(),
        format,
    })
}

fn print_table(rows: &[ComparisonRow]) {
    println!(
        "{:<20} {:<9} {:>5} {:>14} {:>12} {:>11} {:>10} {:>19}",
        "dataset",
        "solver",
        "runs",
        "mean_nfe",
        "std_nfe",
        "mean_iters",
        "std_iters",
        "savings_vs_iretr_d"
    );
    for r in rows {
        let savings = match r.savings_vs_iretr_d_pct {
            Some(v) => format!("{v:.1}%"),
            None => "-".to_string(),
        };
        println!(
            "{:<20} {:<9} {:>5} {:>14.3} {:>12.3} {:>11.1} {:>10.1} {:>19}",
            r.dataset,
            r.solver.name(),
            r.runs,
            r.mean_nfe,
            r.std_nfe,
            r.mean_iterations,
            r.std_iterations,
            savings
        );
    }
}

fn execute_spec(spec: &ExperimentSpec) -> Result<()> {
    let results = run_experiment(spec)?;
    for w in &results.warnings {
        eprintln!("warning: {w}");
    }
    let rows = summarize(&results);
    print_table(&rows);
    if let Some(stem) = &spec.out {
        let paths = emit_metrics(&results, &rows, spec.format, stem)?;
        for p in &paths {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn probe(args: &ProbeArgs) -> Result<()> {
    let kind = SolverKind::parse(&args.solver)?;
    let format = match args.format.as_deref() {
        Some(f) => OutputFormat::parse(f)?,
        None => OutputFormat::Csv,
    };
    let mut problem_sampler = Sampler::from_seed(args.seed ^ PROBLEM_SEED_XOR);
    let sq = synth_quadratic(
        args.n,
        args.dim,
        args.lambda_min,
        args.lambda_max,
        &mut problem_sampler,
    )?;
    let mut config = SolverConfig {
        phi: 1e-13,
        cg_rel_tol: args.cg_rel_tol,
        ..SolverConfig::default()
    };
    config.schedule.hessian_fraction = args.hessian_fraction;

    let mut all: Vec<(u64, Vec<RatePoint>)> = Vec::new();
    for r in 0..args.reps {
        let seed = args.seed + r as u64;
        let run = run_solver(kind, &sq.problem, None, &config, seed)?;
        let points = rate_probe(&run, sq.x_star.view())?;
        all.push((seed, points));
    }

    println!(
        "{:>6} {:>4} {:>14} {:>14} {:>16}",
        "seed", "k", "error", "linear_ratio", "quadratic_ratio"
    );
    for (seed, points) in &all {
        for p in points {
            println!(
                "{:>6} {:>4} {:>14.6e} {:>14.6e} {:>16.6e}",
                seed, p.k, p.error, p.linear_ratio, p.quadratic_ratio
            );
        }
    }

    if let Some(stem) = &args.out {
        let path = write_rates(&all, kind, format, stem)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_rates(
    all: &[(u64, Vec<RatePoint>)],
    kind: SolverKind,
    format: OutputFormat,
    stem: &Path,
) -> Result<PathBuf> {
    let name = stem
        .file_name()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::InvalidArgument(format!("output stem {stem:?} has no file name")))?;
    let parent = stem.parent().unwrap_or_else(|| Path::new(""));
    if !parent.as_os_str().is_empty() {
        std::fs::create_dir_all(parent)?;
    }
    let path = parent.join(format!("{name}_rates.{}", format.name()));
    let body = match format {
        OutputFormat::Csv => {
            let mut s = String::from("solver,seed,k,error,linear_ratio,quadratic_ratio\n");
            for (seed, points) in all {
                for p in points {
                    s.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        kind.name(),
                        seed,
                        p.k,
                        p.error,
                        p.linear_ratio,
                        p.quadratic_ratio
                    ));
                }
            }
            s
        }
        OutputFormat::Json => {
            #[derive(serde::Serialize)]
            struct Doc<'a> {
                solver: &'a str,
                runs: Vec<RunDoc<'a>>,
            }
            #[derive(serde::Serialize)]
            struct RunDoc<'a> {
                seed: u64,
                points: &'a [RatePoint],
            }
            let doc = Doc {
                solver: kind.name(),
                runs: all
                    .iter()
                    .map(|(s, p)| RunDoc {
                        seed: *s,
                        points: p,
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::InvalidArgument(format!("rate serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    std::fs::write(&path, body)?;
    Ok(path)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => execute_spec(&spec_from_file(&args)?),
        Command::Bench(args) => execute_spec(&spec_from_bench(&args)?),
        Command::ProbeRates(args) => probe(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::InvalidArgument(_) | Error::Parse { .. } => 2,
                Error::AllRunsFailed(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

//! Experiment orchestration: build a problem from a declarative spec, run
//! the selected solvers over seeded repetitions in parallel, aggregate
//! evaluation costs, and write machine-readable reports.
//!
//! Reproducibility contract: the problem instance is derived only from
//! `base_seed` (via a fixed xor so the instance stream and the run streams
//! never overlap), repetition r uses seed `base_seed + r`, and repetitions
//! are collected in order regardless of thread scheduling. Running the
//! same spec twice therefore produces byte-identical report files.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    dataset_arc, load_csv, load_libsvm, map_labels, split, synth_logistic, synth_quadratic,
};
use crate::error::{Error, Result};
use crate::finite_sum::FiniteSumProblem;
use crate::losses::{make_loss, LossFamily, LossSpec};
use crate::schedule::{Sampler, SchedulePolicy};
use crate::solver::{iretr_run, statr_run, HessianMode, IterRecord, RunResult, SolverConfig};

/// Mixed into `base_seed` to seed problem generation and the train/test
/// split, keeping that stream disjoint from the per-repetition streams
/// base_seed, base_seed+1, ….
pub const PROBLEM_SEED_XOR: u64 = 0xD1B5_4A32_D192_ED03;

/// The four methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Inexact restoration, dynamic (radius-coupled) sample schedule.
    IretrD,
    /// Inexact restoration, geometric (monotone) sample schedule.
    IretrGg,
    /// Full-objective trust region with a subsampled Hessian.
    StatrSh,
    /// Full-objective trust region with the full Hessian.
    StatrFh,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::IretrD,
        SolverKind::IretrGg,
        SolverKind::StatrSh,
        SolverKind::StatrFh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::IretrD => "iretr_d",
            SolverKind::IretrGg => "iretr_gg",
            SolverKind::StatrSh => "statr_sh",
            SolverKind::StatrFh => "statr_fh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "iretr_d" => Ok(SolverKind::IretrD),
            "iretr_gg" => Ok(SolverKind::IretrGg),
            "statr_sh" => Ok(SolverKind::StatrSh),
            "statr_fh" => Ok(SolverKind::StatrFh),
            other => Err(Error::invalid(format!(
                "unknown solver `{other}` (expected iretr_d, iretr_gg, statr_sh or statr_fh)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the finite sum comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSource {
    /// Two-class Gaussian data with the given class separation.
    SynthLogistic {
        n: usize,
        dim: usize,
        separation: f64,
    },
    /// Random strongly convex quadratic sum with known minimizer and
    /// per-component spectra inside [lambda_min, lambda_max].
    SynthQuadratic {
        n: usize,
        dim: usize,
        lambda_min: f64,
        lambda_max: f64,
    },
    /// Sparse `label idx:val …` rows, indices 1-based ascending.
    Libsvm { path: PathBuf },
    /// Dense rows under a `label,f1,…` header.
    Csv { path: PathBuf },
}

/// A complete experiment: one problem, several solvers, seeded repetitions.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Label used in reports.
    pub name: String,
    pub source: ProblemSource,
    /// Loss attached to dataset sources; ignored by `SynthQuadratic`.
    pub loss: LossFamily,
    pub solvers: Vec<SolverKind>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Fraction of rows kept for training; the rest become a held-out
    /// set whose full objective is tracked per iteration. 1 disables the
    /// split.
    pub train_fraction: f64,
    pub config: SolverConfig,
    /// Stem for report files; `None` means the caller handles output.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("experiment name must not be empty"));
        }
        if self.solvers.is_empty() {
            return Err(Error::invalid("experiment needs at least one solver"));
        }
        for (i, a) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(a) {
                return Err(Error::invalid(format!("solver {a} listed twice")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "train fraction must lie in (0, 1], got {}",
                self.train_fraction
            )));
        }
        if matches!(self.source, ProblemSource::SynthQuadratic { .. }) && self.train_fraction < 1.0
        {
            return Err(Error::invalid(
                "the synthetic quadratic has no dataset to split; use train_fraction = 1",
            ));
        }
        self.config.validate()
    }
}

/// One successful repetition.
#[derive(Debug, Clone)]
pub struct RepRun {
    pub rep: usize,
    pub seed: u64,
    pub result: RunResult,
}

/// All repetitions of one solver on the experiment's problem.
#[derive(Debug, Clone)]
pub struct SolverRuns {
    pub solver: SolverKind,
    pub runs: Vec<RepRun>,
    /// (rep, seed, error message) for repetitions that aborted.
    pub failures: Vec<(usize, u64, String)>,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub name: String,
    pub base_seed: u64,
    pub rng_algorithm: &'static str,
    pub n_components: usize,
    pub dim: usize,
    pub runs: Vec<SolverRuns>,
    /// Known minimizer, when the source provides one.
    pub x_star: Option<Array1<f64>>,
    /// Human-readable notes about aborted repetitions.
    pub warnings: Vec<String>,
}

/// The training problem plus optional extras derived from the source.
struct BuiltProblem {
    train: FiniteSumProblem,
    test: Option<FiniteSumProblem>,
    x_star: Option<Array1<f64>>,
}

fn build_problem(spec: &ExperimentSpec, sampler: &mut Sampler) -> Result<BuiltProblem> {
    let dataset = match &spec.source {
        ProblemSource::SynthQuadratic {
            n,
            dim,
            lambda_min,
            lambda_max,
        } => {
            let sq = synth_quadratic(*n, *dim, *lambda_min, *lambda_max, sampler)?;
            return Ok(BuiltProblem {
                train: sq.problem,
                test: None,
                x_star: Some(sq.x_star),
            });
        }
        ProblemSource::SynthLogistic { n, dim, separation } => {
            synth_logistic(*n, *dim, *separation, sampler)?
        }
        ProblemSource::Libsvm { path } => load_libsvm(path)?,
        ProblemSource::Csv { path } => load_csv(path)?,
    };
    let dataset = map_labels(&dataset, spec.loss)?;
    let (train_ds, test_ds) = split(&dataset, spec.train_fraction, sampler)?;
    let train = make_loss(LossSpec {
        family: spec.loss,
        data: dataset_arc(train_ds),
    })?;
    let test = match test_ds {
        Some(ds) if !ds.is_empty() => Some(make_loss(LossSpec {
            family: spec.loss,
            data: dataset_arc(ds),
        })?),
        _ => None,
    };
    Ok(BuiltProblem {
        train,
        test,
        x_star: None,
    })
}

/// Runs one solver once with the given seed. The iretr kinds force their
/// own schedule policy; the baseline kinds pick their Hessian mode from
/// the config's hessian fraction.
pub fn run_solver(
    kind: SolverKind,
    problem: &FiniteSumProblem,
    test: Option<&FiniteSumProblem>,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<RunResult> {
    let mut sampler = Sampler::from_seed(seed);
    match kind {
        SolverKind::IretrD => {
            let mut cfg = cfg.clone();
            cfg.schedule.policy = SchedulePolicy::Dynamic;
            iretr_run(problem, &cfg, &mut sampler, test)
        }
        SolverKind::IretrGg => {
            let mut cfg = cfg.clone();
            cfg.schedule.policy = SchedulePolicy::Geometric;
            iretr_run(problem, &cfg, &mut sampler, test)
        }
        SolverKind::StatrSh => {
            let mode = HessianMode::Subsampled(cfg.schedule.hessian_fraction);
            statr_run(problem, cfg, mode, &mut sampler, test)
        }
        SolverKind::StatrFh => statr_run(problem, cfg, HessianMode::Full, &mut sampler, test),
    }
}

/// Builds the problem once, runs every (solver, repetition) pair, and
/// collects the outcomes. Repetitions of one solver run in parallel but
/// are reported in repetition order. Aborted repetitions are excluded
/// from the results and noted in `warnings`; only when every repetition
/// of every solver aborts does the experiment itself fail.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let mut problem_sampler = Sampler::from_seed(spec.base_seed ^ PROBLEM_SEED_XOR);
    let built = build_problem(spec, &mut problem_sampler)?;
    let problem = &built.train;
    let test = built.test.as_ref();

    // Execution follows the spec's solver order, but the report is
    // assembled in a fixed canonical order so it does not depend on how
    // the solver list was written.
    let mut ordered: Vec<SolverKind> = spec.solvers.clone();
    ordered.sort_by_key(|k| SolverKind::ALL.iter().position(|a| a == k));

    let mut runs = Vec::with_capacity(ordered.len());
    let mut warnings = Vec::new();
    let mut successes = 0usize;
    let mut attempts = 0usize;
    for &kind in &ordered {
        let outcomes: Vec<(u64, std::result::Result<RunResult, String>)> = (0..spec.repetitions)
            .into_par_iter()
            .map(|r| {
                let seed = spec.base_seed + r as u64;
                let out =
                    run_solver(kind, problem, test, &spec.config, seed).map_err(|e| e.to_string());
                (seed, out)
            })
            .collect();
        let mut solver_runs = SolverRuns {
            solver: kind,
            runs: Vec::new(),
            failures: Vec::new(),
        };
        for (rep, (seed, out)) in outcomes.into_iter().enumerate() {
            attempts += 1;
            match out {
                Ok(result) => {
                    successes += 1;
                    solver_runs.runs.push(RepRun { rep, seed, result });
                }
                Err(msg) => {
                    warnings.push(format!(
                        "{kind} repetition {rep} (seed {seed}) aborted: {msg}"
                    ));
                    solver_runs.failures.push((rep, seed, msg));
                }
            }
        }
        runs.push(solver_runs);
    }
    if successes == 0 {
        return Err(Error::AllRunsFailed(attempts));
    }
    Ok(ExperimentResults {
        name: spec.name.clone(),
        base_seed: spec.base_seed,
        rng_algorithm: Sampler::ALGORITHM,
        n_components: problem.n_components(),
        dim: problem.dim(),
        runs,
        x_star: built.x_star,
        warnings,
    })
}

/// Per-solver aggregate over the successful repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    /// Experiment (dataset) this row belongs to.
    pub dataset: String,
    pub solver: SolverKind,
    /// Successful repetitions behind the means.
    pub runs: usize,
    pub mean_nfe: f64,
    /// Sample standard deviation of nfe; 0 for a single repetition.
    pub std_nfe: f64,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    pub mean_final_f: f64,
    pub mean_final_grad_norm: f64,
    /// 100·(1 - mean_nfe(iretr_d)/mean_nfe(this)); how much of this
    /// solver's evaluation cost the dynamic schedule saves. Absent on the
    /// iretr_d row itself and when iretr_d was not part of the experiment.
    pub savings_vs_iretr_d_pct: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Summarizes evaluation cost per solver; rows are in canonical solver
/// order and cover solvers with at least one successful repetition.
pub fn summarize(results: &ExperimentResults) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = Vec::new();
    for sr in &results.runs {
        if sr.runs.is_empty() {
            continue;
        }
        let collect = |f: &dyn Fn(&RunResult) -> f64| -> Vec<f64> {
            sr.runs.iter().map(|r| f(&r.result)).collect()
        };
        let (mean_nfe, std_nfe) = mean_std(&collect(&|r| r.nfe_total()));
        let (mean_iterations, std_iterations) = mean_std(&collect(&|r| r.iterations as f64));
        let (mean_final_f, _) = mean_std(&collect(&|r| r.final_f));
        let (mean_final_grad_norm, _) = mean_std(&collect(&|r| r.final_grad_norm));
        rows.push(ComparisonRow {
            dataset: results.name.clone(),
            solver: sr.solver,
            runs: sr.runs.len(),
            mean_nfe,
            std_nfe,
            mean_iterations,
            std_iterations,
            mean_final_f,
            mean_final_grad_norm,
            savings_vs_iretr_d_pct: None,
        });
    }
    let d_nfe = rows
        .iter()
        .find(|r| r.solver == SolverKind::IretrD)
        .map(|r| r.mean_nfe);
    if let Some(d) = d_nfe {
        for row in &mut rows {
            if row.solver != SolverKind::IretrD && row.mean_nfe > 0.0 {
                row.savings_vs_iretr_d_pct = Some(100.0 * (1.0 - d / row.mean_nfe));
            }
        }
    }
    rows
}

/// Distance to a known minimizer along the accepted iterates, with the
/// convergence-order diagnostics e_k/e_{k-1} and e_k/e_{k-1}².
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatePoint {
    pub k: usize,
    /// e_k = ‖x_k - x*‖.
    pub error: f64,
    /// e_k/e_{k-1}; 0 at k = 0 and when the previous error was 0.
    pub linear_ratio: f64,
    /// e_k/e_{k-1}²; 0 under the same conventions.
    pub quadratic_ratio: f64,
}

/// Computes the error sequence of a run against a known minimizer. The
/// run must have been made with `record_iterates` enabled.
pub fn rate_probe(run: &RunResult, x_star: ArrayView1<'_, f64>) -> Result<Vec<RatePoint>> {
    if run.iterates.is_empty() {
        return Err(Error::invalid(
            "run recorded no iterates; enable record_iterates to probe rates",
        ));
    }
    let mut points = Vec::with_capacity(run.iterates.len());
    let mut prev: Option<f64> = None;
    for (k, x) in run.iterates.iter().enumerate() {
        if x.len() != x_star.len() {
            return Err(Error::invalid(format!(
                "iterate dimension {} does not match minimizer dimension {}",
                x.len(),
                x_star.len()
            )));
        }
        let diff = x - &x_star;
        let error = diff.dot(&diff).sqrt();
        let (linear_ratio, quadratic_ratio) = match prev {
            Some(e) if e > 0.0 => (error / e, error / (e * e)),
            _ => (0.0, 0.0),
        };
        points.push(RatePoint {
            k,
            error,
            linear_ratio,
            quadratic_ratio,
        });
        prev = Some(error);
    }
    Ok(points)
}

/// Report file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

#[derive(Serialize)]
struct TrajRow<'a> {
    solver: &'static str,
    rep: usize,
    seed: u64,
    #[serde(flatten)]
    record: &'a IterRecord,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    experiment: &'a str,
    rng_algorithm: &'a str,
    base_seed: u64,
    n_components: usize,
    dim: usize,
    rows: &'a [ComparisonRow],
    warnings: &'a [String],
}

#[derive(Serialize)]
struct TrajectoryDoc<'a> {
    experiment: &'a str,
    records: Vec<TrajRow<'a>>,
}

fn traj_rows(results: &ExperimentResults) -> Vec<TrajRow<'_>> {
    let mut out = Vec::new();
    for sr in &results.runs {
        for rr in &sr.runs {
            for rec in &rr.result.trajectory {
                out.push(TrajRow {
                    solver: sr.solver.name(),
                    rep: rr.rep,
                    seed: rr.seed,
                    record: rec,
                });
            }
        }
    }
    out
}

/// Writes `{stem}_summary.{ext}` and `{stem}_trajectory.{ext}` next to the
/// given output stem, creating parent directories as needed, and returns
/// the paths written. CSV files carry a header line even when there are
/// no data rows. All numbers use the shortest exact decimal form, so
/// identical results produce identical bytes.
pub fn emit_metrics(
    results: &ExperimentResults,
    rows: &[ComparisonRow],
    format: OutputFormat,
    out_stem: &Path,
) -> Result<Vec<PathBuf>> {
    let name = out_stem
        .file_name()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::invalid(format!("output stem {out_stem:?} has no file name")))?;
    let parent = out_stem.parent().unwrap_or_else(|| Path::new(""));
    if !parent.as_os_str().is_empty() {
        fs::create_dir_all(parent)?;
    }
    let ext = format.name();
    let summary_path = parent.join(format!("{name}_summary.{ext}"));
    let trajectory_path = parent.join(format!("{name}_trajectory.{ext}"));

    let (summary, trajectory) = match format {
        OutputFormat::Csv => {
            let mut s = String::from(
                "dataset,solver,runs,mean_nfe,std_nfe,mean_iterations,std_iterations,mean_final_f,mean_final_grad_norm,savings_vs_iretr_d_pct\n",
            );
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.dataset,
                    r.solver,
                    r.runs,
                    r.mean_nfe,
                    r.std_nfe,
                    r.mean_iterations,
                    r.std_iterations,
                    r.mean_final_f,
                    r.mean_final_grad_norm,
                    fmt_opt(r.savings_vs_iretr_d_pct)
                ));
            }
            let mut t = String::from(
                "solver,rep,seed,k,n_k,n_tilde,n_next,d_next,theta,delta,f_train,f_test,grad_norm,cum_nfe\n",
            );
            for row in traj_rows(results) {
                let rec = row.record;
                t.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    row.solver,
                    row.rep,
                    row.seed,
                    rec.k,
                    rec.n_k,
                    rec.n_tilde,
                    rec.n_next,
                    rec.d_next,
                    rec.theta,
                    rec.delta_used,
                    rec.f_val,
                    fmt_opt(rec.f_test),
                    rec.grad_norm,
                    rec.cum_nfe
                ));
            }
            (s, t)
        }
        OutputFormat::Json => {
            let summary = SummaryDoc {
                experiment: &results.name,
                rng_algorithm: results.rng_algorithm,
                base_seed: results.base_seed,
                n_components: results.n_components,
                dim: results.dim,
                rows,
                warnings: &results.warnings,
            };
            let trajectory = TrajectoryDoc {
                experiment: &results.name,
                records: traj_rows(results),
            };
            let mut s = serde_json::to_string_pretty(&summary)
                .map_err(|e| Error::invalid(format!("summary serialization failed: {e}")))?;
            let mut t = serde_json::to_string_pretty(&trajectory)
                .map_err(|e| Error::invalid(format!("trajectory serialization failed: {e}")))?;
            s.push('\n');
            t.push('\n');
            (s, t)
        }
    };
    fs::write(&summary_path, summary)?;
    fs::write(&trajectory_path, trajectory)?;
    Ok(vec![summary_path, trajectory_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::NfeLedger;
    use crate::solver::Termination;

    fn quad_spec(name: &str, solvers: Vec<SolverKind>) -> ExperimentSpec {
        ExperimentSpec {
            name: name.into(),
            source: ProblemSource::SynthQuadratic {
                n: 120,
                dim: 4,
                lambda_min: 1.0,
                lambda_max: 2.0,
            },
            loss: LossFamily::LogisticL2,
            solvers,
            repetitions: 2,
            base_seed: 42,
            train_fraction: 1.0,
            config: SolverConfig {
                phi: 1e-6,
                ..SolverConfig::default()
            },
            out: None,
            format: OutputFormat::Csv,
        }
    }

    #[test]
    fn solver_kind_names_round_trip() {
        for kind in SolverKind::ALL {
            assert_eq!(SolverKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(SolverKind::parse("newton").is_err());
    }

    #[test]
    fn spec_validation_catches_mistakes() {
        let ok = quad_spec("ok", vec![SolverKind::IretrD]);
        assert!(ok.validate().is_ok());
        let mut s = quad_spec("x", vec![]);
        assert!(s.validate().is_err());
        s = quad_spec("x", vec![SolverKind::IretrD, SolverKind::IretrD]);
        assert!(s.validate().is_err());
        s = quad_spec("x", vec![SolverKind::IretrD]);
        s.repetitions = 0;
        assert!(s.validate().is_err());
        s = quad_spec("x", vec![SolverKind::IretrD]);
        s.train_fraction = 0.8; // quadratic source cannot split
        assert!(s.validate().is_err());
        s = quad_spec("", vec![SolverKind::IretrD]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn experiment_runs_and_summarizes() {
        let spec = quad_spec("quad", vec![SolverKind::IretrD, SolverKind::StatrFh]);
        let results = run_experiment(&spec).unwrap();
        assert_eq!(results.runs.len(), 2);
        assert!(results.warnings.is_empty());
        assert!(results.x_star.is_some());
        for sr in &results.runs {
            assert_eq!(sr.runs.len(), 2);
            for rr in &sr.runs {
                assert_eq!(rr.seed, 42 + rr.rep as u64);
                rr.result.ledger.audit(1e-12).unwrap();
            }
        }
        let rows = summarize(&results);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].solver, SolverKind::IretrD);
        assert!(rows[0].savings_vs_iretr_d_pct.is_none());
        let fh = &rows[1];
        assert_eq!(fh.solver, SolverKind::StatrFh);
        let saving = fh.savings_vs_iretr_d_pct.unwrap();
        assert!((100.0 * (1.0 - rows[0].mean_nfe / fh.mean_nfe) - saving).abs() < 1e-12);
    }

    #[test]
    fn logistic_experiment_tracks_test_objective() {
        let mut spec = quad_spec("logit", vec![SolverKind::IretrD]);
        spec.source = ProblemSource::SynthLogistic {
            n: 200,
            dim: 5,
            separation: 2.0,
        };
        spec.train_fraction = 0.8;
        spec.config.phi = 1e-3;
        let results = run_experiment(&spec).unwrap();
        let run = &results.runs[0].runs[0].result;
        assert!(!run.trajectory.is_empty());
        for rec in &run.trajectory {
            let ft = rec.f_test.expect("held-out objective should be tracked");
            assert!(ft.is_finite());
        }
        // the split left the training problem with ceil(0.8 * 200) rows
        assert_eq!(results.n_components, 160);
    }

    #[test]
    fn rate_probe_matches_hand_ratios() {
        let run = RunResult {
            termination: Termination::GradTol,
            final_x: Array1::zeros(1),
            final_f: 0.0,
            final_grad_norm: 0.0,
            iterations: 2,
            trajectory: vec![],
            iterates: vec![
                Array1::from_vec(vec![1.0]),
                Array1::from_vec(vec![0.5]),
                Array1::from_vec(vec![0.125]),
            ],
            ledger: NfeLedger::new(10).unwrap(),
            rng_algorithm: Sampler::ALGORITHM,
            seed: 0,
        };
        let x_star = Array1::zeros(1);
        let pts = rate_probe(&run, x_star.view()).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].error, 1.0);
        assert_eq!(pts[0].linear_ratio, 0.0);
        assert_eq!(pts[1].linear_ratio, 0.5);
        assert_eq!(pts[1].quadratic_ratio, 0.5);
        assert_eq!(pts[2].linear_ratio, 0.25);
        assert_eq!(pts[2].quadratic_ratio, 0.5);
    }

    #[test]
    fn rate_probe_zero_error_yields_zero_ratios() {
        let run = RunResult {
            termination: Termination::GradTol,
            final_x: Array1::zeros(2),
            final_f: 0.0,
            final_grad_norm: 0.0,
            iterations: 1,
            trajectory: vec![],
            iterates: vec![Array1::zeros(2), Array1::zeros(2)],
            ledger: NfeLedger::new(10).unwrap(),
            rng_algorithm: Sampler::ALGORITHM,
            seed: 0,
        };
        let x_star = Array1::zeros(2);
        let pts = rate_probe(&run, x_star.view()).unwrap();
        assert_eq!(pts[1].error, 0.0);
        assert_eq!(pts[1].linear_ratio, 0.0);
        assert_eq!(pts[1].quadratic_ratio, 0.0);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let spec = quad_spec("rep", vec![SolverKind::IretrD, SolverKind::StatrSh]);
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for (i, fmt) in [
            (0, OutputFormat::Csv),
            (1, OutputFormat::Csv),
            (2, OutputFormat::Json),
            (3, OutputFormat::Json),
        ] {
            let results = run_experiment(&spec).unwrap();
            let rows = summarize(&results);
            let stem = dir.path().join(format!("out{i}"));
            let paths = emit_metrics(&results, &rows, fmt, &stem).unwrap();
            assert_eq!(paths.len(), 2);
            let pair: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
            bytes.push(pair);
        }
        assert_eq!(
            bytes[0], bytes[1],
            "csv reports differ between identical runs"
        );
        assert_eq!(
            bytes[2], bytes[3],
            "json reports differ between identical runs"
        );
    }

    #[test]
    fn report_ignores_solver_listing_order() {
        let fwd = quad_spec("ord", vec![SolverKind::IretrD, SolverKind::StatrFh]);
        let mut rev = fwd.clone();
        rev.solvers.reverse();
        let dir = tempfile::tempdir().unwrap();
        let mut all = Vec::new();
        for (i, spec) in [fwd, rev].iter().enumerate() {
            let results = run_experiment(spec).unwrap();
            let rows = summarize(&results);
            let stem = dir.path().join(format!("o{i}"));
            let paths = emit_metrics(&results, &rows, OutputFormat::Csv, &stem).unwrap();
            all.push(fs::read(&paths[0]).unwrap());
            all.push(fs::read(&paths[1]).unwrap());
        }
        assert_eq!(all[0], all[2], "summary depends on solver listing order");
        assert_eq!(all[1], all[3], "trajectory depends on solver listing order");
    }

    #[test]
    fn empty_trajectory_emits_header_only() {
        let mut spec = quad_spec("empty", vec![SolverKind::IretrD]);
        spec.config.phi = 1e300; // stops before any step is accepted
        let results = run_experiment(&spec).unwrap();
        let rows = summarize(&results);
        let dir = tempfile::tempdir().unwrap();
        let paths =
            emit_metrics(&results, &rows, OutputFormat::Csv, &dir.path().join("e")).unwrap();
        let traj = fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(traj.lines().count(), 1, "expected only the header line");
        assert!(traj.starts_with("solver,rep,seed,"));
    }

    #[test]
    fn failed_repetitions_become_warnings() {
        // A CSV with a NaN feature makes every run abort.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "label,f1\n1,NaN\n-1,0.5\n").unwrap();
        let mut spec = quad_spec("bad", vec![SolverKind::StatrFh]);
        spec.source = ProblemSource::Csv { path };
        let err = run_experiment(&spec).unwrap_err();
        assert!(matches!(err, Error::AllRunsFailed(2)), "got {err:?}");
    }

    #[test]
    fn format_parse_round_trip() {
        assert_eq!(OutputFormat::parse("csv").unwrap(), OutputFormat::Csv);
        assert_eq!(OutputFormat::parse("json").unwrap(), OutputFormat::Json);
        assert!(OutputFormat::parse("yaml").is_err());
    }
}

//! Subsampled trust-region methods for finite-sum minimization
//!
//! This crate minimizes f_N(x) = (1/N)·Σ φ_i(x) when N is large enough
//! that full evaluations dominate the cost. The central solver treats the
//! sample size as a second decision variable: each iteration restores the
//! sample toward N, relaxes part of that growth in proportion to the
//! trust-region radius, takes a trust-region step on the subsampled
//! model, and accepts or rejects with a penalty-style merit function that
//! balances objective decrease against sample-size feasibility.
//!
//! What lives where:
//! - [`finite_sum`]: the [`finite_sum::Component`] trait and subset
//!   averaging of values, gradients, and Hessian products.
//! - [`losses`]: logistic regression with L2 ridge and sigmoid least
//!   squares over a dataset.
//! - [`data`]: sparse/dense dataset containers, LIBSVM and CSV loaders,
//!   label remapping, train/test splits, and synthetic generators.
//! - [`schedule`]: the sample-size schedule (restoration, relaxation,
//!   infeasibility h), seeded index draws, and concentration-based
//!   sample-size bounds.
//! - [`subproblem`]: truncated CG for the trust-region subproblem and the
//!   Cauchy point.
//! - [`solver`]: the restoration solver [`solver::iretr_run`] and the
//!   full-objective baseline [`solver::statr_run`].
//! - [`ledger`]: the evaluation-cost ledger (unit = one full pass over
//!   all N components).
//! - [`harness`]: experiment specs, parallel seeded repetitions, cost
//!   summaries, convergence-rate probes, and report files.
//!
//! Every random choice flows from explicit [`schedule::Sampler`] seeds,
//! and sums run in a fixed order, so equal seeds give bitwise-equal runs
//! and reports.

pub mod data;
pub mod error;
pub mod finite_sum;
pub mod harness;
pub mod ledger;
pub mod losses;
pub mod schedule;
pub mod solver;
pub mod subproblem;

pub use error::{Error, Result};
pub use finite_sum::{Component, FiniteSumProblem, SampleSet};
pub use harness::{
    emit_metrics, rate_probe, run_experiment, run_solver, summarize, ComparisonRow,
    ExperimentResults, ExperimentSpec, OutputFormat, ProblemSource, RatePoint, SolverKind,
};
pub use ledger::{EvalKind, LedgerEntry, NfeLedger};
pub use losses::{make_loss, LossFamily, LossSpec};
pub use schedule::{Sampler, ScheduleConfig, SchedulePolicy};
pub use solver::{
    iretr_run, statr_run, HessianMode, IterRecord, RunResult, SolverConfig, Termination,
};

//! The inexact-restoration trust-region driver and the full-sample
//! trust-region baseline.
//!
//! Each outer iteration of [`iretr_run`] performs: restoration (grow the
//! sample toward N), relaxation (trade part of that growth back against
//! the trust-region radius), a trust-region step on the subsampled model,
//! a penalty update, and a merit-based acceptance test. The merit
//! function Ψ(x, M; θ) = θ·f_M(x) + (1-θ)·h(M) couples objective progress
//! with sample-size feasibility; θ is nonincreasing along the run and
//! stays positive.
//!
//! [`statr_run`] is the classical trust-region method on the full
//! objective (full or subsampled Hessian) under the same radius and
//! stopping rules; it is the cost-comparison baseline.

use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_sum::FiniteSumProblem;
use crate::ledger::{EvalKind, NfeLedger};
use crate::schedule::{
    draw_sample, h_eval, hessian_sample, relax_step, restore_step, RelaxContext, Sampler,
    ScheduleConfig,
};
use crate::subproblem::{cauchy_point, steihaug_cg, QuadraticModel};

/// Solver knobs. Defaults are the standard experiment settings.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Initial trust-region radius Δ_0.
    pub delta0: f64,
    /// Fraction-of-Cauchy-decrease parameter in the full-sample gate.
    pub tau: f64,
    /// Acceptance threshold: accept when Ared >= η·Pred.
    pub eta: f64,
    /// Radius shrink factor on rejection.
    pub zeta1: f64,
    /// Radius expansion factor on clearly successful steps.
    pub zeta2: f64,
    /// Initial penalty weight θ_0 ∈ (0, 1].
    pub theta0: f64,
    /// Full-sample gradient threshold of the exact stopping test
    /// (checked only when N_k = N; 0 disables it in practice).
    pub eps_g: f64,
    /// Practical stopping tolerance: stop when the sample gradient norm
    /// drops to φ or successive accepted objective values stall within
    /// relative φ.
    pub phi: f64,
    /// Outer iteration budget.
    pub max_outer: usize,
    /// Expand the radius when Ared/Pred reaches this value.
    pub success_expand_threshold: f64,
    /// Radius floor applied once, the first time N_k = N_{k+1} = N.
    pub radius_reset_floor: f64,
    /// Hard cap on trust-region shrinks within one outer iteration.
    pub shrink_cap: usize,
    /// CG stops at relative residual cg_rel_tol or cg_max_iter products.
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
    /// Sample-size schedule.
    pub schedule: ScheduleConfig,
    /// Starting point; zeros when absent.
    #[serde(skip)]
    pub x0: Option<Array1<f64>>,
    /// Keep accepted iterates in the result (needed by rate probes).
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta0: 10.0,
            tau: 0.1,
            eta: 0.1,
            zeta1: 0.5,
            zeta2: 1.2,
            theta0: 0.9,
            eps_g: 0.0,
            phi: 1e-4,
            max_outer: 1000,
            success_expand_threshold: 1.1,
            radius_reset_floor: 1.0,
            shrink_cap: 100,
            cg_rel_tol: 1e-3,
            cg_max_iter: 100,
            schedule: ScheduleConfig::default(),
            x0: None,
            record_iterates: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0) {
            return Err(Error::invalid(format!(
                "delta0 must be positive, got {}",
                self.delta0
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if !(self.zeta1 > 0.0 && self.zeta1 < 1.0) {
            return Err(Error::invalid(format!(
                "zeta1 must lie in (0, 1), got {}",
                self.zeta1
            )));
        }
        if !(self.zeta2 > 1.0) {
            return Err(Error::invalid(format!(
                "zeta2 must exceed 1, got {}",
                self.zeta2
            )));
        }
        if !(self.theta0 > 0.0 && self.theta0 <= 1.0) {
            return Err(Error::invalid(format!(
                "theta0 must lie in (0, 1], got {}",
                self.theta0
            )));
        }
        if !(self.eps_g >= 0.0) || !(self.phi >= 0.0) {
            return Err(Error::invalid("stopping tolerances must be nonnegative"));
        }
        if !(self.success_expand_threshold >= 1.0) {
            return Err(Error::invalid(format!(
                "success_expand_threshold must be >= 1, got {}",
                self.success_expand_threshold
            )));
        }
        if !(self.radius_reset_floor > 0.0) {
            return Err(Error::invalid(format!(
                "radius_reset_floor must be positive, got {}",
                self.radius_reset_floor
            )));
        }
        if self.shrink_cap == 0 {
            return Err(Error::invalid("shrink_cap must be positive"));
        }
        self.schedule.validate()
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A sample gradient norm reached the threshold.
    GradTol,
    /// Successive accepted objective values stalled within relative φ.
    FStall,
    /// The outer iteration budget ran out.
    MaxOuter,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::FStall => "f_stall",
            Termination::MaxOuter => "max_outer",
        }
    }
}

/// One accepted outer iteration.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub k: usize,
    /// Sample size at the start of the iteration.
    pub n_k: usize,
    /// Restored size Ñ_{k+1}.
    pub n_tilde: usize,
    /// Relaxed size N_{k+1} actually used for the step.
    pub n_next: usize,
    /// Hessian subsample size D_{k+1}.
    pub d_next: usize,
    /// Penalty θ_{k+1} after the update.
    pub theta: f64,
    /// Radius in effect for the accepted pass.
    pub delta_used: f64,
    /// Radius carried into the next iteration.
    pub delta_next: f64,
    /// Shrinks spent in this iteration before acceptance.
    pub shrinks: usize,
    /// f_{N_{k+1}}(x_{k+1}), the new accepted objective value.
    pub f_val: f64,
    /// ‖∇f_{N_{k+1}}(x_k)‖ of the accepted pass.
    pub grad_norm: f64,
    /// ‖∇f_N(x_k)‖ when the refined full-sample rule computed it.
    pub full_grad_norm: Option<f64>,
    /// Predicted merit reduction at θ_{k+1}.
    pub pred: f64,
    /// Achieved merit reduction at θ_{k+1}.
    pub ared: f64,
    pub cg_iterations: usize,
    /// Ledger total after this iteration.
    pub cum_nfe: f64,
    /// Full objective on the held-out problem, when one was supplied.
    pub f_test: Option<f64>,
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub termination: Termination,
    pub final_x: Array1<f64>,
    /// Objective over the final accepted sample at the final iterate.
    pub final_f: f64,
    /// Most recent sample-gradient norm.
    pub final_grad_norm: f64,
    /// Accepted outer iterations.
    pub iterations: usize,
    pub trajectory: Vec<IterRecord>,
    /// Accepted iterates x_0, …, x_K when recording was enabled.
    pub iterates: Vec<Array1<f64>>,
    pub ledger: NfeLedger,
    /// Identifier of the index-stream generator.
    pub rng_algorithm: &'static str,
    pub seed: u64,
}

impl RunResult {
    pub fn nfe_total(&self) -> f64 {
        self.ledger.total()
    }
}

/// Merit Ψ = θ·f + (1-θ)·h.
pub fn merit(theta: f64, f_val: f64, h_val: f64) -> f64 {
    theta * f_val + (1.0 - theta) * h_val
}

/// Predicted merit reduction
/// θ·(f_{N_k}(x_k) - m(p)) + (1-θ)·(h(N_k) - h(Ñ_{k+1})).
pub fn pred_reduction(theta: f64, f_k: f64, m_p: f64, h_k: f64, h_tilde: f64) -> f64 {
    theta * (f_k - m_p) + (1.0 - theta) * (h_k - h_tilde)
}

/// Achieved merit reduction
/// θ·(f_{N_k}(x_k) - f_{N_{k+1}}(x_k + p)) + (1-θ)·(h(N_k) - h(N_{k+1})).
pub fn ared_reduction(theta: f64, f_k: f64, f_trial: f64, h_k: f64, h_next: f64) -> f64 {
    theta * (f_k - f_trial) + (1.0 - theta) * (h_k - h_next)
}

/// Penalty update: keep θ_k when Pred(θ_k) >= η·(h(N_k) - h(Ñ)), else
/// the largest θ restoring that bound,
/// (1-η)(h(N_k) - h(Ñ)) / (m(p) - f_{N_k}(x_k) + h(N_k) - h(Ñ)).
/// A zero h-gap keeps θ_k. The result never exceeds θ_k and stays
/// positive whenever the h-gap is positive.
pub fn update_penalty(
    theta_k: f64,
    f_k: f64,
    m_p: f64,
    h_k: f64,
    h_tilde: f64,
    eta: f64,
) -> Result<f64> {
    if !(theta_k > 0.0 && theta_k <= 1.0) {
        return Err(Error::invalid(format!(
            "theta must lie in (0, 1], got {theta_k}"
        )));
    }
    if !(h_k >= h_tilde && h_tilde >= 0.0) {
        return Err(Error::invalid(format!(
            "need h(N_k) >= h(Ñ) >= 0, got {h_k} and {h_tilde}"
        )));
    }
    if !(f_k.is_finite() && m_p.is_finite()) {
        return Err(Error::invalid("merit inputs must be finite"));
    }
    let hdiff = h_k - h_tilde;
    if hdiff == 0.0 {
        return Ok(theta_k);
    }
    if pred_reduction(theta_k, f_k, m_p, h_k, h_tilde) >= eta * hdiff {
        return Ok(theta_k);
    }
    let denom = m_p - f_k + hdiff;
    if denom <= 0.0 {
        // the first branch already covers every input with this sign
        return Err(Error::InternalInvariant(format!(
            "penalty denominator {denom} not positive with hdiff {hdiff}"
        )));
    }
    Ok((1.0 - eta) * hdiff / denom)
}

/// Full-sample gate: once feasible (N_k = N), a step that drops the
/// sample is allowed only if it keeps a τ-fraction of the Cauchy decrease
/// measured against the full objective:
/// f_N(x_k) - m(p) >= τ·(m(0) - m(p_C)).
pub fn step3_gate(f_full: f64, m_p: f64, m_0: f64, m_cauchy: f64, tau: f64) -> bool {
    f_full - m_p >= tau * (m_0 - m_cauchy)
}

/// Acceptance: Ared >= η·Pred.
pub fn accept_test(ared: f64, pred: f64, eta: f64) -> bool {
    ared >= eta * pred
}

/// What happened to the step, for the radius rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Rejected,
    Accepted { ratio: f64 },
}

/// Radius rule: rejection shrinks by ζ_1; acceptance with
/// ratio >= success_expand_threshold expands by ζ_2, otherwise keeps Δ.
pub fn radius_update(delta: f64, outcome: StepOutcome, cfg: &SolverConfig) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {delta}"
        )));
    }
    Ok(match outcome {
        StepOutcome::Rejected => cfg.zeta1 * delta,
        StepOutcome::Accepted { ratio } => {
            if ratio >= cfg.success_expand_threshold {
                cfg.zeta2 * delta
            } else {
                delta
            }
        }
    })
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn check_finite(value: f64, iteration: usize, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            iteration,
            quantity: what,
        })
    }
}

fn starting_point(cfg: &SolverConfig, dim: usize) -> Result<Array1<f64>> {
    match &cfg.x0 {
        None => Ok(Array1::zeros(dim)),
        Some(x) if x.len() == dim => Ok(x.clone()),
        Some(x) => Err(Error::invalid(format!(
            "starting point has dimension {}, problem has {}",
            x.len(),
            dim
        ))),
    }
}

/// Per-iteration cache of full-sample quantities at the current iterate,
/// so repeated relaxations to N within one iteration charge nothing new.
struct FullCache {
    f: f64,
    grad: Option<Array1<f64>>,
}

/// Runs the inexact-restoration trust-region method.
///
/// `test_problem`, when given, is evaluated (uncharged) over its full
/// sample at every accepted iterate and recorded as `f_test`.
pub fn iretr_run(
    problem: &FiniteSumProblem,
    cfg: &SolverConfig,
    sampler: &mut Sampler,
    test_problem: Option<&FiniteSumProblem>,
) -> Result<RunResult> {
    cfg.validate()?;
    let n = problem.n_components();
    let dim = problem.dim();
    let full_set = problem.full_sample();
    let n0 = cfg.schedule.initial_sample(n);

    let mut ledger = NfeLedger::new(n)?;
    let mut x = starting_point(cfg, dim)?;
    let mut n_k = n0;
    let s0 = draw_sample(n0, n, sampler)?;
    let mut f_k = problem.eval_f(x.view(), &s0)?;
    ledger.charge(EvalKind::FEval, n0)?;
    check_finite(f_k, 0, "objective")?;
    let mut theta = cfg.theta0;
    let mut delta = cfg.delta0;
    let mut f_prev: Option<f64> = None;
    let mut radius_reset_done = false;
    let mut last_grad_norm = f64::NAN;
    let mut termination = Termination::MaxOuter;
    let mut trajectory: Vec<IterRecord> = Vec::new();
    let mut iterates: Vec<Array1<f64>> = Vec::new();
    if cfg.record_iterates {
        iterates.push(x.clone());
    }

    'outer: for k in 0..cfg.max_outer {
        if let Some(fp) = f_prev {
            if (f_k - fp).abs() <= cfg.phi * f_k.abs() {
                termination = Termination::FStall;
                break 'outer;
            }
        }

        // restoration: grow the sample toward the full set
        let n_tilde = restore_step(n_k, n, cfg.schedule.growth)?;
        let h_k = h_eval(n_k, n)?;
        let h_tilde = h_eval(n_tilde, n)?;

        // Full-sample quantities at x_k are reusable across the whole
        // iteration: the full index set never changes between draws, and
        // when N_k = N the accepted f value is exactly f_N(x_k).
        let mut full_cache: Option<FullCache> = if n_k == n {
            Some(FullCache { f: f_k, grad: None })
        } else {
            None
        };

        // The refined relaxation rule consults ‖∇f_N(x_k)‖ once feasible.
        let full_grad_norm: Option<f64> = if cfg.schedule.refined_full_rule && n_k == n {
            let cache = full_cache.as_mut().expect("n_k == n sets the cache");
            let g = problem.eval_grad(x.view(), &full_set)?; // f was charged here
            let gn = norm(&g);
            check_finite(gn, k, "gradient")?;
            cache.grad = Some(g);
            Some(gn)
        } else {
            None
        };

        let mut shrinks = 0usize;
        'inner: loop {
            // relaxation: give back as much as the radius justifies
            let n_next = relax_step(
                n_tilde,
                delta,
                &cfg.schedule,
                n0,
                n,
                RelaxContext {
                    n_k,
                    full_grad_norm,
                },
            )?;

            // One-time radius floor on first reaching N_k = N_{k+1} = N.
            if !radius_reset_done && n_k == n && n_next == n {
                delta = delta.max(cfg.radius_reset_floor);
                radius_reset_done = true;
            }

            let (s_next, f_at_x, g_model) = if n_next == n {
                let cache = match &mut full_cache {
                    Some(c) => c,
                    None => {
                        let f = problem.eval_f(x.view(), &full_set)?;
                        ledger.charge(EvalKind::FEval, n)?;
                        full_cache = Some(FullCache { f, grad: None });
                        full_cache.as_mut().expect("just set")
                    }
                };
                if cache.grad.is_none() {
                    // gradient right after f at the same (point, sample): free
                    cache.grad = Some(problem.eval_grad(x.view(), &full_set)?);
                }
                (
                    full_set.clone(),
                    cache.f,
                    cache.grad.clone().expect("just set"),
                )
            } else {
                let s = draw_sample(n_next, n, sampler)?;
                let f = problem.eval_f(x.view(), &s)?;
                ledger.charge(EvalKind::FEval, n_next)?;
                let g = problem.eval_grad(x.view(), &s)?; // free after f
                (s, f, g)
            };
            check_finite(f_at_x, k, "objective")?;
            let grad_norm = check_finite(norm(&g_model), k, "gradient")?;
            last_grad_norm = grad_norm;

            // Stopping on the sample gradient (exact test needs N_k = N).
            if grad_norm <= cfg.phi || (n_k == n && grad_norm <= cfg.eps_g) {
                termination = Termination::GradTol;
                break 'outer;
            }

            let s_d = hessian_sample(&s_next, cfg.schedule.hessian_fraction, sampler)?;
            let d_next = s_d.len();

            let model = QuadraticModel::new(f_at_x, g_model.clone(), |v| {
                problem
                    .hess_vec(x.view(), v, &s_d)
                    .expect("hessian sample and point were validated")
            });
            let sol = steihaug_cg(&model, delta, cfg.cg_rel_tol, cfg.cg_max_iter)?;
            for _ in 0..sol.cg_iterations {
                ledger.charge(EvalKind::CgIter, d_next)?;
            }
            let m_p = f_at_x - sol.model_decrease;

            // full-sample gate against the Cauchy decrease
            if n_k == n && n_next < n {
                let p_c = cauchy_point(&model, delta)?;
                let cauchy_dec = model.decrease(p_c.view());
                let f_full = full_cache.as_ref().expect("n_k == n sets the cache").f;
                if !step3_gate(f_full, m_p, f_at_x, f_at_x - cauchy_dec, cfg.tau) {
                    drop(model);
                    delta = radius_update(delta, StepOutcome::Rejected, cfg)?;
                    shrinks += 1;
                    if shrinks > cfg.shrink_cap {
                        return Err(Error::ShrinkCapExceeded {
                            iteration: k,
                            cap: cfg.shrink_cap,
                        });
                    }
                    continue 'inner;
                }
            }
            drop(model);

            // penalty update
            let theta_next = update_penalty(theta, f_k, m_p, h_k, h_tilde, cfg.eta)?;

            // merit-based acceptance
            let x_trial = &x + &sol.p;
            let f_trial = problem.eval_f(x_trial.view(), &s_next)?;
            ledger.charge(EvalKind::FEval, n_next)?;
            check_finite(f_trial, k, "objective")?;
            let h_next = h_eval(n_next, n)?;
            let pred = pred_reduction(theta_next, f_k, m_p, h_k, h_tilde);
            let ared = ared_reduction(theta_next, f_k, f_trial, h_k, h_next);

            if accept_test(ared, pred, cfg.eta) {
                let ratio = if pred > 0.0 { ared / pred } else { 1.0 };
                let delta_used = delta;
                let delta_next = radius_update(delta, StepOutcome::Accepted { ratio }, cfg)?;
                let f_test = match test_problem {
                    Some(tp) => Some(tp.eval_f(x_trial.view(), &tp.full_sample())?),
                    None => None,
                };
                trajectory.push(IterRecord {
                    k,
                    n_k,
                    n_tilde,
                    n_next,
                    d_next,
                    theta: theta_next,
                    delta_used,
                    delta_next,
                    shrinks,
                    f_val: f_trial,
                    grad_norm,
                    full_grad_norm,
                    pred,
                    ared,
                    cg_iterations: sol.cg_iterations,
                    cum_nfe: ledger.total(),
                    f_test,
                });
                f_prev = Some(f_k);
                x = x_trial;
                f_k = f_trial;
                n_k = n_next;
                theta = theta_next;
                delta = delta_next;
                if cfg.record_iterates {
                    iterates.push(x.clone());
                }
                continue 'outer;
            }

            delta = radius_update(delta, StepOutcome::Rejected, cfg)?;
            shrinks += 1;
            if shrinks > cfg.shrink_cap {
                return Err(Error::ShrinkCapExceeded {
                    iteration: k,
                    cap: cfg.shrink_cap,
                });
            }
        }
    }

    Ok(RunResult {
        termination,
        final_x: x,
        final_f: f_k,
        final_grad_norm: last_grad_norm,
        iterations: trajectory.len(),
        trajectory,
        iterates,
        ledger,
        rng_algorithm: Sampler::ALGORITHM,
        seed: sampler.seed(),
    })
}

/// How the baseline builds its Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HessianMode {
    /// B is the full Hessian (D = N).
    Full,
    /// B averages a fresh uniform subsample of the given fraction of N
    /// each outer iteration.
    Subsampled(f64),
}

/// Classical trust-region method on the full objective f_N with the
/// standard ratio test; the baseline for cost comparisons. Rejections
/// re-solve the same model under a smaller radius (no re-evaluation of f
/// or the gradient at x_k).
pub fn statr_run(
    problem: &FiniteSumProblem,
    cfg: &SolverConfig,
    mode: HessianMode,
    sampler: &mut Sampler,
    test_problem: Option<&FiniteSumProblem>,
) -> Result<RunResult> {
    cfg.validate()?;
    if let HessianMode::Subsampled(fraction) = mode {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "hessian fraction must lie in (0, 1], got {fraction}"
            )));
        }
    }
    let n = problem.n_components();
    let dim = problem.dim();
    let full_set = problem.full_sample();

    let mut ledger = NfeLedger::new(n)?;
    let mut x = starting_point(cfg, dim)?;
    let mut f_k = problem.eval_f(x.view(), &full_set)?;
    ledger.charge(EvalKind::FEval, n)?;
    check_finite(f_k, 0, "objective")?;
    let mut g = problem.eval_grad(x.view(), &full_set)?; // free after f
    let mut delta = cfg.delta0;
    let mut f_prev: Option<f64> = None;
    let mut last_grad_norm = f64::NAN;
    let mut termination = Termination::MaxOuter;
    let mut trajectory: Vec<IterRecord> = Vec::new();
    let mut iterates: Vec<Array1<f64>> = Vec::new();
    if cfg.record_iterates {
        iterates.push(x.clone());
    }

    'outer: for k in 0..cfg.max_outer {
        if let Some(fp) = f_prev {
            if (f_k - fp).abs() <= cfg.phi * f_k.abs() {
                termination = Termination::FStall;
                break 'outer;
            }
        }
        let grad_norm = check_finite(norm(&g), k, "gradient")?;
        last_grad_norm = grad_norm;
        if grad_norm <= cfg.phi || grad_norm <= cfg.eps_g {
            termination = Termination::GradTol;
            break 'outer;
        }

        let s_d = match mode {
            HessianMode::Full => full_set.clone(),
            HessianMode::Subsampled(fraction) => hessian_sample(&full_set, fraction, sampler)?,
        };
        let d = s_d.len();

        let mut shrinks = 0usize;
        let accepted = loop {
            let model = QuadraticModel::new(f_k, g.clone(), |v| {
                problem
                    .hess_vec(x.view(), v, &s_d)
                    .expect("hessian sample and point were validated")
            });
            let sol = steihaug_cg(&model, delta, cfg.cg_rel_tol, cfg.cg_max_iter)?;
            drop(model);
            for _ in 0..sol.cg_iterations {
                ledger.charge(EvalKind::CgIter, d)?;
            }
            if !(sol.model_decrease > 0.0) {
                return Err(Error::InternalInvariant(format!(
                    "zero model decrease with gradient norm {grad_norm} at iteration {k}"
                )));
            }
            let x_trial = &x + &sol.p;
            let f_trial = problem.eval_f(x_trial.view(), &full_set)?;
            ledger.charge(EvalKind::FEval, n)?;
            check_finite(f_trial, k, "objective")?;
            let ratio = (f_k - f_trial) / sol.model_decrease;

            if ratio >= cfg.eta {
                break (sol, x_trial, f_trial, ratio);
            }
            delta = radius_update(delta, StepOutcome::Rejected, cfg)?;
            shrinks += 1;
            if shrinks > cfg.shrink_cap {
                return Err(Error::ShrinkCapExceeded {
                    iteration: k,
                    cap: cfg.shrink_cap,
                });
            }
        };

        let (sol, x_trial, f_trial, ratio) = accepted;
        let delta_used = delta;
        let delta_next = radius_update(delta, StepOutcome::Accepted { ratio }, cfg)?;
        let f_test = match test_problem {
            Some(tp) => Some(tp.eval_f(x_trial.view(), &tp.full_sample())?),
            None => None,
        };
        trajectory.push(IterRecord {
            k,
            n_k: n,
            n_tilde: n,
            n_next: n,
            d_next: d,
            theta: 1.0,
            delta_used,
            delta_next,
            shrinks,
            f_val: f_trial,
            grad_norm,
            full_grad_norm: Some(grad_norm),
            pred: sol.model_decrease,
            ared: f_k - f_trial,
            cg_iterations: sol.cg_iterations,
            cum_nfe: ledger.total(),
            f_test,
        });
        f_prev = Some(f_k);
        x = x_trial;
        f_k = f_trial;
        delta = delta_next;
        g = problem.eval_grad(x.view(), &full_set)?; // free after the trial f
        if cfg.record_iterates {
            iterates.push(x.clone());
        }
    }

    Ok(RunResult {
        termination,
        final_x: x,
        final_f: f_k,
        final_grad_norm: last_grad_norm,
        iterations: trajectory.len(),
        trajectory,
        iterates,
        ledger,
        rng_algorithm: Sampler::ALGORITHM,
        seed: sampler.seed(),
    })
}

//! Sample-size scheduling: infeasibility, restoration, relaxation, index
//! draws, and worst-case sample-size bounds.
//!
//! The schedule treats the sample size M as a constrained variable with
//! infeasibility h(M) = (N - M)/N. Restoration proposes a larger sample
//! Ñ_{k+1}; relaxation may trade part of that gain back for expected
//! progress, controlled by the trust-region radius. Two policies are
//! implemented: `dynamic` (radius-coupled, can shrink the sample) and
//! `geometric` (monotone growth, never trades back).

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_sum::SampleSet;

/// Infeasibility of a sample size M against a total of N components:
/// h(M) = (N - M)/N. Requires 1 <= M <= N.
pub fn h_eval(m: usize, n_total: usize) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::invalid("total component count must be positive"));
    }
    if m == 0 || m > n_total {
        return Err(Error::invalid(format!(
            "sample size {m} outside [1, {n_total}]"
        )));
    }
    Ok((n_total - m) as f64 / n_total as f64)
}

/// The infeasibility measure over {1, …, N} with its attained bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Infeasibility {
    n_total: usize,
}

impl Infeasibility {
    pub fn new(n_total: usize) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::invalid("total component count must be positive"));
        }
        Ok(Infeasibility { n_total })
    }

    pub fn eval(&self, m: usize) -> Result<f64> {
        h_eval(m, self.n_total)
    }

    /// Smallest nonzero value, attained at M = N-1. Needs N >= 2.
    pub fn min_nonzero(&self) -> Result<f64> {
        if self.n_total < 2 {
            return Err(Error::invalid("h has no nonzero values when N = 1"));
        }
        Ok(1.0 / self.n_total as f64)
    }

    /// Largest value, attained at M = 1.
    pub fn max(&self) -> f64 {
        (self.n_total - 1) as f64 / self.n_total as f64
    }
}

/// How relaxation picks N_{k+1} from Ñ_{k+1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Radius-coupled: N_{k+1} = ⌈Ñ - relax_scale·Δ^{1+γ}⌉, clamped.
    Dynamic,
    /// Monotone: N_{k+1} = Ñ.
    Geometric,
}

impl SchedulePolicy {
    pub fn name(self) -> &'static str {
        match self {
            SchedulePolicy::Dynamic => "dynamic",
            SchedulePolicy::Geometric => "geometric",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(SchedulePolicy::Dynamic),
            "geometric" => Ok(SchedulePolicy::Geometric),
            other => Err(Error::invalid(format!(
                "unknown schedule policy `{other}` (expected dynamic or geometric)"
            ))),
        }
    }
}

impl std::fmt::Display for SchedulePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs of the sample-size schedule. Defaults are the standard
/// experiment settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub policy: SchedulePolicy,
    /// Restoration growth factor; must exceed 1 so restoration strictly
    /// increases any sample below N.
    pub growth: f64,
    /// Exponent offset in the relaxation budget Δ^{1+γ}.
    pub gamma: f64,
    /// Scale of the relaxation budget in index units; μ = relax_scale/N.
    pub relax_scale: f64,
    /// Initial sample is max{1, ⌈n0_fraction·N⌉}.
    pub n0_fraction: f64,
    /// Dynamic candidates above upper_guard·N snap to N.
    pub upper_guard: f64,
    /// Hessian subsample size is max{1, ⌈hessian_fraction·N_{k+1}⌉}.
    pub hessian_fraction: f64,
    /// When the sample is full, additionally require
    /// h(N_{k+1}) <= min{μΔ^{1+γ}, ‖∇f_N(x_k)‖}, which pins the sample at
    /// N once the full gradient drops below 1/N.
    pub refined_full_rule: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            policy: SchedulePolicy::Dynamic,
            growth: 1.2,
            gamma: 1.0,
            relax_scale: 100.0,
            n0_fraction: 0.1,
            upper_guard: 0.95,
            hessian_fraction: 0.1,
            refined_full_rule: false,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.growth > 1.0) {
            return Err(Error::invalid(format!(
                "growth must exceed 1, got {}",
                self.growth
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.relax_scale >= 0.0) {
            return Err(Error::invalid(format!(
                "relax_scale must be nonnegative, got {}",
                self.relax_scale
            )));
        }
        if !(self.n0_fraction > 0.0 && self.n0_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "n0_fraction must lie in (0, 1], got {}",
                self.n0_fraction
            )));
        }
        if !(self.upper_guard > 0.0 && self.upper_guard <= 1.0) {
            return Err(Error::invalid(format!(
                "upper_guard must lie in (0, 1], got {}",
                self.upper_guard
            )));
        }
        if !(self.hessian_fraction > 0.0 && self.hessian_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "hessian_fraction must lie in (0, 1], got {}",
                self.hessian_fraction
            )));
        }
        Ok(())
    }

    /// The relaxation budget coefficient μ for a problem with N
    /// components: relax_scale/N under the dynamic policy, 0 under the
    /// geometric policy (which never trades sample size back).
    pub fn mu(&self, n_total: usize) -> f64 {
        match self.policy {
            SchedulePolicy::Dynamic => self.relax_scale / n_total as f64,
            SchedulePolicy::Geometric => 0.0,
        }
    }

    /// N_0 = max{1, ⌈n0_fraction·N⌉}.
    pub fn initial_sample(&self, n_total: usize) -> usize {
        ((self.n0_fraction * n_total as f64).ceil() as usize).clamp(1, n_total)
    }

    /// D = max{1, ⌈hessian_fraction·M⌉} for a gradient sample of size M.
    pub fn hessian_size(&self, m: usize) -> usize {
        ((self.hessian_fraction * m as f64).ceil() as usize).clamp(1, m)
    }
}

/// Restoration: Ñ_{k+1} = min{N, ⌈growth·N_k⌉}.
///
/// With growth > 1 the result strictly exceeds N_k whenever N_k < N, so
/// h(Ñ_{k+1}) <= r·h(N_k) holds with r = (N - 0.2)/N.
pub fn restore_step(n_k: usize, n_total: usize, growth: f64) -> Result<usize> {
    if n_k == 0 || n_k > n_total {
        return Err(Error::invalid(format!(
            "N_k = {n_k} outside [1, {n_total}]"
        )));
    }
    if !(growth > 1.0) {
        return Err(Error::invalid(format!(
            "growth must exceed 1, got {growth}"
        )));
    }
    Ok(((growth * n_k as f64).ceil() as usize).min(n_total))
}

/// State relaxation consults when the current sample is full.
#[derive(Debug, Clone, Copy)]
pub struct RelaxContext {
    /// N_k, the sample size of the current accepted iterate.
    pub n_k: usize,
    /// ‖∇f_N(x_k)‖; required when n_k = N and the refined rule is on.
    pub full_grad_norm: Option<f64>,
}

/// Relaxation: picks N_{k+1} from the restored size Ñ_{k+1} and the
/// current trust-region radius.
///
/// Dynamic policy: candidate ⌈Ñ - relax_scale·Δ^{1+γ}⌉ is used when it
/// lies in [N_0, upper_guard·N]; below the window the step is skipped
/// (N_{k+1} = Ñ), above it the sample snaps to N. Geometric policy:
/// N_{k+1} = Ñ. Either way h(N_{k+1}) - h(Ñ) <= μΔ^{1+γ}.
///
/// With `refined_full_rule` and a full current sample the result is
/// additionally raised until h(N_{k+1}) <= min{μΔ^{1+γ}, ‖∇f_N(x_k)‖};
/// a full gradient norm below 1/N therefore forces N_{k+1} = N.
pub fn relax_step(
    n_tilde: usize,
    delta: f64,
    cfg: &ScheduleConfig,
    n0: usize,
    n_total: usize,
    ctx: RelaxContext,
) -> Result<usize> {
    cfg.validate()?;
    if n_tilde == 0 || n_tilde > n_total {
        return Err(Error::invalid(format!(
            "Ñ = {n_tilde} outside [1, {n_total}]"
        )));
    }
    if n0 == 0 || n0 > n_total {
        return Err(Error::invalid(format!("N_0 = {n0} outside [1, {n_total}]")));
    }
    if ctx.n_k == 0 || ctx.n_k > n_total {
        return Err(Error::invalid(format!(
            "N_k = {} outside [1, {n_total}]",
            ctx.n_k
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {delta}"
        )));
    }
    let full = ctx.n_k == n_total;
    if cfg.refined_full_rule && full && ctx.full_grad_norm.is_none() {
        return Err(Error::invalid(
            "refined full-sample rule needs the full gradient norm when N_k = N",
        ));
    }

    let mut result = match cfg.policy {
        SchedulePolicy::Geometric => n_tilde,
        SchedulePolicy::Dynamic => {
            let candidate = (n_tilde as f64 - cfg.relax_scale * delta.powf(1.0 + cfg.gamma)).ceil();
            if candidate < n0 as f64 {
                n_tilde
            } else if candidate > cfg.upper_guard * n_total as f64 {
                n_total
            } else {
                candidate as usize
            }
        }
    };

    if cfg.refined_full_rule && full {
        let gnorm = ctx.full_grad_norm.expect("checked above");
        if !(gnorm >= 0.0) {
            return Err(Error::invalid(format!(
                "gradient norm must be >= 0, got {gnorm}"
            )));
        }
        let budget = (cfg.mu(n_total) * delta.powf(1.0 + cfg.gamma)).min(gnorm);
        // h(m) <= budget  ⇔  m >= N(1 - budget)
        let floor = (n_total as f64 * (1.0 - budget)).ceil() as usize;
        result = result.max(floor.min(n_total));
    }

    Ok(result)
}

/// Deterministic index-stream source for every random draw in the crate.
///
/// Identical seeds yield identical streams. The generator is ChaCha with
/// 8 rounds; its identifier travels with run metadata so reports name the
/// stream they used.
pub struct Sampler {
    rng: ChaCha8Rng,
    seed: u64,
}

impl Sampler {
    /// Algorithm identifier recorded in run metadata.
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn from_seed(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A standard normal vector of length `dim`.
    pub fn standard_normal(&mut self, dim: usize) -> Array1<f64> {
        use rand::Rng;
        Array1::from_iter((0..dim).map(|_| self.rng.sample::<f64, _>(rand_distr::StandardNormal)))
    }
}

impl std::fmt::Debug for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sampler")
            .field("algorithm", &Self::ALGORITHM)
            .field("seed", &self.seed)
            .finish()
    }
}

/// Draws M of N indices uniformly without replacement, sorted ascending.
/// M = N returns the full index set.
pub fn draw_sample(m: usize, n_total: usize, sampler: &mut Sampler) -> Result<SampleSet> {
    if m == 0 || m > n_total {
        return Err(Error::invalid(format!(
            "sample size {m} outside [1, {n_total}]"
        )));
    }
    let mut indices: Vec<usize> = rand::seq::index::sample(sampler.rng(), n_total, m).into_vec();
    indices.sort_unstable();
    SampleSet::new(indices)
}

/// Draws the Hessian subsample: max{1, ⌈fraction·M⌉} indices uniformly
/// from the gradient sample S, sorted ascending. Always a subset of S.
pub fn hessian_sample(s: &SampleSet, fraction: f64, sampler: &mut Sampler) -> Result<SampleSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let m = s.len();
    let d = ((fraction * m as f64).ceil() as usize).clamp(1, m);
    let mut indices: Vec<usize> = rand::seq::index::sample(sampler.rng(), m, d)
        .into_iter()
        .map(|pos| s.indices()[pos])
        .collect();
    indices.sort_unstable();
    SampleSet::new(indices)
}

/// Worst-case gradient sample size for accuracy χ with confidence 1-p:
/// min{N, ⌈(2/χ)(V/χ + 2ζ/3)·ln((n+1)/p)⌉}, at least 1.
pub fn gradient_sample_bound(
    chi: f64,
    p_fail: f64,
    variance: f64,
    zeta: f64,
    dim: usize,
    n_total: usize,
) -> Result<usize> {
    if !(chi > 0.0) {
        return Err(Error::invalid(format!(
            "accuracy must be positive, got {chi}"
        )));
    }
    if !(p_fail > 0.0 && p_fail < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability must lie in (0,1), got {p_fail}"
        )));
    }
    if !(variance >= 0.0) || !(zeta > 0.0) {
        return Err(Error::invalid(
            "variance must be >= 0 and the range bound positive",
        ));
    }
    if dim == 0 || n_total == 0 {
        return Err(Error::invalid("dimension and N must be positive"));
    }
    let raw =
        (2.0 / chi) * (variance / chi + 2.0 * zeta / 3.0) * ((dim as f64 + 1.0) / p_fail).ln();
    Ok((raw.ceil() as usize).clamp(1, n_total))
}

/// Worst-case Hessian sample size for accuracy ξ with confidence 1-p:
/// min{N, ⌈(2/ξ)(λ²/ξ + λ/3)·ln(2n/p)⌉}, at least 1. λ is the spectral
/// bound of the component Hessians.
pub fn hessian_sample_bound(
    xi: f64,
    p_fail: f64,
    lambda_max: f64,
    dim: usize,
    n_total: usize,
) -> Result<usize> {
    if !(xi > 0.0) {
        return Err(Error::invalid(format!(
            "accuracy must be positive, got {xi}"
        )));
    }
    if !(p_fail > 0.0 && p_fail < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability must lie in (0,1), got {p_fail}"
        )));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::invalid(format!(
            "spectral bound must be positive, got {lambda_max}"
        )));
    }
    if dim == 0 || n_total == 0 {
        return Err(Error::invalid("dimension and N must be positive"));
    }
    let raw = (2.0 / xi)
        * (lambda_max * lambda_max / xi + lambda_max / 3.0)
        * (2.0 * dim as f64 / p_fail).ln();
    Ok((raw.ceil() as usize).clamp(1, n_total))
}

/// Gradient-coupled Hessian sample size: accuracy ξ = min{c, C‖∇f‖}
/// plugged into [`hessian_sample_bound`], capped at the gradient sample
/// size N_{k+1}. A zero gradient norm returns N_{k+1} (no accuracy left
/// to trade).
pub fn adaptive_hessian_size(
    grad_norm: f64,
    c_abs: f64,
    c_rel: f64,
    lambda_max: f64,
    p_fail: f64,
    dim: usize,
    n_next: usize,
) -> Result<usize> {
    if !(grad_norm >= 0.0) {
        return Err(Error::invalid(format!(
            "gradient norm must be >= 0, got {grad_norm}"
        )));
    }
    if !(c_abs > 0.0) || !(c_rel > 0.0) {
        return Err(Error::invalid("accuracy coefficients must be positive"));
    }
    if n_next == 0 {
        return Err(Error::invalid("N_{k+1} must be positive"));
    }
    if grad_norm == 0.0 {
        return Ok(n_next);
    }
    let xi = c_abs.min(c_rel * grad_norm);
    hessian_sample_bound(xi, p_fail, lambda_max, dim, n_next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn h_values_and_bounds() {
        assert_eq!(h_eval(1000, 1000).unwrap(), 0.0);
        assert_eq!(h_eval(1, 1000).unwrap(), 0.999);
        assert_eq!(h_eval(900, 1000).unwrap(), 0.1);
        assert!(h_eval(0, 1000).is_err());
        assert!(h_eval(1001, 1000).is_err());
        let h = Infeasibility::new(1000).unwrap();
        assert_eq!(h.min_nonzero().unwrap(), 1.0 / 1000.0);
        assert_eq!(h.max(), 0.999);
        assert!(Infeasibility::new(1).unwrap().min_nonzero().is_err());
    }

    #[test]
    fn restoration_examples() {
        assert_eq!(restore_step(5, 1000, 1.2).unwrap(), 6);
        assert_eq!(restore_step(999, 1000, 1.2).unwrap(), 1000);
        assert_eq!(restore_step(1000, 1000, 1.2).unwrap(), 1000);
        assert_eq!(restore_step(1, 1, 1.2).unwrap(), 1);
        assert!(restore_step(0, 10, 1.2).is_err());
        assert!(restore_step(11, 10, 1.2).is_err());
        assert!(restore_step(5, 10, 1.0).is_err());
    }

    #[test]
    fn restoration_strictly_grows_partial_samples() {
        for n_total in [2usize, 17, 100] {
            for n_k in 1..n_total {
                let r = restore_step(n_k, n_total, 1.2).unwrap();
                assert!(r > n_k, "restore({n_k}, {n_total}) = {r} did not grow");
                assert!(r <= n_total);
            }
        }
    }

    #[test]
    fn restoration_contracts_infeasibility_exhaustively() {
        // h(Ñ) <= r·h(N_k) with r = (N - 0.2)/N, for every pair up to 10^4.
        for n_total in 1..=10_000usize {
            let r = (n_total as f64 - 0.2) / n_total as f64;
            // strict growth means the worst case over n_k is attained along
            // the whole range; check every n_k
            for n_k in 1..=n_total {
                let nt = restore_step(n_k, n_total, 1.2).unwrap();
                let h_k = (n_total - n_k) as f64 / n_total as f64;
                let h_t = (n_total - nt) as f64 / n_total as f64;
                assert!(
                    h_t <= r * h_k + 1e-15,
                    "restoration contraction failed: N={n_total} N_k={n_k} Ñ={nt}"
                );
            }
        }
    }

    fn cfg_dynamic() -> ScheduleConfig {
        ScheduleConfig::default()
    }

    fn cfg_geometric() -> ScheduleConfig {
        ScheduleConfig {
            policy: SchedulePolicy::Geometric,
            ..ScheduleConfig::default()
        }
    }

    fn ctx(n_k: usize) -> RelaxContext {
        RelaxContext {
            n_k,
            full_grad_norm: None,
        }
    }

    #[test]
    fn relaxation_dynamic_window() {
        let cfg = cfg_dynamic();
        // in-window candidate: 600 - 100·1² = 500
        assert_eq!(
            relax_step(600, 1.0, &cfg, 100, 1000, ctx(500)).unwrap(),
            500
        );
        // below N0: candidate 600 - 100·4 = 200 < N0=300 → keep Ñ
        assert_eq!(
            relax_step(600, 2.0, &cfg, 300, 1000, ctx(500)).unwrap(),
            600
        );
        // above guard: candidate 960 - ceil(100·0.01) = 959 > 950 → snap to N
        assert_eq!(
            relax_step(960, 0.1, &cfg, 100, 1000, ctx(900)).unwrap(),
            1000
        );
        // candidate just inside the guard is taken as-is
        assert_eq!(
            relax_step(940, 0.1, &cfg, 100, 1000, ctx(900)).unwrap(),
            939
        );
    }

    #[test]
    fn relaxation_geometric_returns_restored_size() {
        let cfg = cfg_geometric();
        for delta in [0.01, 1.0, 100.0] {
            assert_eq!(
                relax_step(600, delta, &cfg, 100, 1000, ctx(500)).unwrap(),
                600
            );
        }
    }

    #[test]
    fn relaxation_budget_inequality_on_grid() {
        // h(N_{k+1}) - h(Ñ) <= μΔ^{1+γ} across policies, radii, sizes.
        for cfg in [cfg_dynamic(), cfg_geometric()] {
            let n_total = 1000usize;
            let mu = cfg.mu(n_total);
            for &delta in &[0.03125, 0.25, 1.0, 3.0, 17.0] {
                for n_tilde in (1..=n_total).step_by(7) {
                    let n0 = 100.min(n_tilde);
                    let next = relax_step(n_tilde, delta, &cfg, n0, n_total, ctx(n_tilde)).unwrap();
                    let lhs = h_eval(next, n_total).unwrap() - h_eval(n_tilde, n_total).unwrap();
                    let rhs = mu * delta.powf(1.0 + cfg.gamma);
                    assert!(
                        lhs <= rhs + 1e-12,
                        "policy {:?}: Ñ={n_tilde} Δ={delta} → {next}: {lhs} > {rhs}",
                        cfg.policy
                    );
                }
            }
        }
    }

    #[test]
    fn refined_rule_pins_full_sample_once_gradient_is_small() {
        let cfg = ScheduleConfig {
            refined_full_rule: true,
            ..cfg_dynamic()
        };
        let n = 1000usize;
        // gradient below 1/N forces N_{k+1} = N even though the dynamic
        // candidate would drop the sample
        let c = RelaxContext {
            n_k: n,
            full_grad_norm: Some(0.0009),
        };
        assert_eq!(relax_step(n, 1.0, &cfg, 100, n, c).unwrap(), 1000);
        // larger gradient allows a bounded drop: h(N_{k+1}) <= gnorm
        let c = RelaxContext {
            n_k: n,
            full_grad_norm: Some(0.05),
        };
        let next = relax_step(n, 1.0, &cfg, 100, n, c).unwrap();
        assert!(h_eval(next, n).unwrap() <= 0.05 + 1e-15);
        assert!(h_eval(next, n).unwrap() <= cfg.mu(n) * 1.0 + 1e-15);
        // the rule needs the gradient norm
        assert!(relax_step(n, 1.0, &cfg, 100, n, ctx(n)).is_err());
        // partial samples don't need it
        assert!(relax_step(600, 1.0, &cfg, 100, n, ctx(500)).is_ok());
    }

    #[test]
    fn relaxation_rejects_bad_arguments() {
        let cfg = cfg_dynamic();
        assert!(relax_step(0, 1.0, &cfg, 10, 100, ctx(50)).is_err());
        assert!(relax_step(101, 1.0, &cfg, 10, 100, ctx(50)).is_err());
        assert!(relax_step(50, 0.0, &cfg, 10, 100, ctx(50)).is_err());
        assert!(relax_step(50, -1.0, &cfg, 10, 100, ctx(50)).is_err());
        assert!(relax_step(50, 1.0, &cfg, 0, 100, ctx(50)).is_err());
        let bad = ScheduleConfig {
            growth: 0.9,
            ..cfg_dynamic()
        };
        assert!(relax_step(50, 1.0, &bad, 10, 100, ctx(50)).is_err());
    }

    #[test]
    fn draw_full_sample_is_identity() {
        let mut s = Sampler::from_seed(1);
        let set = draw_sample(10, 10, &mut s).unwrap();
        assert_eq!(set.indices(), (0..10).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn draws_are_deterministic_per_seed() {
        let a = draw_sample(50, 500, &mut Sampler::from_seed(42)).unwrap();
        let b = draw_sample(50, 500, &mut Sampler::from_seed(42)).unwrap();
        let c = draw_sample(50, 500, &mut Sampler::from_seed(43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn hessian_sample_is_subset_with_ceil_size() {
        let mut s = Sampler::from_seed(7);
        let grad = draw_sample(37, 400, &mut s).unwrap();
        let hess = hessian_sample(&grad, 0.1, &mut s).unwrap();
        assert_eq!(hess.len(), 4); // ceil(3.7)
        for i in hess.indices() {
            assert!(grad.indices().contains(i));
        }
        let all = hessian_sample(&grad, 1.0, &mut s).unwrap();
        assert_eq!(all, grad);
        let one = SampleSet::new(vec![9]).unwrap();
        assert_eq!(hessian_sample(&one, 0.1, &mut s).unwrap().len(), 1);
    }

    #[test]
    fn sample_draw_uniformity_sanity() {
        // all C(4,2) = 6 pairs should appear with frequency ~1/6
        let mut s = Sampler::from_seed(1234);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let trials = 30_000;
        for _ in 0..trials {
            let set = draw_sample(2, 4, &mut s).unwrap();
            *counts.entry(set.indices().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (pair, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.02,
                "pair {pair:?} frequency {freq}"
            );
        }
    }

    #[test]
    fn worst_case_bound_examples() {
        // gradient: χ=0.5, p=0.1, V=1, ζ=1, n=9 → ⌈10.667·ln 100⌉ = 50
        assert_eq!(
            gradient_sample_bound(0.5, 0.1, 1.0, 1.0, 9, 1_000_000).unwrap(),
            50
        );
        // Hessian: ξ=1, p=0.1, λ=1, n=5 → ⌈(8/3)·ln 100⌉ = 13
        assert_eq!(
            hessian_sample_bound(1.0, 0.1, 1.0, 5, 1_000_000).unwrap(),
            13
        );
        // caps at N
        assert_eq!(
            gradient_sample_bound(0.5, 0.1, 1.0, 1.0, 9, 30).unwrap(),
            30
        );
        assert_eq!(hessian_sample_bound(1.0, 0.1, 1.0, 5, 10).unwrap(), 10);
        // bad arguments
        assert!(gradient_sample_bound(0.0, 0.1, 1.0, 1.0, 9, 100).is_err());
        assert!(gradient_sample_bound(0.5, 1.0, 1.0, 1.0, 9, 100).is_err());
        assert!(hessian_sample_bound(1.0, 0.1, 0.0, 5, 100).is_err());
    }

    #[test]
    fn adaptive_hessian_size_tracks_gradient() {
        // ξ = min{1, 100·1} = 1 reproduces the fixed-accuracy bound
        assert_eq!(
            adaptive_hessian_size(1.0, 1.0, 100.0, 1.0, 0.1, 5, 1_000_000).unwrap(),
            13
        );
        // smaller gradients demand more accuracy, hence bigger samples
        let coarse = adaptive_hessian_size(1.0, 1.0, 1.0, 1.0, 0.1, 5, 1_000_000).unwrap();
        let fine = adaptive_hessian_size(0.01, 1.0, 1.0, 1.0, 0.1, 5, 1_000_000).unwrap();
        assert!(fine > coarse, "{fine} <= {coarse}");
        // zero gradient: no accuracy left to trade, use the whole sample
        assert_eq!(
            adaptive_hessian_size(0.0, 1.0, 1.0, 1.0, 0.1, 5, 777).unwrap(),
            777
        );
        // cap at N_{k+1}
        assert_eq!(
            adaptive_hessian_size(0.01, 1.0, 1.0, 1.0, 0.1, 5, 20).unwrap(),
            20
        );
        assert!(adaptive_hessian_size(-1.0, 1.0, 1.0, 1.0, 0.1, 5, 20).is_err());
    }

    #[test]
    fn initial_and_hessian_sizes() {
        let cfg = ScheduleConfig::default();
        assert_eq!(cfg.initial_sample(1000), 100);
        assert_eq!(cfg.initial_sample(5), 1);
        assert_eq!(cfg.initial_sample(1), 1);
        assert_eq!(cfg.hessian_size(500), 50);
        assert_eq!(cfg.hessian_size(37), 4);
        assert_eq!(cfg.hessian_size(1), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn drawn_samples_are_sorted_unique_in_range(
            n_total in 1usize..400,
            m_frac in 0.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let m = ((m_frac * n_total as f64).ceil() as usize).clamp(1, n_total);
            let mut s = Sampler::from_seed(seed);
            let set = draw_sample(m, n_total, &mut s).unwrap();
            prop_assert_eq!(set.len(), m);
            prop_assert!(set.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*set.indices().last().unwrap() < n_total);
        }

        #[test]
        fn relaxed_size_is_valid_and_within_budget(
            n_total in 2usize..2000,
            tilde_frac in 0.0f64..1.0,
            delta in 1e-3f64..50.0,
            geometric in proptest::bool::ANY,
        ) {
            let n_tilde = ((tilde_frac * n_total as f64).ceil() as usize).clamp(1, n_total);
            let cfg = if geometric { cfg_geometric() } else { cfg_dynamic() };
            let n0 = cfg.initial_sample(n_total).min(n_tilde);
            let next = relax_step(n_tilde, delta, &cfg, n0, n_total, ctx(n_tilde)).unwrap();
            prop_assert!(next >= 1 && next <= n_total);
            let lhs = h_eval(next, n_total).unwrap() - h_eval(n_tilde, n_total).unwrap();
            prop_assert!(lhs <= cfg.mu(n_total) * delta.powf(1.0 + cfg.gamma) + 1e-12);
        }
    }
}

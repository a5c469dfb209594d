//! Loss families over labeled datasets.
//!
//! Two families are built in:
//!
//! * `logistic_l2`: φ_i(x) = log(1 + exp(-b_i aᵢᵀx)) + ‖x‖²/(2N) with
//!   labels in {-1,+1}. The ridge term is folded into every component so
//!   that averages over arbitrary index subsets stay consistent; it makes
//!   each component (hence every subsampled Hessian) at least 1/N-strongly
//!   convex.
//! * `sigmoid_ls`: φ_i(x) = (b_i - s(aᵢᵀx))² with s the logistic sigmoid
//!   and labels in {0,1}. Nonconvex.
//!
//! The trait is open: anything implementing [`Component`] plugs into the
//! same solver; only these two families ship with the crate.

use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::finite_sum::{Component, FiniteSumProblem};

/// Which loss family to attach to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    LogisticL2,
    SigmoidLs,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::LogisticL2 => "logistic_l2",
            LossFamily::SigmoidLs => "sigmoid_ls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logistic_l2" => Ok(LossFamily::LogisticL2),
            "sigmoid_ls" => Ok(LossFamily::SigmoidLs),
            other => Err(Error::invalid(format!(
                "unknown loss family `{other}` (expected logistic_l2 or sigmoid_ls)"
            ))),
        }
    }
}

impl std::fmt::Display for LossFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A loss family paired with the dataset it runs on.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub family: LossFamily,
    pub data: Arc<Dataset>,
}

/// log(1 + e^t) without overflow for any t.
pub(crate) fn log1pexp(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic sigmoid 1/(1 + e^{-t}), evaluated from the side that cannot overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

struct LogisticL2 {
    data: Arc<Dataset>,
}

impl LogisticL2 {
    /// 1/N, the per-component ridge weight.
    fn reg(&self) -> f64 {
        1.0 / self.data.len() as f64
    }
}

impl Component for LogisticL2 {
    fn value(&self, i: usize, x: ArrayView1<'_, f64>) -> f64 {
        let t = self.data.label(i) * self.data.row(i).dot(x);
        log1pexp(-t) + 0.5 * self.reg() * x.dot(&x)
    }

    fn add_grad(&self, i: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let b = self.data.label(i);
        let t = b * self.data.row(i).dot(x);
        // d/dx log(1+e^{-t}) = -b·σ(-t)·a
        self.data.row(i).add_scaled(-b * sigmoid(-t), out);
        out.scaled_add(self.reg(), &x);
    }

    fn add_hess_vec(
        &self,
        i: usize,
        x: ArrayView1<'_, f64>,
        v: ArrayView1<'_, f64>,
        out: &mut Array1<f64>,
    ) {
        let b = self.data.label(i);
        let t = b * self.data.row(i).dot(x);
        let s = sigmoid(t);
        // b² = 1, so the curvature along a is σ(t)σ(-t)
        let w = s * (1.0 - s);
        let av = self.data.row(i).dot(v);
        self.data.row(i).add_scaled(w * av, out);
        out.scaled_add(self.reg(), &v);
    }
}

struct SigmoidLs {
    data: Arc<Dataset>,
}

impl Component for SigmoidLs {
    fn value(&self, i: usize, x: ArrayView1<'_, f64>) -> f64 {
        let s = sigmoid(self.data.row(i).dot(x));
        let r = self.data.label(i) - s;
        r * r
    }

    fn add_grad(&self, i: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let s = sigmoid(self.data.row(i).dot(x));
        let ds = s * (1.0 - s);
        let coeff = -2.0 * (self.data.label(i) - s) * ds;
        self.data.row(i).add_scaled(coeff, out);
    }

    fn add_hess_vec(
        &self,
        i: usize,
        x: ArrayView1<'_, f64>,
        v: ArrayView1<'_, f64>,
        out: &mut Array1<f64>,
    ) {
        let s = sigmoid(self.data.row(i).dot(x));
        let ds = s * (1.0 - s);
        let d2s = ds * (1.0 - 2.0 * s);
        // d²/dt² (b - σ(t))² = 2σ'(t)² - 2(b - σ(t))σ''(t)
        let coeff = 2.0 * ds * ds - 2.0 * (self.data.label(i) - s) * d2s;
        let av = self.data.row(i).dot(v);
        self.data.row(i).add_scaled(coeff * av, out);
    }
}

/// Builds the finite-sum problem for a loss spec, validating that every
/// label matches the family's convention ({-1,+1} for logistic_l2, {0,1}
/// for sigmoid_ls).
pub fn make_loss(spec: LossSpec) -> Result<FiniteSumProblem> {
    let admissible: &[f64] = match spec.family {
        LossFamily::LogisticL2 => &[-1.0, 1.0],
        LossFamily::SigmoidLs => &[0.0, 1.0],
    };
    for (i, &b) in spec.data.labels().iter().enumerate() {
        if !admissible.contains(&b) {
            return Err(Error::invalid(format!(
                "label {b} at row {i} invalid for {}; run map_labels first",
                spec.family
            )));
        }
    }
    let n = spec.data.len();
    let dim = spec.data.dim();
    let component: Arc<dyn Component> = match spec.family {
        LossFamily::LogisticL2 => Arc::new(LogisticL2 { data: spec.data }),
        LossFamily::SigmoidLs => Arc::new(SigmoidLs { data: spec.data }),
    };
    FiniteSumProblem::new(n, dim, component)
}

//! Finite-sum objectives evaluated over index subsets.
//!
//! The objective is f_M(x) = (1/M) Σ_{i∈S} φ_i(x) for a sample S of M
//! component indices. Components are supplied through the [`Component`]
//! trait; the solver only ever touches values, gradients, and
//! Hessian-vector products, so component Hessians are never materialized.

use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// One term φ_i of a finite sum, exposed through matrix-free oracles.
///
/// Implementations must be deterministic functions of `(i, x)`.
pub trait Component: Send + Sync {
    /// φ_i(x).
    fn value(&self, i: usize, x: ArrayView1<'_, f64>) -> f64;

    /// out += ∇φ_i(x).
    fn add_grad(&self, i: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>);

    /// out += ∇²φ_i(x)·v.
    fn add_hess_vec(
        &self,
        i: usize,
        x: ArrayView1<'_, f64>,
        v: ArrayView1<'_, f64>,
        out: &mut Array1<f64>,
    );
}

/// A sorted, duplicate-free, nonempty set of component indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    indices: Vec<usize>,
}

impl SampleSet {
    /// Wraps an index list. The list must be nonempty and strictly
    /// increasing; both conditions are what the averaging semantics and
    /// the deterministic summation order rely on.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("sample set must be nonempty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sample indices must be strictly increasing"));
        }
        Ok(SampleSet { indices })
    }

    /// The full index set {0, …, n-1}.
    pub fn full(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cannot build a sample over zero components"));
        }
        Ok(SampleSet {
            indices: (0..n).collect(),
        })
    }

    /// Cardinality M.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// True when this sample is exactly {0, …, n-1}.
    pub fn is_full(&self, n: usize) -> bool {
        self.indices.len() == n
    }
}

/// A finite-sum minimization problem with N components on R^n.
#[derive(Clone)]
pub struct FiniteSumProblem {
    n_components: usize,
    dim: usize,
    component: Arc<dyn Component>,
}

impl FiniteSumProblem {
    pub fn new(n_components: usize, dim: usize, component: Arc<dyn Component>) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::invalid("a finite sum needs at least one component"));
        }
        if dim == 0 {
            return Err(Error::invalid("problem dimension must be positive"));
        }
        Ok(FiniteSumProblem {
            n_components,
            dim,
            component,
        })
    }

    /// N, the total number of components.
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// n, the dimension of the decision variable.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The full index sample {0, …, N-1}.
    pub fn full_sample(&self) -> SampleSet {
        SampleSet::full(self.n_components).expect("N >= 1 by construction")
    }

    fn check_point(&self, x: ArrayView1<'_, f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, problem has dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn check_sample(&self, s: &SampleSet) -> Result<()> {
        let last = *s.indices().last().expect("sample sets are nonempty");
        if last >= self.n_components {
            return Err(Error::invalid(format!(
                "sample index {} out of range for N = {}",
                last, self.n_components
            )));
        }
        Ok(())
    }

    /// f_M(x) = (1/M) Σ_{i∈S} φ_i(x).
    ///
    /// Summation runs in ascending index order, so the result is a
    /// deterministic function of (x, S).
    pub fn eval_f(&self, x: ArrayView1<'_, f64>, s: &SampleSet) -> Result<f64> {
        self.check_point(x)?;
        self.check_sample(s)?;
        let mut acc = 0.0;
        for &i in s.indices() {
            acc += self.component.value(i, x);
        }
        Ok(acc / s.len() as f64)
    }

    /// ∇f_M(x) = (1/M) Σ_{i∈S} ∇φ_i(x).
    pub fn eval_grad(&self, x: ArrayView1<'_, f64>, s: &SampleSet) -> Result<Array1<f64>> {
        self.check_point(x)?;
        self.check_sample(s)?;
        let mut out = Array1::zeros(self.dim);
        for &i in s.indices() {
            self.component.add_grad(i, x, &mut out);
        }
        out.mapv_inplace(|g| g / s.len() as f64);
        Ok(out)
    }

    /// (1/|S_H|) Σ_{i∈S_H} ∇²φ_i(x)·v, the subsampled Hessian applied to v.
    pub fn hess_vec(
        &self,
        x: ArrayView1<'_, f64>,
        v: ArrayView1<'_, f64>,
        s: &SampleSet,
    ) -> Result<Array1<f64>> {
        self.check_point(x)?;
        self.check_point(v)?;
        self.check_sample(s)?;
        let mut out = Array1::zeros(self.dim);
        for &i in s.indices() {
            self.component.add_hess_vec(i, x, v, &mut out);
        }
        out.mapv_inplace(|h| h / s.len() as f64);
        Ok(out)
    }
}

impl std::fmt::Debug for FiniteSumProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSumProblem")
            .field("n_components", &self.n_components)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

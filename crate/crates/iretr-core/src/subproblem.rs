//! Trust-region subproblem: quadratic model, Cauchy point, and a
//! truncated conjugate-gradient solver.
//!
//! The model is m(p) = f0 + gᵀp + ½ pᵀBp with B available only through
//! matrix-vector products. The CG solver follows the classical truncated
//! scheme: start from p = 0, walk to the boundary on nonpositive
//! curvature or when an iterate leaves the region, otherwise stop once
//! the residual drops below rel_tol·‖g‖. Because the first CG direction
//! is -g, every returned step decreases the model at least as much as
//! the Cauchy point does.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Quadratic model with a matrix-free Hessian.
pub struct QuadraticModel<'a> {
    f0: f64,
    grad: Array1<f64>,
    hess: Box<dyn Fn(ArrayView1<'_, f64>) -> Array1<f64> + 'a>,
}

impl<'a> QuadraticModel<'a> {
    pub fn new(
        f0: f64,
        grad: Array1<f64>,
        hess: impl Fn(ArrayView1<'_, f64>) -> Array1<f64> + 'a,
    ) -> Self {
        QuadraticModel {
            f0,
            grad,
            hess: Box::new(hess),
        }
    }

    /// Model with B = 0 (linear model).
    pub fn linear(f0: f64, grad: Array1<f64>) -> Self {
        let dim = grad.len();
        QuadraticModel {
            f0,
            grad,
            hess: Box::new(move |_| Array1::zeros(dim)),
        }
    }

    /// Model with an explicit dense symmetric B; intended for tests.
    pub fn dense(f0: f64, grad: Array1<f64>, b: &'a Array2<f64>) -> Self {
        QuadraticModel {
            f0,
            grad,
            hess: Box::new(move |v| b.dot(&v)),
        }
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn grad(&self) -> &Array1<f64> {
        &self.grad
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// B·v.
    pub fn hess_apply(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        (self.hess)(v)
    }

    /// m(p).
    pub fn value(&self, p: ArrayView1<'_, f64>) -> f64 {
        self.f0 + self.grad.dot(&p) + 0.5 * p.dot(&self.hess_apply(p))
    }

    /// m(0) - m(p), the model decrease of a step.
    pub fn decrease(&self, p: ArrayView1<'_, f64>) -> f64 {
        -(self.grad.dot(&p) + 0.5 * p.dot(&self.hess_apply(p)))
    }
}

impl std::fmt::Debug for QuadraticModel<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadraticModel")
            .field("f0", &self.f0)
            .field("dim", &self.grad.len())
            .finish_non_exhaustive()
    }
}

/// Outcome of a subproblem solve.
#[derive(Debug, Clone)]
pub struct TrSolution {
    /// The step, with ‖p‖ <= Δ up to roundoff.
    pub p: Array1<f64>,
    /// m(0) - m(p); never negative.
    pub model_decrease: f64,
    /// The step ended on the trust-region boundary.
    pub on_boundary: bool,
    /// A direction of nonpositive curvature was followed to the boundary.
    pub negative_curvature: bool,
    /// Number of Hessian-vector products performed.
    pub cg_iterations: usize,
}

/// The Cauchy point: minimizer of the model along -g within the region,
/// p = -t*·g with t* = Δ/‖g‖ on nonpositive curvature and
/// min{Δ/‖g‖, ‖g‖²/gᵀBg} otherwise. Zero gradient gives the zero step.
pub fn cauchy_point(model: &QuadraticModel<'_>, delta: f64) -> Result<Array1<f64>> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {delta}"
        )));
    }
    let g = model.grad();
    let gnorm = g.dot(g).sqrt();
    if gnorm == 0.0 {
        return Ok(Array1::zeros(model.dim()));
    }
    let gbg = g.dot(&model.hess_apply(g.view()));
    let t_boundary = delta / gnorm;
    let t = if gbg <= 0.0 {
        t_boundary
    } else {
        t_boundary.min(gnorm * gnorm / gbg)
    };
    Ok(g.mapv(|gi| -t * gi))
}

/// Largest σ >= 0 with ‖p + σd‖ = Δ, via the numerically stable root of
/// the boundary quadratic. Requires ‖p‖ <= Δ and d ≠ 0.
fn boundary_sigma(p: &Array1<f64>, d: &Array1<f64>, delta: f64) -> f64 {
    let dd = d.dot(d);
    let pd = p.dot(d);
    let pp = p.dot(p);
    let rad = (pd * pd + dd * (delta * delta - pp)).max(0.0).sqrt();
    // larger root of dd·σ² + 2pd·σ + (pp - Δ²) = 0 without cancellation
    if pd <= 0.0 {
        (rad - pd) / dd
    } else {
        (delta * delta - pp) / (pd + rad)
    }
}

/// Truncated CG for min m(p) s.t. ‖p‖ <= Δ.
///
/// Stops on: residual ‖Bp + g‖ <= rel_tol·‖g‖ (interior solution), an
/// iterate reaching the boundary, nonpositive curvature (walked to the
/// boundary), or max_iter Hessian products (current iterate returned).
/// A zero gradient returns the zero step with zero iterations.
pub fn steihaug_cg(
    model: &QuadraticModel<'_>,
    delta: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<TrSolution> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {delta}"
        )));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!(
            "rel_tol must lie in (0, 1), got {rel_tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }

    let g = model.grad();
    let dim = model.dim();
    let gnorm = g.dot(g).sqrt();
    if gnorm == 0.0 {
        return Ok(TrSolution {
            p: Array1::zeros(dim),
            model_decrease: 0.0,
            on_boundary: false,
            negative_curvature: false,
            cg_iterations: 0,
        });
    }

    let tol = rel_tol * gnorm;
    let mut p: Array1<f64> = Array1::zeros(dim);
    let mut r = g.clone(); // residual of ∇m(p) = g + Bp at p = 0
    let mut d = g.mapv(|gi| -gi);
    let mut rr = r.dot(&r);
    let mut iterations = 0usize;

    let finish = |p: Array1<f64>, on_boundary, negative_curvature, iterations| {
        let model_decrease = model.decrease(p.view()).max(0.0);
        TrSolution {
            p,
            model_decrease,
            on_boundary,
            negative_curvature,
            cg_iterations: iterations,
        }
    };

    loop {
        let bd = model.hess_apply(d.view());
        iterations += 1;
        let dbd = d.dot(&bd);
        if dbd <= 0.0 {
            let sigma = boundary_sigma(&p, &d, delta);
            p.scaled_add(sigma, &d);
            return Ok(finish(p, true, true, iterations));
        }
        let alpha = rr / dbd;
        let mut p_next = p.clone();
        p_next.scaled_add(alpha, &d);
        if p_next.dot(&p_next).sqrt() >= delta {
            let sigma = boundary_sigma(&p, &d, delta);
            p.scaled_add(sigma, &d);
            return Ok(finish(p, true, false, iterations));
        }
        p = p_next;
        r.scaled_add(alpha, &bd);
        let rr_next = r.dot(&r);
        if rr_next.sqrt() <= tol {
            return Ok(finish(p, false, false, iterations));
        }
        if iterations >= max_iter {
            return Ok(finish(p, false, false, iterations));
        }
        let beta = rr_next / rr;
        rr = rr_next;
        d.mapv_inplace(|di| beta * di);
        d -= &r;
    }
}

/// The fraction-of-Cauchy-decrease test:
/// m(0) - m(p) >= τ·(m(0) - m(p_C)).
pub fn sufficient_decrease(
    model: &QuadraticModel<'_>,
    p: ArrayView1<'_, f64>,
    p_cauchy: ArrayView1<'_, f64>,
    tau: f64,
) -> bool {
    model.decrease(p) >= tau * model.decrease(p_cauchy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn dense_model<'a>(g: Array1<f64>, b: &'a Array2<f64>) -> QuadraticModel<'a> {
        QuadraticModel::dense(0.0, g, b)
    }

    #[test]
    fn identity_hessian_interior_newton_step() {
        let b = Array2::eye(2);
        let m = dense_model(array![3.0, 4.0], &b);
        let sol = steihaug_cg(&m, 100.0, 1e-3, 100).unwrap();
        assert!((sol.p[0] + 3.0).abs() < 1e-12);
        assert!((sol.p[1] + 4.0).abs() < 1e-12);
        assert!(!sol.on_boundary);
        assert_eq!(sol.cg_iterations, 1);
        assert!((sol.model_decrease - 12.5).abs() < 1e-12);
    }

    #[test]
    fn indefinite_hessian_walks_to_boundary() {
        let b = Array2::from_diag(&array![1.0, -1.0]);
        let m = dense_model(array![1.0, 0.0], &b);
        let sol = steihaug_cg(&m, 1.0, 1e-3, 100).unwrap();
        // first step lands exactly on the boundary at (-1, 0)
        assert!((sol.p[0] + 1.0).abs() < 1e-12);
        assert!(sol.p[1].abs() < 1e-12);
        assert!(sol.on_boundary);
        assert!((sol.p.dot(&sol.p).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hessian_gives_boundary_steepest_descent() {
        let m = QuadraticModel::linear(5.0, array![1.0, 0.0]);
        let sol = steihaug_cg(&m, 2.0, 1e-3, 100).unwrap();
        assert!((sol.p[0] + 2.0).abs() < 1e-12);
        assert!(sol.p[1].abs() < 1e-12);
        assert!(sol.on_boundary);
        assert!(sol.negative_curvature);
        assert!((sol.model_decrease - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_returns_zero_step() {
        let b = Array2::eye(3);
        let m = dense_model(array![0.0, 0.0, 0.0], &b);
        let sol = steihaug_cg(&m, 1.0, 1e-3, 100).unwrap();
        assert!(sol.p.iter().all(|&v| v == 0.0));
        assert_eq!(sol.cg_iterations, 0);
        assert_eq!(sol.model_decrease, 0.0);
        let pc = cauchy_point(&m, 1.0).unwrap();
        assert!(pc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cauchy_point_interior_and_boundary() {
        // interior: B = I, g = (3,4): t* = ‖g‖²/gᵀBg = 1 → p = -g
        let b = Array2::eye(2);
        let m = dense_model(array![3.0, 4.0], &b);
        let pc = cauchy_point(&m, 100.0).unwrap();
        assert!((pc[0] + 3.0).abs() < 1e-12 && (pc[1] + 4.0).abs() < 1e-12);
        // radius-limited: Δ = 1 → p = -g/5
        let pc = cauchy_point(&m, 1.0).unwrap();
        assert!((pc[0] + 0.6).abs() < 1e-12 && (pc[1] + 0.8).abs() < 1e-12);
        // nonpositive curvature: to the boundary
        let b = Array2::from_diag(&array![-2.0, -2.0]);
        let m = dense_model(array![3.0, 4.0], &b);
        let pc = cauchy_point(&m, 1.0).unwrap();
        assert!((pc.dot(&pc).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_iter_truncates() {
        // ill-conditioned 5-dim problem, one iteration allowed
        let b = Array2::from_diag(&array![1.0, 10.0, 100.0, 1000.0, 10000.0]);
        let m = dense_model(array![1.0, 1.0, 1.0, 1.0, 1.0], &b);
        let sol = steihaug_cg(&m, 1e6, 1e-12, 1).unwrap();
        assert_eq!(sol.cg_iterations, 1);
        assert!(sol.model_decrease > 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let b = Array2::eye(2);
        let m = dense_model(array![1.0, 1.0], &b);
        assert!(steihaug_cg(&m, 0.0, 1e-3, 100).is_err());
        assert!(steihaug_cg(&m, 1.0, 0.0, 100).is_err());
        assert!(steihaug_cg(&m, 1.0, 1.5, 100).is_err());
        assert!(steihaug_cg(&m, 1.0, 1e-3, 0).is_err());
        assert!(cauchy_point(&m, -1.0).is_err());
    }

    #[test]
    fn sufficient_decrease_compares_against_cauchy() {
        let b = Array2::eye(2);
        let m = dense_model(array![1.0, 2.0], &b);
        let pc = cauchy_point(&m, 10.0).unwrap();
        let sol = steihaug_cg(&m, 10.0, 1e-3, 100).unwrap();
        assert!(sufficient_decrease(&m, sol.p.view(), pc.view(), 0.1));
        assert!(sufficient_decrease(&m, sol.p.view(), pc.view(), 1.0));
        let zero = Array1::zeros(2);
        assert!(!sufficient_decrease(&m, zero.view(), pc.view(), 0.1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn step_inside_region_and_beats_cauchy(
            seed in 0u64..10_000,
            dim in 1usize..8,
            log_delta in -2.0f64..2.0,
        ) {
            use crate::schedule::Sampler;
            use rand::Rng;
            let mut s = Sampler::from_seed(seed);
            let delta = 10f64.powf(log_delta);
            let g = s.standard_normal(dim);
            // random symmetric B with entries in [-2, 2]
            let mut b = Array2::<f64>::zeros((dim, dim));
            for i in 0..dim {
                for j in 0..=i {
                    let v = s.rng().random_range(-2.0..2.0);
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
            }
            let m = QuadraticModel::dense(0.0, g, &b);
            let sol = steihaug_cg(&m, delta, 1e-3, 100).unwrap();
            prop_assert!(sol.p.dot(&sol.p).sqrt() <= delta * (1.0 + 1e-12));
            let pc = cauchy_point(&m, delta).unwrap();
            let cauchy_dec = m.decrease(pc.view());
            prop_assert!(sol.model_decrease >= cauchy_dec - 1e-12 * (1.0 + cauchy_dec.abs()));
        }
    }
}

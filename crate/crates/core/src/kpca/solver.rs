//! Box-constrained least-squares NLP solver with a log barrier and an
//! augmented-Lagrangian scalar equality.
//!
//! The objective is `J(z) = Σ rᵢ(z)²`. Steps are damped Gauss-Newton steps on the merit
//!
//! ```text
//! φ(z) = J(z) − μ Σ [ln(z − l) + ln(u − z)] + λ c(z) + ½ ρ c(z)²
//! ```
//!
//! with a fraction-to-boundary rule and Armijo backtracking. The barrier
//! parameter shrinks by [`MU_FACTOR`] between subproblems and never drops
//! below `mu_min`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::mathcore::{gradient, jacobian, Scalar, ScalarField, VectorField};
use crate::{Error, Result};

pub const MU_FACTOR: f64 = 0.2;
/// Fraction-to-boundary parameter τ.
pub const BOUNDARY_FRACTION: f64 = 0.995;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// A subproblem counts as solved once ‖∇φ‖∞ ≤ KAPPA_EPS · μ.
const KAPPA_EPS: f64 = 10.0;

/// Least-squares program with element-wise bounds and at most one equality.
pub trait Nlp {
    fn dim(&self) -> usize;
    fn residual_dim(&self) -> usize;
    fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]);
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];

    fn has_equality(&self) -> bool {
        false
    }

    fn equality<S: Scalar>(&self, _z: &[S]) -> S {
        S::zero()
    }

    /// Map an iterate onto the equality manifold, if a closed-form retraction exists.
    fn restore_equality(&self, _z: &mut [f64]) {}

    fn objective<S: Scalar>(&self, z: &[S]) -> S {
        let mut r = vec![S::zero(); self.residual_dim()];
        self.residuals(z, &mut r);
        r.iter().fold(S::zero(), |acc, &v| acc + v * v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Cap on Newton iterations summed over all barrier subproblems.
    pub max_iter: usize,
    pub mu_min: f64,
    pub mu_init: f64,
    pub tol_kkt: f64,
    /// Start directly at `mu_min`, assuming the initial point came from a previous solve.
    pub warm_start: bool,
    pub penalty_eq: f64,
    /// Largest accepted equality violation for convergence.
    pub tol_eq: f64,
    /// Factor applied to `J` inside the merit, which sets the weight of the
    /// objective relative to the barrier floor.
    pub objective_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 40,
            mu_min: 0.1,
            mu_init: 0.1,
            tol_kkt: 1e-8,
            warm_start: true,
            penalty_eq: 1e3,
            tol_eq: 1e-9,
            objective_scale: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu_init && self.mu_init.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < mu_min <= mu_init, got {} and {}",
                self.mu_min, self.mu_init
            )));
        }
        if !(self.tol_kkt > 0.0) || !(self.penalty_eq > 0.0) || !(self.tol_eq > 0.0) {
            return Err(Error::InvalidArgument(
                "tol_kkt, tol_eq and penalty_eq must be positive".into(),
            ));
        }
        if !(self.objective_scale > 0.0) || !self.objective_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "objective_scale must be positive, got {}",
                self.objective_scale
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
    NumericFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration_cap",
            SolveStatus::NumericFailure => "numeric_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlpSolution {
    pub z: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub equality_residual: f64,
    pub mu: f64,
    pub status: SolveStatus,
}

struct Objective<'a, P: Nlp>(&'a P);

impl<P: Nlp> ScalarField for Objective<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<S: Scalar>(&self, z: &[S]) -> S {
        self.0.objective(z)
    }
}

struct Residuals<'a, P: Nlp>(&'a P);

impl<P: Nlp> VectorField for Residuals<'_, P> {
    fn input_dim(&self) -> usize {
        self.0.dim()
    }
    fn output_dim(&self) -> usize {
        self.0.residual_dim()
    }
    fn eval<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        self.0.residuals(z, out)
    }
}

struct Equality<'a, P: Nlp>(&'a P);

impl<P: Nlp> ScalarField for Equality<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<S: Scalar>(&self, z: &[S]) -> S {
        self.0.equality(z)
    }
}

/// Gradient of `J` by forward-mode propagation.
pub fn objective_gradient<P: Nlp>(problem: &P, z: &[f64]) -> Vec<f64> {
    gradient(&Objective(problem), z)
}

/// Objective as a [`ScalarField`], for finite-difference checks.
pub fn objective_field<P: Nlp>(problem: &P) -> impl ScalarField + '_ {
    Objective(problem)
}

/// Move `z` strictly inside its bounds.
pub fn push_interior(z: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &l), &u) in z.iter_mut().zip(lower).zip(upper) {
        let width = u - l;
        let push = |b: f64| {
            let p = 1e-2 * b.abs().max(1.0);
            if width.is_finite() {
                p.min(1e-2 * width)
            } else {
                p
            }
        };
        if l.is_finite() {
            *v = v.max(l + push(l));
        }
        if u.is_finite() {
            *v = v.min(u - push(u));
        }
        if !v.is_finite() {
            *v = if l.is_finite() && u.is_finite() {
                0.5 * (l + u)
            } else if l.is_finite() {
                l + 1.0
            } else if u.is_finite() {
                u - 1.0
            } else {
                0.0
            };
        }
    }
}

struct Merit {
    value: f64,
    eq: f64,
}

struct State<'a, P: Nlp> {
    problem: &'a P,
    mu: f64,
    lambda: f64,
    rho: f64,
    scale: f64,
}

impl<P: Nlp> State<'_, P> {
    fn merit(&self, z: &[f64]) -> Option<Merit> {
        let cost: f64 = self.problem.objective(z);
        if !cost.is_finite() {
            return None;
        }
        let mut barrier = 0.0;
        for ((&v, &l), &u) in z.iter().zip(self.problem.lower()).zip(self.problem.upper()) {
            if l.is_finite() {
                if v <= l {
                    return None;
                }
                barrier -= (v - l).ln();
            }
            if u.is_finite() {
                if v >= u {
                    return None;
                }
                barrier -= (u - v).ln();
            }
        }
        let eq = if self.problem.has_equality() {
            self.problem.equality(z)
        } else {
            0.0
        };
        let value = self.scale * cost + self.mu * barrier + self.lambda * eq + 0.5 * self.rho * eq * eq;
        value.is_finite().then_some(Merit { value, eq })
    }

    /// Merit gradient and Gauss-Newton Hessian.
    fn model(&self, z: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = z.len();
        let (r, jac) = jacobian(&Residuals(self.problem), z);
        if r.iter().any(|v| !v.is_finite()) || jac.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let r = DVector::from_vec(r);
        let mut grad = jac.tr_mul(&r) * (2.0 * self.scale);
        let mut hess = jac.tr_mul(&jac) * (2.0 * self.scale);
        for i in 0..n {
            let (l, u) = (self.problem.lower()[i], self.problem.upper()[i]);
            if l.is_finite() {
                let s = z[i] - l;
                grad[i] -= self.mu / s;
                hess[(i, i)] += self.mu / (s * s);
            }
            if u.is_finite() {
                let s = u - z[i];
                grad[i] += self.mu / s;
                hess[(i, i)] += self.mu / (s * s);
            }
        }
        if self.problem.has_equality() {
            let c: f64 = self.problem.equality(z);
            let a = DVector::from_vec(gradient(&Equality(self.problem), z));
            if !c.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return None;
            }
            grad += &a * (self.lambda + self.rho * c);
            hess += &a * a.transpose() * self.rho;
        }
        Some((grad, hess))
    }
}

fn max_step(z: &[f64], d: &DVector<f64>, lower: &[f64], upper: &[f64]) -> f64 {
    let mut alpha: f64 = 1.0;
    for i in 0..z.len() {
        if d[i] < 0.0 && lower[i].is_finite() {
            alpha = alpha.min(-BOUNDARY_FRACTION * (z[i] - lower[i]) / d[i]);
        }
        if d[i] > 0.0 && upper[i].is_finite() {
            alpha = alpha.min(BOUNDARY_FRACTION * (upper[i] - z[i]) / d[i]);
        }
    }
    alpha
}

fn damped_solve(hess: &DMatrix<f64>, grad: &DVector<f64>, damping: f64) -> Option<DVector<f64>> {
    let n = grad.len();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(hess[(i, i)].abs())).max(1e-12);
    let mut h = hess.clone();
    for i in 0..n {
        h[(i, i)] += damping * scale;
    }
    h.cholesky().map(|c| -c.solve(grad))
}

/// Solve `problem` starting from `init` (pushed inside the bounds if necessary).
pub fn solve<P: Nlp>(problem: &P, init: &[f64], options: &SolverOptions) -> Result<NlpSolution> {
    options.validate()?;
    let n = problem.dim();
    if init.len() != n {
        return Err(Error::Dimension(format!(
            "initial point has {} entries, problem has {n}",
            init.len()
        )));
    }
    let (lower, upper) = (problem.lower(), problem.upper());
    let mut z = init.to_vec();
    push_interior(&mut z, lower, upper);

    let mut st = State {
        problem,
        mu: if options.warm_start { options.mu_min } else { options.mu_init },
        lambda: 0.0,
        rho: options.penalty_eq,
        scale: options.objective_scale,
    };
    let fail = |z: Vec<f64>, iterations, mu| NlpSolution {
        z,
        cost: f64::NAN,
        iterations,
        kkt_residual: f64::NAN,
        equality_residual: f64::NAN,
        mu,
        status: SolveStatus::NumericFailure,
    };

    let Some(mut merit) = st.merit(&z) else {
        return Ok(fail(z, 0, st.mu));
    };
    let mut damping = 1e-8;
    let mut iterations = 0;
    let mut kkt;
    let mut status = SolveStatus::IterationCap;

    loop {
        let Some((grad, hess)) = st.model(&z) else {
            return Ok(fail(z, iterations, st.mu));
        };
        kkt = grad.amax();
        let at_floor = st.mu <= options.mu_min;
        let eq_ok = merit.eq.abs() <= options.tol_eq;
        if at_floor && kkt <= options.tol_kkt && eq_ok {
            status = SolveStatus::Converged;
            break;
        }
        let sub_tol = if at_floor {
            options.tol_kkt
        } else {
            options.tol_kkt.max(KAPPA_EPS * st.mu)
        };
        if kkt <= sub_tol {
            if problem.has_equality() {
                st.lambda += st.rho * merit.eq;
            }
            st.mu = (MU_FACTOR * st.mu).max(options.mu_min);
            merit = st.merit(&z).expect("iterate stays interior");
            continue;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let mut accepted = false;
        for _ in 0..6 {
            let Some(d) = damped_solve(&hess, &grad, damping) else {
                damping = (damping * 100.0).max(1e-6);
                continue;
            };
            let slope = grad.dot(&d);
            if !(slope < 0.0) {
                damping = (damping * 100.0).max(1e-6);
                continue;
            }
            let mut alpha = max_step(&z, &d, lower, upper);
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(v, s)| v + alpha * s).collect();
                if let Some(m) = st.merit(&trial) {
                    if m.value <= merit.value + ARMIJO * alpha * slope {
                        let moved = trial
                            .iter()
                            .zip(&z)
                            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                        z = trial;
                        merit = m;
                        accepted = moved > 0.0;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted {
                damping = (damping * 0.3).max(1e-12);
                break;
            }
            damping = (damping * 100.0).max(1e-6);
        }
        if !accepted {
            // No descent left at machine precision: the iterate is stationary for this μ.
            if at_floor && eq_ok {
                status = SolveStatus::Converged;
                break;
            }
            if problem.has_equality() {
                st.lambda += st.rho * merit.eq;
            }
            if at_floor && !problem.has_equality() {
                break;
            }
            st.mu = (MU_FACTOR * st.mu).max(options.mu_min);
            merit = st.merit(&z).expect("iterate stays interior");
        }
    }

    if problem.has_equality() {
        problem.restore_equality(&mut z);
        push_interior_soft(&mut z, lower, upper);
    }
    let cost: f64 = problem.objective(&z);
    let equality_residual = if problem.has_equality() {
        problem.equality(&z)
    } else {
        0.0
    };
    if !cost.is_finite() {
        return Ok(fail(z, iterations, st.mu));
    }
    Ok(NlpSolution {
        z,
        cost,
        iterations,
        kkt_residual: kkt,
        equality_residual,
        mu: st.mu,
        status,
    })
}

/// Clamp into the closed box (used after a retraction, which may touch a bound).
fn push_interior_soft(z: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &l), &u) in z.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(l, u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shifted {
        lower: Vec<f64>,
        upper: Vec<f64>,
    }

    impl Nlp for Shifted {
        fn dim(&self) -> usize {
            1
        }
        fn residual_dim(&self) -> usize {
            1
        }
        fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
            out[0] = z[0] - 3.0;
        }
        fn lower(&self) -> &[f64] {
            &self.lower
        }
        fn upper(&self) -> &[f64] {
            &self.upper
        }
    }

    struct OnLine;

    impl Nlp for OnLine {
        fn dim(&self) -> usize {
            2
        }
        fn residual_dim(&self) -> usize {
            2
        }
        fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
            out.copy_from_slice(z);
        }
        fn lower(&self) -> &[f64] {
            &[f64::NEG_INFINITY; 2]
        }
        fn upper(&self) -> &[f64] {
            &[f64::INFINITY; 2]
        }
        fn has_equality(&self) -> bool {
            true
        }
        fn equality<S: Scalar>(&self, z: &[S]) -> S {
            z[0] + z[1] - 1.0
        }
    }

    struct Rosenbrock;

    impl Nlp for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn residual_dim(&self) -> usize {
            2
        }
        fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
            out[0] = (z[1] - z[0] * z[0]) * 10.0;
            out[1] = S::cst(1.0) - z[0];
        }
        fn lower(&self) -> &[f64] {
            &[-2.0, -2.0]
        }
        fn upper(&self) -> &[f64] {
            &[2.0, 2.0]
        }
    }

    struct Poisoned;

    impl Nlp for Poisoned {
        fn dim(&self) -> usize {
            1
        }
        fn residual_dim(&self) -> usize {
            1
        }
        fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
            out[0] = z[0] / 0.0;
        }
        fn lower(&self) -> &[f64] {
            &[-1.0]
        }
        fn upper(&self) -> &[f64] {
            &[1.0]
        }
    }

    fn precise() -> SolverOptions {
        SolverOptions {
            max_iter: 200,
            mu_min: 1e-10,
            mu_init: 0.1,
            warm_start: false,
            ..Default::default()
        }
    }

    #[test]
    fn interior_minimizer() {
        let p = Shifted { lower: vec![-10.0], upper: vec![10.0] };
        let s = solve(&p, &[0.0], &precise()).unwrap();
        assert!((s.z[0] - 3.0).abs() < 1e-6, "{s:?}");
        assert_eq!(s.status, SolveStatus::Converged);
    }

    #[test]
    fn active_upper_bound() {
        let p = Shifted { lower: vec![-1.0], upper: vec![1.0] };
        let s = solve(&p, &[0.0], &precise()).unwrap();
        assert!((s.z[0] - 1.0).abs() < 1e-6, "{s:?}");
        assert!(s.z[0] <= 1.0);
    }

    #[test]
    fn linear_equality() {
        let s = solve(&OnLine, &[0.0, 0.0], &precise()).unwrap();
        assert!((s.z[0] - 0.5).abs() < 1e-6 && (s.z[1] - 0.5).abs() < 1e-6, "{s:?}");
        assert!(s.equality_residual.abs() < 1e-6);
    }

    #[test]
    fn nonconvex_least_squares() {
        let s = solve(&Rosenbrock, &[-1.2, 1.0], &precise()).unwrap();
        assert!((s.z[0] - 1.0).abs() < 1e-5 && (s.z[1] - 1.0).abs() < 1e-5, "{s:?}");
    }

    #[test]
    fn barrier_floor_keeps_solution_off_the_bound() {
        let p = Shifted { lower: vec![-1.0], upper: vec![1.0] };
        let opts = SolverOptions { warm_start: false, max_iter: 100, ..Default::default() };
        let s = solve(&p, &[0.0], &opts).unwrap();
        assert!(s.mu >= 0.1);
        assert!(s.z[0] < 0.99 && s.z[0] > 0.5, "{s:?}");
    }

    #[test]
    fn iteration_cap_reported() {
        let opts = SolverOptions { max_iter: 1, ..precise() };
        let s = solve(&Rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert_eq!(s.status, SolveStatus::IterationCap);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn numeric_failure_reported() {
        let s = solve(&Poisoned, &[0.5], &precise()).unwrap();
        assert_eq!(s.status, SolveStatus::NumericFailure);
        assert_eq!(s.z, vec![0.5]);
    }

    #[test]
    fn infeasible_start_is_projected() {
        let p = Shifted { lower: vec![-1.0], upper: vec![1.0] };
        let s = solve(&p, &[50.0], &precise()).unwrap();
        assert!(s.z[0] <= 1.0);
    }

    #[test]
    fn options_validated() {
        let bad = SolverOptions { mu_min: 1.0, mu_init: 0.1, ..Default::default() };
        assert!(solve(&OnLine, &[0.0, 0.0], &bad).is_err());
        assert!(solve(&OnLine, &[0.0], &precise()).is_err());
    }
}

//! Plant models in the two-subsystem canonical form
//!
//! ```text
//! ẋ₁ = f(x₁, x₂, u₁),   ẋ₂ = g(x₂, u₂),   ũ₁ = Ψ(x₁, x₂, u₁)
//! ```
//!
//! together with their kernel families 𝒦, linearization and controllability checks.

mod uav2d;
mod uav3d;
mod vessel;

pub use uav2d::Uav2dParams;
pub use uav3d::{Uav3dParams, MAX_MASS_CONDITION};
pub use vessel::VesselParams;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::mathcore::{jacobian, wrap_angle, OdeField, Scalar, VectorField, MAX_STATE};
use crate::{Error, Result};

/// Residual bound for a point to count as an equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-8;
/// Relative singular-value threshold of [`controllability_rank`].
pub const RANK_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
    /// Dimension of the effective control ũ₁.
    pub m1_tilde: usize,
}

impl Dims {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PlantKind {
    Uav2d(Uav2dParams),
    Uav3d(Uav3dParams),
    Vessel(VesselParams),
}

impl PlantKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlantKind::Uav2d(_) => "uav2d",
            PlantKind::Uav3d(_) => "uav3d",
            PlantKind::Vessel(_) => "vessel",
        }
    }

    pub fn dims(&self) -> Dims {
        match self {
            PlantKind::Uav2d(_) => Dims { n1: 2, n2: 2, m1: 1, m2: 1, m1_tilde: 1 },
            PlantKind::Uav3d(_) => Dims { n1: 4, n2: 7, m1: 1, m2: 3, m1_tilde: 2 },
            PlantKind::Vessel(_) => Dims { n1: 6, n2: 4, m1: 2, m2: 2, m1_tilde: 3 },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PlantKind::Uav2d(p) => p.validate(),
            PlantKind::Uav3d(p) => p.validate(),
            PlantKind::Vessel(p) => p.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputBounds {
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
}

impl InputBounds {
    pub fn new(u_min: Vec<f64>, u_max: Vec<f64>) -> Result<Self> {
        if u_min.len() != u_max.len() {
            return Err(Error::Dimension(format!(
                "u_min has {} entries, u_max has {}",
                u_min.len(),
                u_max.len()
            )));
        }
        if let Some(i) = (0..u_min.len()).find(|&i| !(u_min[i] < u_max[i])) {
            return Err(Error::InvalidArgument(format!(
                "bounds need u_min < u_max element-wise (channel {i}: {} vs {})",
                u_min[i], u_max[i]
            )));
        }
        Ok(Self { u_min, u_max })
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.u_min.iter().zip(&self.u_max))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn clamp(&self, u: &mut [f64]) {
        for (v, (lo, hi)) in u.iter_mut().zip(self.u_min.iter().zip(&self.u_max)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.u_min
            .iter()
            .zip(&self.u_max)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }
}

/// Partitioned plant state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl PlantState {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        Self { x1, x2 }
    }

    pub fn from_stacked(x: &[f64], n1: usize) -> Self {
        Self::new(x[..n1].to_vec(), x[n1..].to_vec())
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.x1.iter().chain(&self.x2).copied().collect()
    }
}

/// `ẋ = A x̃ + B ũ` around (x̄, ū).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub x_bar: Vec<f64>,
    pub u_bar: Vec<f64>,
}

impl LinearizedSystem {
    /// Reparameterize the inputs as `u = S v`, giving `B S`.
    pub fn with_input_map(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != self.b.ncols() {
            return Err(Error::Dimension(format!(
                "input map has {} rows, B has {} columns",
                s.nrows(),
                self.b.ncols()
            )));
        }
        Ok(Self {
            a: self.a.clone(),
            b: &self.b * s,
            x_bar: self.x_bar.clone(),
            u_bar: self.u_bar.clone(),
        })
    }
}

/// Vessel input map `[T, τ₁, τ₂] ↦ [T, T, τ₁, τ₂]` (both propellers share one thrust).
pub fn vessel_common_thrust_map() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub kind: PlantKind,
    pub bounds: InputBounds,
    /// Optional soft limits on x₂ (lower, upper), enforced as a penalty by the predictive controller.
    pub x2_limits: Option<(Vec<f64>, Vec<f64>)>,
}

impl PlantModel {
    pub fn new(kind: PlantKind, bounds: InputBounds) -> Result<Self> {
        kind.validate()?;
        let d = kind.dims();
        if bounds.u_min.len() != d.m() {
            return Err(Error::Dimension(format!(
                "{} expects {} input bounds, got {}",
                kind.name(),
                d.m(),
                bounds.u_min.len()
            )));
        }
        if d.m1 + d.n2 <= d.m1_tilde {
            return Err(Error::InvalidArgument(format!(
                "{} is not overactuated: m1 + n2 = {} <= {}",
                kind.name(),
                d.m1 + d.n2,
                d.m1_tilde
            )));
        }
        Ok(Self {
            kind,
            bounds,
            x2_limits: None,
        })
    }

    pub fn with_x2_limits(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n2 = self.dims().n2;
        if lower.len() != n2 || upper.len() != n2 {
            return Err(Error::Dimension(format!("x2 limits need {n2} entries")));
        }
        self.x2_limits = Some((lower, upper));
        Ok(self)
    }

    /// Planar UAV-object model with the published actuator limits.
    pub fn uav2d(params: Uav2dParams) -> Result<Self> {
        Self::new(
            PlantKind::Uav2d(params),
            InputBounds::new(vec![0.0, -0.2], vec![5.0, 0.2])?,
        )
    }

    /// Spatial UAV-object model with the published actuator limits.
    pub fn uav3d(params: Uav3dParams) -> Result<Self> {
        Self::new(
            PlantKind::Uav3d(params),
            InputBounds::new(vec![0.0, -0.5, -0.5, -0.5], vec![7.0, 0.5, 0.5, 0.5])?,
        )
    }

    /// Vessel model with the published actuator limits and propeller-angle range.
    pub fn vessel(params: VesselParams) -> Result<Self> {
        Self::new(
            PlantKind::Vessel(params),
            InputBounds::new(
                vec![0.0, 0.0, -1325.0, -1325.0],
                vec![12400.0, 12400.0, 1325.0, 1325.0],
            )?,
        )?
        .with_x2_limits(
            vec![-PI, -PI, f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![PI, PI, f64::INFINITY, f64::INFINITY],
        )
    }

    pub fn dims(&self) -> Dims {
        self.kind.dims()
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    // ---- generic evaluators -------------------------------------------------

    pub fn f1_into<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        match &self.kind {
            PlantKind::Uav2d(p) => p.f1(x1, x2, u1, out),
            PlantKind::Uav3d(p) => p.f1(x1, x2, u1, out),
            PlantKind::Vessel(p) => p.f1(x1, x2, u1, out),
        }
    }

    pub fn f2_into<S: Scalar>(&self, x2: &[S], u2: &[S], out: &mut [S]) {
        match &self.kind {
            PlantKind::Uav2d(p) => p.f2(x2, u2, out),
            PlantKind::Uav3d(p) => p.f2(x2, u2, out),
            PlantKind::Vessel(p) => p.f2(x2, u2, out),
        }
    }

    pub fn psi_into<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        match &self.kind {
            PlantKind::Uav2d(p) => p.psi(x1, x2, u1, out),
            PlantKind::Uav3d(p) => p.psi(x1, x2, u1, out),
            PlantKind::Vessel(p) => p.psi(x1, x2, u1, out),
        }
    }

    /// Kernel point without arity checks; see [`PlantModel::kernel_point`].
    pub fn kernel_into<S: Scalar>(&self, x1: &[S], branch: i32, free: &[f64], out: &mut [S]) {
        match &self.kind {
            PlantKind::Uav2d(p) => p.kernel(x1, branch, free, out),
            PlantKind::Uav3d(p) => p.kernel(x1, branch, free, out),
            PlantKind::Vessel(p) => p.kernel(branch, free, out),
        }
    }

    // ---- checked evaluators -------------------------------------------------

    fn check_len(&self, what: &str, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::Dimension(format!(
                "{}: {what} has {got} entries, expected {want}",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn f1_dot(&self, x1: &[f64], x2: &[f64], u1: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        self.check_len("x1", x1.len(), d.n1)?;
        self.check_len("x2", x2.len(), d.n2)?;
        self.check_len("u1", u1.len(), d.m1)?;
        if let PlantKind::Uav3d(p) = &self.kind {
            let cond = p.mass_condition(x1[0]);
            if cond > MAX_MASS_CONDITION {
                return Err(Error::Singularity(format!(
                    "mass matrix condition {cond:e} at φ = {}",
                    x1[0]
                )));
            }
        }
        let mut out = vec![0.0; d.n1];
        self.f1_into(x1, x2, u1, &mut out);
        Ok(out)
    }

    pub fn f2_dot(&self, x2: &[f64], u2: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        self.check_len("x2", x2.len(), d.n2)?;
        self.check_len("u2", u2.len(), d.m2)?;
        let mut out = vec![0.0; d.n2];
        self.f2_into(x2, u2, &mut out);
        Ok(out)
    }

    pub fn effective_control(&self, x1: &[f64], x2: &[f64], u1: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        self.check_len("x1", x1.len(), d.n1)?;
        self.check_len("x2", x2.len(), d.n2)?;
        self.check_len("u1", u1.len(), d.m1)?;
        let mut out = vec![0.0; d.m1_tilde];
        self.psi_into(x1, x2, u1, &mut out);
        Ok(out)
    }

    /// Number of free kernel parameters: 2-D `[γ]`, 3-D `[ψ, ω₀]`, vessel `[γ₁, γ₂]`.
    pub fn kernel_arity(&self) -> usize {
        match self.kind {
            PlantKind::Uav2d(_) => 1,
            PlantKind::Uav3d(_) => 4,
            PlantKind::Vessel(_) => 2,
        }
    }

    /// `x₂* = 𝒦_n(x₁)`, a state in which the admissible actuator command yields zero effective control.
    pub fn kernel_point(&self, x1: &[f64], branch: i32, free: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        self.check_len("x1", x1.len(), d.n1)?;
        if free.len() != self.kernel_arity() {
            return Err(Error::InvalidArgument(format!(
                "{} kernel takes {} free parameters, got {}",
                self.name(),
                self.kernel_arity(),
                free.len()
            )));
        }
        if branch.unsigned_abs() > 1_000_000 {
            return Err(Error::InvalidArgument(format!("kernel branch {branch} out of range")));
        }
        let mut out = vec![0.0; d.n2];
        self.kernel_into(x1, branch, free, &mut out);
        Ok(out)
    }

    /// Indices of x₂ that carry actuator configuration (as opposed to its rates).
    pub fn x2_position_indices(&self) -> std::ops::Range<usize> {
        match self.kind {
            PlantKind::Uav2d(_) => 0..1,
            PlantKind::Uav3d(_) => 0..4,
            PlantKind::Vessel(_) => 0..2,
        }
    }

    /// Indices (in the stacked state) that are angles.
    pub fn angle_indices(&self) -> &'static [usize] {
        match self.kind {
            PlantKind::Uav2d(_) => &[0, 2],
            PlantKind::Uav3d(_) => &[0, 1],
            PlantKind::Vessel(_) => &[2, 6, 7],
        }
    }

    /// Whether x₂ position component `i` is an angle (wrapped for differences).
    pub fn x2_position_is_angle(&self) -> bool {
        !matches!(self.kind, PlantKind::Uav3d(_))
    }

    /// Column names of the stacked state.
    pub fn state_names(&self) -> &'static [&'static str] {
        match self.kind {
            PlantKind::Uav2d(_) => &["alpha", "alpha_dot", "beta", "beta_dot"],
            PlantKind::Uav3d(_) => &[
                "phi", "theta", "phi_dot", "theta_dot", "q0", "q1", "q2", "q3", "wx", "wy", "wz",
            ],
            PlantKind::Vessel(_) => &[
                "x_v",
                "y_v",
                "alpha_v",
                "x_v_dot",
                "y_v_dot",
                "alpha_v_dot",
                "theta1",
                "theta2",
                "theta1_dot",
                "theta2_dot",
            ],
        }
    }

    pub fn input_names(&self) -> &'static [&'static str] {
        match self.kind {
            PlantKind::Uav2d(_) => &["u1", "u2"],
            PlantKind::Uav3d(_) => &["thrust", "tau_x", "tau_y", "tau_z"],
            PlantKind::Vessel(_) => &["T1", "T2", "tau1", "tau2"],
        }
    }

    /// Names of the allocated set-point columns (x₂ position components).
    pub fn x2d_names(&self) -> &'static [&'static str] {
        match self.kind {
            PlantKind::Uav2d(_) => &["beta_d"],
            PlantKind::Uav3d(_) => &["qd0", "qd1", "qd2", "qd3"],
            PlantKind::Vessel(_) => &["theta1_d", "theta2_d"],
        }
    }

    /// Restore state invariants after an integration step (unit quaternion).
    pub fn renormalize(&self, x: &mut [f64]) {
        if let PlantKind::Uav3d(_) = self.kind {
            let n = x[4..8].iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 && n.is_finite() {
                x[4..8].iter_mut().for_each(|v| *v /= n);
            }
        }
    }

    /// Copy of the stacked state with angle components wrapped to (−π, π].
    pub fn wrapped(&self, x: &[f64]) -> Vec<f64> {
        let mut w = x.to_vec();
        for &i in self.angle_indices() {
            w[i] = wrap_angle(w[i]);
        }
        w
    }

    /// Stacked field Γ(x, u) = [f; g] on plain reals.
    pub fn gamma(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval(x, u, &mut out);
        out
    }

    /// Jacobians of Γ at a verified equilibrium.
    pub fn linearize(&self, x_bar: &[f64], u_bar: &[f64]) -> Result<LinearizedSystem> {
        let d = self.dims();
        self.check_len("x̄", x_bar.len(), d.n())?;
        self.check_len("ū", u_bar.len(), d.m())?;
        let residual = self
            .gamma(x_bar, u_bar)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if !(residual <= EQUILIBRIUM_TOLERANCE) {
            return Err(Error::EquilibriumViolation { residual });
        }
        let z: Vec<f64> = x_bar.iter().chain(u_bar).copied().collect();
        let (_, jac) = jacobian(&StackedField(self), &z);
        Ok(LinearizedSystem {
            a: jac.columns(0, d.n()).into_owned(),
            b: jac.columns(d.n(), d.m()).into_owned(),
            x_bar: x_bar.to_vec(),
            u_bar: u_bar.to_vec(),
        })
    }
}

impl OdeField for PlantModel {
    fn state_dim(&self) -> usize {
        self.dims().n()
    }

    fn input_dim(&self) -> usize {
        self.dims().m()
    }

    fn eval<S: Scalar>(&self, x: &[S], u: &[S], dx: &mut [S]) {
        let d = self.dims();
        debug_assert!(d.n() <= MAX_STATE);
        let (x1, x2) = x.split_at(d.n1);
        let (u1, u2) = u.split_at(d.m1);
        let (dx1, dx2) = dx.split_at_mut(d.n1);
        self.f1_into(x1, x2, u1, dx1);
        self.f2_into(x2, u2, dx2);
    }
}

/// Γ as a function of the concatenation [x; u].
struct StackedField<'a>(&'a PlantModel);

impl VectorField for StackedField<'_> {
    fn input_dim(&self) -> usize {
        self.0.dims().n() + self.0.dims().m()
    }
    fn output_dim(&self) -> usize {
        self.0.dims().n()
    }
    fn eval<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        let n = self.0.dims().n();
        OdeField::eval(self.0, &z[..n], &z[n..], out);
    }
}

/// Numerical rank of `[B, AB, …, A^{n−1}B]`.
///
/// The Krylov blocks are orthogonalized one at a time (controllability staircase):
/// directions whose singular value falls below `RANK_THRESHOLD` times `‖B‖₂`
/// (first block) or `‖A‖₂` (later blocks) count as zero. Forming the raw matrix
/// instead would mix powers of `A` spanning many orders of magnitude.
pub fn controllability_rank(lin: &LinearizedSystem) -> usize {
    let n = lin.a.nrows();
    let b_scale = lin.b.clone().singular_values().max();
    let a_scale = lin.a.clone().singular_values().max();
    if !(b_scale > 0.0) {
        return 0;
    }
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut block = lin.b.clone();
    let mut tol = RANK_THRESHOLD * b_scale;
    while basis.len() < n {
        for _ in 0..2 {
            for q in &basis {
                for mut col in block.column_iter_mut() {
                    let d = q.dot(&col);
                    col.axpy(-d, q, 1.0);
                }
            }
        }
        let svd = block.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let fresh: Vec<_> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > tol)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        if fresh.is_empty() {
            break;
        }
        let mut next = DMatrix::zeros(n, fresh.len());
        for (j, q) in fresh.iter().enumerate() {
            next.set_column(j, &(&lin.a * q));
        }
        basis.extend(fresh);
        block = next;
        tol = RANK_THRESHOLD * a_scale;
    }
    basis.len().min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn uav2d() -> PlantModel {
        PlantModel::uav2d(Uav2dParams::default()).unwrap()
    }
    fn uav3d() -> PlantModel {
        PlantModel::uav3d(Uav3dParams::default()).unwrap()
    }
    fn vessel() -> PlantModel {
        PlantModel::vessel(VesselParams::default()).unwrap()
    }

    #[test]
    fn derived_parameters() {
        let p = Uav2dParams::default();
        assert!((p.i_tilde() - (0.03 * 1.5625 / 4.0 + 2.0 + 0.1 * 1.5625)).abs() < 1e-15);
        assert!((p.m_tilde() - 0.115).abs() < 1e-15);
        assert!((Uav3dParams::default().m_tilde() - 0.175).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = Uav2dParams { i_o: 0.0, ..Default::default() };
        assert!(PlantModel::uav2d(p).is_err());
        let v = VesselParams { ell_y: -1.0, ..Default::default() };
        assert!(PlantModel::vessel(v).is_err());
        assert!(InputBounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(PlantModel::new(
            PlantKind::Uav2d(Uav2dParams::default()),
            InputBounds::new(vec![0.0], vec![1.0]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn thrust_cancels_gravity_torque() {
        let m = uav2d();
        let p = Uav2dParams::default();
        let dx = m.f1_dot(&[0.0, 0.0], &[FRAC_PI_2, 0.0], &[p.m_tilde() * p.g]).unwrap();
        assert!(dx[0] == 0.0 && dx[1].abs() < 1e-15);
    }

    #[test]
    fn upright_equilibrium_without_thrust() {
        let dx = uav2d().f1_dot(&[FRAC_PI_2, 0.0], &[0.3, 0.0], &[0.0]).unwrap();
        assert_eq!(dx[0], 0.0);
        assert!(dx[1].abs() < 1e-15);
    }

    #[test]
    fn vessel_opposed_thrusters_produce_nothing() {
        let m = vessel();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let heading: f64 = rng.gen_range(-PI..PI);
            let x1 = [1.0, 2.0, heading, 0.0, 0.0, 0.0];
            let dx = m.f1_dot(&x1, &[FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0], &[1000.0, 1000.0]).unwrap();
            assert!(dx[3..].iter().all(|v| v.abs() < 1e-12), "{dx:?}");
        }
    }

    #[test]
    fn actuator_dynamics() {
        assert_eq!(uav2d().f2_dot(&[0.3, 0.0], &[0.0]).unwrap(), vec![0.0, 0.0]);
        let d = uav3d()
            .f2_dot(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &[0.0; 3])
            .unwrap();
        let expected = [0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let v = vessel();
        let ip = VesselParams::default().i_p;
        let d = v.f2_dot(&[0.0, 0.0, 0.0, 0.0], &[ip * 2.0, 0.0]).unwrap();
        assert!((d[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn effective_control_examples() {
        assert_eq!(uav2d().effective_control(&[0.4, 1.0], &[0.4, 0.0], &[3.0]).unwrap(), vec![0.0]);
        let e = uav3d()
            .effective_control(&[FRAC_PI_2, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[1.0])
            .unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-15));
        let e = vessel()
            .effective_control(&[0.0, 0.0, 0.7, 0.0, 0.0, 0.0], &[FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0], &[500.0, 500.0])
            .unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn effective_control_consistent_with_f1() {
        let m = uav2d();
        let p = Uav2dParams::default();
        let (x1, x2, u1) = ([0.3, -0.2], [1.1, 0.4], [2.2]);
        let psi = m.effective_control(&x1, &x2, &u1).unwrap()[0];
        let f = m.f1_dot(&x1, &x2, &u1).unwrap();
        let expected = p.ell / p.i_tilde() * (psi - p.m_tilde() * p.g * x1[0].cos());
        assert!((f[1] - expected).abs() < 1e-14);
    }

    #[test]
    fn kernel_points() {
        let x = uav2d().kernel_point(&[0.7, -0.2], 0, &[0.0]).unwrap();
        assert_eq!(x, vec![0.7, 0.0]);
        assert_eq!(uav2d().effective_control(&[0.7, -0.2], &x, &[3.0]).unwrap(), vec![0.0]);

        let q = uav3d()
            .kernel_point(&[FRAC_PI_2, 0.0, 0.0, 0.0], 0, &[0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in q.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }

        let v = vessel().kernel_point(&[0.0; 6], 0, &[0.0, 0.0]).unwrap();
        assert_eq!(v, vec![FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0]);
    }

    #[test]
    fn kernel_arity_checked() {
        assert!(uav2d().kernel_point(&[0.0, 0.0], 0, &[]).is_err());
        assert!(uav3d().kernel_point(&[0.0; 4], 0, &[0.0]).is_err());
        assert!(vessel().kernel_point(&[0.0; 6], 0, &[0.0; 3]).is_err());
        assert!(vessel().kernel_point(&[0.0; 5], 0, &[0.0; 2]).is_err());
    }

    #[test]
    fn kernel_matches_published_3d_form_on_zero_azimuth() {
        // At θ = 0 the published closed form for n = 0, ψ = 0 is
        // [cos(φ/2 − π/4), 0, −sin(φ/2 − π/4), 0].
        let m = uav3d();
        for phi in [0.0, 0.3, FRAC_PI_2, 2.0, PI] {
            let q = m.kernel_point(&[phi, 0.0, 0.0, 0.0], 0, &[0.0; 4]).unwrap();
            let h = phi / 2.0 - PI / 4.0;
            let expected = [h.cos(), 0.0, -h.sin(), 0.0];
            for i in 0..4 {
                assert!((q[i] - expected[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (m2, m3, mv) = (uav2d(), uav3d(), vessel());
        for _ in 0..1000 {
            let branch = rng.gen_range(-3..=3);
            let x1: Vec<f64> = (0..2).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let k = m2.kernel_point(&x1, branch, &[rng.gen_range(-5.0..5.0)]).unwrap();
            let psi = m2.effective_control(&x1, &k, &[rng.gen_range(0.0..5.0)]).unwrap();
            assert!(psi[0].abs() <= 1e-12);

            let x1: Vec<f64> = (0..4).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let free: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let k = m3.kernel_point(&x1, branch, &free).unwrap();
            let psi = m3.effective_control(&x1, &k, &[rng.gen_range(0.0..7.0)]).unwrap();
            assert!(psi.iter().all(|v| v.abs() <= 1e-12), "{psi:?}");

            let x1: Vec<f64> = (0..6).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let free = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let k = mv.kernel_point(&x1, branch, &free).unwrap();
            let t = rng.gen_range(0.0..12400.0);
            let psi = mv.effective_control(&x1, &k, &[t, t]).unwrap();
            let scale = t.max(1.0);
            assert!(psi.iter().all(|v| v.abs() <= 1e-12 * scale), "{psi:?}");
        }
    }

    #[test]
    fn published_2d_linearization() {
        let m = uav2d();
        let p = Uav2dParams::default();
        let lin = m.linearize(&[FRAC_PI_2, 0.0, FRAC_PI_2, 0.0], &[0.0, 0.0]).unwrap();
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = p.ell * p.m_tilde() * p.g / p.i_tilde();
        a[(2, 3)] = 1.0;
        let mut b = DMatrix::zeros(4, 2);
        b[(3, 1)] = 1.0 / p.i_u;
        assert!((&lin.a - a).amax() < 1e-14);
        assert!((&lin.b - b).amax() < 1e-15);
        assert_eq!(controllability_rank(&lin), 2);
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let m = uav2d();
        let p = Uav2dParams::default();
        let alpha = 0.6;
        let x = [alpha, 0.0, alpha + 1.0, 0.0];
        let u = [p.m_tilde() * p.g * alpha.cos() / 1f64.sin(), 0.0];
        let lin = m.linearize(&x, &u).unwrap();
        let h = 1e-6;
        for j in 0..4 {
            let (mut xp, mut xm) = (x, x);
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (m.gamma(&xp, &u), m.gamma(&xm, &u));
            for i in 0..4 {
                assert!((lin.a[(i, j)] - (gp[i] - gm[i]) / (2.0 * h)).abs() <= 1e-6);
            }
        }
        for j in 0..2 {
            let (mut up, mut um) = (u, u);
            up[j] += h;
            um[j] -= h;
            let (gp, gm) = (m.gamma(&x, &up), m.gamma(&x, &um));
            for i in 0..4 {
                assert!((lin.b[(i, j)] - (gp[i] - gm[i]) / (2.0 * h)).abs() <= 1e-6);
            }
        }
        assert_eq!(controllability_rank(&lin), 4);
    }

    #[test]
    fn non_equilibrium_rejected() {
        let err = uav2d().linearize(&[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::EquilibriumViolation { residual } if residual > 0.1));
    }

    #[test]
    fn vessel_singular_rank() {
        let lin = vessel()
            .linearize(
                &[1.0, -2.0, 0.4, 0.0, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0],
                &[1000.0, 1000.0, 0.0, 0.0],
            )
            .unwrap();
        let shared = lin.with_input_map(&vessel_common_thrust_map()).unwrap();
        assert_eq!(controllability_rank(&shared), 8);
        // Differential thrust reaches the lateral direction the shared thrust cannot.
        assert_eq!(controllability_rank(&lin), 10);
    }

    #[test]
    fn spatial_singular_equilibrium_is_rank_deficient() {
        let m = uav3d();
        let q = m.kernel_point(&[FRAC_PI_2, 0.3, 0.0, 0.0], 0, &[0.0; 4]).unwrap();
        let mut x = vec![FRAC_PI_2, 0.3, 0.0, 0.0];
        x.extend(q);
        let lin = m.linearize(&x, &[0.0; 4]).unwrap();
        assert!(controllability_rank(&lin) < 11);
    }

    #[test]
    fn double_integrator_is_controllable() {
        let lin = LinearizedSystem {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            x_bar: vec![0.0; 2],
            u_bar: vec![0.0],
        };
        assert_eq!(controllability_rank(&lin), 2);
    }

    #[test]
    fn singular_mass_matrix_reported() {
        let p = Uav3dParams { i_o: [0.01, 2.0, 1e-14], ..Default::default() };
        let m = PlantModel::uav3d(p).unwrap();
        let err = m.f1_dot(&[FRAC_PI_2, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0]);
        assert!(matches!(err, Err(Error::Singularity(_))));
    }

    #[test]
    fn renormalize_restores_unit_quaternion() {
        let m = uav3d();
        let mut x = vec![0.0, 0.0, 0.0, 0.0, 1.1, 0.2, -0.1, 0.0, 0.0, 0.0, 0.0];
        m.renormalize(&mut x);
        let n = x[4..8].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

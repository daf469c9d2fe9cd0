//! UAV holding an object on a spherical ground joint.
//!
//! x1 = [φ, θ, φ̇, θ̇] (polar, azimuth), x2 = [q (4), ω (3)], u1 = T, u2 = τ (3).
//! The object dynamics follow the Euler-Lagrange form `M q̈ = ℱ − C q̇ − G`
//! with the generalized force `ℱ = P_θφ R(q) [0 0 T]ᵀ`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::mathcore::{body_z_in_world, hamilton, quat_rate, Scalar};
use crate::{Error, Result};

/// Mass-matrix condition number above which the model refuses to evaluate.
pub const MAX_MASS_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uav3dParams {
    pub m_u: f64,
    /// Diagonal of the UAV inertia.
    pub i_u: [f64; 3],
    pub m_o: f64,
    /// Diagonal of the object inertia.
    pub i_o: [f64; 3],
    pub ell: f64,
    pub g: f64,
}

impl Default for Uav3dParams {
    fn default() -> Self {
        Self {
            m_u: 0.15,
            i_u: [0.005, 0.005, 0.01],
            m_o: 0.1,
            i_o: [0.01, 2.0, 2.0],
            ell: 3.0,
            g: 9.81,
        }
    }
}

impl Uav3dParams {
    pub fn validate(&self) -> Result<()> {
        let scalars = [("m_u", self.m_u), ("m_o", self.m_o), ("ell", self.ell), ("g", self.g)];
        let diag = self
            .i_u
            .iter()
            .map(|&v| ("I_u", v))
            .chain(self.i_o.iter().map(|&v| ("I_o", v)));
        for (name, v) in scalars.into_iter().chain(diag) {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// m̃ = m_o/4 + m_u (differs from the planar model's m_o/2).
    pub fn m_tilde(&self) -> f64 {
        self.m_o / 4.0 + self.m_u
    }

    /// First entry of G(q), the gravity term on the polar angle.
    pub fn gravity_polar<S: Scalar>(&self, phi: S) -> S {
        phi.cos() * (self.g * self.ell * (self.m_o / 2.0 + self.m_u))
    }

    /// Diagonal of M(q).
    pub fn mass_diag<S: Scalar>(&self, phi: S) -> [S; 2] {
        let ml2 = self.m_tilde() * self.ell * self.ell;
        [
            (-(phi * 2.0).cos() + 1.0) * (ml2 / 2.0) + self.i_o[1],
            phi.cos().powi2() * ml2 + self.i_o[2],
        ]
    }

    pub fn mass_condition(&self, phi: f64) -> f64 {
        let [a, b] = self.mass_diag(phi);
        if a <= 0.0 || b <= 0.0 {
            return f64::INFINITY;
        }
        a.max(b) / a.min(b)
    }

    /// Rows φ̂ and θ̂ of the projection P_θφ.
    pub fn projection<S: Scalar>(phi: S, theta: S) -> [[S; 3]; 2] {
        let (sp, cp) = (phi.sin(), phi.cos());
        let (st, ct) = (theta.sin(), theta.cos());
        [[-(ct * sp), -(sp * st), cp], [-st, ct, S::zero()]]
    }

    /// UAV position p(φ, θ) on the sphere of radius ℓ.
    pub fn position(&self, phi: f64, theta: f64) -> [f64; 3] {
        let l = self.ell;
        [
            l * phi.cos() * theta.cos(),
            l * phi.cos() * theta.sin(),
            l * phi.sin(),
        ]
    }

    /// ṗ from (φ, θ, φ̇, θ̇).
    pub fn velocity(&self, x1: &[f64]) -> [f64; 3] {
        let (phi, theta, dphi, dtheta) = (x1[0], x1[1], x1[2], x1[3]);
        let l = self.ell;
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        [
            l * (-sp * ct * dphi - cp * st * dtheta),
            l * (-sp * st * dphi + cp * ct * dtheta),
            l * cp * dphi,
        ]
    }

    pub(crate) fn psi<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        let z = body_z_in_world(&x2[0..4]);
        let p = Self::projection(x1[0], x1[1]);
        for (row, o) in p.iter().zip(out.iter_mut()) {
            *o = (row[0] * z[0] + row[1] * z[1] + row[2] * z[2]) * u1[0];
        }
    }

    pub(crate) fn f1<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        let mut force = [S::zero(); 2];
        self.psi(x1, x2, u1, &mut force);
        let (phi, dphi, dtheta) = (x1[0], x1[2], x1[3]);
        let a = (phi * 2.0).sin() * (self.m_tilde() * self.ell * self.ell / 2.0);
        let coriolis = [a * (dphi * dphi + dtheta * dtheta), -(a * dphi * dtheta * 2.0)];
        let m = self.mass_diag(phi);
        out[0] = dphi;
        out[1] = dtheta;
        out[2] = (force[0] - coriolis[0] - self.gravity_polar(phi)) / m[0];
        out[3] = (force[1] - coriolis[1]) / m[1];
    }

    pub(crate) fn f2<S: Scalar>(&self, x2: &[S], u2: &[S], out: &mut [S]) {
        let q = &x2[0..4];
        let w = &x2[4..7];
        let dq = quat_rate(q, w);
        out[..4].copy_from_slice(&dq);
        // ω̇ = I⁻¹(−ω × Iω + τ)
        let iw = [w[0] * self.i_u[0], w[1] * self.i_u[1], w[2] * self.i_u[2]];
        let gyro = [
            w[1] * iw[2] - w[2] * iw[1],
            w[2] * iw[0] - w[0] * iw[2],
            w[0] * iw[1] - w[1] * iw[0],
        ];
        for i in 0..3 {
            out[4 + i] = (u2[i] - gyro[i]) / self.i_u[i];
        }
    }

    /// 𝒦_n(x1) = [q_{n}(φ, θ, ψ), ω₀]: attitude whose thrust axis is radial.
    ///
    /// `free = [ψ, ω₀x, ω₀y, ω₀z]`.
    pub(crate) fn kernel<S: Scalar>(&self, x1: &[S], branch: i32, free: &[f64], out: &mut [S]) {
        let half_polar = x1[0] * 0.5 - FRAC_PI_4 + branch as f64 * FRAC_PI_2;
        let half_azimuth = x1[1] * 0.5;
        let yaw = [
            S::cst((0.5 * free[0]).cos()),
            S::zero(),
            S::zero(),
            S::cst((0.5 * free[0]).sin()),
        ];
        let azimuth = [half_azimuth.cos(), S::zero(), S::zero(), half_azimuth.sin()];
        let tilt = [half_polar.cos(), S::zero(), -half_polar.sin(), S::zero()];
        let q = hamilton(&hamilton(&azimuth, &tilt), &yaw);
        out[..4].copy_from_slice(&q);
        for i in 0..3 {
            out[4 + i] = S::cst(free[1 + i]);
        }
    }
}

//! Surface vessel with two azimuthal thrusters.
//!
//! x1 = [x_v, y_v, α_v, ẋ_v, ẏ_v, α̇_v], x2 = [θ₁, θ₂, θ̇₁, θ̇₂],
//! u1 = [T₁, T₂], u2 = [τ₁, τ₂].

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::mathcore::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VesselParams {
    pub m_v: f64,
    pub i_v: f64,
    pub i_p: f64,
    pub ell_x: f64,
    pub ell_y: f64,
}

impl Default for VesselParams {
    fn default() -> Self {
        Self {
            m_v: 11000.0,
            i_v: 36062.0,
            i_p: 700.0,
            ell_x: -2.75,
            ell_y: 0.894,
        }
    }
}

impl VesselParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m_v", self.m_v), ("I_v", self.i_v), ("I_p", self.i_p)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ell_y >= 0.0) || !self.ell_x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ell_y must be non-negative and ell_x finite, got ({}, {})",
                self.ell_x, self.ell_y
            )));
        }
        Ok(())
    }

    /// Net world-frame force and yaw torque from thrusts `u1` at angles `x2[0..2]`.
    pub(crate) fn psi<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        let heading = x1[2];
        let (t1, t2) = (u1[0], u1[1]);
        let (a1, a2) = (x2[0] + heading, x2[1] + heading);
        let (c1, s1) = (x2[0].cos(), x2[0].sin());
        let (c2, s2) = (x2[1].cos(), x2[1].sin());
        out[0] = t1 * a1.cos() + t2 * a2.cos();
        out[1] = t1 * a1.sin() + t2 * a2.sin();
        out[2] = (t1 * c1 - t2 * c2) * self.ell_y - (t1 * s1 + t2 * s2) * self.ell_x;
    }

    pub(crate) fn f1<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        let mut w = [S::zero(); 3];
        self.psi(x1, x2, u1, &mut w);
        out[0] = x1[3];
        out[1] = x1[4];
        out[2] = x1[5];
        out[3] = w[0] / self.m_v;
        out[4] = w[1] / self.m_v;
        out[5] = w[2] / self.i_v;
    }

    pub(crate) fn f2<S: Scalar>(&self, x2: &[S], u2: &[S], out: &mut [S]) {
        out[0] = x2[2];
        out[1] = x2[3];
        out[2] = u2[0] / self.i_p;
        out[3] = u2[1] / self.i_p;
    }

    /// 𝒦_n = [π/2 + nπ, −π/2 + nπ, γ₁, γ₂]
    pub(crate) fn kernel<S: Scalar>(&self, branch: i32, free: &[f64], out: &mut [S]) {
        let shift = branch as f64 * PI;
        out[0] = S::cst(FRAC_PI_2 + shift);
        out[1] = S::cst(-FRAC_PI_2 + shift);
        out[2] = S::cst(free[0]);
        out[3] = S::cst(free[1]);
    }
}

//! Planar UAV holding a hinged object.
//!
//! x1 = [α, α̇], x2 = [β, β̇], u1 = T, u2 = τ.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::mathcore::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uav2dParams {
    pub m_u: f64,
    pub i_u: f64,
    pub m_o: f64,
    pub i_o: f64,
    pub ell: f64,
    pub g: f64,
}

impl Default for Uav2dParams {
    fn default() -> Self {
        Self {
            m_u: 0.1,
            i_u: 1.014,
            m_o: 0.03,
            i_o: 2.0,
            ell: 1.25,
            g: 9.81,
        }
    }
}

impl Uav2dParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_u", self.m_u),
            ("I_u", self.i_u),
            ("m_o", self.m_o),
            ("I_o", self.i_o),
            ("ell", self.ell),
            ("g", self.g),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Ĩ = m_o ℓ²/4 + I_o + m_u ℓ²
    pub fn i_tilde(&self) -> f64 {
        self.m_o * self.ell * self.ell / 4.0 + self.i_o + self.m_u * self.ell * self.ell
    }

    /// m̃ = m_o/2 + m_u
    pub fn m_tilde(&self) -> f64 {
        self.m_o / 2.0 + self.m_u
    }

    pub(crate) fn f1<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        let psi = u1[0] * (x2[0] - x1[0]).sin();
        out[0] = x1[1];
        out[1] = (psi - x1[0].cos() * (self.m_tilde() * self.g)) * (self.ell / self.i_tilde());
    }

    pub(crate) fn f2<S: Scalar>(&self, x2: &[S], u2: &[S], out: &mut [S]) {
        out[0] = x2[1];
        out[1] = u2[0] / self.i_u;
    }

    pub(crate) fn psi<S: Scalar>(&self, x1: &[S], x2: &[S], u1: &[S], out: &mut [S]) {
        out[0] = u1[0] * (x2[0] - x1[0]).sin();
    }

    /// 𝒦_n(x1) = [α + nπ, γ]
    pub(crate) fn kernel<S: Scalar>(&self, x1: &[S], branch: i32, free: &[f64], out: &mut [S]) {
        out[0] = x1[0] + branch as f64 * PI;
        out[1] = S::cst(free[0]);
    }

    /// Mechanical energy of the object subsystem, ½Ĩα̇² + ℓ m̃ g sin α.
    pub fn object_energy(&self, x1: &[f64]) -> f64 {
        0.5 * self.i_tilde() * x1[1] * x1[1] + self.ell * self.m_tilde() * self.g * x1[0].sin()
    }
}

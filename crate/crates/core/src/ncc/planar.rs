//! Cascaded thrust/attitude law for the planar UAV-object system.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::plants::Uav2dParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ncc2dGains {
    pub kp_alpha: f64,
    pub kd_alpha: f64,
    pub kp_beta: f64,
    pub kd_beta: f64,
    /// Slope of the arctan allocated mapping.
    pub epsilon: f64,
    pub alpha_d: f64,
}

impl Default for Ncc2dGains {
    /// Published Example 1 gains.
    fn default() -> Self {
        Self {
            kp_alpha: 4.0,
            kd_alpha: 2.5,
            kp_beta: 3e-5,
            kd_beta: 1e-5,
            epsilon: 0.4,
            alpha_d: FRAC_PI_2,
        }
    }
}

impl Ncc2dGains {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kp_alpha", self.kp_alpha),
            ("kd_alpha", self.kd_alpha),
            ("kp_beta", self.kp_beta),
            ("kd_beta", self.kd_beta),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=PI).contains(&self.alpha_d) {
            return Err(Error::InvalidArgument(format!(
                "alpha_d must lie in [0, π], got {}",
                self.alpha_d
            )));
        }
        Ok(())
    }

    /// Lipschitz constant of β_d in (α, α̇) under the ∞-norm.
    pub fn mapping_lipschitz_bound(&self, params: &Uav2dParams) -> f64 {
        1.0 + self.epsilon * (self.kp_alpha + self.kd_alpha + params.m_tilde() * params.g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ncc2dCommand {
    pub u1: f64,
    pub u2: f64,
    pub beta_d: f64,
    /// Ideal effective control ũ₁,d.
    pub u1_tilde_d: f64,
}

/// ũ₁,d = k_p,α(α_d − α) − k_d,α α̇ + m̃ g cos α
pub fn ideal_effective_control(gains: &Ncc2dGains, x1: &[f64], params: &Uav2dParams) -> f64 {
    gains.kp_alpha * (gains.alpha_d - x1[0]) - gains.kd_alpha * x1[1]
        + params.m_tilde() * params.g * x1[0].cos()
}

/// Allocated mapping β_d = arctan(ε ũ₁,d) + α together with the thrust and attitude torque.
///
/// `u1 = ũ/sin(arctan(εũ))` is evaluated as `√(1 + ε²ũ²)/ε`, which stays finite at ũ = 0.
pub fn ncc2d_step(gains: &Ncc2dGains, x: &[f64], params: &Uav2dParams) -> Ncc2dCommand {
    let (alpha, beta, beta_dot) = (x[0], x[2], x[3]);
    let ut = ideal_effective_control(gains, &x[..2], params);
    let eu = gains.epsilon * ut;
    let beta_d = eu.atan() + alpha;
    Ncc2dCommand {
        u1: (1.0 + eu * eu).sqrt() / gains.epsilon,
        u2: gains.kp_beta * (beta_d - beta) - gains.kd_beta * beta_dot,
        beta_d,
        u1_tilde_d: ut,
    }
}

/// Lossless but discontinuous thrust-direction choice θ_d = ±π/2.
pub fn optimal_mapping2d(tau_alpha_d: f64) -> f64 {
    if tau_alpha_d >= 0.0 {
        FRAC_PI_2
    } else {
        -FRAC_PI_2
    }
}

/// Same cascade as [`ncc2d_step`] with the optimal mapping in place of the arctan one.
///
/// With |sin θ_d| = 1 the thrust that realizes ũ₁,d is |ũ₁,d|.
pub fn optimal2d_step(gains: &Ncc2dGains, x: &[f64], params: &Uav2dParams) -> Ncc2dCommand {
    let (alpha, beta, beta_dot) = (x[0], x[2], x[3]);
    let ut = ideal_effective_control(gains, &x[..2], params);
    let beta_d = optimal_mapping2d(params.ell * ut) + alpha;
    Ncc2dCommand {
        u1: ut.abs(),
        u2: gains.kp_beta * (beta_d - beta) - gains.kd_beta * beta_dot,
        beta_d,
        u1_tilde_d: ut,
    }
}

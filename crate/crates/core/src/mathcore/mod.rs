//! Shared numerical kernel: scalars with forward-mode derivatives,
//! quaternion algebra, the bell-curve weight and fixed-step RK4.

mod bell;
mod dual;
mod quaternion;
mod rk4;
mod scalar;

pub use bell::{bell, bell_of_square, BellParams};
pub use dual::{
    central_difference, gradient, jacobian, DualScalar, ScalarField, VectorField, SEED_WIDTH,
};
pub use quaternion::{
    body_z_in_world, cross, hamilton, quat_rate, quat_to_rotation, skew, Quaternion,
    UNIT_TOLERANCE,
};
pub use rk4::{rk4_into, rk4_step, OdeField, MAX_STATE};
pub use scalar::{norm_sq, Scalar};

use std::f64::consts::PI;

/// Wrap an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(5.0 * PI / 4.0) + 3.0 * PI / 4.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.3), 0.3);
    }
}

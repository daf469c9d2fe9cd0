//! Geodesic thrust law and quaternion attitude law for the spatial UAV-object system.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::mathcore::Quaternion;
use crate::plants::Uav3dParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicGains {
    pub kp_t: f64,
    pub kd_t: f64,
    pub kp_q: f64,
    pub kd_q: f64,
    /// Radial bias thrust, keeps the commanded force away from zero.
    pub t_r: f64,
    pub epsilon: f64,
    /// Desired yaw.
    pub psi: f64,
}

impl Default for GeodesicGains {
    /// Published Example 2 gains.
    fn default() -> Self {
        Self {
            kp_t: 2.0,
            kd_t: 3.0,
            kp_q: 2.0,
            kd_q: 0.2,
            t_r: 1.0,
            epsilon: 0.01,
            psi: 0.0,
        }
    }
}

impl GeodesicGains {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kp_t", self.kp_t),
            ("kd_t", self.kd_t),
            ("kp_q", self.kp_q),
            ("kd_q", self.kd_q),
            ("T_r", self.t_r),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Great-circle distance ℓ·arccos(⟨p/ℓ, p_d/ℓ⟩).
pub fn geodesic_distance(p: &Vector3<f64>, p_d: &Vector3<f64>, ell: f64) -> f64 {
    let c = (p.dot(p_d) / (ell * ell)).clamp(-1.0, 1.0);
    ell * c.acos()
}

/// Tangent direction at `p` towards `p_d`, regularized by `epsilon`.
pub fn geodesic_direction(p: &Vector3<f64>, p_d: &Vector3<f64>, epsilon: f64) -> Vector3<f64> {
    let t = p.cross(p_d).cross(p);
    t / t.norm().max(epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicForce {
    pub force: Vector3<f64>,
    pub thrust: f64,
}

/// T R_d ẑ = T_t t̂ + T_φ φ̂ + T_r r̂
pub fn geodesic_force(
    gains: &GeodesicGains,
    x1: &[f64],
    p_d: &Vector3<f64>,
    params: &Uav3dParams,
) -> GeodesicForce {
    let (phi, theta) = (x1[0], x1[1]);
    let p = Vector3::from(params.position(phi, theta));
    let p_dot = Vector3::from(params.velocity(x1));
    let dist = geodesic_distance(&p, p_d, params.ell);
    let t_hat = geodesic_direction(&p, p_d, gains.epsilon);
    let [phi_row, _] = Uav3dParams::projection(phi, theta);
    let phi_hat = Vector3::from(phi_row);
    let r_hat = p / params.ell;
    let force = t_hat * (dist * gains.kp_t) - p_dot * gains.kd_t
        + phi_hat * params.gravity_polar(phi)
        + r_hat * gains.t_r;
    GeodesicForce {
        force,
        thrust: force.norm(),
    }
}

/// Attitude whose body z-axis points along `force`, followed by a yaw `psi` about that axis.
pub fn desired_quaternion(force: &Vector3<f64>, psi: f64) -> Result<Quaternion> {
    let n = force.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "desired force must be finite and nonzero, got {force:?}"
        )));
    }
    let horizontal = force.x.hypot(force.y);
    let zeta = horizontal.atan2(force.z);
    let (s, c) = (0.5 * zeta).sin_cos();
    let q_zeta = if horizontal > 0.0 {
        Quaternion::new(c, [-s * force.y / horizontal, s * force.x / horizontal, 0.0])
    } else {
        Quaternion::new(c, [s, 0.0, 0.0])
    };
    let q_psi = Quaternion::new((0.5 * psi).cos(), [0.0, 0.0, (0.5 * psi).sin()]);
    q_zeta.mul(&q_psi).normalize()
}

/// Error quaternion of R̃ = Rᵀ(q) R_d(q_d), obtained through the rotation matrix and sign-fixed to q̃₀ ≥ 0.
pub fn attitude_error(q: &Quaternion, q_d: &Quaternion) -> Result<Quaternion> {
    let r = q.to_rotation()?;
    let r_d = q_d.to_rotation()?;
    Ok(Quaternion::from_rotation(&(r.transpose() * r_d)))
}

/// τ = k_p,q q̃_v − k_d,q ω
pub fn attitude_torque(
    gains: &GeodesicGains,
    q: &Quaternion,
    q_d: &Quaternion,
    omega: &[f64],
) -> Result<[f64; 3]> {
    let e = attitude_error(q, q_d)?;
    Ok([0, 1, 2].map(|i| gains.kp_q * e.v[i] - gains.kd_q * omega[i]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ncc3dCommand {
    pub thrust: f64,
    pub torque: [f64; 3],
    pub q_d: Quaternion,
    pub force: Vector3<f64>,
}

/// Full spatial cascade: geodesic force, desired attitude, attitude torque.
pub fn ncc3d_step(
    gains: &GeodesicGains,
    x: &[f64],
    phi_d: f64,
    theta_d: f64,
    params: &Uav3dParams,
) -> Result<Ncc3dCommand> {
    let p_d = Vector3::from(params.position(phi_d, theta_d));
    let f = geodesic_force(gains, &x[..4], &p_d, params);
    let q_d = desired_quaternion(&f.force, gains.psi)?;
    let q = Quaternion::from_slice(&x[4..8]).normalize()?;
    let torque = attitude_torque(gains, &q, &q_d, &x[8..11])?;
    Ok(Ncc3dCommand {
        thrust: f.thrust,
        torque,
        q_d,
        force: f.force,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::quat_to_rotation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if v.norm() > 0.1 {
                return v.normalize();
            }
        }
    }

    fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
        let axis = random_unit(rng);
        Quaternion::from_axis_angle(axis.into(), rng.gen_range(-PI..PI)).unwrap()
    }

    #[test]
    fn at_target_only_gravity_and_bias_remain() {
        let g = GeodesicGains::default();
        let p = Uav3dParams::default();
        let x1 = [0.4, -0.3, 0.0, 0.0];
        let p_d = Vector3::from(p.position(0.4, -0.3));
        let f = geodesic_force(&g, &x1, &p_d, &p);
        let [phi_row, _] = Uav3dParams::projection(0.4, -0.3);
        let expected = Vector3::from(phi_row) * p.gravity_polar(0.4) + p_d / p.ell * g.t_r;
        assert!((f.force - expected).norm() < 1e-12);
        assert!(f.thrust > 0.0);
    }

    #[test]
    fn distances() {
        let p = Vector3::new(0.0, 0.0, 3.0);
        assert_eq!(geodesic_distance(&p, &p, 3.0), 0.0);
        assert!((geodesic_distance(&p, &-p, 3.0) - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn geodesic_direction_is_tangent_and_coplanar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_unit(&mut rng) * 3.0;
            let p_d = random_unit(&mut rng) * 3.0;
            if p.cross(&p_d).norm() < 1e-2 {
                continue;
            }
            let t = geodesic_direction(&p, &p_d, 0.01);
            assert!((t.norm() - 1.0).abs() < 1e-9);
            assert!(t.dot(&p).abs() < 1e-9);
            assert!(t.dot(&p.cross(&p_d)).abs() < 1e-9);
            assert!(t.dot(&p_d) > 0.0);
        }
    }

    #[test]
    fn vertical_force_gives_identity() {
        let q = desired_quaternion(&Vector3::new(0.0, 0.0, 2.0), 0.0).unwrap();
        assert_eq!(q, Quaternion::IDENTITY);
        assert!(desired_quaternion(&Vector3::zeros(), 0.0).is_err());
    }

    #[test]
    fn desired_quaternion_aligns_thrust_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let f = random_unit(&mut rng) * rng.gen_range(0.1..10.0);
            let q = desired_quaternion(&f, rng.gen_range(-PI..PI)).unwrap();
            assert!((q.norm() - 1.0).abs() < 1e-12);
            let z = quat_to_rotation(&q).unwrap() * Vector3::z();
            assert!((z - f.normalize()).norm() <= 1e-9);
        }
        let q = desired_quaternion(&Vector3::new(0.0, 0.0, -1.0), 0.0).unwrap();
        assert!((q.rotate([0.0, 0.0, 1.0])[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_error_zero_torque() {
        let g = GeodesicGains::default();
        let q = Quaternion::from_axis_angle([0.0, 1.0, 0.0], 0.7).unwrap();
        let t = attitude_torque(&g, &q, &q, &[0.0; 3]).unwrap();
        assert!(t.iter().all(|v| v.abs() < 1e-15));
        let t = attitude_torque(&g, &q, &q, &[0.1, 0.0, 0.0]).unwrap();
        assert!((t[0] + g.kd_q * 0.1).abs() < 1e-15 && t[1].abs() < 1e-15);
    }

    #[test]
    fn error_quaternion_reconstructs_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let q = random_quaternion(&mut rng);
            let q_d = random_quaternion(&mut rng);
            let e = attitude_error(&q, &q_d).unwrap();
            assert!(e.w >= 0.0);
            let lhs = quat_to_rotation(&q).unwrap() * quat_to_rotation(&e).unwrap();
            let rhs = quat_to_rotation(&q_d).unwrap();
            assert!((lhs - rhs).amax() <= 1e-9);
        }
    }

    #[test]
    fn torque_turns_towards_target() {
        let g = GeodesicGains::default();
        let q_d = Quaternion::from_axis_angle([1.0, 0.0, 0.0], 0.3).unwrap();
        let t = attitude_torque(&g, &Quaternion::IDENTITY, &q_d, &[0.0; 3]).unwrap();
        assert!(t[0] > 0.0 && t[1].abs() < 1e-15 && t[2].abs() < 1e-15);
    }

    #[test]
    fn full_step_at_kernel_is_consistent() {
        let g = GeodesicGains::default();
        let p = Uav3dParams::default();
        let x = [FRAC_PI_2, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let c = ncc3d_step(&g, &x, FRAC_PI_2, 0.0, &p).unwrap();
        assert!((c.thrust - g.t_r).abs() < 1e-12);
        assert!((c.q_d.w - 1.0).abs() < 1e-12);
        assert!(c.torque.iter().all(|v| v.abs() < 1e-12));
    }
}

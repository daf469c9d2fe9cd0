//! Scalar-first Hamilton quaternions and rotation helpers.
//!
//! Rotations are world-from-body: `R(q) * v_body = v_world`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::{Error, Result};

/// Unit-norm tolerance accepted by [`Quaternion::to_rotation`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub v: [f64; 3],
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        v: [0.0; 3],
    };

    pub const fn new(w: f64, v: [f64; 3]) -> Self {
        Self { w, v }
    }

    pub fn from_slice(q: &[f64]) -> Self {
        Self::new(q[0], [q[1], q[2], q[3]])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.v[0], self.v[1], self.v[2]]
    }

    /// Rotation of `angle` radians about the (not necessarily unit) `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = Vector3::from(axis).norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("rotation axis must be nonzero".into()));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self::new(c, [s * axis[0] / n, s * axis[1] / n, s * axis[2] / n]))
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite quaternion".into(),
            ));
        }
        Ok(Self::new(
            self.w / n,
            [self.v[0] / n, self.v[1] / n, self.v[2] / n],
        ))
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, [-self.v[0], -self.v[1], -self.v[2]])
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn mul(&self, rhs: &Quaternion) -> Self {
        let p = hamilton(&self.to_array(), &rhs.to_array());
        Self::new(p[0], [p[1], p[2], p[3]])
    }

    /// Euler-Rodrigues rotation matrix. Fails if `q` is not unit within [`UNIT_TOLERANCE`].
    pub fn to_rotation(&self) -> Result<Matrix3<f64>> {
        if (self.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "quaternion norm {} is not unit",
                self.norm()
            )));
        }
        Ok(rotation_unchecked(self))
    }

    /// Inverse Euler-Rodrigues (Shepperd branch on the largest diagonal term), `w >= 0`.
    pub fn from_rotation(r: &Matrix3<f64>) -> Self {
        let tr = r.trace();
        let diag = [r[(0, 0)], r[(1, 1)], r[(2, 2)]];
        let (imax, dmax) = diag
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let q = if tr >= dmax {
            let s = 2.0 * (1.0 + tr).sqrt();
            Self::new(
                0.25 * s,
                [
                    (r[(2, 1)] - r[(1, 2)]) / s,
                    (r[(0, 2)] - r[(2, 0)]) / s,
                    (r[(1, 0)] - r[(0, 1)]) / s,
                ],
            )
        } else {
            let (i, j, k) = (imax, (imax + 1) % 3, (imax + 2) % 3);
            let s = 2.0 * (1.0 + r[(i, i)] - r[(j, j)] - r[(k, k)]).sqrt();
            let mut v = [0.0; 3];
            v[i] = 0.25 * s;
            v[j] = (r[(j, i)] + r[(i, j)]) / s;
            v[k] = (r[(k, i)] + r[(i, k)]) / s;
            Self::new((r[(k, j)] - r[(j, k)]) / s, v)
        };
        let q = if q.w < 0.0 {
            Self::new(-q.w, [-q.v[0], -q.v[1], -q.v[2]])
        } else {
            q
        };
        q.normalize().unwrap_or(Self::IDENTITY)
    }

    /// Rotate a body-frame vector into the world frame.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let r = rotation_unchecked(self);
        let out = r * Vector3::from(v);
        [out[0], out[1], out[2]]
    }
}

/// `R(q)` for a unit quaternion (precondition unchecked).
pub fn quat_to_rotation(q: &Quaternion) -> Result<Matrix3<f64>> {
    q.to_rotation()
}

fn rotation_unchecked(q: &Quaternion) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.v[0], q.v[1], q.v[2]);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Skew-symmetric matrix with `skew(v) * w == v × w`.
pub fn skew(v: [f64; 3]) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

pub fn cross<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Hamilton product on `[w, x, y, z]` arrays.
pub fn hamilton<S: Scalar>(a: &[S; 4], b: &[S; 4]) -> [S; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Third column of `R(q)`, i.e. the body z-axis expressed in the world frame.
pub fn body_z_in_world<S: Scalar>(q: &[S]) -> [S; 3] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    [
        (x * z + w * y) * 2.0,
        (y * z - w * x) * 2.0,
        -(x * x + y * y) * 2.0 + 1.0,
    ]
}

/// Quaternion kinematics `½ E(q) ω` for a body-frame angular rate.
pub fn quat_rate<S: Scalar>(q: &[S], omega: &[S]) -> [S; 4] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let (p, r, s) = (omega[0], omega[1], omega[2]);
    [
        -(x * p + y * r + z * s) * 0.5,
        (w * p + y * s - z * r) * 0.5,
        (w * r + z * p - x * s) * 0.5,
        (w * s + x * r - y * p) * 0.5,
    ]
}

//! Analytic nonlinear continuous controllers (NCC).

mod planar;
mod spatial;

pub use planar::{
    ideal_effective_control, ncc2d_step, optimal2d_step, optimal_mapping2d, Ncc2dCommand,
    Ncc2dGains,
};
pub use spatial::{
    attitude_error, attitude_torque, desired_quaternion, geodesic_direction, geodesic_distance,
    geodesic_force, ncc3d_step, GeodesicForce, GeodesicGains, Ncc3dCommand,
};

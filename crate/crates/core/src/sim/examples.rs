//! Scenario builders for the three published examples and their ablations.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI, SQRT_2};

use super::{ControllerSpec, Scenario, StepSchedule};
use crate::kpca::{EqualityKind, KernelMode, KpcaConfig, SolverOptions};
use crate::mathcore::BellParams;
use crate::ncc::{GeodesicGains, Ncc2dGains};
use crate::plants::{PlantModel, Uav2dParams, Uav3dParams, VesselParams};

pub const EXAMPLE1_DURATION: f64 = 60.0;
pub const EXAMPLE1_X0: [f64; 4] = [0.0, 0.0, FRAC_PI_6, 0.0];
pub const EXAMPLE2_X0: [f64; 11] = [0.0, 0.0, 0.0, 0.0, SQRT_2 / 2.0, SQRT_2 / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
/// Vessel at rest at the origin with both propellers on the kernel branch.
pub const EXAMPLE3_X0: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0];

const SUBSTEPS: usize = 10;
const NCC_TS: f64 = 0.01;
/// Example 1 kernel peak weight (not published).
pub const EXAMPLE1_KAPPA_P: f64 = 10.0;
/// Objective weight against the barrier floor μ = 0.1 (not published).
pub const EXAMPLE1_OBJECTIVE_SCALE: f64 = 100.0;
pub const EXAMPLE2_OBJECTIVE_SCALE: f64 = 100.0;
pub const EXAMPLE3_OBJECTIVE_SCALE: f64 = 100.0;

/// Example 1 NCC gains retuned for face-value inertia and the ±0.2 N·m torque limit.
pub fn retuned_example1_gains() -> Ncc2dGains {
    Ncc2dGains {
        kp_alpha: 1.0,
        kd_alpha: 1.5,
        kp_beta: 10.0,
        kd_beta: 5.0,
        ..Ncc2dGains::default()
    }
}

fn uav2d_model() -> PlantModel {
    PlantModel::uav2d(Uav2dParams::default()).expect("published 2-D parameters are valid")
}

fn uav3d_model() -> PlantModel {
    PlantModel::uav3d(Uav3dParams::default()).expect("published 3-D parameters are valid")
}

fn vessel_model() -> PlantModel {
    PlantModel::vessel(VesselParams::default()).expect("published vessel parameters are valid")
}

fn example1(name: &str, controller: ControllerSpec, ts_ctrl: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: uav2d_model(),
        controller,
        x0: EXAMPLE1_X0.to_vec(),
        schedule: StepSchedule::constant(vec![FRAC_PI_2]),
        duration: EXAMPLE1_DURATION,
        ts_ctrl,
        substeps: SUBSTEPS,
        seed_label: "deterministic".into(),
    }
}

pub fn example1_ncc() -> Scenario {
    example1("example1-ncc", ControllerSpec::Ncc2d(retuned_example1_gains()), NCC_TS)
}

pub fn example1_optimal_mapping() -> Scenario {
    example1(
        "example1-optimal-mapping",
        ControllerSpec::Optimal2d(retuned_example1_gains()),
        NCC_TS,
    )
}

/// Example 1 KPCA with the given kernel weighting.
pub fn example1_kpca(mode: KernelMode) -> Scenario {
    let kappa_p = if mode == KernelMode::Off { 0.0 } else { EXAMPLE1_KAPPA_P };
    let config = KpcaConfig {
        q: vec![3.0, 1.0, 2.0, 5.0],
        r: vec![1.0, 0.01],
        bell: BellParams { kappa_p, kappa_w: 1.0 },
        ts: 0.1,
        horizon: 15,
        kernel_mode: mode,
        kernel_branch: 0,
        kernel_free: vec![0.0],
        x2d_mask: vec![0],
        equality: EqualityKind::None,
    };
    let name = match mode {
        KernelMode::Off => "example1-kpca-nokernel",
        KernelMode::Constant => "example1-kpca-constant",
        KernelMode::Bell => "example1-kpca-bell",
    };
    let options = SolverOptions {
        max_iter: 40,
        mu_min: 0.1,
        objective_scale: EXAMPLE1_OBJECTIVE_SCALE,
        ..SolverOptions::default()
    };
    example1(name, ControllerSpec::Kpca { config, options }, 0.1)
}

fn example2_schedule() -> StepSchedule {
    StepSchedule {
        times: vec![0.0, 15.0, 30.0, 45.0],
        values: vec![
            vec![FRAC_PI_2, 0.0],
            vec![5.0 * FRAC_PI_4, FRAC_PI_6],
            vec![FRAC_PI_2, 0.0],
            vec![FRAC_PI_4, -FRAC_PI_4],
        ],
    }
}

fn example2(name: &str, controller: ControllerSpec, ts_ctrl: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: uav3d_model(),
        controller,
        x0: EXAMPLE2_X0.to_vec(),
        schedule: example2_schedule(),
        duration: 60.0,
        ts_ctrl,
        substeps: SUBSTEPS,
        seed_label: "deterministic".into(),
    }
}

pub fn example2_ncc() -> Scenario {
    example2("example2-ncc", ControllerSpec::Ncc3d(GeodesicGains::default()), NCC_TS)
}

/// Example 2 KPCA with bell width `kappa_w`.
pub fn example2_kpca(kappa_w: f64) -> Scenario {
    let config = KpcaConfig {
        q: vec![20.0, 20.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5],
        r: vec![1.0, 0.01, 0.01, 0.01],
        bell: BellParams { kappa_p: 10.0, kappa_w },
        ts: 0.2,
        horizon: 5,
        kernel_mode: KernelMode::Bell,
        kernel_branch: 0,
        kernel_free: vec![0.0; 4],
        x2d_mask: vec![0, 1, 2, 3],
        equality: EqualityKind::UnitQuaternion,
    };
    let options = SolverOptions {
        max_iter: 50,
        mu_min: 0.1,
        objective_scale: EXAMPLE2_OBJECTIVE_SCALE,
        ..SolverOptions::default()
    };
    example2("example2-kpca", ControllerSpec::Kpca { config, options }, 0.2)
}

fn example3_schedule() -> StepSchedule {
    StepSchedule {
        times: vec![0.0, 15.0, 30.0, 45.0],
        values: vec![
            vec![-5.0, -3.0, PI],
            vec![2.0, 1.0, -FRAC_PI_4],
            vec![-5.0, 0.0, FRAC_PI_4],
            vec![0.0, 0.0, 0.0],
        ],
    }
}

/// Example 3 KPCA, with (`kernel = true`) or without kernel-mapping tracking.
pub fn example3_kpca(kernel: bool) -> Scenario {
    let (name, kappa_p, mode, tail) = if kernel {
        ("example3-kpca-kernel", 1e-6, KernelMode::Bell, [50.0, 50.0, 25.0, 25.0])
    } else {
        ("example3-kpca-nokernel", 0.0, KernelMode::Off, [25.0, 25.0, 0.0, 0.0])
    };
    let mut q = vec![20.0; 6];
    q.extend(tail);
    let config = KpcaConfig {
        q,
        r: vec![1e-10, 1e-10, 1e-4, 1e-4],
        bell: BellParams { kappa_p, kappa_w: 1e-5 },
        ts: 0.1,
        horizon: 5,
        kernel_mode: mode,
        kernel_branch: 0,
        kernel_free: vec![0.0; 2],
        x2d_mask: vec![0, 1],
        equality: EqualityKind::None,
    };
    Scenario {
        name: name.into(),
        model: vessel_model(),
        controller: ControllerSpec::Kpca {
            config,
            options: SolverOptions {
                objective_scale: EXAMPLE3_OBJECTIVE_SCALE,
                ..SolverOptions::default()
            },
        },
        x0: EXAMPLE3_X0.to_vec(),
        schedule: example3_schedule(),
        duration: 60.0,
        ts_ctrl: 0.1,
        substeps: SUBSTEPS,
        seed_label: "deterministic".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [
            example1_ncc(),
            example1_optimal_mapping(),
            example1_kpca(KernelMode::Off),
            example1_kpca(KernelMode::Constant),
            example1_kpca(KernelMode::Bell),
            example2_ncc(),
            example2_kpca(1.0),
            example3_kpca(false),
            example3_kpca(true),
        ] {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn example1_decision_dimension() {
        let s = example1_kpca(KernelMode::Bell);
        let ControllerSpec::Kpca { config, .. } = &s.controller else { unreachable!() };
        assert_eq!(config.decision_dim(&s.model), 31);
    }
}

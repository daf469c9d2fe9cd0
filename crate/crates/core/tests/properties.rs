use std::f64::consts::PI;

use kpca_core::mathcore::{bell, wrap_angle, Quaternion};
use kpca_core::sim::{peak_count, settling_time};
use kpca_core::{BellParams, InputBounds, PlantModel, Uav2dParams, Uav3dParams, VesselParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn wrapped_angles_stay_in_range(a in -1e3f64..1e3) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn bell_is_bounded_and_decreasing(x in 0.0f64..10.0, dx in 0.0f64..5.0, kp in 0.0f64..100.0, kw in 1e-3f64..100.0) {
        let p = BellParams::new(kp, kw).unwrap();
        let (a, b) = (bell(x, p), bell(x + dx, p));
        prop_assert!(a >= 0.0 && a <= kp);
        prop_assert!(b <= a);
        prop_assert_eq!(bell(-x, p), a);
        prop_assert_eq!(bell(0.0, p), kp);
    }

    #[test]
    fn unit_quaternion_products_stay_unit(
        a in prop::array::uniform4(-1.0f64..1.0),
        b in prop::array::uniform4(-1.0f64..1.0),
    ) {
        prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        prop_assume!(b.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let qa = Quaternion::from_slice(&a).normalize().unwrap();
        let qb = Quaternion::from_slice(&b).normalize().unwrap();
        prop_assert!((qa.mul(&qb).norm() - 1.0).abs() < 1e-12);
        let v = qa.rotate([1.0, -2.0, 0.5]);
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((n - 1.3125f64.sqrt() * 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_points_produce_no_effective_control(
        x1 in prop::collection::vec(-PI..PI, 6),
        free in prop::collection::vec(-2.0f64..2.0, 4),
        branch in -3i32..=3,
        frac in 0.0f64..1.0,
    ) {
        let m2 = PlantModel::uav2d(Uav2dParams::default()).unwrap();
        let k = m2.kernel_point(&x1[..2], branch, &free[..1]).unwrap();
        let psi = m2.effective_control(&x1[..2], &k, &[5.0 * frac]).unwrap();
        prop_assert!(psi[0].abs() <= 1e-12);

        let m3 = PlantModel::uav3d(Uav3dParams::default()).unwrap();
        let k = m3.kernel_point(&x1[..4], branch, &free).unwrap();
        let qn = k[..4].iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((qn - 1.0).abs() < 1e-12);
        let psi = m3.effective_control(&x1[..4], &k, &[7.0 * frac]).unwrap();
        prop_assert!(psi.iter().all(|v| v.abs() <= 1e-12), "{:?}", psi);

        let mv = PlantModel::vessel(VesselParams::default()).unwrap();
        let k = mv.kernel_point(&x1, branch, &free[..2]).unwrap();
        let t = 12400.0 * frac;
        let psi = mv.effective_control(&x1, &k, &[t, t]).unwrap();
        prop_assert!(psi.iter().all(|v| v.abs() <= 1e-15 * t.max(1.0) * 10.0), "{:?}", psi);
    }

    #[test]
    fn clamped_inputs_are_admissible(u in prop::collection::vec(-20.0f64..20.0, 2)) {
        let b = InputBounds::new(vec![0.0, -0.2], vec![5.0, 0.2]).unwrap();
        let mut v = u.clone();
        b.clamp(&mut v);
        prop_assert!(b.contains(&v));
        if b.contains(&u) {
            prop_assert_eq!(v, u);
        }
    }

    #[test]
    fn settled_signal_stays_within_tolerance(
        e in prop::collection::vec(-1.0f64..1.0, 2..200),
        tol in 0.01f64..1.0,
        hold in 0.0f64..0.5,
    ) {
        let times: Vec<f64> = (0..e.len()).map(|i| i as f64 * 0.01).collect();
        if let Some(ts) = settling_time(&times, &e, tol, hold) {
            for (t, v) in times.iter().zip(&e) {
                if *t >= ts {
                    prop_assert!(v.abs() <= tol);
                }
            }
            prop_assert!(ts + hold <= times[times.len() - 1] + 1e-9);
        }
    }

    #[test]
    fn monotone_sequences_have_no_peaks(mut x in prop::collection::vec(-10.0f64..10.0, 0..100)) {
        x.sort_by(f64::total_cmp);
        prop_assert_eq!(peak_count(&x, 1e-3), 0);
        x.reverse();
        prop_assert_eq!(peak_count(&x, 1e-3), 0);
    }
}

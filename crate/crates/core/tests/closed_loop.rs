use std::f64::consts::FRAC_PI_2;

use kpca_core::kpca::KernelMode;
use kpca_core::sim::{
    example1_kpca, example1_ncc, example2_kpca, example2_ncc, run_scenario, ControllerSpec, Metrics,
    MetricsOptions, Scenario, StepSchedule,
};

fn shortened(mut s: Scenario, duration: f64) -> Scenario {
    s.duration = duration;
    s.schedule.times.retain(|&t| t < duration);
    let n = s.schedule.times.len();
    s.schedule.values.truncate(n);
    s
}

#[test]
fn runs_are_bit_reproducible() {
    let s = shortened(example1_kpca(KernelMode::Bell), 5.0);
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn zero_input_keeps_the_upright_equilibrium() {
    let mut s = example1_ncc();
    s.controller = ControllerSpec::Zero;
    s.x0 = vec![FRAC_PI_2, 0.0, FRAC_PI_2, 0.0];
    s.duration = 2.0;
    let log = run_scenario(&s).unwrap();
    let last = log.records.last().unwrap();
    assert!((last.x[0] - FRAC_PI_2).abs() < 1e-12);
    assert!(last.x[1].abs() < 1e-12);
}

#[test]
fn ncc_settles_the_planar_uav() {
    let log = run_scenario(&example1_ncc()).unwrap();
    let m = Metrics::compute(&log, &MetricsOptions::default()).unwrap();
    let t = m.settling_time[0].expect("settles");
    assert!(t <= 30.0, "{t}");
    assert!(!m.oscillating);
    assert_eq!(log.bounds_violations(), 0);
    assert_eq!(log.records.len(), 6001);
}

#[test]
fn spatial_runs_keep_unit_quaternions_and_bounds() {
    for s in [shortened(example2_ncc(), 5.0), shortened(example2_kpca(1.0), 5.0)] {
        let log = run_scenario(&s).unwrap();
        assert!(log.failure.is_none(), "{}: {:?}", s.name, log.failure);
        assert_eq!(log.bounds_violations(), 0, "{}", s.name);
        for r in &log.records {
            let n = r.x[4..8].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12, "{}: t = {} |q| = {n}", s.name, r.t);
            if let Some(d) = &r.solver {
                assert!(d.equality_residual.abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn reference_switches_follow_the_schedule() {
    let mut s = example1_ncc();
    s.schedule = StepSchedule::new(vec![0.0, 1.0], vec![vec![0.5], vec![1.0]]).unwrap();
    s.duration = 2.0;
    let log = run_scenario(&s).unwrap();
    for r in &log.records {
        let want = if r.t < 1.0 - 1e-9 { 0.5 } else { 1.0 };
        assert_eq!(r.reference[0], want, "t = {}", r.t);
    }
}

#[test]
fn csv_has_one_row_per_record() {
    let log = run_scenario(&shortened(example1_ncc(), 1.0)).unwrap();
    let csv = log.to_csv();
    assert_eq!(csv.lines().count(), log.records.len() + 1);
    let cols = log.header().len();
    assert!(csv.lines().all(|l| l.split(',').count() == cols));
}

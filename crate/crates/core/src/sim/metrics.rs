//! Scalar summaries of a closed-loop log.

use serde::{Deserialize, Serialize};

use super::log::TrajectoryLog;
use crate::plants::PlantKind;
use crate::{Error, Result};

/// Hysteresis band used when counting sign changes and peaks.
pub const DEFAULT_DEADBAND: f64 = 1e-3;

const GAIN_FLOOR: f64 = 1e-9;

/// Earliest sample time after which `|error| ≤ tol` holds through the end of the
/// series, provided at least `hold` seconds of the series remain.
pub fn settling_time(times: &[f64], error: &[f64], tol: f64, hold: f64) -> Option<f64> {
    let end = *times.last()?;
    settling_time_in(times, error, 0.0, end, tol, hold)
}

/// Like [`settling_time`], restricted to samples with `t0 ≤ t ≤ t1`.
pub fn settling_time_in(times: &[f64], error: &[f64], t0: f64, t1: f64, tol: f64, hold: f64) -> Option<f64> {
    let idx: Vec<usize> = (0..times.len().min(error.len()))
        .filter(|&i| times[i] >= t0 && times[i] <= t1)
        .collect();
    let last_t = times[*idx.last()?];
    let mut settled = None;
    for &i in idx.iter().rev() {
        if !(error[i].abs() <= tol) {
            break;
        }
        settled = Some(times[i]);
    }
    settled.filter(|&t| t + hold <= last_t + 1e-9)
}

/// Positions where the signal crosses from one side of `±deadband` to the other.
fn sign_changes(x: &[f64], deadband: f64) -> usize {
    let mut side = 0i8;
    let mut changes = 0;
    for &v in x {
        let s = if v > deadband {
            1
        } else if v < -deadband {
            -1
        } else {
            continue;
        };
        if side != 0 && s != side {
            changes += 1;
        }
        side = s;
    }
    changes
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Local maxima that rise and fall by more than `deadband`.
pub fn peak_count(x: &[f64], deadband: f64) -> usize {
    let Some(&first) = x.first() else { return 0 };
    let mut count = 0;
    let mut rising = false;
    let mut lo = first;
    let mut hi = first;
    for &v in &x[1..] {
        if rising {
            if v > hi {
                hi = v;
            } else if v < hi - deadband {
                count += 1;
                rising = false;
                lo = v;
            }
        } else if v < lo {
            lo = v;
        } else if v > lo + deadband {
            rising = true;
            hi = v;
        }
    }
    count
}

/// Sustained-oscillation test on an error series over the trailing `window`
/// seconds. Also returns the peak count over the whole series.
pub fn oscillation_detect(times: &[f64], error: &[f64], window: f64, deadband: f64) -> (bool, usize) {
    let peaks = peak_count(error, deadband);
    let Some(&end) = times.last() else { return (false, 0) };
    let start = times.partition_point(|&t| t < end - window - 1e-9);
    let tail = &error[start..];
    if tail.len() < 4 {
        return (false, peaks);
    }
    let q = tail.len() / 4;
    let first = peak_to_peak(&tail[..q.max(1)]);
    let last = peak_to_peak(&tail[tail.len() - q.max(1)..]);
    let oscillating = sign_changes(tail, deadband) >= 4 && last >= 0.5 * first;
    (oscillating, peaks)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Asymptotic-gain estimates `(γ̂₁, γ̂₂)` from the trailing `tail_fraction` of the log.
pub fn estimate_gains(log: &TrajectoryLog, tail_fraction: f64) -> Result<(f64, f64)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let n = log.records.len();
    let take = ((n as f64) * tail_fraction).ceil() as usize;
    if take < 10 {
        return Err(Error::InvalidArgument(format!("gain estimate needs 10 tail samples, got {take}")));
    }
    let mut sup2 = 0.0f64;
    let mut sup1 = 0.0f64;
    for r in &log.records[n - take..] {
        let (Some(d2), Some(d1)) = (&r.delta2, &r.delta1_rate) else {
            return Err(Error::InvalidArgument("controller does not expose x2d".into()));
        };
        sup2 = sup2.max(norm(d2));
        sup1 = sup1.max(norm(d1));
    }
    if sup1 < GAIN_FLOOR && sup2 < GAIN_FLOOR {
        return Ok((0.0, 0.0));
    }
    Ok((sup1 / sup2.max(GAIN_FLOOR), sup2 / sup1.max(GAIN_FLOOR)))
}

pub fn kernel_distance_series(log: &TrajectoryLog) -> Result<Vec<f64>> {
    log.records
        .iter()
        .map(|r| {
            r.kernel_dist
                .ok_or_else(|| Error::InvalidArgument("controller does not expose x2d".into()))
        })
        .collect()
}

/// `(∫‖u₁‖dt, ∫‖u₂‖dt)` with each input held over its control period.
pub fn efforts(log: &TrajectoryLog) -> (f64, f64) {
    let m1 = log.model.dims().m1;
    let held = log.records.len().saturating_sub(1);
    log.records[..held].iter().fold((0.0, 0.0), |(a, b), r| {
        (a + norm(&r.u[..m1]) * log.ts, b + norm(&r.u[m1..]) * log.ts)
    })
}

/// Settling tolerance of referenced channel `i`.
pub fn settling_tolerance(kind: &PlantKind, i: usize) -> f64 {
    match kind {
        PlantKind::Uav2d(_) => 0.01,
        PlantKind::Uav3d(_) => 0.05,
        PlantKind::Vessel(_) if i < 2 => 0.2,
        PlantKind::Vessel(_) => 0.05,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Trailing window for the oscillation test (s).
    pub window: f64,
    pub tail_fraction: f64,
    pub hold: f64,
    pub deadband: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            window: 20.0,
            tail_fraction: 0.5,
            hold: 2.0,
            deadband: DEFAULT_DEADBAND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub channels: Vec<String>,
    /// Per referenced channel, measured within the final reference interval.
    pub settling_time: Vec<Option<f64>>,
    pub steady_error: Vec<f64>,
    pub oscillating: bool,
    /// Summed over the referenced channels.
    pub peak_count: usize,
    pub gain1_hat: Option<f64>,
    pub gain2_hat: Option<f64>,
    pub gain_product: Option<f64>,
    pub thrust_effort: f64,
    pub torque_effort: f64,
}

impl Metrics {
    pub fn compute(log: &TrajectoryLog, opts: &MetricsOptions) -> Result<Self> {
        let Some(first) = log.records.first() else {
            return Err(Error::InvalidArgument("empty log".into()));
        };
        let times = log.times();
        let names = log.model.state_names();
        let nref = first.reference.len();
        let last_switch = log
            .records
            .windows(2)
            .rposition(|w| w[0].reference != w[1].reference)
            .map_or(0.0, |i| log.records[i + 1].t);
        let end = log.duration();
        let window = opts.window.min(end);

        let mut metrics = Metrics {
            channels: Vec::with_capacity(nref),
            settling_time: Vec::with_capacity(nref),
            steady_error: Vec::with_capacity(nref),
            oscillating: false,
            peak_count: 0,
            gain1_hat: None,
            gain2_hat: None,
            gain_product: None,
            thrust_effort: 0.0,
            torque_effort: 0.0,
        };
        for (i, name) in names.iter().take(nref).enumerate() {
            let err = log.error_series(name)?;
            let tol = settling_tolerance(&log.model.kind, i);
            metrics.channels.push(name.to_string());
            metrics
                .settling_time
                .push(settling_time_in(&times, &err, last_switch, end, tol, opts.hold));
            metrics.steady_error.push(err.last().map_or(0.0, |e| e.abs()));
            let (osc, peaks) = oscillation_detect(&times, &err, window, opts.deadband);
            metrics.oscillating |= osc;
            metrics.peak_count += peaks;
        }
        if first.delta2.is_some() && log.records.len() >= 10 {
            if let Ok((g1, g2)) = estimate_gains(log, opts.tail_fraction) {
                metrics.gain1_hat = Some(g1);
                metrics.gain2_hat = Some(g2);
                metrics.gain_product = Some(g1 * g2);
            }
        }
        (metrics.thrust_effort, metrics.torque_effort) = efforts(log);
        Ok(metrics)
    }
}

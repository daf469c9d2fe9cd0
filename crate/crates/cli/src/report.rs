//! Running a configuration and summarizing the resulting trajectory.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use kpca_core::kpca::EqualityKind;
use kpca_core::sim::{run_scenario, settling_tolerance, ControllerSpec, Metrics, TrajectoryLog};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Flag {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Flag::Pass
        } else {
            Flag::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::Pass => "pass",
            Flag::Fail => "fail",
            Flag::NotApplicable => "n/a",
        }
    }
}

/// Tracking errors at the last sample before a reference switch (or the end).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEnd {
    pub start: f64,
    pub end: f64,
    pub t: f64,
    pub abs_error: Vec<f64>,
    pub within: bool,
}

/// Minimum and end value of |error| per channel over the final reference interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalInterval {
    pub min_abs_error: Vec<f64>,
    pub end_abs_error: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenario: String,
    pub model: String,
    pub controller: String,
    pub metrics: Metrics,
    pub tolerances: Vec<f64>,
    pub intervals: Vec<IntervalEnd>,
    pub final_interval: FinalInterval,
    pub bounds_violations: usize,
    pub held_steps: usize,
    pub solves: usize,
    pub max_equality_residual: Option<f64>,
    /// sup ‖δ₂‖ over the trailing half of the run.
    pub tail_sup_delta2: Option<f64>,
    pub flags: BTreeMap<String, Flag>,
    pub failure: Option<String>,
    pub runtime_s: f64,
    pub config: String,
}

pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub report: SummaryReport,
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let log = run_scenario(&cfg.scenario).with_context(|| format!("running {}", cfg.scenario.name))?;
    let runtime_s = started.elapsed().as_secs_f64();
    let report = summarize(cfg, &log, runtime_s)?;
    Ok(RunOutcome { log, report })
}

pub fn summarize(cfg: &RunConfig, log: &TrajectoryLog, runtime_s: f64) -> Result<SummaryReport> {
    let s = &cfg.scenario;
    let metrics = Metrics::compute(log, &cfg.metrics)?;
    let errors: Vec<Vec<f64>> = metrics
        .channels
        .iter()
        .map(|c| log.error_series(c))
        .collect::<kpca_core::Result<_>>()?;
    let tolerances: Vec<f64> = (0..errors.len()).map(|i| settling_tolerance(&s.model.kind, i)).collect();
    let times = log.times();

    let mut intervals = Vec::new();
    let end_time = log.duration();
    for i in 0..s.schedule.times.len() {
        let (start, end) = s.schedule.bounds(i, end_time);
        let last = if i + 1 < s.schedule.times.len() {
            times.iter().rposition(|&t| t < end - 1e-9)
        } else {
            times.len().checked_sub(1)
        };
        let Some(k) = last.filter(|&k| times[k] >= start - 1e-9) else { continue };
        let abs_error: Vec<f64> = errors.iter().map(|e| e[k].abs()).collect();
        let within = abs_error.iter().zip(&tolerances).all(|(e, tol)| e <= tol);
        intervals.push(IntervalEnd {
            start,
            end,
            t: times[k],
            abs_error,
            within,
        });
    }

    let last_start = *s.schedule.times.last().unwrap_or(&0.0);
    let final_idx: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= last_start - 1e-9).collect();
    let final_interval = FinalInterval {
        min_abs_error: errors
            .iter()
            .map(|e| final_idx.iter().map(|&k| e[k].abs()).fold(f64::INFINITY, f64::min))
            .collect(),
        end_abs_error: errors.iter().map(|e| e.last().map_or(f64::NAN, |v| v.abs())).collect(),
    };

    let solves = log.records.iter().filter(|r| r.solver.is_some()).count();
    let max_equality_residual = log
        .records
        .iter()
        .filter_map(|r| r.solver.as_ref())
        .map(|d| d.equality_residual.abs())
        .reduce(f64::max);
    let tail_start = log.records.len() / 2;
    let tail_sup_delta2 = log.records[tail_start..]
        .iter()
        .filter_map(|r| r.delta2.as_ref())
        .map(|d| d.iter().map(|v| v * v).sum::<f64>().sqrt())
        .reduce(f64::max);

    let uses_equality = matches!(
        &s.controller,
        ControllerSpec::Kpca { config, .. } if config.equality == EqualityKind::UnitQuaternion
    );
    let mut flags = BTreeMap::new();
    flags.insert("completed".to_string(), Flag::from_bool(log.failure.is_none()));
    flags.insert("bounds_respected".to_string(), Flag::from_bool(log.bounds_violations() == 0));
    flags.insert(
        "tracks_each_interval".to_string(),
        Flag::from_bool(intervals.iter().all(|i| i.within)),
    );
    flags.insert(
        "settled".to_string(),
        Flag::from_bool(metrics.settling_time.iter().all(Option::is_some)),
    );
    flags.insert("not_oscillating".to_string(), Flag::from_bool(!metrics.oscillating));
    flags.insert(
        "unit_quaternion_kept".to_string(),
        if uses_equality {
            Flag::from_bool(max_equality_residual.is_some_and(|r| r <= 1e-6))
        } else {
            Flag::NotApplicable
        },
    );

    Ok(SummaryReport {
        scenario: s.name.clone(),
        model: s.model.name().to_string(),
        controller: s.controller.name().to_string(),
        metrics,
        tolerances,
        intervals,
        final_interval,
        bounds_violations: log.bounds_violations(),
        held_steps: log.held_steps(),
        solves,
        max_equality_residual,
        tail_sup_delta2,
        flags,
        failure: log.failure.clone(),
        runtime_s,
        config: cfg.to_text(),
    })
}

pub const CSV_FILE: &str = "trajectory.csv";
pub const PLOT_FILE: &str = "trajectory.dat";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.cfg";

/// Write the trajectory CSV, plot data, JSON report and config echo into `dir`.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write(CSV_FILE, &outcome.log.to_csv())?;
    write(PLOT_FILE, &outcome.log.to_plot_data())?;
    write(REPORT_FILE, &serde_json::to_string_pretty(&outcome.report)?)?;
    write(CONFIG_FILE, &outcome.report.config)?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<SummaryReport> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn ncc_report_fields() {
        let cfg = presets::find("example1-ncc").unwrap().config();
        let out = execute(&cfg).unwrap();
        let r = &out.report;
        assert_eq!(r.intervals.len(), 1);
        assert_eq!(r.tolerances, vec![0.01]);
        assert_eq!(r.flags["settled"], Flag::Pass);
        assert_eq!(r.flags["unit_quaternion_kept"], Flag::NotApplicable);
        assert_eq!(r.solves, 0);
        assert!(r.max_equality_residual.is_none());
        let json = serde_json::to_string(r).unwrap();
        let back: SummaryReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.flags, r.flags);
        assert_eq!(back.config, r.config);
    }

    #[test]
    fn outputs_written() {
        let dir = std::env::temp_dir().join(format!("kpca-report-test-{}", std::process::id()));
        let cfg = presets::find("example1-optimal-mapping").unwrap().config();
        let out = execute(&cfg).unwrap();
        write_outputs(&dir, &out).unwrap();
        let csv = std::fs::read_to_string(dir.join(CSV_FILE)).unwrap();
        assert!(csv.starts_with("t,alpha,alpha_dot,beta,beta_dot,u1,u2,beta_d,eff_ctrl,kernel_dist,delta2_0,delta1_rate_0\n"));
        assert_eq!(read_report(&dir).unwrap().scenario, "example1-optimal-mapping");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

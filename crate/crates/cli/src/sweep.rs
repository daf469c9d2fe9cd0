//! One-parameter sweeps over a numeric config key.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{RawConfig, RunConfig};
use crate::parallel_map;
use crate::report::{execute, write_outputs};

pub const SWEEP_FILE: &str = "sweep.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub dir: String,
    pub peak_count: usize,
    pub settling_time: Vec<Option<f64>>,
    pub steady_error: Vec<f64>,
    pub tracks_each_interval: bool,
    pub bounds_violations: usize,
    pub max_equality_residual: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub key: String,
    pub rows: Vec<SweepRow>,
    /// peak_count does not increase as the swept value increases.
    pub peak_count_non_increasing: bool,
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out = format!("{:>12} {:>6} {:>8}  settling\n", self.key, "peaks", "tracks");
        for r in &self.rows {
            let settle: Vec<String> = r
                .settling_time
                .iter()
                .map(|s| s.map_or("none".to_string(), |t| format!("{t:.2}")))
                .collect();
            out.push_str(&format!(
                "{:>12} {:>6} {:>8}  {}\n",
                format!("{:?}", r.value),
                r.peak_count,
                r.tracks_each_interval,
                settle.join(" ")
            ));
        }
        out.push_str(&format!("peak_count non-increasing: {}\n", self.peak_count_non_increasing));
        out
    }
}

/// Run one sub-run per value of `key`, each in its own subdirectory of `out`.
pub fn sweep(raw: &RawConfig, key: &str, values: &[f64], out: &Path, jobs: usize) -> Result<SweepReport> {
    if values.is_empty() {
        bail!("empty sweep");
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut r = raw.clone();
            r.set_number(key, v)?;
            RunConfig::from_raw(&r).with_context(|| format!("{key} = {v:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let jobs_in: Vec<(f64, RunConfig)> = values.iter().copied().zip(configs).collect();
    let results = parallel_map(jobs_in, jobs, |(v, cfg)| -> Result<SweepRow> {
        let name = format!("{key}={v:?}");
        let outcome = execute(&cfg)?;
        write_outputs(&out.join(&name), &outcome)?;
        let r = &outcome.report;
        Ok(SweepRow {
            value: v,
            dir: name,
            peak_count: r.metrics.peak_count,
            settling_time: r.metrics.settling_time.clone(),
            steady_error: r.metrics.steady_error.clone(),
            tracks_each_interval: r.intervals.iter().all(|i| i.within),
            bounds_violations: r.bounds_violations,
            max_equality_residual: r.max_equality_residual,
            failure: r.failure.clone(),
        })
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    let peak_count_non_increasing = rows.windows(2).all(|w| w[1].peak_count <= w[0].peak_count);
    let report = SweepReport {
        key: key.to_string(),
        rows,
        peak_count_non_increasing,
    };
    std::fs::write(out.join(SWEEP_FILE), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

pub fn read_sweep(dir: &Path) -> Result<SweepReport> {
    let path = dir.join(SWEEP_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn raw(name: &str) -> RawConfig {
        let p = presets::find(name).unwrap();
        RawConfig::parse(&p.dump(), name).unwrap()
    }

    #[test]
    fn empty_and_non_numeric_sweeps_rejected() {
        let dir = std::env::temp_dir().join("kpca-sweep-reject");
        let r = raw("example2-kpca");
        assert_eq!(sweep(&r, "kappa_w", &[], &dir, 1).unwrap_err().to_string(), "empty sweep");
        let err = sweep(&r, "kernel_mode", &[1.0], &dir, 1).unwrap_err();
        assert!(format!("{err:#}").contains("not sweepable"), "{err:#}");
    }

    #[test]
    fn sweep_writes_one_directory_per_value() {
        let dir = std::env::temp_dir().join(format!("kpca-sweep-test-{}", std::process::id()));
        let mut r = raw("example1-ncc");
        r.set_number("duration", 2.0).unwrap();
        let rep = sweep(&r, "kp_alpha", &[2.0, 1.0], &dir, 2).unwrap();
        assert_eq!(rep.rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert!(dir.join("kp_alpha=1.0").join("trajectory.csv").exists());
        assert_eq!(read_sweep(&dir).unwrap(), rep);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

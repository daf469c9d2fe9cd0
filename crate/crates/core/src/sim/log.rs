use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::kpca::SolveStatus;
use crate::mathcore::wrap_angle;
use crate::plants::PlantModel;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiag {
    pub status: SolveStatus,
    pub iterations: usize,
    pub cost: f64,
    pub equality_residual: f64,
    pub held: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub reference: Vec<f64>,
    pub x2d: Option<Vec<f64>>,
    pub eff_ctrl: Vec<f64>,
    pub kernel_dist: Option<f64>,
    /// Position components of x₂,d − x₂.
    pub delta2: Option<Vec<f64>>,
    /// Backward difference of the position components of x₂,d.
    pub delta1_rate: Option<Vec<f64>>,
    pub solver: Option<SolverDiag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub model: PlantModel,
    pub ts: f64,
    pub records: Vec<LogRecord>,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

fn fmt17(out: &mut String, v: f64) {
    if v.is_nan() {
        out.push_str("nan");
    } else {
        let _ = write!(out, "{v:.16e}");
    }
}

impl TrajectoryLog {
    pub fn new(model: PlantModel, ts: f64) -> Self {
        Self {
            model,
            ts,
            records: Vec::new(),
            failure: None,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn duration(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    fn position_count(&self) -> usize {
        self.model.x2_position_indices().len()
    }

    /// CSV column names, fixed per plant model.
    pub fn header(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend(self.model.state_names().iter().map(|s| s.to_string()));
        cols.extend(self.model.input_names().iter().map(|s| s.to_string()));
        cols.extend(self.model.x2d_names().iter().map(|s| s.to_string()));
        let mt = self.model.dims().m1_tilde;
        if mt == 1 {
            cols.push("eff_ctrl".into());
        } else {
            cols.extend((0..mt).map(|i| format!("eff_ctrl_{i}")));
        }
        cols.push("kernel_dist".into());
        let np = self.position_count();
        cols.extend((0..np).map(|i| format!("delta2_{i}")));
        cols.extend((0..np).map(|i| format!("delta1_rate_{i}")));
        cols
    }

    fn row(&self, r: &LogRecord) -> Vec<f64> {
        let np = self.position_count();
        let mut row = vec![r.t];
        row.extend(&r.x);
        row.extend(&r.u);
        match &r.x2d {
            Some(x2d) => row.extend(self.model.x2_position_indices().map(|i| x2d[i])),
            None => row.extend(std::iter::repeat_n(f64::NAN, np)),
        }
        row.extend(&r.eff_ctrl);
        row.push(r.kernel_dist.unwrap_or(f64::NAN));
        for v in [&r.delta2, &r.delta1_rate] {
            match v {
                Some(v) => row.extend(v),
                None => row.extend(std::iter::repeat_n(f64::NAN, np)),
            }
        }
        row
    }

    /// CSV text: header line, then one row per record with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.records {
            for (i, v) in self.row(r).into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                fmt17(&mut out, v);
            }
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated columns with a `#` header, readable by gnuplot.
    pub fn to_plot_data(&self) -> String {
        let mut out = format!("# {}\n", self.header().join(" "));
        for r in &self.records {
            for (i, v) in self.row(r).into_iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                fmt17(&mut out, v);
            }
            out.push('\n');
        }
        out
    }

    /// Values of one CSV column.
    pub fn series(&self, channel: &str) -> Result<Vec<f64>> {
        let header = self.header();
        let idx = header
            .iter()
            .position(|c| c == channel)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel {channel:?}")))?;
        Ok(self.records.iter().map(|r| self.row(r)[idx]).collect())
    }

    /// Tracking error `signal − reference` of a referenced state channel
    /// (angles wrapped to (−π, π]).
    pub fn error_series(&self, channel: &str) -> Result<Vec<f64>> {
        let names = self.model.state_names();
        let i = names
            .iter()
            .position(|&c| c == channel)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state channel {channel:?}")))?;
        let refs = self.records.first().map_or(0, |r| r.reference.len());
        if i >= refs {
            return Err(Error::InvalidArgument(format!("channel {channel:?} has no reference")));
        }
        let angle = self.model.angle_indices().contains(&i);
        Ok(self
            .records
            .iter()
            .map(|r| {
                let e = r.x[i] - r.reference[i];
                if angle {
                    wrap_angle(e)
                } else {
                    e
                }
            })
            .collect())
    }

    pub fn bounds_violations(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !self.model.bounds.contains(&r.u))
            .count()
    }

    pub fn held_steps(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.solver.as_ref().is_some_and(|s| s.held))
            .count()
    }
}

//! Closed-loop simulation harness and the metrics computed on its logs.

mod examples;
mod log;
mod metrics;

pub use examples::{
    example1_kpca, example1_ncc, example1_optimal_mapping, example2_kpca, example2_ncc,
    example3_kpca, retuned_example1_gains, EXAMPLE1_DURATION, EXAMPLE1_KAPPA_P, EXAMPLE1_X0, EXAMPLE2_X0,
    EXAMPLE3_X0,
};
pub use log::{LogRecord, SolverDiag, TrajectoryLog};
pub use metrics::{
    efforts, estimate_gains, kernel_distance_series, oscillation_detect, peak_count,
    settling_time, settling_time_in, settling_tolerance, Metrics, MetricsOptions, DEFAULT_DEADBAND,
};

use serde::{Deserialize, Serialize};

use crate::kpca::{KpcaConfig, KpcaController, SolverOptions};
use crate::mathcore::{rk4_into, wrap_angle, MAX_STATE};
use crate::ncc::{ncc2d_step, ncc3d_step, optimal2d_step, GeodesicGains, Ncc2dGains};
use crate::plants::{PlantKind, PlantModel};
use crate::{Error, Result};

/// Piecewise-constant reference: `values[i]` holds on `[times[i], times[i+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl StepSchedule {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self { times, values };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Self {
            times: vec![0.0],
            values: vec![value],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "schedule needs matching, non-empty times and values ({} vs {})",
                self.times.len(),
                self.values.len()
            )));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidArgument("schedule must start at t = 0".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("schedule times must increase strictly".into()));
        }
        let dim = self.values[0].len();
        if self.values.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension("schedule values differ in length".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn interval(&self, t: f64) -> usize {
        self.times.iter().rposition(|&s| s <= t).unwrap_or(0)
    }

    pub fn value_at(&self, t: f64) -> &[f64] {
        &self.values[self.interval(t)]
    }

    /// `[start, end)` of interval `i`, with `end` capped at `duration`.
    pub fn bounds(&self, i: usize, duration: f64) -> (f64, f64) {
        let end = self.times.get(i + 1).copied().unwrap_or(duration).min(duration);
        (self.times[i], end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ControllerSpec {
    /// Applies zero input.
    Zero,
    Ncc2d(Ncc2dGains),
    Optimal2d(Ncc2dGains),
    Ncc3d(GeodesicGains),
    Kpca {
        config: KpcaConfig,
        options: SolverOptions,
    },
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::Zero => "zero",
            ControllerSpec::Ncc2d(_) => "ncc2d",
            ControllerSpec::Optimal2d(_) => "optimal2d",
            ControllerSpec::Ncc3d(_) => "ncc3d",
            ControllerSpec::Kpca { .. } => "kpca",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub model: PlantModel,
    pub controller: ControllerSpec,
    pub x0: Vec<f64>,
    pub schedule: StepSchedule,
    pub duration: f64,
    pub ts_ctrl: f64,
    pub substeps: usize,
    pub seed_label: String,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let d = self.model.dims();
        if self.x0.len() != d.n() {
            return Err(Error::Dimension(format!(
                "x0 needs {} entries for {}, got {}",
                d.n(),
                self.model.name(),
                self.x0.len()
            )));
        }
        self.schedule.validate()?;
        if self.schedule.dim() != reference_dim(&self.model) {
            return Err(Error::Dimension(format!(
                "{} references have {} components, schedule has {}",
                self.model.name(),
                reference_dim(&self.model),
                self.schedule.dim()
            )));
        }
        if !(self.ts_ctrl > 0.0) || !self.ts_ctrl.is_finite() {
            return Err(Error::InvalidArgument(format!("Ts_ctrl must be positive, got {}", self.ts_ctrl)));
        }
        if !(self.duration >= *self.schedule.times.last().unwrap()) {
            return Err(Error::InvalidArgument("duration ends before the last schedule switch".into()));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be at least 1".into()));
        }
        let compatible = matches!(
            (&self.controller, &self.model.kind),
            (ControllerSpec::Zero, _)
                | (ControllerSpec::Kpca { .. }, _)
                | (ControllerSpec::Ncc2d(_), PlantKind::Uav2d(_))
                | (ControllerSpec::Optimal2d(_), PlantKind::Uav2d(_))
                | (ControllerSpec::Ncc3d(_), PlantKind::Uav3d(_))
        );
        if !compatible {
            return Err(Error::InvalidArgument(format!(
                "controller {} cannot drive plant {}",
                self.controller.name(),
                self.model.name()
            )));
        }
        match &self.controller {
            ControllerSpec::Ncc2d(g) | ControllerSpec::Optimal2d(g) => g.validate()?,
            ControllerSpec::Ncc3d(g) => g.validate()?,
            ControllerSpec::Kpca { config, options } => {
                config.validate(&self.model)?;
                options.validate()?;
            }
            ControllerSpec::Zero => {}
        }
        Ok(())
    }

    /// Number of control periods, `duration / Ts_ctrl` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.duration / self.ts_ctrl).round() as usize
    }

    /// Kernel branch and free parameters used for the logged kernel distance.
    pub fn kernel_args(&self) -> (i32, Vec<f64>) {
        match &self.controller {
            ControllerSpec::Kpca { config, .. } => (config.kernel_branch, config.kernel_free.clone()),
            _ => (0, vec![0.0; self.model.kernel_arity()]),
        }
    }
}

/// Number of reference components: 2-D `[α_d]`, 3-D `[φ_d, θ_d]`, vessel `[x_d, y_d, α_d]`.
pub fn reference_dim(model: &PlantModel) -> usize {
    match model.kind {
        PlantKind::Uav2d(_) => 1,
        PlantKind::Uav3d(_) => 2,
        PlantKind::Vessel(_) => 3,
    }
}

/// x₁,d from a reference value (rates set to zero).
pub fn reference_state(model: &PlantModel, r: &[f64]) -> Vec<f64> {
    let mut x1d = vec![0.0; model.dims().n1];
    x1d[..r.len()].copy_from_slice(r);
    x1d
}

struct ControlOutput {
    u: Vec<f64>,
    x2d: Option<Vec<f64>>,
    diag: Option<SolverDiag>,
}

enum Runtime {
    Zero,
    Ncc2d(Ncc2dGains, bool),
    Ncc3d(GeodesicGains),
    Kpca(Box<KpcaController>),
}

impl Runtime {
    fn new(s: &Scenario) -> Result<Self> {
        Ok(match &s.controller {
            ControllerSpec::Zero => Runtime::Zero,
            ControllerSpec::Ncc2d(g) => Runtime::Ncc2d(*g, false),
            ControllerSpec::Optimal2d(g) => Runtime::Ncc2d(*g, true),
            ControllerSpec::Ncc3d(g) => Runtime::Ncc3d(*g),
            ControllerSpec::Kpca { config, options } => Runtime::Kpca(Box::new(KpcaController::new(
                s.model.clone(),
                config.clone(),
                *options,
            )?)),
        })
    }

    fn step(&mut self, model: &PlantModel, x: &[f64], r: &[f64]) -> Result<ControlOutput> {
        let saturate = |mut u: Vec<f64>| {
            model.bounds.clamp(&mut u);
            u
        };
        match (self, &model.kind) {
            (Runtime::Zero, _) => Ok(ControlOutput {
                u: vec![0.0; model.dims().m()],
                x2d: None,
                diag: None,
            }),
            (Runtime::Ncc2d(g, optimal), PlantKind::Uav2d(p)) => {
                let gains = Ncc2dGains { alpha_d: r[0], ..*g };
                let c = if *optimal {
                    optimal2d_step(&gains, x, p)
                } else {
                    ncc2d_step(&gains, x, p)
                };
                Ok(ControlOutput {
                    u: saturate(vec![c.u1, c.u2]),
                    x2d: Some(vec![c.beta_d, 0.0]),
                    diag: None,
                })
            }
            (Runtime::Ncc3d(g), PlantKind::Uav3d(p)) => {
                let c = ncc3d_step(g, x, r[0], r[1], p)?;
                let mut x2d = c.q_d.to_array().to_vec();
                x2d.extend([0.0; 3]);
                let u = vec![c.thrust, c.torque[0], c.torque[1], c.torque[2]];
                Ok(ControlOutput {
                    u: saturate(u),
                    x2d: Some(x2d),
                    diag: None,
                })
            }
            (Runtime::Kpca(ctrl), _) => {
                let out = ctrl.step(x, &reference_state(model, r))?;
                Ok(ControlOutput {
                    u: out.u,
                    x2d: Some(out.x2d),
                    diag: Some(SolverDiag {
                        status: out.solution.status,
                        iterations: out.solution.iterations,
                        cost: out.solution.cost,
                        equality_residual: out.solution.equality_residual,
                        held: out.held,
                    }),
                })
            }
            _ => Err(Error::InvalidArgument("controller does not match the plant".into())),
        }
    }
}

/// Position components of `a − b`, wrapping angle components to (−π, π].
fn position_difference(model: &PlantModel, a: &[f64], b: &[f64]) -> Vec<f64> {
    let wrap = model.x2_position_is_angle();
    model
        .x2_position_indices()
        .map(|i| {
            let d = a[i] - b[i];
            if wrap {
                wrap_angle(d)
            } else {
                d
            }
        })
        .collect()
}

/// Simulate a scenario: the controller runs once per period (zero-order hold) and
/// the plant advances with `substeps` RK4 steps per period.
pub fn run_scenario(s: &Scenario) -> Result<TrajectoryLog> {
    s.validate()?;
    let model = &s.model;
    let d = model.dims();
    let n = d.n();
    let (branch, free) = s.kernel_args();
    let mut runtime = Runtime::new(s)?;
    let steps = s.steps();
    let h = s.ts_ctrl / s.substeps as f64;
    let mut x = s.x0.clone();
    model.renormalize(&mut x);
    let mut log = TrajectoryLog::new(model.clone(), s.ts_ctrl);
    let mut prev_x2d: Option<Vec<f64>> = None;
    let mut next = [0.0; MAX_STATE];

    for k in 0..=steps {
        let t = k as f64 * s.ts_ctrl;
        let r = s.schedule.value_at(t).to_vec();
        let out = match runtime.step(model, &x, &r) {
            Ok(o) => o,
            Err(e) => {
                log.failure = Some(format!("controller failed at t = {t}: {e}"));
                break;
            }
        };
        let (x1, x2) = x.split_at(d.n1);
        let eff_ctrl = model.effective_control(x1, x2, &out.u[..d.m1])?;
        let (kernel_dist, delta2, delta1_rate) = match &out.x2d {
            Some(x2d) => {
                let kernel = model.kernel_point(x1, branch, &free)?;
                let kd = position_difference(model, x2d, &kernel)
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                let d2 = position_difference(model, x2d, x2);
                let rate = match &prev_x2d {
                    Some(p) => position_difference(model, x2d, p)
                        .into_iter()
                        .map(|v| v / s.ts_ctrl)
                        .collect(),
                    None => vec![0.0; d2.len()],
                };
                (Some(kd), Some(d2), Some(rate))
            }
            None => (None, None, None),
        };
        prev_x2d = out.x2d.clone();
        log.records.push(LogRecord {
            t,
            x: x.clone(),
            u: out.u.clone(),
            reference: r,
            x2d: out.x2d,
            eff_ctrl,
            kernel_dist,
            delta2,
            delta1_rate,
            solver: out.diag,
        });
        if k == steps {
            break;
        }
        for _ in 0..s.substeps {
            rk4_into(model, &x, &out.u, h, &mut next[..n]);
            x.copy_from_slice(&next[..n]);
            model.renormalize(&mut x);
        }
        if x.iter().any(|v| !v.is_finite()) {
            log.failure = Some(format!("non-finite plant state after t = {t}"));
            break;
        }
    }
    Ok(log)
}

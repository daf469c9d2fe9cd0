//! Receding-horizon KPCA controller with warm starting.

use serde::{Deserialize, Serialize};

use crate::plants::PlantModel;
use crate::{Error, Result};

use super::problem::{transcribe, KpcaConfig};
use super::solver::{solve, NlpSolution, SolveStatus, SolverOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpcaOutput {
    pub u: Vec<f64>,
    /// Optimized allocated set-point x₂,d (full n₂ vector).
    pub x2d: Vec<f64>,
    pub solution: NlpSolution,
    /// True when the solve failed and the previous input was held.
    pub held: bool,
}

#[derive(Clone, Debug)]
pub struct KpcaController {
    pub model: PlantModel,
    pub config: KpcaConfig,
    pub options: SolverOptions,
    u_prev: Vec<f64>,
    x2d_prev: Vec<f64>,
    warm: Option<Vec<f64>>,
}

impl KpcaController {
    pub fn new(model: PlantModel, config: KpcaConfig, options: SolverOptions) -> Result<Self> {
        config.validate(&model)?;
        options.validate()?;
        let u_prev = model.bounds.midpoint();
        let n2 = model.dims().n2;
        Ok(Self {
            model,
            config,
            options,
            u_prev,
            x2d_prev: vec![0.0; n2],
            warm: None,
        })
    }

    pub fn u_prev(&self) -> &[f64] {
        &self.u_prev
    }

    /// Warm-start store: flat decision vector for the next solve.
    pub fn warm_start(&self) -> Option<&[f64]> {
        self.warm.as_deref()
    }

    /// Replace the previously applied input (e.g. to start from an equilibrium input).
    pub fn set_u_prev(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.u_prev.len() {
            return Err(Error::Dimension(format!(
                "u_prev needs {} entries, got {}",
                self.u_prev.len(),
                u.len()
            )));
        }
        self.u_prev = u.to_vec();
        self.model.bounds.clamp(&mut self.u_prev);
        self.warm = None;
        Ok(())
    }

    /// Cold initializer: u_prev replicated, free x₂,d taken from the kernel point at x₁.
    fn cold_start(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n1 = self.model.dims().n1;
        let kernel = self
            .model
            .kernel_point(&x[..n1], self.config.kernel_branch, &self.config.kernel_free)?;
        let mut z = Vec::with_capacity(self.config.decision_dim(&self.model));
        for _ in 0..self.config.horizon {
            z.extend_from_slice(&self.u_prev);
        }
        z.extend(self.config.x2d_mask.iter().map(|&i| kernel[i]));
        Ok(z)
    }

    /// One control period: solve, apply u₀*, shift the warm start.
    pub fn step(&mut self, x: &[f64], x1_d: &[f64]) -> Result<KpcaOutput> {
        let problem = transcribe(&self.config, &self.model, x, x1_d, &self.u_prev)?;
        let (init, warm) = match &self.warm {
            Some(z) => (z.clone(), self.options.warm_start),
            None => (self.cold_start(x)?, false),
        };
        let options = SolverOptions { warm_start: warm, ..self.options };
        let solution = solve(&problem, &init, &options)?;
        let m = self.model.dims().m();
        if solution.status == SolveStatus::NumericFailure {
            return Ok(KpcaOutput {
                u: self.u_prev.clone(),
                x2d: self.x2d_prev.clone(),
                solution,
                held: true,
            });
        }
        let mut u = solution.z[..m].to_vec();
        self.model.bounds.clamp(&mut u);
        let x2d = problem.x2d(&solution.z);

        let mut shifted = solution.z[m..self.config.horizon * m].to_vec();
        shifted.extend_from_slice(&solution.z[(self.config.horizon - 1) * m..self.config.horizon * m]);
        shifted.extend_from_slice(&solution.z[self.config.horizon * m..]);
        self.warm = Some(shifted);
        self.u_prev = u.clone();
        self.x2d_prev = x2d.clone();
        Ok(KpcaOutput {
            u,
            x2d,
            solution,
            held: false,
        })
    }
}

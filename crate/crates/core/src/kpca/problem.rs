//! Direct single-shooting transcription of the kernel-augmented predictive cost.

use serde::{Deserialize, Serialize};

use crate::mathcore::{bell_of_square, gradient, central_difference, rk4_into, BellParams, Scalar, MAX_STATE};
use crate::plants::PlantModel;
use crate::{Error, Result};

use super::solver::{objective_field, Nlp};

/// Weight of the soft penalty on predicted states outside the plant's x₂ limits.
pub const STATE_PENALTY: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// No kernel term.
    Off,
    /// Kernel distance weighted by the constant κ_p.
    Constant,
    /// Kernel distance weighted by the bell curve Ω(‖ũ₁‖, κ_p, κ_w).
    Bell,
}

impl KernelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelMode::Off => "off",
            KernelMode::Constant => "constant",
            KernelMode::Bell => "bell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityKind {
    None,
    /// ‖q_d‖ − 1 = 0 on the free x₂,d block.
    UnitQuaternion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpcaConfig {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub bell: BellParams,
    pub ts: f64,
    pub horizon: usize,
    pub kernel_mode: KernelMode,
    pub kernel_branch: i32,
    pub kernel_free: Vec<f64>,
    /// Indices of x₂,d that are decision variables; the rest are fixed at zero.
    pub x2d_mask: Vec<usize>,
    pub equality: EqualityKind,
}

impl KpcaConfig {
    pub fn validate(&self, model: &PlantModel) -> Result<()> {
        let d = model.dims();
        if self.q.len() != d.n() || self.r.len() != d.m() {
            return Err(Error::Dimension(format!(
                "Q needs {} and R needs {} entries, got {} and {}",
                d.n(),
                d.m(),
                self.q.len(),
                self.r.len()
            )));
        }
        if self.q.iter().chain(&self.r).any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("Q and R must be non-negative".into()));
        }
        if !(self.ts > 0.0) || !self.ts.is_finite() {
            return Err(Error::InvalidArgument(format!("Ts must be positive, got {}", self.ts)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
        }
        BellParams::new(self.bell.kappa_p, self.bell.kappa_w)?;
        if self.kernel_mode == KernelMode::Off && self.bell.kappa_p != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "kernel_mode = {} is inconsistent with kappa_p = {}",
                self.kernel_mode.as_str(),
                self.bell.kappa_p
            )));
        }
        if self.kernel_free.len() != model.kernel_arity() {
            return Err(Error::InvalidArgument(format!(
                "{} kernel takes {} free parameters, got {}",
                model.name(),
                model.kernel_arity(),
                self.kernel_free.len()
            )));
        }
        let mut seen = vec![false; d.n2];
        for &i in &self.x2d_mask {
            if i >= d.n2 || seen[i] {
                return Err(Error::InvalidArgument(format!("x2d_mask entry {i} invalid or repeated")));
            }
            seen[i] = true;
        }
        if self.equality == EqualityKind::UnitQuaternion && self.x2d_mask.len() != 4 {
            return Err(Error::InvalidArgument(
                "unit_quaternion equality needs exactly four free x2d components".into(),
            ));
        }
        Ok(())
    }

    /// Number of decision variables, N·m + |mask|.
    pub fn decision_dim(&self, model: &PlantModel) -> usize {
        self.horizon * model.dims().m() + self.x2d_mask.len()
    }
}

/// Structured view of the flat decision vector `[u₀, …, u_{N−1}, x₂,d free]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    /// N × m inputs, row-major.
    pub u_seq: Vec<f64>,
    pub x2d_free: Vec<f64>,
}

impl DecisionVector {
    pub fn from_flat(z: &[f64], horizon: usize, m: usize) -> Self {
        Self {
            u_seq: z[..horizon * m].to_vec(),
            x2d_free: z[horizon * m..].to_vec(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.u_seq.iter().chain(&self.x2d_free).copied().collect()
    }

    pub fn input(&self, k: usize, m: usize) -> &[f64] {
        &self.u_seq[k * m..(k + 1) * m]
    }
}

/// One receding-horizon problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct NlpProblem {
    pub model: PlantModel,
    pub config: KpcaConfig,
    pub x0: Vec<f64>,
    pub x1_d: Vec<f64>,
    pub u_prev: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Build the transcribed problem for the current state and reference.
pub fn transcribe(
    config: &KpcaConfig,
    model: &PlantModel,
    x0: &[f64],
    x1_d: &[f64],
    u_prev: &[f64],
) -> Result<NlpProblem> {
    config.validate(model)?;
    let d = model.dims();
    if x0.len() != d.n() || x1_d.len() != d.n1 || u_prev.len() != d.m() {
        return Err(Error::Dimension(format!(
            "x0/x1_d/u_prev need {}/{}/{} entries, got {}/{}/{}",
            d.n(),
            d.n1,
            d.m(),
            x0.len(),
            x1_d.len(),
            u_prev.len()
        )));
    }
    if x0.iter().chain(x1_d).chain(u_prev).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "KPCA transcription inputs".into(),
            state: x0.to_vec(),
        });
    }
    let mut lower = Vec::with_capacity(config.decision_dim(model));
    let mut upper = Vec::with_capacity(config.decision_dim(model));
    for _ in 0..config.horizon {
        lower.extend_from_slice(&model.bounds.u_min);
        upper.extend_from_slice(&model.bounds.u_max);
    }
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, config.x2d_mask.len()));
    upper.extend(std::iter::repeat_n(f64::INFINITY, config.x2d_mask.len()));
    Ok(NlpProblem {
        model: model.clone(),
        config: config.clone(),
        x0: x0.to_vec(),
        x1_d: x1_d.to_vec(),
        u_prev: u_prev.to_vec(),
        lower,
        upper,
    })
}

impl NlpProblem {
    fn m(&self) -> usize {
        self.model.dims().m()
    }

    /// Full x₂,d with the free components taken from `z`.
    pub fn x2d<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let d = self.model.dims();
        let base = self.config.horizon * d.m();
        let mut x2d = vec![S::zero(); d.n2];
        for (j, &i) in self.config.x2d_mask.iter().enumerate() {
            x2d[i] = z[base + j];
        }
        x2d
    }

    fn penalty_rows(&self) -> usize {
        match &self.model.x2_limits {
            Some((lo, hi)) => lo.iter().zip(hi).filter(|(l, h)| l.is_finite() || h.is_finite()).count(),
            None => 0,
        }
    }

    /// Predicted states x₀ … x_N under the input sequence in `z`.
    pub fn predict<S: Scalar>(&self, z: &[S]) -> Vec<Vec<S>> {
        let n = self.model.dims().n();
        let m = self.m();
        let mut xs = Vec::with_capacity(self.config.horizon + 1);
        let mut x: Vec<S> = self.x0.iter().map(|&v| S::cst(v)).collect();
        xs.push(x.clone());
        let mut next = [S::zero(); MAX_STATE];
        for k in 0..self.config.horizon {
            rk4_into(&self.model, &x, &z[k * m..(k + 1) * m], self.config.ts, &mut next[..n]);
            x.copy_from_slice(&next[..n]);
            xs.push(x.clone());
        }
        xs
    }

    /// Stage-cost terms as residuals whose squares sum to J.
    fn fill_residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        let d = self.model.dims();
        let (n, m, n1, n2) = (d.n(), d.m(), d.n1, d.n2);
        let ts = self.config.ts;
        let x2d = self.x2d(z);
        let xs = self.predict(z);
        let q_w: Vec<f64> = self.config.q.iter().map(|q| (ts * q).sqrt()).collect();
        let r_w: Vec<f64> = self.config.r.iter().map(|r| (ts * r).sqrt() / ts).collect();
        let mut row = 0;
        let mut kernel = vec![S::zero(); n2];
        let mut psi = vec![S::zero(); d.m1_tilde];
        for k in 0..self.config.horizon {
            let x = &xs[k];
            for i in 0..n {
                let target = if i < n1 { S::cst(self.x1_d[i]) } else { x2d[i - n1] };
                out[row] = (x[i] - target) * q_w[i];
                row += 1;
            }
            for j in 0..m {
                let prev = if k == 0 { S::cst(self.u_prev[j]) } else { z[(k - 1) * m + j] };
                out[row] = (z[k * m + j] - prev) * r_w[j];
                row += 1;
            }
            let weight = match self.config.kernel_mode {
                KernelMode::Off => None,
                KernelMode::Constant => Some(S::cst((ts * self.config.bell.kappa_p).sqrt())),
                KernelMode::Bell => {
                    let (x1, x2) = x.split_at(n1);
                    self.model.psi_into(x1, x2, &z[k * m..k * m + d.m1], &mut psi);
                    let sq = psi.iter().fold(S::zero(), |a, &v| a + v * v);
                    // √Ω(‖ũ‖) = √κ_p · exp(−‖ũ‖²/(2κ_w))
                    let half = BellParams { kappa_p: self.config.bell.kappa_p.sqrt(), kappa_w: 2.0 * self.config.bell.kappa_w };
                    Some(bell_of_square(sq, half) * ts.sqrt())
                }
            };
            match weight {
                None => {
                    for o in &mut out[row..row + n2] {
                        *o = S::zero();
                    }
                }
                Some(w) => {
                    self.model.kernel_into(&x[..n1], self.config.kernel_branch, &self.config.kernel_free, &mut kernel);
                    for i in 0..n2 {
                        out[row + i] = (x2d[i] - kernel[i]) * w;
                    }
                }
            }
            row += n2;
        }
        if let Some((lo, hi)) = &self.model.x2_limits {
            let w = STATE_PENALTY.sqrt();
            for x in &xs[1..] {
                for i in 0..n2 {
                    if !(lo[i].is_finite() || hi[i].is_finite()) {
                        continue;
                    }
                    let v = x[n1 + i];
                    out[row] = if v.value() > hi[i] {
                        (v - hi[i]) * w
                    } else if v.value() < lo[i] {
                        (v - lo[i]) * w
                    } else {
                        S::zero()
                    };
                    row += 1;
                }
            }
        }
        debug_assert_eq!(row, out.len());
    }

    /// J at a flat decision vector.
    pub fn cost(&self, z: &[f64]) -> f64 {
        self.objective(z)
    }
}

impl Nlp for NlpProblem {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn residual_dim(&self) -> usize {
        let d = self.model.dims();
        self.config.horizon * (d.n() + d.m() + d.n2) + self.config.horizon * self.penalty_rows()
    }

    fn residuals<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        self.fill_residuals(z, out)
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn has_equality(&self) -> bool {
        self.config.equality == EqualityKind::UnitQuaternion
    }

    fn equality<S: Scalar>(&self, z: &[S]) -> S {
        let base = self.config.horizon * self.m();
        let sq = z[base..base + 4].iter().fold(S::zero(), |a, &v| a + v * v);
        sq.sqrt() - 1.0
    }

    fn restore_equality(&self, z: &mut [f64]) {
        let base = self.config.horizon * self.m();
        let q = &mut z[base..base + 4];
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 && n.is_finite() {
            q.iter_mut().for_each(|v| *v /= n);
        }
    }
}

/// Largest relative discrepancy between the forward-mode gradient of J and
/// central differences with step 1e−6.
pub fn cost_gradient_check(problem: &NlpProblem, z: &[f64]) -> f64 {
    let ad = gradient(&objective_field(problem), z);
    let fd = central_difference(&objective_field(problem), z, 1e-6);
    let scale = ad.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    ad.iter()
        .zip(&fd)
        .map(|(a, f)| (a - f).abs() / scale)
        .fold(0.0, f64::max)
}

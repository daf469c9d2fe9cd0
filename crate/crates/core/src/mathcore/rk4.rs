use super::Scalar;
use crate::{Error, Result};

/// Largest state dimension any model in this crate uses.
pub const MAX_STATE: usize = 12;

/// Autonomous vector field `ẋ = F(x, u)` with a zero-order-held input.
pub trait OdeField {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S], u: &[S], dx: &mut [S]);
}

/// One classical fourth-order Runge-Kutta step, written into `out`.
///
/// Does not check finiteness; see [`rk4_step`] for the checked variant.
pub fn rk4_into<S: Scalar, F: OdeField + ?Sized>(field: &F, x: &[S], u: &[S], h: f64, out: &mut [S]) {
    let n = x.len();
    debug_assert!(n <= MAX_STATE);
    let mut k1 = [S::zero(); MAX_STATE];
    let mut k2 = [S::zero(); MAX_STATE];
    let mut k3 = [S::zero(); MAX_STATE];
    let mut k4 = [S::zero(); MAX_STATE];
    let mut tmp = [S::zero(); MAX_STATE];

    field.eval(x, u, &mut k1[..n]);
    for i in 0..n {
        tmp[i] = x[i] + k1[i] * (0.5 * h);
    }
    field.eval(&tmp[..n], u, &mut k2[..n]);
    for i in 0..n {
        tmp[i] = x[i] + k2[i] * (0.5 * h);
    }
    field.eval(&tmp[..n], u, &mut k3[..n]);
    for i in 0..n {
        tmp[i] = x[i] + k3[i] * h;
    }
    field.eval(&tmp[..n], u, &mut k4[..n]);
    for i in 0..n {
        out[i] = x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// Checked RK4 step on plain reals.
pub fn rk4_step<F: OdeField + ?Sized>(field: &F, x: &[f64], u: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    if x.len() != field.state_dim() || u.len() != field.input_dim() {
        return Err(Error::Dimension(format!(
            "rk4: expected state {} / input {}, got {} / {}",
            field.state_dim(),
            field.input_dim(),
            x.len(),
            u.len()
        )));
    }
    let mut out = vec![0.0; x.len()];
    rk4_into(field, x, u, h, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "rk4 step".into(),
            state: x.to_vec(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Zero;
    impl OdeField for Zero {
        fn state_dim(&self) -> usize {
            2
        }
        fn input_dim(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, _x: &[S], _u: &[S], dx: &mut [S]) {
            dx.iter_mut().for_each(|d| *d = S::zero());
        }
    }

    struct Decay;
    impl OdeField for Decay {
        fn state_dim(&self) -> usize {
            1
        }
        fn input_dim(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, x: &[S], _u: &[S], dx: &mut [S]) {
            dx[0] = -x[0];
        }
    }

    /// ẏ = sin(t) - y, time carried as the second state.
    pub(crate) struct Forced;
    impl OdeField for Forced {
        fn state_dim(&self) -> usize {
            2
        }
        fn input_dim(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, x: &[S], _u: &[S], dx: &mut [S]) {
            dx[0] = x[1].sin() - x[0];
            dx[1] = S::cst(1.0);
        }
    }

    struct Blowup;
    impl OdeField for Blowup {
        fn state_dim(&self) -> usize {
            1
        }
        fn input_dim(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, x: &[S], _u: &[S], dx: &mut [S]) {
            dx[0] = x[0] * S::cst(f64::NAN);
        }
    }

    #[test]
    fn constant_solution() {
        assert_eq!(rk4_step(&Zero, &[1.0, 2.0], &[], 0.1).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn exponential_decay_step() {
        let x = rk4_step(&Decay, &[1.0], &[], 0.1).unwrap();
        assert!((x[0] - (-0.1f64).exp()).abs() < 1e-7);
        assert!((x[0] - 0.904837418).abs() < 1e-7);
    }

    fn forced_exact(t: f64) -> f64 {
        // y(0) = 0
        0.5 * (t.sin() - t.cos() + (-t).exp())
    }

    fn global_error(h: f64) -> f64 {
        let steps = (2.0 / h).round() as usize;
        let mut x = vec![0.0, 0.0];
        for _ in 0..steps {
            x = rk4_step(&Forced, &x, &[], h).unwrap();
        }
        (x[0] - forced_exact(x[1])).abs()
    }

    #[test]
    fn observed_order_is_four() {
        let (e1, e2) = (global_error(0.1), global_error(0.05));
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "observed order {order}");
    }

    #[test]
    fn rejects_bad_step_and_non_finite() {
        assert!(rk4_step(&Decay, &[1.0], &[], 0.0).is_err());
        assert!(matches!(
            rk4_step(&Blowup, &[1.0], &[], 0.1),
            Err(Error::NonFinite { .. })
        ));
    }
}

//! Forward-mode derivative propagation.
//!
//! A [`DualScalar`] carries a value together with `N` directional partials.
//! [`gradient`] and [`jacobian`] seed the unit directions in chunks of
//! [`SEED_WIDTH`] and sweep the input once per chunk.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

use super::Scalar;

/// Number of directions propagated per sweep.
pub const SEED_WIDTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualScalar<const N: usize> {
    pub value: f64,
    pub partials: [f64; N],
}

impl<const N: usize> Default for DualScalar<N> {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl<const N: usize> DualScalar<N> {
    pub const fn constant(value: f64) -> Self {
        Self {
            value,
            partials: [0.0; N],
        }
    }

    /// Independent variable seeded along direction `dir` (`dir >= N` seeds nothing).
    pub fn variable(value: f64, dir: usize) -> Self {
        let mut partials = [0.0; N];
        if dir < N {
            partials[dir] = 1.0;
        }
        Self { value, partials }
    }

    #[inline]
    fn chain(self, value: f64, d: f64) -> Self {
        let mut partials = self.partials;
        for p in &mut partials {
            *p *= d;
        }
        Self { value, partials }
    }
}

impl<const N: usize> Add for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut partials = [0.0; N];
        for i in 0..N {
            partials[i] = self.partials[i] * rhs.value + self.value * rhs.partials[i];
        }
        Self {
            value: self.value * rhs.value,
            partials,
        }
    }
}

impl<const N: usize> Div for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let value = self.value * inv;
        let mut partials = [0.0; N];
        for i in 0..N {
            partials[i] = (self.partials[i] - value * rhs.partials[i]) * inv;
        }
        Self { value, partials }
    }
}

impl<const N: usize> Neg for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.value, -1.0)
    }
}

impl<const N: usize> Add<f64> for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.value += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.value -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.value * rhs, rhs)
    }
}

impl<const N: usize> Div<f64> for DualScalar<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.chain(self.value / rhs, 1.0 / rhs)
    }
}

impl<const N: usize> AddAssign for DualScalar<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> SubAssign for DualScalar<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const N: usize> Scalar for DualScalar<N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.value
    }
    #[inline]
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        // d/dx sqrt(x) at 0 is taken as 0 so that |v| = sqrt(v.v) stays finite at v = 0
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.chain(s, d)
    }
    #[inline]
    fn atan(self) -> Self {
        self.chain(self.value.atan(), 1.0 / (1.0 + self.value * self.value))
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|p| p.is_finite())
    }
}

/// Scalar function of a vector, evaluable on any [`Scalar`].
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, z: &[S]) -> S;
}

/// Vector function of a vector, evaluable on any [`Scalar`].
pub trait VectorField {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval<S: Scalar>(&self, z: &[S], out: &mut [S]);
}

type Seed = DualScalar<SEED_WIDTH>;

fn seeded(z: &[f64], start: usize) -> Vec<Seed> {
    z.iter()
        .enumerate()
        .map(|(i, &v)| match i.checked_sub(start) {
            Some(d) if d < SEED_WIDTH => Seed::variable(v, d),
            _ => Seed::constant(v),
        })
        .collect()
}

/// Gradient of `f` at `z` by forward-mode propagation.
pub fn gradient<F: ScalarField + ?Sized>(f: &F, z: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; z.len()];
    for start in (0..z.len()).step_by(SEED_WIDTH) {
        let out = f.eval(&seeded(z, start));
        for (d, &p) in out.partials.iter().enumerate() {
            if start + d < z.len() {
                grad[start + d] = p;
            }
        }
    }
    grad
}

/// Value and Jacobian (`output_dim x input_dim`) of `f` at `z`.
pub fn jacobian<F: VectorField + ?Sized>(f: &F, z: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let (n, m) = (f.input_dim(), f.output_dim());
    assert_eq!(z.len(), n, "jacobian: input dimension mismatch");
    let mut jac = DMatrix::zeros(m, n);
    let mut values = vec![0.0; m];
    let mut out = vec![Seed::default(); m];
    if n == 0 {
        let mut plain = vec![0.0; m];
        f.eval(z, &mut plain);
        return (plain, jac);
    }
    for start in (0..n).step_by(SEED_WIDTH) {
        f.eval(&seeded(z, start), &mut out);
        for (row, o) in out.iter().enumerate() {
            values[row] = o.value;
            for (d, &p) in o.partials.iter().enumerate() {
                if start + d < n {
                    jac[(row, start + d)] = p;
                }
            }
        }
    }
    (values, jac)
}

/// Central finite-difference gradient, used as an independent check.
pub fn central_difference<F: ScalarField + ?Sized>(f: &F, z: &[f64], step: f64) -> Vec<f64> {
    let mut zp = z.to_vec();
    (0..z.len())
        .map(|i| {
            let orig = zp[i];
            zp[i] = orig + step;
            let fp: f64 = f.eval(&zp);
            zp[i] = orig - step;
            let fm: f64 = f.eval(&zp);
            zp[i] = orig;
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl ScalarField for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, z: &[S]) -> S {
            z[0] * z[0] + z[1] * z[1]
        }
    }

    struct SinCos;
    impl ScalarField for SinCos {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, z: &[S]) -> S {
            z[0].sin() * z[1].cos()
        }
    }

    #[test]
    fn quadratic_gradient() {
        assert_eq!(gradient(&Quadratic, &[1.0, 2.0]), vec![2.0, 4.0]);
    }

    #[test]
    fn sin_cos_gradient_at_origin() {
        assert_eq!(gradient(&SinCos, &[0.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn chain_rule_elementary_ops() {
        let x = DualScalar::<1>::variable(0.7, 0);
        let y = (x.exp() * x.sin() + x.atan()) / (x.sqrt() + 1.0) - x.ln();
        let f = |v: f64| (v.exp() * v.sin() + v.atan()) / (v.sqrt() + 1.0) - v.ln();
        let h = 1e-6;
        let fd = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        assert!((y.partials[0] - fd).abs() < 1e-8);
        assert_eq!(y.value, f(0.7));
    }

    #[test]
    fn sqrt_at_zero_has_zero_slope() {
        let x = DualScalar::<1>::variable(0.0, 0);
        let s = (x * x).sqrt();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.partials[0], 0.0);
    }

    struct Wide;
    impl VectorField for Wide {
        fn input_dim(&self) -> usize {
            11
        }
        fn output_dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, z: &[S], out: &mut [S]) {
            out[0] = z.iter().fold(S::zero(), |a, &b| a + b * b);
            out[1] = z[10] * z[0];
        }
    }

    #[test]
    fn jacobian_spans_multiple_chunks() {
        let z: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let (v, j) = jacobian(&Wide, &z);
        assert_eq!(v[1], 0.0);
        for i in 0..11 {
            assert_eq!(j[(0, i)], 2.0 * i as f64);
        }
        assert_eq!(j[(1, 0)], 10.0);
        assert_eq!(j[(1, 10)], 0.0);
    }
}

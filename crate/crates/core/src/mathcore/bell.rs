use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::{Error, Result};

/// Gaussian bell-curve weight parameters: peak `kappa_p`, width `kappa_w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellParams {
    pub kappa_p: f64,
    pub kappa_w: f64,
}

impl BellParams {
    pub fn new(kappa_p: f64, kappa_w: f64) -> Result<Self> {
        if !(kappa_w > 0.0) || !(kappa_p >= 0.0) || !kappa_p.is_finite() || !kappa_w.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bell parameters need kappa_p >= 0 and kappa_w > 0, got ({kappa_p}, {kappa_w})"
            )));
        }
        Ok(Self { kappa_p, kappa_w })
    }
}

/// `κ_p · exp(−x² / κ_w)`.
pub fn bell(x: f64, p: BellParams) -> f64 {
    bell_of_square(x * x, p)
}

/// Bell curve evaluated from the squared argument, so that `x = ‖v‖₂`
/// can be used without a square root.
pub fn bell_of_square<S: Scalar>(x_sq: S, p: BellParams) -> S {
    (x_sq * (-1.0 / p.kappa_w)).exp() * p.kappa_p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value() {
        assert_eq!(bell(0.0, BellParams::new(3.0, 1.0).unwrap()), 3.0);
    }

    #[test]
    fn unit_argument() {
        let v = bell(1.0, BellParams::new(1.0, 1.0).unwrap());
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_width() {
        assert!(BellParams::new(1.0, 0.0).is_err());
        assert!(BellParams::new(-1.0, 1.0).is_err());
        assert!(BellParams::new(0.0, 1.0).is_ok());
    }

    proptest::proptest! {
        #[test]
        fn symmetric_bounded_monotone(x in -50.0f64..50.0, kp in 1e-6f64..100.0, kw in 1e-3f64..100.0) {
            let p = BellParams::new(kp, kw).unwrap();
            let b = bell(x, p);
            proptest::prop_assert_eq!(b, bell(-x, p));
            proptest::prop_assert!(b <= kp && b >= 0.0);
            proptest::prop_assert!(bell(x.abs() + 0.1, p) <= b);
        }

        #[test]
        fn strictly_positive_near_origin(x in -1.0f64..1.0, kp in 1e-3f64..10.0) {
            let p = BellParams::new(kp, 1.0).unwrap();
            proptest::prop_assert!(bell(x, p) > 0.0);
        }
    }
}

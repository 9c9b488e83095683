//! Analytic step and floor approximations built from `tanh`, the periodic
//! gate `theta`, and the error envelopes they are known to satisfy.
//!
//! All functions are evaluated in double precision. The bounds are exact-real
//! statements, so callers comparing measured errors against them should allow
//! a small absolute slack (the test-suite uses `1e-12`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `tanh(x * y * lambda)`: a smooth sign with sharpness `y * lambda`.
pub fn xi(x: f64, y: f64, lambda: f64) -> f64 {
    (x * y * lambda).tanh()
}

/// Smooth step from 0 to 1 centred at `x = 1`.
pub fn sigma1(x: f64, y: f64, lambda: f64) -> f64 {
    (1.0 + xi(x - 1.0, y, lambda)) / 2.0
}

/// Sum of `p` shifted [`sigma1`] steps, each sharpened by `ln p`: a smooth
/// staircase saturating at `p`.
pub fn sigma_p(p: u32, x: f64, y: f64, lambda: f64) -> f64 {
    let y = y + (p as f64).ln();
    (0..p).map(|i| sigma1(x - i as f64, y, lambda)).sum()
}

/// `exp(-lambda * (1 - sin(2 pi t))^2)`: 1-periodic, peaks at `t = 1/4`,
/// tiny on `[1/2, 1]`.
pub fn theta(t: f64, lambda: f64) -> f64 {
    let g = 1.0 - (2.0 * PI * t).sin();
    (-lambda * g * g).exp()
}

/// Lower bound on the integral of [`theta`] over half a period.
pub fn theta_half_period_lower_bound(lambda: f64) -> f64 {
    (std::f64::consts::E * lambda).powf(-0.25) / PI
}

pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `min(p, floor(x))` on the non-negative reals; clamped to 0 below 0,
/// where the staircase approximations are only meant to be flat.
pub fn int_p(p: u32, x: f64) -> f64 {
    x.floor().clamp(0.0, p as f64)
}

pub fn int1(x: f64) -> f64 {
    int_p(1, x)
}

fn dist_to_naturals(x: f64) -> f64 {
    if x <= 0.0 {
        -x
    } else {
        (x - x.round()).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HelperKind {
    Xi,
    Sigma1,
    SigmaP(u32),
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelperParams {
    /// Sharpness exponent; the target error scale is `e^-y`.
    pub y: f64,
    pub lambda: f64,
}

impl HelperParams {
    pub fn new(y: f64, lambda: f64) -> Self {
        HelperParams { y, lambda }
    }
}

/// Tightest proved bound on `|target(x) - helper(x)|` for the region `x`
/// falls in. The target is `sgn` for `Xi`, `int_1`/`int_p` for the sigmas,
/// and `0` for `Theta` (where `x` is the time and the bound covers
/// `[1/2, 1]` mod 1, or 1 elsewhere).
pub fn helper_error_bound(kind: HelperKind, params: HelperParams, x: f64) -> Result<f64> {
    let HelperParams { y, lambda } = params;
    let sharp = (-y).exp();
    match kind {
        HelperKind::Xi => {
            if !(lambda > 0.0) || !(y >= 1.0) {
                return Err(Error::BoundRegion(format!(
                    "xi needs lambda > 0 and y >= 1 (got y = {y}, lambda = {lambda})"
                )));
            }
            if x.abs() >= 1.0 / lambda {
                Ok(sharp)
            } else if x == 0.0 {
                Ok(0.5)
            } else {
                // Off the sharp region tanh can be arbitrarily close to 0 while
                // sgn is +-1.
                Ok(1.0)
            }
        }
        HelperKind::Sigma1 => {
            if !(lambda > 2.0) || !(y > 0.0) {
                return Err(Error::BoundRegion(format!(
                    "sigma1 needs lambda > 2 and y > 0 (got y = {y}, lambda = {lambda})"
                )));
            }
            if (1.0 - x).abs() >= 1.0 / lambda {
                Ok(sharp)
            } else {
                Ok(0.5)
            }
        }
        HelperKind::SigmaP(p) => {
            if p == 0 || !(lambda > 2.0) || !(y > 0.0) {
                return Err(Error::BoundRegion(format!(
                    "sigma_p needs p >= 1, lambda > 2 and y > 0 (got p = {p}, y = {y}, lambda = {lambda})"
                )));
            }
            let inv = 1.0 / lambda;
            if x < 1.0 - inv || x > p as f64 + inv || dist_to_naturals(x) > inv {
                Ok(sharp)
            } else {
                Ok(0.5 + sharp)
            }
        }
        HelperKind::Theta => {
            if !(lambda > 0.0) {
                return Err(Error::BoundRegion(format!("theta needs lambda > 0 (got {lambda})")));
            }
            let phase = x.rem_euclid(1.0);
            if phase >= 0.5 || phase == 0.0 {
                Ok((-lambda).exp())
            } else {
                Ok(1.0)
            }
        }
    }
}

/// `|target(x) - helper(x)|` for the same pairing as [`helper_error_bound`].
pub fn helper_error(kind: HelperKind, params: HelperParams, x: f64) -> f64 {
    let HelperParams { y, lambda } = params;
    match kind {
        HelperKind::Xi => (sgn(x) - xi(x, y, lambda)).abs(),
        HelperKind::Sigma1 => (int1(x) - sigma1(x, y, lambda)).abs(),
        HelperKind::SigmaP(p) => (int_p(p, x) - sigma_p(p, x, y, lambda)).abs(),
        HelperKind::Theta => theta(x, lambda).abs(),
    }
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]` with `panels`
/// panels of 5 nodes each.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let mid = lo + h / 2.0;
        let half = h / 2.0;
        let panel: f64 = NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&n, w)| w * f(mid + half * n))
            .sum();
        total += half * panel;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_vanishes_at_origin() {
        assert_eq!(xi(0.0, 5.0, 3.0), 0.0);
    }

    #[test]
    fn sigma1_is_half_at_one() {
        assert_eq!(sigma1(1.0, 7.0, 3.0), 0.5);
    }

    #[test]
    fn sigma1_two_is_just_below_one() {
        let v = sigma1(2.0, 2.0, 2.0);
        assert!(v < 1.0 && v > 1.0 - (-2.0f64).exp());
    }

    #[test]
    fn sigma_p_sharp_between_integers() {
        let err = (3.0 - sigma_p(5, 3.5, 8.0, 10.0)).abs();
        assert!(err < (-8.0f64).exp(), "{err}");
    }

    #[test]
    fn theta_peak_and_trough() {
        assert_eq!(theta(0.25, 17.0), 1.0);
        let l = 3.0;
        assert!((theta(0.75, l) - (-4.0 * l).exp()).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let b = helper_error_bound(HelperKind::Xi, HelperParams::new(3.0, 2.0), 1.0).unwrap();
        assert_eq!(b, (-3.0f64).exp());
        let b = helper_error_bound(HelperKind::SigmaP(4), HelperParams::new(2.0, 10.0), 2.0).unwrap();
        assert_eq!(b, 0.5 + (-2.0f64).exp());
        let b = helper_error_bound(HelperKind::Xi, HelperParams::new(1.0, 1.0), 0.0).unwrap();
        assert_eq!(b, 0.5);
    }

    #[test]
    fn sigma_bounds_need_lambda_above_two() {
        assert!(helper_error_bound(HelperKind::Sigma1, HelperParams::new(1.0, 2.0), 0.0).is_err());
        assert!(helper_error_bound(HelperKind::SigmaP(3), HelperParams::new(1.0, 1.5), 0.0).is_err());
    }

    #[test]
    fn xi_half_bound_fails_close_to_zero() {
        // A coarse 1/2 envelope for xi cannot hold for 0 < |x| << 1/lambda.
        let err = helper_error(HelperKind::Xi, HelperParams::new(1.0, 1.0), 1e-3);
        assert!(err > 0.5);
        let b = helper_error_bound(HelperKind::Xi, HelperParams::new(1.0, 1.0), 1e-3).unwrap();
        assert!(err <= b);
    }

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        let v = gauss_legendre(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 3);
        assert!((v - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }
}

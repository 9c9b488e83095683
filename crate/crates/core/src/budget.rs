//! Error budget of the simulation: the per-step error recurrence, its
//! geometric-arithmetic closed form, and the analytic choice of `lambda`.
//!
//! Values are kept as natural logarithms. With `K1` in the billions, `a^n`
//! leaves `f64` range long before `n = 50`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::step::{StepConstants, StepMap};
use crate::tm::TuringMachine;

/// `ln(e^a + e^b)`, exact for `-inf` arguments.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of a positive rational of any size.
pub fn ln_rational(r: &BigRational) -> f64 {
    if !r.is_positive() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Renders `e^ln` in scientific notation without overflowing.
pub fn format_log(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return "0".into();
    }
    let log10 = ln / std::f64::consts::LN_10;
    let mut exp = log10.floor();
    let mut mantissa = (10f64.powf(log10 - exp) * 1e6).round() / 1e6;
    if mantissa >= 10.0 {
        mantissa /= 10.0;
        exp += 1.0;
    }
    format!("{mantissa:.6}e{exp}")
}

/// `ln((x^n - 1) / (x - 1))` for `x = e^ln_x`, `n >= 1`.
fn ln_geometric_sum(ln_x: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let nl = n as f64 * ln_x;
    if ln_x.abs() < 1e-12 {
        return (n as f64).ln();
    }
    // (x^n - 1)/(x - 1) = expm1(n l) / expm1(l), same sign top and bottom.
    if ln_x > 0.0 {
        let top = nl + (-(-nl).exp_m1()).ln();
        let bottom = ln_x + (-(-ln_x).exp_m1()).ln();
        top - bottom
    } else {
        (-nl.exp_m1()).ln() - (-ln_x.exp_m1()).ln()
    }
}

/// `ln(epsilon_1 .. epsilon_n)` of the step recurrence
/// `eps' = (1 + 3e^-l) K1 (e^-tau + eps + 2e^-l) + 5e^-l`.
pub fn ln_recurrence(ln_k1: f64, lambda: f64, tau: f64, ln_eps0: f64, n: usize) -> Vec<f64> {
    let ln_gain = ln_k1 + (3.0 * (-lambda).exp()).ln_1p();
    let ln_2el = std::f64::consts::LN_2 - lambda;
    let ln_5el = 5f64.ln() - lambda;
    let mut out = Vec::with_capacity(n + 1);
    out.push(ln_eps0);
    for i in 0..n {
        let inner = log_add(log_add(-tau, out[i]), ln_2el);
        out.push(log_add(ln_gain + inner, ln_5el));
    }
    out
}

/// `(ln a, ln b)` with `a = K1 (1 + 3e^-l)` and `b = (8 K1 + 5) e^-l`.
pub fn ln_linear_coefficients(ln_k1: f64, lambda: f64) -> (f64, f64) {
    let ln_a = ln_k1 + (3.0 * (-lambda).exp()).ln_1p();
    let ln_b = log_add(8f64.ln() + ln_k1, 5f64.ln()) - lambda;
    (ln_a, ln_b)
}

/// `ln(a^n u0 + b (a^n - 1)/(a - 1))`.
pub fn ln_closed_form(ln_a: f64, ln_b: f64, ln_u0: f64, n: usize) -> f64 {
    log_add(n as f64 * ln_a + ln_u0, ln_b + ln_geometric_sum(ln_a, n))
}

/// `ln u_0 .. ln u_n` for `u' = a u + b`.
pub fn ln_linear_sequence(ln_a: f64, ln_b: f64, ln_u0: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(ln_u0);
    for i in 0..n {
        out.push(log_add(ln_a + out[i], ln_b));
    }
    out
}

/// `S + T ln K3 + ln(8 K1 + 5)`.
pub fn lambda_analytic(s: f64, t: usize, ln_k1: f64) -> f64 {
    let ln_k3 = 4f64.ln() + ln_k1;
    s + t as f64 * ln_k3 + log_add(8f64.ln() + ln_k1, 5f64.ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    /// Target precision exponent: the goal is `eps_T <= e^-S`.
    pub s: f64,
    pub horizon: usize,
    pub ln_k1: f64,
    pub ln_k3: f64,
    pub lambda: f64,
    pub tau: f64,
    /// `ln eps_0 .. ln eps_T` from the step recurrence.
    pub ln_eps: Vec<f64>,
}

impl ErrorBudget {
    /// Budget for explicit `lambda`, `tau` and initial error.
    pub fn with_params(ln_k1: f64, lambda: f64, tau: f64, eps0: f64, horizon: usize) -> Self {
        ErrorBudget {
            s: f64::NAN,
            horizon,
            ln_k1,
            ln_k3: 4f64.ln() + ln_k1,
            lambda,
            tau,
            ln_eps: ln_recurrence(ln_k1, lambda, tau, eps0.ln(), horizon),
        }
    }

    /// Budget at the analytic `lambda` with `tau = lambda` and exact start.
    pub fn analytic(constants: &StepConstants, s: f64, horizon: usize) -> Result<Self> {
        if !(s > 0.0) || horizon == 0 {
            return Err(Error::Parameter(format!(
                "budget needs S > 0 and T > 0 (got S = {s}, T = {horizon})"
            )));
        }
        if constants.k1.is_zero() {
            return Err(Error::Parameter("K1 must be positive".into()));
        }
        let ln_k1 = ln_rational(&constants.k1);
        let lambda = lambda_analytic(s, horizon, ln_k1);
        let mut b = ErrorBudget::with_params(ln_k1, lambda, lambda, 0.0, horizon);
        b.s = s;
        Ok(b)
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.ln_eps[n].exp()
    }

    pub fn ln_coefficients(&self) -> (f64, f64) {
        ln_linear_coefficients(self.ln_k1, self.lambda)
    }

    /// Closed-form bound at step `n`.
    pub fn ln_closed_form(&self, n: usize) -> f64 {
        let (a, b) = self.ln_coefficients();
        ln_closed_form(a, b, self.ln_eps[0], n)
    }

    /// Whether `eps_T <= e^-S`.
    pub fn meets_target(&self) -> bool {
        self.ln_eps[self.horizon] <= -self.s
    }
}

/// Budget for a machine at the analytic `lambda`.
pub fn error_budget(machine: &TuringMachine, s: f64, horizon: usize) -> Result<ErrorBudget> {
    ErrorBudget::analytic(&StepMap::new(machine)?.constants(), s, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_sum() {
        assert!((log_add(2f64.ln(), 3f64.ln()).exp() - 5.0).abs() < 1e-12);
        assert_eq!(log_add(f64::NEG_INFINITY, 1.5), 1.5);
    }

    #[test]
    fn ln_rational_handles_huge_values() {
        let big = BigRational::from_integer(BigInt::from(10).pow(400));
        assert!((ln_rational(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_linear_iteration() {
        let (a, b) = (3f64.ln(), 0.5f64.ln());
        let seq = ln_linear_sequence(a, b, 0.25f64.ln(), 30);
        for (n, v) in seq.iter().enumerate() {
            assert!((v - ln_closed_form(a, b, 0.25f64.ln(), n)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_below_one() {
        // a < 1: (1 - a^n)/(1 - a) branch.
        let (a, b) = (0.5f64.ln(), 1f64.ln());
        let direct = 0.5f64.powi(4) * 2.0 + (1.0 - 0.5f64.powi(4)) / 0.5;
        assert!((ln_closed_form(a, b, 2f64.ln(), 4).exp() - direct).abs() < 1e-12);
    }

    #[test]
    fn format_log_is_scientific() {
        assert_eq!(format_log(1000f64.ln()), "1.000000e3");
        assert_eq!(format_log(f64::NEG_INFINITY), "0");
    }

    #[test]
    fn budget_needs_positive_inputs() {
        let c = crate::corpus::binary_counter();
        assert!(error_budget(&c.machine, 0.0, 3).is_err());
        assert!(error_budget(&c.machine, 5.0, 0).is_err());
    }
}

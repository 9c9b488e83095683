//! The goal-reaching equation `x' = A phi(t) (g - x)` and its perturbed form
//! with a moving goal.

use crate::error::{Error, Result};
use crate::helpers::gauss_legendre;
use crate::ode::{integrate, integrate_dense, OdeOptions};

/// Exact solution at time `T` given `int_0^T phi`.
pub fn reach_closed_form(a: f64, phi_integral: f64, g: f64, x0: f64) -> f64 {
    g + (x0 - g) * (-a * phi_integral).exp()
}

/// Numerical solution of the unperturbed equation at `t_end`.
pub fn reach_integrate<P: Fn(f64) -> f64>(
    a: f64,
    g: f64,
    x0: f64,
    phi: P,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<f64> {
    let sys = (1, |t: f64, x: &[f64], dx: &mut [f64]| dx[0] = a * phi(t) * (g - x[0]));
    Ok(integrate(&sys, 0.0, &[x0], t_end, opts)?[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachVerdict {
    pub a: f64,
    pub x_end: f64,
    /// `|x(T) - g|`.
    pub deviation: f64,
    /// `eta (1 + e^-lambda) + |x0 - g| e^-lambda`.
    pub bound: f64,
    /// Largest amount by which `x` left `[x-, x+]` on the sample grid.
    pub sandwich_violation: f64,
    pub slack: f64,
}

impl ReachVerdict {
    pub fn bound_holds(&self) -> bool {
        self.deviation <= self.bound + self.slack
    }

    pub fn sandwich_holds(&self) -> bool {
        self.sandwich_violation <= self.slack
    }

    pub fn holds(&self) -> bool {
        self.bound_holds() && self.sandwich_holds()
    }
}

/// Integrates `x' = A phi(t) (gbar(t) - x)` with `A = lambda / int_0^T phi`
/// next to the extreme solutions for goals `g +- eta`, and checks the
/// deviation bound and the ordering `x- <= x <= x+` on 200 sample times.
pub fn reach_perturbed_check<G, P>(
    eta: f64,
    lambda: f64,
    x0: f64,
    g: f64,
    gbar: G,
    phi: P,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<ReachVerdict>
where
    G: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    if !(t_end > 0.0) || !(lambda > 0.0) || !(eta >= 0.0) {
        return Err(Error::Parameter(format!(
            "need T > 0, lambda > 0, eta >= 0 (got T = {t_end}, lambda = {lambda}, eta = {eta})"
        )));
    }
    let grid = 1000;
    for i in 0..=grid {
        let t = t_end * i as f64 / grid as f64;
        if (gbar(t) - g).abs() > eta * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "goal perturbation |gbar(t) - g| exceeds eta = {eta} at t = {t}"
            )));
        }
        if phi(t) < 0.0 {
            return Err(Error::Parameter(format!("phi is negative at t = {t}")));
        }
    }
    let phi_int = gauss_legendre(&phi, 0.0, t_end, 64);
    if !(phi_int > 0.0) {
        return Err(Error::Parameter("phi has zero integral".into()));
    }
    let a = lambda / phi_int;
    let sys = (3, |t: f64, x: &[f64], dx: &mut [f64]| {
        let r = a * phi(t);
        dx[0] = r * (gbar(t) - x[0]);
        dx[1] = r * (g - eta - x[1]);
        dx[2] = r * (g + eta - x[2]);
    });
    let samples: Vec<f64> = (1..=200).map(|i| t_end * i as f64 / 200.0).collect();
    let (states, _) = integrate_dense(&sys, 0.0, &[x0; 3], t_end, &samples, opts)?;
    let sandwich_violation = states
        .iter()
        .map(|s| (s[1] - s[0]).max(s[0] - s[2]).max(0.0))
        .fold(0.0, f64::max);
    let x_end = states.last().expect("samples")[0];
    let el = (-lambda).exp();
    Ok(ReachVerdict {
        a,
        x_end,
        deviation: (x_end - g).abs(),
        bound: eta * (1.0 + el) + (x0 - g).abs() * el,
        sandwich_violation,
        slack: 10.0 * opts.rtol.max(opts.atol) * (1.0 + g.abs() + x0.abs()),
    })
}

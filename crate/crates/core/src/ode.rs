//! Adaptive Dormand-Prince 5(4) integration with dense output.

use thiserror::Error;

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h:e}); the system is too stiff for these tolerances, lower lambda or the maximum step")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("invalid integrator options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            h_init: None,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step, with its dense interpolant.
pub struct StepView<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    cont: &'a [Vec<f64>; 5],
}

impl StepView<'_> {
    /// Interpolated state at `t` in `[t0, t1]`.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.cont;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates from `t0` to `t1` (either direction), calling `observer` after
/// every accepted step. Returns the final state.
pub fn integrate_with<S, O>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(Vec<f64>, OdeStats), IntegrationError>
where
    S: OdeSystem + ?Sized,
    O: FnMut(&StepView<'_>),
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(IntegrationError::Options(format!(
            "initial state has {} components, system has {n}",
            y0.len()
        )));
    }
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) || !(opts.h_max > 0.0) {
        return Err(IntegrationError::Options(
            "tolerances and maximum step must be positive".into(),
        ));
    }
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok((y, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);

    let mut t = t0;
    sys.rhs(t, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(sys, t, &y, &k[0], dir, opts, &mut stats))
        .min(opts.h_max)
        .min(span);
    let mut last_err = 1e-4f64;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * span.max(1.0) {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegrationError::TooManySteps(opts.max_steps));
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < opts.h_min {
            return Err(IntegrationError::StepUnderflow { t, h });
        }
        let hs = dir * h;

        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k[0][i];
        }
        sys.rhs(t + C2 * hs, &tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
        }
        sys.rhs(t + C3 * hs, &tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        sys.rhs(t + C4 * hs, &tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        sys.rhs(t + C5 * hs, &tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + hs * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        let t_new = if last { t1 } else { t + hs };
        sys.rhs(t + hs, &tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        sys.rhs(t_new, &ynew, &mut k[6]);
        stats.evaluations += 6;

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let r = e / sc;
            err += r * r;
            finite &= ynew[i].is_finite();
        }
        let err = (err / n.max(1) as f64).sqrt();

        if !finite || !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            if h < opts.h_min {
                return Err(IntegrationError::NonFinite { t });
            }
            continue;
        }

        if err <= 1.0 {
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - hs * k[6][i] - bspl;
                cont[4][i] = hs
                    * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                        + D7 * k[6][i]);
            }
            observer(&StepView {
                t0: t,
                t1: t_new,
                y0: &y,
                y1: &ynew,
                cont: &cont,
            });
            stats.accepted += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            // PI control with the usual Dormand-Prince exponents.
            let fac = 0.9 * err.max(1e-10).powf(-0.17) * last_err.powf(0.04);
            last_err = err.max(1e-4);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
            if last {
                break;
            }
        } else {
            stats.rejected += 1;
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.2, 1.0);
        }
    }
    Ok((y, stats))
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64]| -> f64 {
        (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, f)| a + dir * h0 * f).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + dir * h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Integrates and returns the state at each requested time (sorted in the
/// direction of integration, all within `[t0, t1]`).
pub fn integrate_dense<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    samples: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats), IntegrationError> {
    let n = sys.dim();
    let dir = (t1 - t0).signum();
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && (samples[next] - t0) * dir <= 0.0 {
        out.push(y0.to_vec());
        next += 1;
    }
    let (yend, stats) = integrate_with(sys, t0, y0, t1, opts, |step| {
        while next < samples.len() && (samples[next] - step.t1) * dir <= 0.0 {
            let mut buf = vec![0.0; n];
            step.eval(samples[next], &mut buf);
            out.push(buf);
            next += 1;
        }
    })?;
    while out.len() < samples.len() {
        out.push(yend.clone());
    }
    Ok((out, stats))
}

/// Integrates and returns only the final state.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>, IntegrationError> {
    integrate_with(sys, t0, y0, t1, opts, |_| {}).map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_system_stays_put() {
        let sys = (3, |_t: f64, _y: &[f64], dy: &mut [f64]| dy.fill(0.0));
        let y = integrate(&sys, 0.0, &[1.0, -2.0, 3.5], 10.0, &OdeOptions::default()).unwrap();
        assert_eq!(y, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn tanh_matches_closed_form() {
        let sys = (1, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = 1.0 - y[0] * y[0]);
        let opts = OdeOptions::with_tol(1e-12);
        let y = integrate(&sys, 0.0, &[0.0], 3.0, &opts).unwrap();
        assert!((y[0] - 3f64.tanh()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let sys = (2, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let opts = OdeOptions::with_tol(1e-12);
        let fwd = integrate(&sys, 0.0, &[0.0, 1.0], 2.0, &opts).unwrap();
        let back = integrate(&sys, 2.0, &fwd, 0.0, &opts).unwrap();
        assert!(back[0].abs() < 1e-9 && (back[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_output_hits_sample_times() {
        let sys = (1, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0]);
        let opts = OdeOptions::with_tol(1e-11);
        let samples: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let (ys, _) = integrate_dense(&sys, 0.0, &[1.0], 1.0, &samples, &opts).unwrap();
        for (t, y) in samples.iter().zip(&ys) {
            assert!((y[0] - t.exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn max_step_is_respected() {
        let sys = (1, |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 1.0);
        let opts = OdeOptions::default().max_step(0.01);
        let mut widest = 0.0f64;
        integrate_with(&sys, 0.0, &[0.0], 1.0, &opts, |s| widest = widest.max(s.t1 - s.t0)).unwrap();
        assert!(widest <= 0.01 + 1e-15);
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = (1, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let err = integrate(&sys, 0.0, &[1.0], 2.0, &OdeOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            IntegrationError::StepUnderflow { .. } | IntegrationError::NonFinite { .. }
        ));
    }
}

//! The two-phase iteration `z' = A theta(t) (F(u) - z)`,
//! `u' = A theta(t - 1/2) (z - u)` driven by the robust step map, its
//! integration on either backend, and decoding of the trajectory back into
//! machine configurations.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::budget::{ln_rational, ErrorBudget};
use crate::compile::{compile_iterate, compile_step_robust, CompiledIterate, VarKind};
use crate::error::{Error, Result};
use crate::helpers::theta;
use crate::ode::{integrate_with, OdeOptions, OdeStats, OdeSystem};
use crate::poly::{FlatPolyVector, PolyVector};
use crate::step::{machine_constants, RealConfig4, StepMap};
use crate::tm::{encode, run, Configuration, TuringMachine};

/// Parameters of the iteration: `lambda` and `mu` of the gates, and the
/// sharpness `tau` and slope `sigma_lambda` of the robust step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterateParams {
    pub lambda: f64,
    pub mu: f64,
    pub tau: f64,
    pub sigma_lambda: f64,
}

impl IterateParams {
    /// Defaults: `mu = ln(K2 + 1)`, `tau = lambda`, `sigma_lambda = 4k`.
    pub fn new(
        machine: &TuringMachine,
        lambda: f64,
        mu: Option<f64>,
        tau: Option<f64>,
        sigma_lambda: Option<f64>,
    ) -> Result<Self> {
        let mu = match mu {
            Some(mu) => mu,
            None => machine_constants(machine)?.k2_f64().ln_1p(),
        };
        let p = IterateParams {
            lambda,
            mu,
            tau: tau.unwrap_or(lambda),
            sigma_lambda: sigma_lambda.unwrap_or(4.0 * machine.k() as f64),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn for_machine(machine: &TuringMachine, lambda: f64) -> Result<Self> {
        Self::new(machine, lambda, None, None, None)
    }

    /// `A = 10 (lambda + mu)^2`.
    pub fn a(&self) -> f64 {
        10.0 * (self.lambda + self.mu).powi(2)
    }

    /// `B = 4 (lambda + mu)`.
    pub fn b(&self) -> f64 {
        4.0 * (self.lambda + self.mu)
    }

    /// Largest integrator step, `1/(4B)`.
    pub fn max_step(&self) -> f64 {
        1.0 / (4.0 * self.b())
    }

    /// `lambda >= 1`, `mu >= 0`, `A >= (lambda + mu) pi (eB)^(1/4)` and
    /// `A e^mu e^-B <= e^-lambda`.
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.mu, self.tau, self.sigma_lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite parameter in {self:?}")));
        }
        if self.lambda < 1.0 {
            return Err(Error::Parameter(format!("lambda = {} must be at least 1", self.lambda)));
        }
        if self.mu < 0.0 {
            return Err(Error::Parameter(format!("mu = {} must be non-negative", self.mu)));
        }
        if self.tau <= 0.0 || self.sigma_lambda <= 0.0 {
            return Err(Error::Parameter("tau and sigma_lambda must be positive".into()));
        }
        let (a, b) = (self.a(), self.b());
        let lm = self.lambda + self.mu;
        if a < lm * std::f64::consts::PI * (std::f64::consts::E * b).powf(0.25) {
            return Err(Error::Parameter(format!("A = {a} below (lambda + mu) pi (eB)^(1/4)")));
        }
        if a.ln() + self.mu - b > -self.lambda {
            return Err(Error::Parameter(format!(
                "A e^mu e^-B = e^{} exceeds e^-lambda",
                a.ln() + self.mu - b
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// `F` and `theta` evaluated as elementary functions.
    Direct,
    /// The compiled polynomial system.
    Compiled,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Backend::Direct),
            "compiled" => Ok(Backend::Compiled),
            _ => Err(Error::Parameter(format!("unknown backend `{s}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Direct => "direct",
            Backend::Compiled => "compiled",
        })
    }
}

/// The iteration on state `[z(4), u(4)]` with explicit time.
pub struct DirectSystem {
    map: StepMap,
    params: IterateParams,
}

impl DirectSystem {
    pub fn new(machine: &TuringMachine, params: IterateParams) -> Result<Self> {
        params.validate()?;
        Ok(DirectSystem {
            map: StepMap::new(machine)?,
            params,
        })
    }
}

impl OdeSystem for DirectSystem {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let (a, b) = (p.a(), p.b());
        let g1 = a * theta(t, b);
        let g2 = a * theta(t - 0.5, b);
        let u = RealConfig4::new(y[4], y[5], y[6], y[7]);
        let f = self.map.robust(&u, p.tau, p.sigma_lambda).to_array();
        for i in 0..4 {
            dy[i] = g1 * (f[i] - y[i]);
            dy[4 + i] = g2 * (y[i] - y[4 + i]);
        }
    }
}

/// The compiled system integrated in charts: `ln` for gates, `atanh` for
/// tanh auxiliaries. The chart equations are the compiled polynomials
/// divided by `Theta` and `1 - v^2` respectively.
pub struct ChartSystem {
    kinds: Vec<VarKind>,
    rhs: FlatPolyVector,
}

impl ChartSystem {
    pub fn new(ci: &CompiledIterate) -> Result<Self> {
        let comps = ci
            .system
            .poly
            .comps
            .iter()
            .enumerate()
            .map(|(i, p)| match ci.kinds[i] {
                VarKind::State => Ok(p.clone()),
                VarKind::ExpGate => p
                    .div_by_var(i)
                    .ok_or_else(|| Error::Document(format!("equation {i} is not divisible by its variable"))),
                VarKind::TanhAux => p
                    .div_one_minus_square(i)
                    .ok_or_else(|| Error::Document(format!("equation {i} is not divisible by 1 - v^2"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChartSystem {
            kinds: ci.kinds.clone(),
            rhs: PolyVector::new(comps).flatten(),
        })
    }

    /// Chart coordinates to the compiled system's variables.
    pub fn to_natural(&self, chart: &[f64], out: &mut [f64]) {
        for (i, (&c, k)) in chart.iter().zip(&self.kinds).enumerate() {
            out[i] = match k {
                VarKind::State => c,
                VarKind::ExpGate => c.exp(),
                VarKind::TanhAux => c.tanh(),
            };
        }
    }
}

impl OdeSystem for ChartSystem {
    fn dim(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let mut nat = vec![0.0; y.len()];
        self.to_natural(y, &mut nat);
        self.rhs.eval_into(&nat, dy);
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: IterateParams,
    pub backend: Backend,
    pub tol: f64,
    /// Trace rows per unit time.
    pub samples_per_unit: usize,
}

impl SimConfig {
    pub fn new(params: IterateParams, backend: Backend, tol: f64) -> Self {
        SimConfig {
            params,
            backend,
            tol,
            samples_per_unit: 16,
        }
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions::with_tol(self.tol).max_step(self.params.max_step())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub u: [f64; 4],
    pub z: [f64; 4],
    /// Running `max ||(u, z)||_inf` up to `t`.
    pub sup_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub machine: Option<String>,
    pub c0: Configuration,
    pub horizon: usize,
    pub config: SimConfig,
    pub samples: Vec<TraceRow>,
    /// `u(n)` for `n = 0..=T`.
    pub u_at: Vec<[f64; 4]>,
    pub z_at: Vec<[f64; 4]>,
    /// `max ||(u, z)||_inf` over every accepted step.
    pub sup_norm: f64,
    /// `max ||F(u)||_inf` over every accepted step.
    pub f_sup: f64,
    /// Largest movement of `u` on `[n, n + 1/2]` away from `u(n)`.
    pub phase_drift: Vec<f64>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn max_phase_drift(&self) -> f64 {
        self.phase_drift.iter().copied().fold(0.0, f64::max)
    }
}

fn sup4(a: &[f64; 4]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

struct Recorder<'a> {
    map: &'a StepMap,
    params: IterateParams,
    sample_times: Vec<f64>,
    spu: usize,
    next: usize,
    rows: Vec<TraceRow>,
    u_at: Vec<[f64; 4]>,
    z_at: Vec<[f64; 4]>,
    sup: f64,
    f_sup: f64,
    drift: Vec<f64>,
}

impl Recorder<'_> {
    fn visit(&mut self, t: f64, u: [f64; 4], z: [f64; 4]) {
        self.sup = self.sup.max(sup4(&u)).max(sup4(&z));
        let f = self
            .map
            .robust(&RealConfig4::from_array(u), self.params.tau, self.params.sigma_lambda);
        self.f_sup = self.f_sup.max(f.sup_norm());
        let n = t.floor() as usize;
        if t - n as f64 <= 0.5 && n < self.drift.len() && n < self.u_at.len() {
            self.drift[n] = self.drift[n].max(dist4(&u, &self.u_at[n]));
        }
    }

    fn sample(&mut self, t: f64, u: [f64; 4], z: [f64; 4]) {
        if self.next % self.spu == 0 {
            self.u_at.push(u);
            self.z_at.push(z);
        }
        self.next += 1;
        self.visit(t, u, z);
        self.rows.push(TraceRow {
            t,
            u,
            z,
            sup_norm: self.sup,
        });
    }
}

/// Integrates the iteration from `u(0) = z(0) = [c0]` on `[0, T]`.
pub fn simulate_machine(
    machine: &TuringMachine,
    c0: &Configuration,
    horizon: usize,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.params.validate()?;
    if !(config.tol > 0.0) || config.samples_per_unit == 0 {
        return Err(Error::Parameter("tolerance and sampling rate must be positive".into()));
    }
    let rc = encode(c0, machine)?;
    let start = RealConfig4::from(&rc);
    let map = StepMap::new(machine)?;
    let spu = config.samples_per_unit;
    let sample_times: Vec<f64> = (0..=horizon * spu).map(|i| i as f64 / spu as f64).collect();
    let mut rec = Recorder {
        map: &map,
        params: config.params,
        sample_times,
        spu,
        next: 0,
        rows: Vec::new(),
        u_at: Vec::new(),
        z_at: Vec::new(),
        sup: 0.0,
        f_sup: 0.0,
        drift: vec![0.0; horizon],
    };
    let c = start.to_array();
    rec.sample(0.0, c, c);
    let opts = config.ode_options();
    let t_end = horizon as f64;

    let stats = match config.backend {
        Backend::Direct => {
            let sys = DirectSystem::new(machine, config.params)?;
            let mut y0 = c.to_vec();
            y0.extend_from_slice(&c);
            let split = |y: &[f64]| -> ([f64; 4], [f64; 4]) {
                ([y[4], y[5], y[6], y[7]], [y[0], y[1], y[2], y[3]])
            };
            if horizon == 0 {
                OdeStats::default()
            } else {
                let mut buf = vec![0.0; 8];
                integrate_with(&sys, 0.0, &y0, t_end, &opts, |s| {
                    while rec.next < rec.sample_times.len() && rec.sample_times[rec.next] <= s.t1 {
                        let ts = rec.sample_times[rec.next];
                        s.eval(ts, &mut buf);
                        let (u, z) = split(&buf);
                        rec.sample(ts, u, z);
                    }
                    let (u, z) = split(s.y1);
                    rec.visit(s.t1, u, z);
                })?
                .1
            }
        }
        Backend::Compiled => {
            let ci = compile_iterate(machine, &config.params, &start)?;
            let sys = ChartSystem::new(&ci)?;
            let split = |y: &[f64]| -> ([f64; 4], [f64; 4]) { (ci.u.map(|i| y[i]), ci.z.map(|i| y[i])) };
            if horizon == 0 {
                OdeStats::default()
            } else {
                let mut buf = vec![0.0; ci.dim()];
                integrate_with(&sys, 0.0, &ci.chart_y0, t_end, &opts, |s| {
                    while rec.next < rec.sample_times.len() && rec.sample_times[rec.next] <= s.t1 {
                        let ts = rec.sample_times[rec.next];
                        s.eval(ts, &mut buf);
                        let (u, z) = split(&buf);
                        rec.sample(ts, u, z);
                    }
                    let (u, z) = split(s.y1);
                    rec.visit(s.t1, u, z);
                })?
                .1
            }
        }
    };
    if rec.u_at.len() != horizon + 1 {
        return Err(Error::Parameter(format!(
            "recorded {} integer samples for horizon {horizon}",
            rec.u_at.len()
        )));
    }
    Ok(Trajectory {
        machine: machine.name().map(String::from),
        c0: c0.clone(),
        horizon,
        config: config.clone(),
        samples: rec.rows,
        u_at: rec.u_at,
        z_at: rec.z_at,
        sup_norm: rec.sup,
        f_sup: rec.f_sup,
        phase_drift: rec.drift,
        stats,
    })
}

/// Digits of a perturbed tape value. The error `eps` grows by `k` per digit;
/// decoding stops once the remainder is within it and fails once it could
/// flip a shifted floor.
fn decode_real_tape(value: f64, k: usize, eps: f64, max_digits: usize) -> Result<Vec<u32>> {
    let kf = k as f64;
    let shift = 1.0 / (2.0 * kf);
    let mut r = value;
    let mut e = eps;
    let mut digits = Vec::new();
    while r.abs() > e {
        if digits.len() == max_digits {
            return Err(Error::NonTerminating(max_digits));
        }
        if e * kf >= shift {
            return Err(Error::Ambiguous(format!(
                "tape value {value}: error {e:e} after {} digits hides the next digit",
                digits.len()
            )));
        }
        r *= kf;
        e *= kf;
        let d = (r + shift).floor();
        if d < 0.0 {
            return Err(Error::InvalidConfig(format!("negative tape value {value}")));
        }
        if d > (k - 2) as f64 {
            return Err(Error::ReservedDigit(d as u32));
        }
        r -= d;
        digits.push(d as u32);
    }
    Ok(digits)
}

/// Recovers a configuration from a point within `eps` of its encoding.
pub fn decode_real_config(
    point: &[f64; 4],
    machine: &TuringMachine,
    eps: f64,
    max_digits: usize,
) -> Result<Configuration> {
    let [x, s, y, q] = *point;
    let nearest = |v: f64, what: &str, limit: usize| -> Result<usize> {
        let r = v.round();
        if !((v - r).abs() <= eps) {
            return Err(Error::Ambiguous(format!("{what} = {v} is not within {eps} of an integer")));
        }
        if r < 0.0 || r >= limit as f64 {
            return Err(Error::InvalidConfig(format!("{what} = {r} outside 0..{limit}")));
        }
        Ok(r as usize)
    };
    let q = nearest(q, "state", machine.m())?;
    let s = nearest(s, "symbol", machine.symbols())?;
    let left = decode_real_tape(x, machine.k(), eps, max_digits)?;
    let right = decode_real_tape(y, machine.k(), eps, max_digits)?;
    Ok(Configuration::new(left, s as u32, right, q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncodingDoc {
    pub x: String,
    pub s: u32,
    pub y: String,
    pub q: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepVerdict {
    pub n: usize,
    pub oracle: String,
    pub encoding: EncodingDoc,
    pub decoded: Option<String>,
    pub decode_error: Option<String>,
    pub matches: bool,
    /// `||u(n) - [c_n]||_inf`.
    pub error: f64,
    /// `eps_n` from the step recurrence with the run's parameters.
    pub budget: f64,
    pub within_budget: bool,
}

/// Decodes `u(n)` at each integer time and compares with the interpreter.
pub fn decode_trajectory(traj: &Trajectory, machine: &TuringMachine, eps: f64) -> Result<Vec<StepVerdict>> {
    let oracle = run(machine, &traj.c0, traj.horizon);
    let constants = machine_constants(machine)?;
    let enc0 = encode(&traj.c0, machine)?;
    let p = &traj.config.params;
    let eps0 = enc0.distance_to(&traj.u_at[0]);
    let budget = ErrorBudget::with_params(ln_rational(&constants.k1), p.lambda, p.tau, eps0, traj.horizon);
    let slack = 10.0 * traj.config.tol;
    let max_digits = traj.horizon + oracle[0].left().len().max(oracle[0].right().len()) + 64;
    oracle
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let rc = encode(c, machine)?;
            let error = rc.distance_to(&traj.u_at[n]);
            let (decoded, decode_error) = match decode_real_config(&traj.u_at[n], machine, eps, max_digits) {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let b = budget.eps(n);
            Ok(StepVerdict {
                n,
                oracle: c.to_string(),
                encoding: EncodingDoc {
                    x: rc.x.to_string(),
                    s: rc.s,
                    y: rc.y.to_string(),
                    q: rc.q,
                },
                matches: decoded.as_ref() == Some(c),
                decoded: decoded.map(|d| d.to_string()),
                decode_error,
                error,
                budget: b,
                within_budget: error <= b + slack,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub machine: Option<String>,
    pub backend: Backend,
    pub params: IterateParams,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub horizon: usize,
    pub tol: f64,
    pub sup_norm: f64,
    /// `e^mu`.
    pub sup_bound: f64,
    pub f_sup: f64,
    pub max_phase_drift: f64,
    /// `2 e^-lambda`.
    pub phase_bound: f64,
    pub steps: Vec<StepVerdict>,
    pub all_match: bool,
    pub all_within_budget: bool,
    pub sup_within_bound: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl VerdictReport {
    pub fn new(traj: &Trajectory, steps: Vec<StepVerdict>) -> Self {
        let p = traj.config.params;
        let sup_bound = p.mu.exp();
        VerdictReport {
            machine: traj.machine.clone(),
            backend: traj.config.backend,
            params: p,
            a: p.a(),
            b: p.b(),
            horizon: traj.horizon,
            tol: traj.config.tol,
            sup_norm: traj.sup_norm,
            sup_bound,
            f_sup: traj.f_sup,
            max_phase_drift: traj.max_phase_drift(),
            phase_bound: 2.0 * (-p.lambda).exp(),
            all_match: steps.iter().all(|s| s.matches),
            all_within_budget: steps.iter().all(|s| s.within_budget),
            sup_within_bound: traj.sup_norm <= sup_bound,
            steps,
            accepted_steps: traj.stats.accepted,
            rejected_steps: traj.stats.rejected,
        }
    }

    pub fn passed(&self) -> bool {
        self.all_match && self.all_within_budget && self.sup_within_bound
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// CSV with columns `t, u1..u4, z1..z4, sup_norm`.
pub fn write_trace_csv<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,u1,u2,u3,u4,z1,z2,z3,z4,sup_norm")?;
    for r in &traj.samples {
        write!(w, "{}", r.t)?;
        for v in r.u.iter().chain(&r.z) {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", r.sup_norm)?;
    }
    Ok(())
}

/// Discrepancies between the compiled polynomials and the direct right-hand
/// side at random in-box states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RhsDiscrepancy {
    /// Largest `|a - b| / max(1, |a|)` over the `z` and `u` derivatives and
    /// their shifted copies.
    pub state: f64,
    /// Largest `|a - b| / max(1, |w'|)` over the tanh auxiliaries, against
    /// the chain rule `(1 - v^2) w'` built from the direct `u'`.
    pub aux: f64,
}

pub fn rhs_equivalence<R: Rng>(
    machine: &TuringMachine,
    params: &IterateParams,
    states: usize,
    rng: &mut R,
) -> Result<RhsDiscrepancy> {
    let c0 = RealConfig4::from(&encode(&machine.blank_config(), machine)?);
    let ci = compile_iterate(machine, params, &c0)?;
    let step = compile_step_robust(machine, params.tau, params.sigma_lambda)?;
    let direct = DirectSystem::new(machine, *params)?;
    let flat = ci.system.poly.flatten();
    let b = params.b();
    let (m, k) = (machine.m() as f64, machine.k() as f64);
    let lifted0 = ci.u[3] + 1;
    let n_shift = step.num_shifts();
    let mut out = RhsDiscrepancy::default();
    let mut nat = vec![0.0; ci.dim()];
    let mut dc = vec![0.0; ci.dim()];
    let mut dd = [0.0; 8];
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale.max(1.0);
    for _ in 0..states {
        let t: f64 = rng.gen_range(0.0..1.0);
        let mut point = || -> [f64; 4] {
            [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..=k - 2.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..=m - 1.0),
            ]
        };
        let z = point();
        let u = point();
        nat[0] = t;
        nat[1] = (2.0 * std::f64::consts::PI * t).sin();
        nat[2] = (2.0 * std::f64::consts::PI * t).cos();
        nat[3] = theta(t, b);
        nat[4] = theta(t - 0.5, b);
        for i in 0..4 {
            nat[ci.z[i]] = z[i];
            nat[ci.u[i]] = u[i];
        }
        let lifted = step.lift(&u);
        nat[lifted0..].copy_from_slice(&lifted[4..]);
        flat.eval_into(&nat, &mut dc);
        let mut y = z.to_vec();
        y.extend_from_slice(&u);
        direct.rhs(t, &y, &mut dd);
        for i in 0..4 {
            out.state = out.state.max(rel(dd[i], dc[ci.z[i]], dd[i].abs()));
            out.state = out.state.max(rel(dd[4 + i], dc[ci.u[i]], dd[4 + i].abs()));
        }
        for (j, &(input, _)) in step.shifts.iter().enumerate() {
            let a = dd[4 + input];
            out.state = out.state.max(rel(a, dc[lifted0 + j], a.abs()));
        }
        for (j, w) in step.args.iter().enumerate() {
            let idx = lifted0 + n_shift + j;
            let v = nat[idx];
            let dw: f64 = (0..4).map(|i| w.partial(i).eval(&u) * dd[4 + i]).sum();
            out.aux = out.aux.max(rel((1.0 - v * v) * dw, dc[idx], dw.abs()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use rand::SeedableRng;

    #[test]
    fn defaults_follow_machine() {
        let c = corpus::binary_counter();
        let p = IterateParams::for_machine(&c.machine, 25.0).unwrap();
        assert_eq!(p.tau, 25.0);
        assert_eq!(p.sigma_lambda, 16.0);
        let k2 = machine_constants(&c.machine).unwrap().k2_f64();
        assert!((p.mu - (k2 + 1.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn small_lambda_is_rejected() {
        let c = corpus::binary_counter();
        assert!(matches!(IterateParams::for_machine(&c.machine, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn exact_point_decodes() {
        let c = corpus::palindrome();
        let rc = encode(&c.input, &c.machine).unwrap();
        let d = decode_real_config(&rc.to_f64(), &c.machine, 1e-9, 64).unwrap();
        assert_eq!(d, c.input);
    }

    #[test]
    fn perturbed_tape_recovers_six_digits() {
        let c = corpus::binary_counter();
        let conf = Configuration::new(vec![1, 2, 1, 1, 2, 2], 1, vec![2, 1, 2, 2, 1, 1], 0);
        let p = encode(&conf, &c.machine).unwrap().to_f64().map(|v| v + 1e-6);
        assert_eq!(decode_real_config(&p, &c.machine, 2e-6, 64).unwrap(), conf);
    }

    #[test]
    fn far_state_is_ambiguous() {
        let c = corpus::binary_counter();
        let mut p = encode(&c.input, &c.machine).unwrap().to_f64();
        p[3] += 0.4;
        assert!(matches!(
            decode_real_config(&p, &c.machine, 1e-6, 64),
            Err(Error::Ambiguous(_))
        ));
    }

    #[test]
    fn zero_horizon_echoes_input() {
        let c = corpus::binary_counter();
        let cfg = SimConfig::new(IterateParams::for_machine(&c.machine, 25.0).unwrap(), Backend::Direct, 1e-8);
        let traj = simulate_machine(&c.machine, &c.input, 0, &cfg).unwrap();
        let v = decode_trajectory(&traj, &c.machine, 1e-6).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].matches);
    }

    #[test]
    fn compiled_rhs_matches_direct() {
        let c = corpus::binary_counter();
        let p = IterateParams::for_machine(&c.machine, 25.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = rhs_equivalence(&c.machine, &p, 200, &mut rng).unwrap();
        assert!(d.state <= 1e-9 && d.aux <= 1e-9, "{d:?}");
    }

    #[test]
    fn chart_system_starts_at_compiled_state() {
        let c = corpus::unary_adder();
        let p = IterateParams::for_machine(&c.machine, 25.0).unwrap();
        let start = RealConfig4::from(&encode(&c.input, &c.machine).unwrap());
        let ci = compile_iterate(&c.machine, &p, &start).unwrap();
        let chart = ChartSystem::new(&ci).unwrap();
        let mut nat = vec![0.0; ci.dim()];
        chart.to_natural(&ci.chart_y0, &mut nat);
        for (a, b) in nat.iter().zip(&ci.system.y0) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

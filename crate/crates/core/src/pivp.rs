//! Polynomial initial value problems `y' = p(y), y(t0) = y0` and the closure
//! operations that build new generable functions from old ones: sums,
//! products, composition and polynomial pre- and post-composition.
//!
//! Every system tracks a symbolic bound `s(t)` meant to dominate
//! `||y(t)||_inf`. Bounds are carried, not proved; tests integrate and
//! compare.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ode::{integrate, integrate_dense, integrate_with, OdeOptions, OdeSystem};
use crate::poly::{FlatPolyVector, Poly, PolyVector};

/// Symbolic space bound, evaluated at a time (or at an inner bound's value
/// under composition).
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceBound {
    Const(f64),
    /// `|t|`
    Time,
    /// `e^|t|`
    ExpTime,
    /// `sum_i c_i |t|^i`
    Poly(Vec<f64>),
    Sum(Box<SpaceBound>, Box<SpaceBound>),
    Product(Box<SpaceBound>, Box<SpaceBound>),
    Max(Vec<SpaceBound>),
    /// `outer(inner(t))`
    Compose(Box<SpaceBound>, Box<SpaceBound>),
}

impl SpaceBound {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SpaceBound::Const(c) => c.abs(),
            SpaceBound::Time => t.abs(),
            SpaceBound::ExpTime => t.abs().exp(),
            SpaceBound::Poly(c) => c
                .iter()
                .enumerate()
                .map(|(i, a)| a.abs() * t.abs().powi(i as i32))
                .sum(),
            SpaceBound::Sum(a, b) => a.eval(t) + b.eval(t),
            SpaceBound::Product(a, b) => a.eval(t) * b.eval(t),
            SpaceBound::Max(v) => v.iter().map(|b| b.eval(t)).fold(0.0, f64::max),
            SpaceBound::Compose(outer, inner) => outer.eval(inner.eval(t)),
        }
    }

    pub fn sum(a: SpaceBound, b: SpaceBound) -> Self {
        SpaceBound::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: SpaceBound, b: SpaceBound) -> Self {
        SpaceBound::Product(Box::new(a), Box::new(b))
    }

    pub fn compose(outer: SpaceBound, inner: SpaceBound) -> Self {
        SpaceBound::Compose(Box::new(outer), Box::new(inner))
    }
}

impl fmt::Display for SpaceBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceBound::Const(c) => write!(f, "{}", c.abs()),
            SpaceBound::Time => write!(f, "|t|"),
            SpaceBound::ExpTime => write!(f, "exp(|t|)"),
            SpaceBound::Poly(c) => {
                let terms: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(i, a)| match i {
                        0 => format!("{}", a.abs()),
                        1 => format!("{}*|t|", a.abs()),
                        _ => format!("{}*|t|^{i}", a.abs()),
                    })
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "({})", terms.join(" + "))
                }
            }
            SpaceBound::Sum(a, b) => write!(f, "({a} + {b})"),
            SpaceBound::Product(a, b) => write!(f, "({a} * {b})"),
            SpaceBound::Max(v) => {
                let parts: Vec<String> = v.iter().map(|b| b.to_string()).collect();
                write!(f, "max({})", parts.join(", "))
            }
            SpaceBound::Compose(outer, inner) => {
                let o = outer.to_string();
                write!(f, "{}", o.replace("|t|", &format!("|{inner}|")))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PivpSystem {
    pub poly: PolyVector,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub output: usize,
    pub bound: SpaceBound,
    pub names: Vec<String>,
}

struct FlatRhs(FlatPolyVector);

impl OdeSystem for FlatRhs {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.0.eval_into(y, dy);
    }
}

impl PivpSystem {
    pub fn new(
        poly: PolyVector,
        t0: f64,
        y0: Vec<f64>,
        output: usize,
        bound: SpaceBound,
        names: Vec<String>,
    ) -> Result<Self> {
        let d = y0.len();
        if poly.dim() != d || names.len() != d || output >= d {
            return Err(Error::Incompatible(format!(
                "system has {} equations, {} initial values, {} names and output {output}",
                poly.dim(),
                d,
                names.len()
            )));
        }
        if let Some(v) = poly.comps.iter().filter_map(Poly::max_var).max() {
            if v >= d {
                return Err(Error::Incompatible(format!("equation refers to variable {v} of {d}")));
            }
        }
        Ok(PivpSystem {
            poly,
            t0,
            y0,
            output,
            bound,
            names,
        })
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    fn rhs(&self) -> FlatRhs {
        FlatRhs(self.poly.flatten())
    }

    /// Full state at `t`.
    pub fn state_at(&self, t: f64, opts: &OdeOptions) -> Result<Vec<f64>> {
        Ok(integrate(&self.rhs(), self.t0, &self.y0, t, opts)?)
    }

    /// Generated function at each sample time (ascending, all `>= t0`).
    pub fn output_at(&self, times: &[f64], opts: &OdeOptions) -> Result<Vec<f64>> {
        let end = times.iter().copied().fold(self.t0, f64::max);
        let (states, _) = integrate_dense(&self.rhs(), self.t0, &self.y0, end, times, opts)?;
        Ok(states.into_iter().map(|s| s[self.output]).collect())
    }

    /// Largest `||y(t)||_inf - s(t)` over accepted steps on `[t0, t_end]`;
    /// non-positive when the bound holds.
    pub fn bound_excess(&self, t_end: f64, opts: &OdeOptions) -> Result<f64> {
        let sup = |y: &[f64]| y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = sup(&self.y0) - self.bound.eval(self.t0);
        integrate_with(&self.rhs(), self.t0, &self.y0, t_end, opts, |s| {
            worst = worst.max(sup(s.y1) - self.bound.eval(s.t1));
        })?;
        Ok(worst)
    }

    /// Same function anchored at `t`.
    pub fn rebase(&self, t: f64, opts: &OdeOptions) -> Result<PivpSystem> {
        let y0 = self.state_at(t, opts)?;
        Ok(PivpSystem {
            t0: t,
            y0,
            ..self.clone()
        })
    }

    fn prefixed_names(&self, prefix: &str) -> Vec<String> {
        self.names.iter().map(|n| format!("{prefix}{n}")).collect()
    }
}

fn align(f: &PivpSystem, g: &PivpSystem, opts: &OdeOptions) -> Result<PivpSystem> {
    if f.t0 == g.t0 {
        Ok(g.clone())
    } else {
        g.rebase(f.t0, opts)
    }
}

fn combine(
    f: &PivpSystem,
    g: &PivpSystem,
    opts: &OdeOptions,
    extra: impl FnOnce(&Poly, &Poly, usize, usize) -> (Poly, f64, SpaceBound),
) -> Result<PivpSystem> {
    let g = align(f, g, opts)?;
    let df = f.dim();
    let dg = g.dim();
    let mut comps = f.poly.comps.clone();
    comps.extend(g.poly.comps.iter().map(|p| p.shift_vars(df)));
    let p_out = f.poly.comps[f.output].clone();
    let q_out = g.poly.comps[g.output].shift_vars(df);
    let (u_rhs, u0, bound) = extra(&p_out, &q_out, f.output, df + g.output);
    comps.push(u_rhs);
    let mut y0 = f.y0.clone();
    y0.extend_from_slice(&g.y0);
    y0.push(u0);
    let mut names = f.prefixed_names("f.");
    names.extend(g.prefixed_names("g."));
    names.push("u".into());
    PivpSystem::new(PolyVector::new(comps), f.t0, y0, df + dg, bound, names)
}

/// `f + g`; `g` is re-anchored at `f`'s initial time if needed.
pub fn pivp_sum(f: &PivpSystem, g: &PivpSystem, opts: &OdeOptions) -> Result<PivpSystem> {
    let (fv, gv) = (f.y0[f.output], align(f, g, opts)?.y0[g.output]);
    combine(f, g, opts, |p, q, _, _| {
        (p + q, fv + gv, SpaceBound::sum(f.bound.clone(), g.bound.clone()))
    })
}

/// `f - g`.
pub fn pivp_difference(f: &PivpSystem, g: &PivpSystem, opts: &OdeOptions) -> Result<PivpSystem> {
    let (fv, gv) = (f.y0[f.output], align(f, g, opts)?.y0[g.output]);
    combine(f, g, opts, |p, q, _, _| {
        (p - q, fv - gv, SpaceBound::sum(f.bound.clone(), g.bound.clone()))
    })
}

/// `f * g` through the product rule `u' = p(y) z + y q(z)`.
pub fn pivp_product(f: &PivpSystem, g: &PivpSystem, opts: &OdeOptions) -> Result<PivpSystem> {
    let (fv, gv) = (f.y0[f.output], align(f, g, opts)?.y0[g.output]);
    combine(f, g, opts, |p, q, yi, zi| {
        let rhs = p * &Poly::var(zi) + &Poly::var(yi) * q;
        let bound = SpaceBound::Max(vec![
            f.bound.clone(),
            g.bound.clone(),
            SpaceBound::product(f.bound.clone(), g.bound.clone()),
        ]);
        (rhs, fv * gv, bound)
    })
}

/// `f o g`: a copy of `g` drives a copy of `f` through `u' = p(u) g'`.
/// The initial state of `u` is `f`'s state at time `g(t0)`, obtained by
/// integrating `f`.
pub fn pivp_compose(f: &PivpSystem, g: &PivpSystem, opts: &OdeOptions) -> Result<PivpSystem> {
    let start = g.y0[g.output];
    let u0 = f.state_at(start, opts)?;
    let dg = g.dim();
    let drive = g.poly.comps[g.output].clone();
    let mut comps = g.poly.comps.clone();
    comps.extend(f.poly.comps.iter().map(|p| &p.shift_vars(dg) * &drive));
    let mut y0 = g.y0.clone();
    y0.extend(u0);
    let mut names = g.prefixed_names("g.");
    names.extend(f.prefixed_names("f."));
    let bound = SpaceBound::Max(vec![
        g.bound.clone(),
        SpaceBound::compose(f.bound.clone(), g.bound.clone()),
    ]);
    PivpSystem::new(PolyVector::new(comps), g.t0, y0, dg + f.output, bound, names)
}

/// Appends `w = p(y)` to `g` with `w' = sum_i dp/dy_i * y_i'`; `p` is written
/// over `g`'s variables.
pub fn pivp_poly_apply(p: &Poly, g: &PivpSystem) -> Result<PivpSystem> {
    if let Some(v) = p.max_var() {
        if v >= g.dim() {
            return Err(Error::Incompatible(format!(
                "polynomial uses variable {v}, system has {}",
                g.dim()
            )));
        }
    }
    let mut w_rhs = Poly::zero();
    for (i, gi) in g.poly.comps.iter().enumerate() {
        let d = p.partial(i);
        if !d.is_zero() {
            w_rhs = &w_rhs + &(&d * gi);
        }
    }
    let mut by_degree = vec![0.0; p.degree() as usize + 1];
    for (m, c) in p.terms() {
        let d: u32 = m.iter().map(|&(_, e)| e).sum();
        by_degree[d as usize] += c.abs();
    }
    let mut comps = g.poly.comps.clone();
    comps.push(w_rhs);
    let mut y0 = g.y0.clone();
    y0.push(p.eval(&g.y0));
    let mut names = g.names.clone();
    names.push("w".into());
    let bound = SpaceBound::Max(vec![
        g.bound.clone(),
        SpaceBound::compose(SpaceBound::Poly(by_degree), g.bound.clone()),
    ]);
    PivpSystem::new(PolyVector::new(comps), g.t0, y0, g.dim(), bound, names)
}

/// `f o p` for a polynomial `p` of time (variable 0 of a single-component
/// vector).
pub fn pivp_poly_precompose(f: &PivpSystem, p: &PolyVector, opts: &OdeOptions) -> Result<PivpSystem> {
    if p.dim() != 1 || p.comps[0].max_var().is_some_and(|v| v > 0) {
        return Err(Error::Incompatible(
            "inner polynomial must be a single polynomial in t".into(),
        ));
    }
    let clock = pivp_elementary_fn(Elementary::Identity);
    let inner = pivp_poly_apply(&p.comps[0], &clock)?;
    let mut out = pivp_compose(f, &inner, opts)?;
    let coeffs = {
        let mut c = vec![0.0; p.comps[0].degree() as usize + 1];
        for (m, a) in p.comps[0].terms() {
            c[m.first().map_or(0, |&(_, e)| e as usize)] += a.abs();
        }
        c
    };
    out.bound = SpaceBound::Max(vec![
        SpaceBound::Poly(coeffs.clone()),
        SpaceBound::compose(f.bound.clone(), SpaceBound::Poly(coeffs)),
    ]);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Tanh,
    Exp,
    Identity,
    Constant(f64),
}

impl FromStr for Elementary {
    type Err = Error;

    /// `sin`, `cos`, `tanh`, `exp`, `identity`, `constant` or `constant:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sin" => Elementary::Sin,
            "cos" => Elementary::Cos,
            "tanh" => Elementary::Tanh,
            "exp" => Elementary::Exp,
            "identity" | "id" => Elementary::Identity,
            "constant" => Elementary::Constant(1.0),
            _ => match s.strip_prefix("constant:").map(str::parse::<f64>) {
                Some(Ok(c)) => Elementary::Constant(c),
                _ => return Err(Error::UnknownElementary(s.to_string())),
            },
        })
    }
}

/// Generator system of an elementary function, anchored at `t0 = 0`.
pub fn pivp_elementary_fn(e: Elementary) -> PivpSystem {
    let one = |c: f64| Poly::constant(c);
    let (comps, y0, output, bound, names): (Vec<Poly>, Vec<f64>, usize, SpaceBound, Vec<&str>) = match e {
        Elementary::Sin | Elementary::Cos => (
            vec![Poly::var(1), -Poly::var(0)],
            vec![0.0, 1.0],
            if e == Elementary::Sin { 0 } else { 1 },
            SpaceBound::Const(1.0),
            vec!["sin", "cos"],
        ),
        Elementary::Tanh => (
            vec![one(1.0) - Poly::var(0).pow(2)],
            vec![0.0],
            0,
            SpaceBound::Const(1.0),
            vec!["tanh"],
        ),
        Elementary::Exp => (vec![Poly::var(0)], vec![1.0], 0, SpaceBound::ExpTime, vec!["exp"]),
        Elementary::Identity => (vec![one(1.0)], vec![0.0], 0, SpaceBound::Time, vec!["t"]),
        Elementary::Constant(c) => (vec![Poly::zero()], vec![c], 0, SpaceBound::Const(c), vec!["c"]),
    };
    PivpSystem::new(
        PolyVector::new(comps),
        0.0,
        y0,
        output,
        bound,
        names.into_iter().map(String::from).collect(),
    )
    .expect("elementary systems are well formed")
}

pub fn pivp_elementary(name: &str) -> Result<PivpSystem> {
    Ok(pivp_elementary_fn(name.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OdeOptions {
        OdeOptions::with_tol(1e-11)
    }

    #[test]
    fn tanh_generator_matches_closed_form() {
        let tanh = pivp_elementary("tanh").unwrap();
        let v = tanh.output_at(&[3.0], &opts()).unwrap();
        assert!((v[0] - 3f64.tanh()).abs() < 1e-8);
    }

    #[test]
    fn rotation_conserves_norm() {
        let sin = pivp_elementary("sin").unwrap();
        let y = sin.state_at(7.3, &opts()).unwrap();
        assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_name_is_an_error() {
        assert!(matches!(pivp_elementary("log"), Err(Error::UnknownElementary(_))));
        assert_eq!(
            "constant:2.5".parse::<Elementary>().unwrap(),
            Elementary::Constant(2.5)
        );
    }

    #[test]
    fn adding_zero_is_identity() {
        let sin = pivp_elementary("sin").unwrap();
        let zero = pivp_elementary("constant:0").unwrap();
        let s = pivp_sum(&sin, &zero, &opts()).unwrap();
        let times = [0.5, 1.0, 2.0];
        let a = s.output_at(&times, &opts()).unwrap();
        let b = sin.output_at(&times, &opts()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn product_with_one_is_identity() {
        let tanh = pivp_elementary("tanh").unwrap();
        let one = pivp_elementary("constant").unwrap();
        let p = pivp_product(&tanh, &one, &opts()).unwrap();
        let v = p.output_at(&[1.5], &opts()).unwrap();
        assert!((v[0] - 1.5f64.tanh()).abs() < 1e-9);
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let tanh = pivp_elementary("tanh").unwrap();
        let id = pivp_elementary("identity").unwrap();
        let c = pivp_compose(&tanh, &id, &opts()).unwrap();
        let v = c.output_at(&[2.0], &opts()).unwrap();
        assert!((v[0] - 2f64.tanh()).abs() < 1e-9);
    }

    #[test]
    fn anchors_are_aligned_by_integration() {
        let sin = pivp_elementary("sin").unwrap();
        let shifted = sin.rebase(1.0, &opts()).unwrap();
        let tanh = pivp_elementary("tanh").unwrap();
        let s = pivp_sum(&tanh, &shifted, &opts()).unwrap();
        assert_eq!(s.t0, 0.0);
        let v = s.output_at(&[1.0], &opts()).unwrap();
        assert!((v[0] - (1f64.tanh() + 1f64.sin())).abs() < 1e-9);
    }

    #[test]
    fn poly_apply_squares_sine() {
        let sin = pivp_elementary("sin").unwrap();
        let sq = pivp_poly_apply(&Poly::var(0).pow(2), &sin).unwrap();
        let v = sq.output_at(&[0.7], &opts()).unwrap();
        assert!((v[0] - 0.7f64.sin().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn bound_display_composes() {
        let b = SpaceBound::compose(SpaceBound::Poly(vec![0.0, 2.0]), SpaceBound::Const(1.0));
        assert_eq!(b.eval(5.0), 2.0);
        assert_eq!(b.to_string(), "(2*|1|)");
    }
}

//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Sorted `(variable, exponent)` pairs with non-zero exponents; the empty
/// monomial is the constant 1.
pub type Monomial = Vec<(usize, u32)>;

fn mono_mul(a: &[(usize, u32)], b: &[(usize, u32)]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn mono_degree(m: &[(usize, u32)]) -> u32 {
    m.iter().map(|&(_, e)| e).sum()
}

fn mono_exp(m: &[(usize, u32)], var: usize) -> u32 {
    m.iter().find(|&&(v, _)| v == var).map_or(0, |&(_, e)| e)
}

fn mono_with_exp(m: &[(usize, u32)], var: usize, exp: u32) -> Monomial {
    let mut out: Monomial = m.iter().copied().filter(|&(v, _)| v != var).collect();
    if exp > 0 {
        let pos = out.partition_point(|&(v, _)| v < var);
        out.insert(pos, (var, exp));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: f64) -> Self {
        Poly::term(c, Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Poly::term(1.0, vec![(i, 1)])
    }

    /// `c * x_i^e` style single term; exponents of zero are dropped.
    pub fn term(c: f64, mut mono: Monomial) -> Self {
        mono.retain(|&(_, e)| e > 0);
        mono.sort_unstable();
        let mut p = Poly::zero();
        p.add_term(mono, c);
        p
    }

    /// Builds from `(coefficient, monomial)` pairs, collecting like terms.
    pub fn from_terms<I: IntoIterator<Item = (f64, Monomial)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (c, mut m) in terms {
            m.retain(|&(_, e)| e > 0);
            m.sort_unstable();
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, mono: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        if let Some(v) = self.terms.get_mut(&mono) {
            *v += c;
            if *v == 0.0 {
                self.terms.remove(&mono);
            }
        } else {
            self.terms.insert(mono, c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| mono_degree(m)).max().unwrap_or(0)
    }

    /// Sum of absolute coefficients.
    pub fn coeff_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|m| m.last().map(|&(v, _)| v)).max()
    }

    pub fn scale(&self, c: f64) -> Poly {
        if c == 0.0 {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, &v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| m.iter().fold(c, |acc, &(v, e)| acc * pow_u(x[v], e)))
            .sum()
    }

    /// Renames variables through `f`.
    pub fn map_vars<F: Fn(usize) -> usize>(&self, f: F) -> Poly {
        Poly::from_terms(
            self.terms
                .iter()
                .map(|(m, &c)| (c, m.iter().map(|&(v, e)| (f(v), e)).collect())),
        )
    }

    pub fn shift_vars(&self, offset: usize) -> Poly {
        self.map_vars(|v| v + offset)
    }

    pub fn partial(&self, var: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, &c) in &self.terms {
            let e = mono_exp(m, var);
            if e > 0 {
                out.add_term(mono_with_exp(m, var, e - 1), c * e as f64);
            }
        }
        out
    }

    /// `self / x_var` when every term contains `x_var`.
    pub fn div_by_var(&self, var: usize) -> Option<Poly> {
        let mut out = Poly::zero();
        for (m, &c) in &self.terms {
            let e = mono_exp(m, var);
            if e == 0 {
                return None;
            }
            out.add_term(mono_with_exp(m, var, e - 1), c);
        }
        Some(out)
    }

    /// Exact quotient by `1 - x_var^2`, if it exists.
    pub fn div_one_minus_square(&self, var: usize) -> Option<Poly> {
        // Group by the power of x_var: P = sum_e c_e x^e and P = g (1 - x^2)
        // gives g_e = c_e + g_{e-2}; the top two g's must then vanish.
        let mut groups: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, &c) in &self.terms {
            let e = mono_exp(m, var);
            groups
                .entry(e)
                .or_default()
                .add_term(mono_with_exp(m, var, 0), c);
        }
        let top = groups.keys().next_back().copied().unwrap_or(0);
        let mut g: Vec<Poly> = Vec::with_capacity(top as usize + 1);
        for e in 0..=top {
            let mut ge = groups.remove(&e).unwrap_or_default();
            if e >= 2 {
                ge = &ge + &g[(e - 2) as usize];
            }
            g.push(ge);
        }
        // The quotient has degree top-2; g_{top-1} and g_top must be ~0.
        let scale = self.coeff_sum().max(1.0);
        for e in top.saturating_sub(1)..=top {
            if g[e as usize].coeff_sum() > 1e-12 * scale {
                return None;
            }
        }
        let mut out = Poly::zero();
        for (e, ge) in g.into_iter().enumerate().take(top.saturating_sub(1) as usize) {
            for (m, c) in ge.terms() {
                out.add_term(mono_with_exp(m, var, e as u32), c);
            }
        }
        Some(out)
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn prune(&self, tol: f64) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }
}

#[inline]
fn pow_u(x: f64, e: u32) -> f64 {
    match e {
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(mono_mul(a, b), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for &(v, e) in m {
                if e == 1 {
                    write!(f, "*x{v}")?;
                } else {
                    write!(f, "*x{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// A vector field `p: R^d -> R^d` given component-wise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyVector {
    pub comps: Vec<Poly>,
}

impl PolyVector {
    pub fn new(comps: Vec<Poly>) -> Self {
        PolyVector { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn degree(&self) -> u32 {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// Max over components of the absolute coefficient sum.
    pub fn coeff_sum(&self) -> f64 {
        self.comps.iter().map(Poly::coeff_sum).fold(0.0, f64::max)
    }

    pub fn num_terms(&self) -> usize {
        self.comps.iter().map(Poly::num_terms).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    pub fn flatten(&self) -> FlatPolyVector {
        FlatPolyVector::new(self)
    }
}

/// Contiguous-array form of a [`PolyVector`] for repeated evaluation.
#[derive(Clone, Debug)]
pub struct FlatPolyVector {
    comp_ranges: Vec<(u32, u32)>,
    coeffs: Vec<f64>,
    term_ranges: Vec<(u32, u32)>,
    factors: Vec<(u32, u32)>,
}

impl FlatPolyVector {
    pub fn new(pv: &PolyVector) -> Self {
        let mut comp_ranges = Vec::with_capacity(pv.dim());
        let mut coeffs = Vec::new();
        let mut term_ranges = Vec::new();
        let mut factors = Vec::new();
        for p in &pv.comps {
            let start = coeffs.len() as u32;
            for (m, c) in p.terms() {
                coeffs.push(c);
                let fs = factors.len() as u32;
                factors.extend(m.iter().map(|&(v, e)| (v as u32, e)));
                term_ranges.push((fs, factors.len() as u32));
            }
            comp_ranges.push((start, coeffs.len() as u32));
        }
        FlatPolyVector {
            comp_ranges,
            coeffs,
            term_ranges,
            factors,
        }
    }

    pub fn dim(&self) -> usize {
        self.comp_ranges.len()
    }

    #[inline]
    pub fn eval_component(&self, i: usize, x: &[f64]) -> f64 {
        let (a, b) = self.comp_ranges[i];
        let mut acc = 0.0;
        for t in a as usize..b as usize {
            let (fa, fb) = self.term_ranges[t];
            let mut prod = self.coeffs[t];
            for &(v, e) in &self.factors[fa as usize..fb as usize] {
                prod *= pow_u(x[v as usize], e);
            }
            acc += prod;
        }
        acc
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval_component(i, x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Poly {
        Poly::var(i)
    }

    #[test]
    fn arithmetic_collects_like_terms() {
        let p = &(&x(0) + &x(1)) * &(&x(0) - &x(1));
        // x0^2 - x1^2
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.eval(&[3.0, 2.0]), 5.0);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeff_sum(), 2.0);
    }

    #[test]
    fn partial_derivative() {
        let p = &x(0).pow(3) * &x(1).scale(2.0);
        let d = p.partial(0);
        assert_eq!(d.eval(&[2.0, 5.0]), 6.0 * 4.0 * 5.0);
        assert!(p.partial(2).is_zero());
    }

    #[test]
    fn divide_by_one_minus_square() {
        let g = &x(1).scale(3.0) + &(&x(0) * &x(2));
        let one_minus = &Poly::constant(1.0) - &x(0).pow(2);
        let p = &one_minus * &g;
        let q = p.div_one_minus_square(0).unwrap();
        for pt in [[0.3, 0.7, -1.1], [2.0, -1.0, 0.5]] {
            assert!((q.eval(&pt) - g.eval(&pt)).abs() < 1e-12);
        }
        assert!(x(0).div_one_minus_square(0).is_none());
        assert!((&x(0).pow(2) + &x(1)).div_one_minus_square(0).is_none());
    }

    #[test]
    fn divide_by_variable() {
        let p = &x(2) * &(&x(0) + &Poly::constant(4.0));
        let q = p.div_by_var(2).unwrap();
        assert_eq!(q.eval(&[1.0, 0.0, 9.0]), 5.0);
        assert!(x(0).div_by_var(2).is_none());
    }

    #[test]
    fn flat_matches_tree_evaluation() {
        let pv = PolyVector::new(vec![
            &(&x(0).pow(3) * &x(2)) - &Poly::constant(0.5),
            &x(1).scale(-2.0) + &x(0),
        ]);
        let flat = pv.flatten();
        let pt = [1.3, -0.2, 0.7];
        let mut out = [0.0; 2];
        flat.eval_into(&pt, &mut out);
        assert_eq!(out.to_vec(), pv.eval(&pt));
    }
}

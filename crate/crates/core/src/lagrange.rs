//! Multivariate Lagrange interpolation over finite integer grids, with the
//! Lipschitz (`A`) and magnitude (`B`) constants on a box `[-K, K]^d`.
//!
//! Two grid shapes are accepted. On a full product grid (the transition
//! table grid `Q x Sigma`) the basis polynomial of a node is the product,
//! per axis, over the *other coordinate values on that axis*. On a grid whose
//! points are pairwise distinct in every coordinate, the basis runs over the
//! other grid points directly. Both give `L_f = f` on the grid.
//!
//! Constants are computed in exact rational arithmetic and only converted to
//! `f64` at the edge, since `(M/delta)^(d(|G|-1))` leaves double range for
//! modest grids.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridShape {
    Product,
    Separated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpConstants {
    pub delta: BigRational,
    pub f_max: BigRational,
    pub m_box: BigRational,
    pub a: BigRational,
    pub b: BigRational,
}

impl InterpConstants {
    pub fn a_f64(&self) -> f64 {
        rational_to_f64(&self.a)
    }

    pub fn b_f64(&self) -> f64 {
        rational_to_f64(&self.b)
    }
}

/// Converts to `f64`, saturating to `inf` beyond double range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    match r.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            if r.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Lossless decimal rendering: exact `n/d` when short, otherwise scientific
/// notation computed from the integer parts.
pub fn rational_to_decimal(r: &BigRational) -> String {
    let v = rational_to_f64(r);
    if v.is_finite() {
        return format!("{v:.6e}");
    }
    let digits = (r.numer().abs() / r.denom()).to_string();
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{}.{}e{}", &digits[..1], &digits[1..7.min(digits.len())], digits.len() - 1)
}

#[derive(Clone, Debug)]
pub struct InterpPoly {
    dim: usize,
    shape: GridShape,
    points: Vec<Vec<i64>>,
    values: Vec<BigRational>,
    values_f64: Vec<f64>,
    /// Distinct sorted coordinates per axis (product grids).
    axes: Vec<Vec<i64>>,
    /// Product grids: index of each point's coordinate within its axis.
    axis_index: Vec<Vec<usize>>,
    radius: BigRational,
    constants: InterpConstants,
}

impl InterpPoly {
    /// Builds the interpolant of `values` (grid point -> value) for the box of
    /// radius `radius`.
    pub fn build(values: &BTreeMap<Vec<i64>, BigRational>, radius: &BigRational) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        if !radius.is_positive() {
            return Err(Error::Grid(format!("box radius must be positive, got {radius}")));
        }
        let dim = values.keys().next().map(Vec::len).unwrap_or(0);
        if dim == 0 || values.keys().any(|p| p.len() != dim) {
            return Err(Error::Grid("grid points must share a positive dimension".into()));
        }
        let points: Vec<Vec<i64>> = values.keys().cloned().collect();
        let vals: Vec<BigRational> = values.values().cloned().collect();

        let axes: Vec<Vec<i64>> = (0..dim)
            .map(|i| {
                points
                    .iter()
                    .map(|p| p[i])
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        let product_size: usize = axes.iter().map(Vec::len).product();
        let separated = axes.iter().all(|a| a.len() == points.len());
        let shape = if points.len() == 1 || separated {
            GridShape::Separated
        } else if product_size == points.len() {
            GridShape::Product
        } else {
            return Err(Error::Grid(
                "delta = 0: points share coordinates but do not form a product grid".into(),
            ));
        };

        // delta: smallest coordinate gap that appears in a basis denominator.
        let mut delta: Option<i64> = None;
        for axis in &axes {
            for w in axis.windows(2) {
                let gap = w[1] - w[0];
                delta = Some(delta.map_or(gap, |d| d.min(gap)));
            }
        }
        let delta = BigRational::from_integer(delta.unwrap_or(1).into());

        let axis_index = points
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, c)| axes[i].binary_search(c).expect("coordinate on axis"))
                    .collect()
            })
            .collect();

        let f_max = vals
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(BigRational::zero);
        let max_norm = points
            .iter()
            .flat_map(|p| p.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0);
        let m_box = radius + BigRational::from_integer(max_norm.into());
        let n = points.len();
        let g = BigRational::from_integer(BigInt::from(n));
        let expo = dim * (n - 1);
        let ratio = &m_box / &delta;
        let b = &g * &f_max * pow_rational(&ratio, expo);
        let a = if expo == 0 {
            BigRational::zero()
        } else {
            &g * &f_max * pow_rational(&ratio, expo - 1) * BigRational::from_integer(expo.into())
        };

        Ok(InterpPoly {
            dim,
            shape,
            values_f64: vals.iter().map(rational_to_f64).collect(),
            points,
            values: vals,
            axes,
            axis_index,
            radius: radius.clone(),
            constants: InterpConstants {
                delta,
                f_max,
                m_box,
                a,
                b,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn grid_size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn radius(&self) -> &BigRational {
        &self.radius
    }

    pub fn constants(&self) -> &InterpConstants {
        &self.constants
    }

    /// Basis weights `l_j(x)` of every grid node at `x`, so that
    /// `L_f(x) = sum_j f_j l_j(x)`. Grids sharing the same node set share
    /// weights, which lets callers evaluate several tables at once.
    pub fn basis_weights(&self, x: &[f64]) -> Vec<f64> {
        match self.shape {
            GridShape::Product => {
                let per_axis: Vec<Vec<f64>> = self
                    .axes
                    .iter()
                    .enumerate()
                    .map(|(i, axis)| lagrange_1d(axis, x[i]))
                    .collect();
                self.axis_index
                    .iter()
                    .map(|idx| idx.iter().enumerate().map(|(i, &j)| per_axis[i][j]).product())
                    .collect()
            }
            GridShape::Separated => (0..self.points.len())
                .map(|j| {
                    let pj = &self.points[j];
                    let mut w = 1.0;
                    for (l, pl) in self.points.iter().enumerate() {
                        if l == j {
                            continue;
                        }
                        for i in 0..self.dim {
                            w *= (x[i] - pl[i] as f64) / (pj[i] - pl[i]) as f64;
                        }
                    }
                    w
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.basis_weights(x)
            .iter()
            .zip(&self.values_f64)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn eval_with_weights(&self, weights: &[f64]) -> f64 {
        weights.iter().zip(&self.values_f64).map(|(w, v)| w * v).sum()
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        let mut total = BigRational::zero();
        for (j, pj) in self.points.iter().enumerate() {
            if self.values[j].is_zero() {
                continue;
            }
            let mut w = BigRational::one();
            for (axis, root) in self.basis_factors(j) {
                let num = &x[axis] - BigRational::from_integer(root.into());
                let den = BigRational::from_integer((pj[axis] - root).into());
                w = w * num / den;
            }
            total += &self.values[j] * w;
        }
        total
    }

    /// `(axis, root)` pairs whose normalised linear factors multiply to the
    /// basis polynomial of node `j`.
    fn basis_factors(&self, j: usize) -> Vec<(usize, i64)> {
        let pj = &self.points[j];
        match self.shape {
            GridShape::Product => self
                .axes
                .iter()
                .enumerate()
                .flat_map(|(i, axis)| {
                    axis.iter()
                        .filter(move |&&v| v != pj[i])
                        .map(move |&v| (i, v))
                })
                .collect(),
            GridShape::Separated => self
                .points
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != j)
                .flat_map(|(_, pl)| (0..self.dim).map(move |i| (i, pl[i])))
                .collect(),
        }
    }

    /// Product form `sum_j c_j prod (x_axis - root)`: one coefficient and
    /// its linear factors per grid point with a non-zero value.
    pub fn factor_terms(&self) -> Vec<(f64, Vec<(usize, i64)>)> {
        (0..self.points.len())
            .filter(|&j| !self.values[j].is_zero())
            .map(|j| {
                let factors = self.basis_factors(j);
                let den = factors
                    .iter()
                    .fold(BigRational::one(), |acc, &(axis, root)| {
                        acc * BigRational::from_integer((self.points[j][axis] - root).into())
                    });
                (rational_to_f64(&(&self.values[j] / den)), factors)
            })
            .collect()
    }

    /// Monomial expansion with axis `i` mapped to variable `vars[i]`.
    /// Coefficients are accumulated exactly and rounded once.
    pub fn to_poly(&self, vars: &[usize]) -> Poly {
        let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for j in 0..self.points.len() {
            if self.values[j].is_zero() {
                continue;
            }
            let pj = &self.points[j];
            let mut basis: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
            basis.insert(vec![0; self.dim], self.values[j].clone());
            for (axis, root) in self.basis_factors(j) {
                let den = BigRational::from_integer((pj[axis] - root).into());
                let shift = BigRational::from_integer(root.into()) / &den;
                let lead = den.recip();
                let mut next: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
                for (e, c) in basis {
                    let mut up = e.clone();
                    up[axis] += 1;
                    *next.entry(up).or_insert_with(BigRational::zero) += &c * &lead;
                    *next.entry(e).or_insert_with(BigRational::zero) -= &c * &shift;
                }
                basis = next;
            }
            for (e, c) in basis {
                *acc.entry(e).or_insert_with(BigRational::zero) += c;
            }
        }
        Poly::from_terms(acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| {
            let mono = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| (vars[i], p))
                .collect();
            (rational_to_f64(&c), mono)
        }))
    }
}

fn pow_rational(r: &BigRational, n: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..n {
        out *= r;
    }
    out
}

/// Values of the 1-D Lagrange basis of `nodes` at `x`.
fn lagrange_1d(nodes: &[i64], x: f64) -> Vec<f64> {
    nodes
        .iter()
        .map(|&a| {
            nodes
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (x - b as f64) / (a - b) as f64)
                .product()
        })
        .collect()
}

/// Builds from a `(q, s) -> value` table.
pub fn build_interp(values: &BTreeMap<(i64, i64), f64>, radius: f64) -> Result<InterpPoly> {
    let exact = values
        .iter()
        .map(|(&(q, s), &v)| {
            BigRational::from_float(v)
                .map(|r| (vec![q, s], r))
                .ok_or_else(|| Error::Grid(format!("non-finite value at ({q}, {s})")))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let radius = BigRational::from_float(radius)
        .ok_or_else(|| Error::Grid(format!("non-finite radius {radius}")))?;
    InterpPoly::build(&exact, &radius)
}

/// Samples pairs in `[-K, K]^d` and returns the largest observed
/// `|L(x) - L(z)| / ||x - z||_inf`. Half the pairs are uniform, half are
/// close pairs probing the local slope.
pub fn lipschitz_check<R: Rng>(p: &InterpPoly, trials: usize, radius: f64, rng: &mut R) -> f64 {
    let d = p.dim();
    let mut worst = 0.0f64;
    for t in 0..trials {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
        let z: Vec<f64> = if t % 2 == 0 {
            (0..d).map(|_| rng.gen_range(-radius..=radius)).collect()
        } else {
            let h = 1e-4 * radius;
            x.iter()
                .map(|&xi| (xi + rng.gen_range(-h..=h)).clamp(-radius, radius))
                .collect()
        };
        let dist = x.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist == 0.0 {
            continue;
        }
        let ratio = (p.eval(&x) - p.eval(&z)).abs() / dist;
        worst = worst.max(ratio);
    }
    worst
}

/// Largest `|L(x)|` over uniform samples of `[-K, K]^d`, corners included.
pub fn magnitude_check<R: Rng>(p: &InterpPoly, trials: usize, radius: f64, rng: &mut R) -> f64 {
    let d = p.dim();
    let mut worst = 0.0f64;
    for corner in 0..(1usize << d) {
        let x: Vec<f64> = (0..d)
            .map(|i| if corner >> i & 1 == 1 { radius } else { -radius })
            .collect();
        worst = worst.max(p.eval(&x).abs());
    }
    for _ in 0..trials {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
        worst = worst.max(p.eval(&x).abs());
    }
    worst
}

/// `(|prod x_i - prod y_i|, K^(n-1) sum |x_i - y_i|)` for vectors bounded by
/// `K` in sup-norm.
pub fn product_difference(x: &[f64], y: &[f64], radius: f64) -> (f64, f64) {
    let px: f64 = x.iter().product();
    let py: f64 = y.iter().product();
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    ((px - py).abs(), radius.powi(x.len() as i32 - 1) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table<F: Fn(i64, i64) -> f64>(m: i64, syms: i64, f: F) -> BTreeMap<(i64, i64), f64> {
        let mut t = BTreeMap::new();
        for q in 0..m {
            for s in 0..syms {
                t.insert((q, s), f(q, s));
            }
        }
        t
    }

    #[test]
    fn constant_table_is_constant() {
        let p = build_interp(&table(3, 2, |_, _| 2.5), 4.0).unwrap();
        for x in [[0.0, 0.0], [2.0, 1.0], [-3.3, 0.7]] {
            assert!((p.eval(&x) - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn integer_product_grid_has_unit_delta() {
        let p = build_interp(&table(4, 3, |q, s| (q * s) as f64), 5.0).unwrap();
        assert_eq!(p.shape(), GridShape::Product);
        assert_eq!(p.constants().delta, BigRational::one());
    }

    #[test]
    fn exact_on_grid() {
        let f = |q: i64, s: i64| ((q * 7 + s * 3) % 5) as f64 - 1.5;
        let p = build_interp(&table(4, 3, f), 5.0).unwrap();
        for q in 0..4 {
            for s in 0..3 {
                assert!((p.eval(&[q as f64, s as f64]) - f(q, s)).abs() < 1e-9);
                let exact = p.eval_exact(&[
                    BigRational::from_integer(q.into()),
                    BigRational::from_integer(s.into()),
                ]);
                assert_eq!(exact, BigRational::from_float(f(q, s)).unwrap());
            }
        }
    }

    #[test]
    fn affine_table_interpolates_affinely() {
        let p = build_interp(&table(3, 3, |q, s| (q + s) as f64), 4.0).unwrap();
        assert!((p.eval(&[0.5, 1.5]) - 2.0).abs() < 1e-12);
        assert!((p.eval(&[1.5, 1.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn separated_grid_interpolates() {
        let mut v = BTreeMap::new();
        v.insert(vec![0, 0], BigRational::from_integer(1.into()));
        v.insert(vec![1, 2], BigRational::from_integer(3.into()));
        v.insert(vec![2, 5], BigRational::from_integer((-2).into()));
        let p = InterpPoly::build(&v, &BigRational::from_integer(3.into())).unwrap();
        assert_eq!(p.shape(), GridShape::Separated);
        assert!((p.eval(&[1.0, 2.0]) - 3.0).abs() < 1e-12);
        assert!((p.eval(&[2.0, 5.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn shared_coordinates_without_product_structure_are_rejected() {
        let mut v = BTreeMap::new();
        v.insert(vec![0, 0], BigRational::one());
        v.insert(vec![0, 1], BigRational::one());
        v.insert(vec![1, 0], BigRational::one());
        assert!(matches!(
            InterpPoly::build(&v, &BigRational::one()),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn expansion_matches_product_formula() {
        let p = build_interp(&table(4, 3, |q, s| ((q * 5 + s) % 3) as f64), 5.0).unwrap();
        let poly = p.to_poly(&[0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let a = p.eval(&x);
            assert!((poly.eval(&x) - a).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn two_by_two_lipschitz_ratio_stays_below_a() {
        let p = build_interp(&table(2, 2, |q, s| (q ^ s) as f64), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ratio = lipschitz_check(&p, 10_000, 1.0, &mut rng);
        assert!(ratio > 0.0);
        assert!(ratio <= p.constants().a_f64(), "{ratio} > A");
        assert!(magnitude_check(&p, 10_000, 1.0, &mut rng) <= p.constants().b_f64());
    }

    #[test]
    fn product_difference_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..6);
            let k = rng.gen_range(0.1..3.0);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-k..=k)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-k..=k)).collect();
            let (lhs, rhs) = product_difference(&x, &y, k);
            assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
        }
    }
}

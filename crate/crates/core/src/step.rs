//! The real-valued step map of a machine on rational configurations, and its
//! analytic, error-tolerant counterpart.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::helpers::sigma_p;
use crate::lagrange::{rational_to_decimal, rational_to_f64, InterpPoly};
use crate::tm::{rational_floor, rational_is_integer, tape_range_max, RationalConfig, TuringMachine};

/// A point of R^4 in configuration order `(x, s, y, q)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RealConfig4 {
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub q: f64,
}

impl RealConfig4 {
    pub fn new(x: f64, s: f64, y: f64, q: f64) -> Self {
        RealConfig4 { x, s, y, q }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        RealConfig4::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.s, self.y, self.q]
    }

    pub fn sup_norm(self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(self, other: RealConfig4) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<&RationalConfig> for RealConfig4 {
    fn from(rc: &RationalConfig) -> Self {
        RealConfig4::from_array(rc.to_f64())
    }
}

/// Lipschitz and magnitude constants of the transition interpolants, and the
/// combined constants of the robust step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepConstants {
    pub a1: BigRational,
    pub a2: BigRational,
    pub a3: BigRational,
    pub b1: BigRational,
    pub b2: BigRational,
    pub b3: BigRational,
    pub k1: BigRational,
    pub k2: BigRational,
    pub k3: BigRational,
}

impl StepConstants {
    fn assemble(k: usize, interps: [&InterpPoly; 3]) -> Self {
        let [l1, l2, l3] = interps.map(|p| p.constants().clone());
        let kr = BigRational::from_integer(BigInt::from(k));
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());

        let c13 = &kr + (&one + &two * &l3.a) * (&one + &l2.a / &kr);
        let c2 = &two * &l3.a * &kr + &one;
        let k1 = [c13, c2, l1.a.clone()].into_iter().max().expect("non-empty");
        let k2 = &l1.b + (&one + &l3.b) * (&two * &kr + &one + &l2.b / &kr);
        let k3 = BigRational::from_integer(4.into()) * &k1;
        StepConstants {
            a1: l1.a,
            a2: l2.a,
            a3: l3.a,
            b1: l1.b,
            b2: l2.b,
            b3: l3.b,
            k1,
            k2,
            k3,
        }
    }

    pub fn k1_f64(&self) -> f64 {
        rational_to_f64(&self.k1)
    }

    pub fn k2_f64(&self) -> f64 {
        rational_to_f64(&self.k2)
    }

    pub fn k3_f64(&self) -> f64 {
        rational_to_f64(&self.k3)
    }

    pub fn a3_f64(&self) -> f64 {
        rational_to_f64(&self.a3)
    }

    /// `(name, exact value)` in display order.
    pub fn named(&self) -> [(&'static str, &BigRational); 9] {
        [
            ("A1", &self.a1),
            ("A2", &self.a2),
            ("A3", &self.a3),
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("B3", &self.b3),
            ("K1", &self.k1),
            ("K2", &self.k2),
            ("K3", &self.k3),
        ]
    }

    /// Fails with the exact value of the first constant outside `f64` range.
    pub fn check_finite(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !rational_to_f64(v).is_finite() {
                return Err(Error::Overflow {
                    name: name.to_string(),
                    exact: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for StepConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in self.named() {
            writeln!(f, "{name:>3} = {}", rational_to_decimal(v))?;
        }
        Ok(())
    }
}

/// The step map of one machine: three Lagrange interpolants of the next
/// state, written symbol and direction over `Q x Sigma`.
#[derive(Clone, Debug)]
pub struct StepMap {
    machine: TuringMachine,
    next: InterpPoly,
    write: InterpPoly,
    dir: InterpPoly,
}

impl StepMap {
    /// Box radius `max(m, k) + 1`.
    pub fn new(machine: &TuringMachine) -> Result<Self> {
        let radius = (machine.m().max(machine.k()) + 1) as i64;
        Self::with_radius(machine, &BigRational::from_integer(radius.into()))
    }

    pub fn with_radius(machine: &TuringMachine, radius: &BigRational) -> Result<Self> {
        let mut next = std::collections::BTreeMap::new();
        let mut write = std::collections::BTreeMap::new();
        let mut dir = std::collections::BTreeMap::new();
        for q in 0..machine.m() {
            for s in 0..machine.symbols() as u32 {
                let t = machine.transition(q, s);
                let key = vec![q as i64, s as i64];
                next.insert(key.clone(), BigRational::from_integer(t.next.into()));
                write.insert(key.clone(), BigRational::from_integer(t.write.into()));
                dir.insert(key, BigRational::from_integer(t.dir.as_digit().into()));
            }
        }
        Ok(StepMap {
            machine: machine.clone(),
            next: InterpPoly::build(&next, radius)?,
            write: InterpPoly::build(&write, radius)?,
            dir: InterpPoly::build(&dir, radius)?,
        })
    }

    pub fn machine(&self) -> &TuringMachine {
        &self.machine
    }

    pub fn k(&self) -> usize {
        self.machine.k()
    }

    /// Interpolant of the next-state table.
    pub fn next_interp(&self) -> &InterpPoly {
        &self.next
    }

    /// Interpolant of the written-symbol table.
    pub fn write_interp(&self) -> &InterpPoly {
        &self.write
    }

    /// Interpolant of the direction table (`L = 0`, `R = 1`).
    pub fn dir_interp(&self) -> &InterpPoly {
        &self.dir
    }

    pub fn constants(&self) -> StepConstants {
        StepConstants::assemble(self.k(), [&self.next, &self.write, &self.dir])
    }

    /// `(1 - L_dir(q, s)) a + L_dir(q, s) b`.
    pub fn choose(&self, a: f64, b: f64, q: f64, s: f64) -> f64 {
        let l = self.dir.eval(&[q, s]);
        (1.0 - l) * a + l * b
    }

    /// Smoothed integer part: `sigma_k(x + 1/(2k), tau, lambda)`.
    pub fn int_bar(&self, x: f64, tau: f64, lambda: f64) -> f64 {
        let k = self.k() as f64;
        sigma_p(self.k() as u32, x + 1.0 / (2.0 * k), tau, lambda)
    }

    /// The exact map on a valid rational configuration.
    pub fn exact(&self, rc: &RationalConfig) -> Result<RationalConfig> {
        let k = self.k();
        if rc.q >= self.machine.m() || rc.s as usize >= self.machine.symbols() {
            return Err(Error::InvalidConfig(format!("(q, s) = ({}, {}) is off the grid", rc.q, rc.s)));
        }
        let hi = tape_range_max(k);
        for (name, v) in [("x", &rc.x), ("y", &rc.y)] {
            if v.is_negative() || v > &hi {
                return Err(Error::InvalidConfig(format!("{name} = {v} outside [0, (k-1)/k]")));
            }
        }
        let kr = BigRational::from_integer(BigInt::from(k));
        let point = [
            BigRational::from_integer(rc.q.into()),
            BigRational::from_integer(rc.s.into()),
        ];
        let l1 = self.next.eval_exact(&point);
        let l2 = self.write.eval_exact(&point);
        let l3 = self.dir.eval_exact(&point);
        let choose = |a: BigRational, b: BigRational| (BigRational::one() - &l3) * a + &l3 * b;

        let kx = &kr * &rc.x;
        let ky = &kr * &rc.y;
        let int_kx = BigRational::from_integer(rational_floor(&kx));
        let int_ky = BigRational::from_integer(rational_floor(&ky));
        let frac_kx = &kx - &int_kx;
        let frac_ky = &ky - &int_ky;

        let x = choose(frac_kx, (&rc.x + &l2) / &kr);
        let s = choose(int_kx, int_ky);
        let y = choose((&rc.y + &l2) / &kr, frac_ky);
        let q = l1;
        let as_index = |v: &BigRational, what: &str| -> Result<u64> {
            if !rational_is_integer(v) || v.is_negative() {
                return Err(Error::InvalidConfig(format!("{what} component {v} is not a natural")));
            }
            num_traits::ToPrimitive::to_u64(v.numer())
                .ok_or_else(|| Error::InvalidConfig(format!("{what} component {v} too large")))
        };
        Ok(RationalConfig {
            x,
            s: as_index(&s, "symbol")? as u32,
            y,
            q: as_index(&q, "state")? as usize,
        })
    }

    /// Robust map with tanh sharpness `tau` and slope `lambda`. Total on R^4.
    pub fn robust(&self, c: &RealConfig4, tau: f64, lambda: f64) -> RealConfig4 {
        let k = self.k() as f64;
        let w = self.next.basis_weights(&[c.q, c.s]);
        let l1 = self.next.eval_with_weights(&w);
        let l2 = self.write.eval_with_weights(&w);
        let l3 = self.dir.eval_with_weights(&w);
        let choose = |a: f64, b: f64| (1.0 - l3) * a + l3 * b;

        let kx = k * c.x;
        let ky = k * c.y;
        let int_kx = self.int_bar(kx, tau, lambda);
        let int_ky = self.int_bar(ky, tau, lambda);
        RealConfig4 {
            x: choose(kx - int_kx, (c.x + l2) / k),
            s: choose(int_kx, int_ky),
            y: choose((c.y + l2) / k, ky - int_ky),
            q: l1,
        }
    }

    /// Per-component error envelopes `[x, s, y, q]` for an input whose tape
    /// part is `d_xy` and control part `d_qs` away from a valid configuration.
    pub fn component_bounds(&self, tau: f64, d_xy: f64, d_qs: f64) -> [f64; 4] {
        let c = self.constants();
        let k = self.k() as f64;
        let a1 = rational_to_f64(&c.a1);
        let a2 = rational_to_f64(&c.a2);
        let a3 = rational_to_f64(&c.a3);
        let e = (-tau).exp();
        let tape = k * d_xy + (1.0 + 2.0 * a3) * (e + a2 / k * d_qs);
        [tape, 2.0 * a3 * k * d_qs + e, tape, a1 * d_qs]
    }

    /// Radius of the tape perturbation the robust map is proved to absorb,
    /// `1/(2k^2) - 1/(k lambda)`.
    pub fn tape_radius(&self, lambda: f64) -> f64 {
        let k = self.k() as f64;
        1.0 / (2.0 * k * k) - 1.0 / (k * lambda)
    }
}

/// Constants of the machine's robust step, failing if any leaves `f64`.
pub fn machine_constants(machine: &TuringMachine) -> Result<StepConstants> {
    let c = StepMap::new(machine)?.constants();
    c.check_finite()?;
    Ok(c)
}

/// `K1 (e^-tau + dist)`.
pub fn robust_bound(constants: &StepConstants, tau: f64, dist: f64) -> f64 {
    constants.k1_f64() * ((-tau).exp() + dist)
}

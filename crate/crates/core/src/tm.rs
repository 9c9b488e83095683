//! Deterministic single-tape Turing machines, the reference interpreter and
//! the rational configuration codec.
//!
//! States are `0..m`, tape symbols are `0..=k-2` with `0` the blank. The
//! digit `k-1` is never written: it is the gap that keeps encoded tapes away
//! from the integer boundaries of the base-`k` expansion.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Direction {
    /// `L = 0`, `R = 1`.
    pub fn as_digit(self) -> u32 {
        match self {
            Direction::Left => 0,
            Direction::Right => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub next: usize,
    pub write: u32,
    pub dir: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringMachine {
    name: Option<String>,
    m: usize,
    k: usize,
    q0: usize,
    halting: BTreeSet<usize>,
    table: Vec<Transition>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaEntry {
    pub q: usize,
    pub s: u32,
    pub q2: usize,
    pub s2: u32,
    pub dir: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapeDoc {
    #[serde(default)]
    pub left: Vec<u32>,
    pub head: u32,
    #[serde(default)]
    pub right: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
}

/// On-disk JSON form of a machine, optionally carrying an initial tape.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub m: usize,
    pub k: usize,
    pub q0: usize,
    #[serde(default)]
    pub halting: Vec<usize>,
    pub delta: Vec<DeltaEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tape: Option<TapeDoc>,
}

pub(crate) fn syntax_error(err: serde_json::Error) -> Error {
    Error::Syntax {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses and validates a machine document.
pub fn parse_machine(text: &str) -> Result<TuringMachine> {
    parse_machine_with_tape(text).map(|(m, _)| m)
}

/// Like [`parse_machine`], also returning the document's initial tape if present.
pub fn parse_machine_with_tape(text: &str) -> Result<(TuringMachine, Option<Configuration>)> {
    let doc: MachineDoc = serde_json::from_str(text).map_err(syntax_error)?;
    let tape = doc.tape.clone();
    let machine = TuringMachine::from_doc(doc)?;
    let config = tape.map(|t| machine.config_from_tape(&t)).transpose()?;
    Ok((machine, config))
}

/// Parses a standalone `{left, head, right}` tape document.
pub fn parse_tape(text: &str, machine: &TuringMachine) -> Result<Configuration> {
    let doc: TapeDoc = serde_json::from_str(text).map_err(syntax_error)?;
    machine.config_from_tape(&doc)
}

impl TuringMachine {
    pub fn from_doc(doc: MachineDoc) -> Result<Self> {
        let MachineDoc {
            name,
            m,
            k,
            q0,
            halting,
            delta,
            ..
        } = doc;
        if m < 1 {
            return Err(Error::InvalidMachine("m >= 1 required".into()));
        }
        if k < 2 {
            return Err(Error::InvalidMachine(format!("k >= 2 required, got k = {k}")));
        }
        if q0 >= m {
            return Err(Error::InvalidMachine(format!("q0 = {q0} is not a state of 0..{m}")));
        }
        let symbols = k - 1;
        let mut table: Vec<Option<Transition>> = vec![None; m * symbols];
        for e in &delta {
            if e.q >= m || e.q2 >= m {
                return Err(Error::InvalidMachine(format!(
                    "delta entry ({}, {}) references a state outside 0..{m}",
                    e.q, e.s
                )));
            }
            if e.s as usize >= symbols || e.s2 as usize >= symbols {
                return Err(Error::InvalidMachine(format!(
                    "delta entry ({}, {}) uses a symbol outside 0..={}",
                    e.q,
                    e.s,
                    symbols - 1
                )));
            }
            let slot = &mut table[e.q * symbols + e.s as usize];
            if slot.is_some() {
                return Err(Error::InvalidMachine(format!(
                    "delta has duplicate entry for ({}, {})",
                    e.q, e.s
                )));
            }
            *slot = Some(Transition {
                next: e.q2,
                write: e.s2,
                dir: e.dir,
            });
        }
        let mut full = Vec::with_capacity(table.len());
        for (i, t) in table.into_iter().enumerate() {
            match t {
                Some(t) => full.push(t),
                None => {
                    return Err(Error::InvalidMachine(format!(
                        "delta not total: missing entry for ({}, {})",
                        i / symbols,
                        i % symbols
                    )))
                }
            }
        }
        let mut halt = BTreeSet::new();
        for h in halting {
            if h >= m {
                return Err(Error::InvalidMachine(format!("halting state {h} outside 0..{m}")));
            }
            halt.insert(h);
        }
        for &h in &halt {
            for s in 0..symbols {
                let t = full[h * symbols + s];
                if t.next != h || t.write as usize != s {
                    return Err(Error::InvalidMachine(format!(
                        "halting state {h} does not loop: delta({h}, {s}) = ({}, {}, {:?})",
                        t.next, t.write, t.dir
                    )));
                }
            }
        }
        Ok(TuringMachine {
            name,
            m,
            k,
            q0,
            halting: halt,
            table: full,
        })
    }

    pub fn to_doc(&self) -> MachineDoc {
        let mut delta = Vec::with_capacity(self.table.len());
        for q in 0..self.m {
            for s in 0..self.symbols() as u32 {
                let t = self.transition(q, s);
                delta.push(DeltaEntry {
                    q,
                    s,
                    q2: t.next,
                    s2: t.write,
                    dir: t.dir,
                });
            }
        }
        MachineDoc {
            name: self.name.clone(),
            m: self.m,
            k: self.k,
            q0: self.q0,
            halting: self.halting.iter().copied().collect(),
            delta,
            tape: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("machine document serializes")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Number of states.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Encoding base; the alphabet is `0..=k-2`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Alphabet size, `k - 1`.
    pub fn symbols(&self) -> usize {
        self.k - 1
    }

    pub fn q0(&self) -> usize {
        self.q0
    }

    pub fn halting(&self) -> &BTreeSet<usize> {
        &self.halting
    }

    pub fn is_halting(&self, q: usize) -> bool {
        self.halting.contains(&q)
    }

    pub fn transition(&self, q: usize, s: u32) -> Transition {
        self.table[q * self.symbols() + s as usize]
    }

    pub fn config_from_tape(&self, tape: &TapeDoc) -> Result<Configuration> {
        let c = Configuration::new(
            tape.left.clone(),
            tape.head,
            tape.right.clone(),
            tape.state.unwrap_or(self.q0),
        );
        c.validate(self)?;
        Ok(c)
    }

    pub fn blank_config(&self) -> Configuration {
        Configuration::new(Vec::new(), 0, Vec::new(), self.q0)
    }
}

/// A machine configuration. `left[0]` and `right[0]` are the cells adjacent
/// to the head; trailing blanks are trimmed so equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    left: Vec<u32>,
    head: u32,
    right: Vec<u32>,
    state: usize,
}

fn trim_blanks(tape: &mut Vec<u32>) {
    while tape.last() == Some(&0) {
        tape.pop();
    }
}

impl Configuration {
    pub fn new(mut left: Vec<u32>, head: u32, mut right: Vec<u32>, state: usize) -> Self {
        trim_blanks(&mut left);
        trim_blanks(&mut right);
        Configuration {
            left,
            head,
            right,
            state,
        }
    }

    pub fn left(&self) -> &[u32] {
        &self.left
    }

    pub fn head(&self) -> u32 {
        self.head
    }

    pub fn right(&self) -> &[u32] {
        &self.right
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn validate(&self, machine: &TuringMachine) -> Result<()> {
        let max = machine.symbols() as u32 - 1;
        for &d in self.left.iter().chain(std::iter::once(&self.head)).chain(&self.right) {
            if d > max {
                return Err(Error::DigitOutOfRange { digit: d, max });
            }
        }
        if self.state >= machine.m() {
            return Err(Error::InvalidConfig(format!(
                "state {} outside 0..{}",
                self.state,
                machine.m()
            )));
        }
        Ok(())
    }

    pub fn to_tape_doc(&self) -> TapeDoc {
        TapeDoc {
            left: self.left.clone(),
            head: self.head,
            right: self.right.clone(),
            state: Some(self.state),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{} ", self.state)?;
        for d in self.left.iter().rev() {
            write!(f, "{d}")?;
        }
        write!(f, "[{}]", self.head)?;
        for d in &self.right {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// The rational encoding `(0.x, s, 0.y, q)` of a configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalConfig {
    pub x: BigRational,
    pub s: u32,
    pub y: BigRational,
    pub q: usize,
}

impl RationalConfig {
    /// Component order `(x, s, y, q)`.
    pub fn to_f64(&self) -> [f64; 4] {
        [
            self.x.to_f64().unwrap_or(f64::NAN),
            self.s as f64,
            self.y.to_f64().unwrap_or(f64::NAN),
            self.q as f64,
        ]
    }

    /// Exact sup-norm distance to a real point, rounded to f64 at the end.
    pub fn distance_to(&self, point: &[f64; 4]) -> f64 {
        let exact = [
            self.x.clone(),
            BigRational::from_integer(self.s.into()),
            self.y.clone(),
            BigRational::from_integer(self.q.into()),
        ];
        exact
            .iter()
            .zip(point)
            .map(|(e, &p)| match BigRational::from_float(p) {
                Some(p) => (p - e).abs().to_f64().unwrap_or(f64::INFINITY),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for RationalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x, self.s, self.y, self.q)
    }
}

/// `0.d = d_0 k^-1 + d_1 k^-2 + ...`
pub fn encode_tape(digits: &[u32], k: usize) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(k));
    digits.iter().rev().fold(BigRational::zero(), |acc, &d| {
        (acc + BigRational::from_integer(d.into())) / &base
    })
}

/// Inverse of [`encode_tape`] by repeated multiply-by-`k`.
pub fn decode_tape(value: &BigRational, k: usize, max_digits: usize) -> Result<Vec<u32>> {
    if value.is_negative() {
        return Err(Error::InvalidConfig(format!("negative tape value {value}")));
    }
    let base = BigInt::from(k);
    let mut r = value.clone();
    let mut digits = Vec::new();
    while !r.is_zero() {
        if digits.len() == max_digits {
            return Err(Error::NonTerminating(max_digits));
        }
        r *= &base;
        let d = r.to_integer();
        let d = d
            .to_u32()
            .ok_or_else(|| Error::InvalidConfig(format!("tape value {value} is not below 1")))?;
        if d as usize >= k - 1 {
            return Err(Error::ReservedDigit(d));
        }
        r -= BigRational::from_integer(d.into());
        digits.push(d);
    }
    Ok(digits)
}

pub fn encode(c: &Configuration, machine: &TuringMachine) -> Result<RationalConfig> {
    c.validate(machine)?;
    Ok(RationalConfig {
        x: encode_tape(&c.left, machine.k()),
        s: c.head,
        y: encode_tape(&c.right, machine.k()),
        q: c.state,
    })
}

pub fn decode(rc: &RationalConfig, machine: &TuringMachine, max_digits: usize) -> Result<Configuration> {
    let left = decode_tape(&rc.x, machine.k(), max_digits)?;
    let right = decode_tape(&rc.y, machine.k(), max_digits)?;
    let c = Configuration::new(left, rc.s, right, rc.q);
    c.validate(machine)?;
    Ok(c)
}

/// One transition of the machine.
pub fn step_exact(c: &Configuration, machine: &TuringMachine) -> Configuration {
    let t = machine.transition(c.state, c.head);
    let mut left = c.left.clone();
    let mut right = c.right.clone();
    let head = match t.dir {
        Direction::Left => {
            right.insert(0, t.write);
            if left.is_empty() {
                0
            } else {
                left.remove(0)
            }
        }
        Direction::Right => {
            left.insert(0, t.write);
            if right.is_empty() {
                0
            } else {
                right.remove(0)
            }
        }
    };
    Configuration::new(left, head, right, t.next)
}

/// `c_0, ..., c_n` with `c_{i+1} = step_exact(c_i)`.
pub fn run(machine: &TuringMachine, c0: &Configuration, n: usize) -> Vec<Configuration> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(c0.clone());
    for i in 0..n {
        let next = step_exact(&out[i], machine);
        out.push(next);
    }
    out
}

/// Index of the first configuration in a halting state.
pub fn halted_at(trace: &[Configuration], machine: &TuringMachine) -> Option<usize> {
    trace.iter().position(|c| machine.is_halting(c.state))
}

/// Upper end of the reachable tape range, `(k-1)/k`.
pub fn tape_range_max(k: usize) -> BigRational {
    BigRational::new(BigInt::from(k - 1), BigInt::from(k))
}

pub(crate) fn rational_is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

pub(crate) fn rational_floor(r: &BigRational) -> BigInt {
    r.numer().div_floor(r.denom())
}

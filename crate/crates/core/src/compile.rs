//! Compilation of the robust step map and of the whole two-phase iteration
//! into a single autonomous polynomial system, plus its JSON interchange
//! document.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pivp::{PivpSystem, SpaceBound};
use crate::poly::{Monomial, Poly, PolyVector};
use crate::simulate::IterateParams;
use crate::step::{RealConfig4, StepMap};
use crate::tm::TuringMachine;

/// Input slots of the compiled step, in [`RealConfig4`] order.
pub const X: usize = 0;
pub const S: usize = 1;
pub const Y: usize = 2;
pub const Q: usize = 3;

/// The robust step as polynomials over `(x, s, y, q)`, shifted copies
/// `q - r` and `s - r` of the control inputs, and `2k` tanh auxiliaries
/// `v_j = tanh(w_j)`, the first `k` for `int(kx)` and the rest for `int(ky)`.
///
/// The Lagrange parts are kept in product form over the shifted copies, so
/// each grid point contributes a single monomial and no large coefficients
/// cancel.
#[derive(Clone, Debug)]
pub struct CompiledStep {
    k: usize,
    /// `(input, root)` for each shifted copy `input - root`.
    pub shifts: Vec<(usize, i64)>,
    /// Affine tanh arguments `w_j` over the four inputs.
    pub args: Vec<Poly>,
    /// Four outputs over inputs, shifts and auxiliaries, in that order.
    pub outputs: PolyVector,
}

impl CompiledStep {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of tanh auxiliaries.
    pub fn num_aux(&self) -> usize {
        self.args.len()
    }

    pub fn num_shifts(&self) -> usize {
        self.shifts.len()
    }

    /// Total variable count.
    pub fn num_vars(&self) -> usize {
        4 + self.shifts.len() + self.args.len()
    }

    /// Values of every variable for an input point.
    pub fn lift(&self, input: &[f64; 4]) -> Vec<f64> {
        let mut vars = input.to_vec();
        vars.extend(self.shifts.iter().map(|&(i, r)| input[i] - r as f64));
        vars.extend(self.args.iter().map(|w| w.eval(input).tanh()));
        vars
    }

    pub fn eval(&self, c: &RealConfig4) -> RealConfig4 {
        let vars = self.lift(&c.to_array());
        RealConfig4::from_array([0, 1, 2, 3].map(|i| self.outputs.comps[i].eval(&vars)))
    }
}

/// `step` with sharpness `tau` and slope `sigma_lambda`, written as
/// Lagrange polynomials and one tanh auxiliary per shifted step of each
/// smoothed integer part.
pub fn compile_step_robust(machine: &TuringMachine, tau: f64, sigma_lambda: f64) -> Result<CompiledStep> {
    let map = StepMap::new(machine)?;
    map.constants().check_finite()?;
    let k = machine.k();
    let kf = k as f64;
    let axes = [Q, S];
    let interps = [map.next_interp(), map.write_interp(), map.dir_interp()];
    let terms: Vec<_> = interps.iter().map(|p| p.factor_terms()).collect();
    let shifts: Vec<(usize, i64)> = terms
        .iter()
        .flatten()
        .flat_map(|(_, f)| f.iter().map(|&(axis, root)| (axes[axis], root)))
        .filter(|&(_, root)| root != 0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let var_of = |axis: usize, root: i64| -> usize {
        let input = axes[axis];
        if root == 0 {
            input
        } else {
            4 + shifts.binary_search(&(input, root)).expect("shift registered")
        }
    };
    let lagrange: Vec<Poly> = terms
        .iter()
        .map(|ts| {
            Poly::from_terms(ts.iter().map(|(c, factors)| {
                let mut mono: Vec<(usize, u32)> = Vec::new();
                for &(axis, root) in factors {
                    let v = var_of(axis, root);
                    match mono.iter_mut().find(|(w, _)| *w == v) {
                        Some(e) => e.1 += 1,
                        None => mono.push((v, 1)),
                    }
                }
                (*c, mono)
            }))
        })
        .collect();

    let aux0 = 4 + shifts.len();
    let c = (tau + kf.ln()) * sigma_lambda;
    let mut args = Vec::with_capacity(2 * k);
    for input in [X, Y] {
        for j in 0..k {
            let shift = 1.0 / (2.0 * kf) - j as f64 - 1.0;
            args.push(Poly::var(input).scale(c * kf) + Poly::constant(c * shift));
        }
    }
    let aux_sum = |first: usize| -> Poly {
        let mut p = Poly::constant(kf / 2.0);
        for j in 0..k {
            p = p + Poly::var(aux0 + first + j).scale(0.5);
        }
        p
    };
    let int_x = aux_sum(0);
    let int_y = aux_sum(k);
    let [l1, l2, l3]: [Poly; 3] = lagrange.try_into().expect("three interpolants");
    let one_minus = Poly::constant(1.0) - &l3;
    let choose = |a: Poly, b: Poly| &(&one_minus * &a) + &(&l3 * &b);
    let inv_k = 1.0 / kf;
    let outputs = PolyVector::new(vec![
        choose(
            Poly::var(X).scale(kf) - &int_x,
            (Poly::var(X) + &l2).scale(inv_k),
        ),
        choose(int_x.clone(), int_y.clone()),
        choose(
            (Poly::var(Y) + &l2).scale(inv_k),
            Poly::var(Y).scale(kf) - &int_y,
        ),
        l1,
    ]);
    Ok(CompiledStep {
        k,
        shifts,
        args,
        outputs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    /// Plain state variable.
    State,
    /// Positive variable of the form `exp(...)`; integrable in log chart.
    ExpGate,
    /// Variable of the form `tanh(...)`; integrable in atanh chart.
    TanhAux,
}

/// The iteration system as one polynomial IVP.
#[derive(Clone, Debug)]
pub struct CompiledIterate {
    pub system: PivpSystem,
    pub kinds: Vec<VarKind>,
    /// Initial values in the integration chart: `ln` of gates and the tanh
    /// arguments of auxiliaries, which `f64` cannot recover from the
    /// saturated values.
    pub chart_y0: Vec<f64>,
    pub u: [usize; 4],
    pub z: [usize; 4],
    pub params: IterateParams,
    pub machine: Option<String>,
}

/// Layout: `t, S, C, Theta1, Theta2, z(4), u(4)`, shifted copies of `u_q`
/// and `u_s`, then the tanh auxiliaries.
pub fn compile_iterate(machine: &TuringMachine, params: &IterateParams, c0: &RealConfig4) -> Result<CompiledIterate> {
    params.validate()?;
    let step = compile_step_robust(machine, params.tau, params.sigma_lambda)?;
    let (a, b) = (params.a(), params.b());
    let (t, s, cv, th1, th2) = (0, 1, 2, 3, 4);
    let z0 = 5;
    let u0 = 9;
    let sh0 = 13;
    let v0 = sh0 + step.num_shifts();
    let dim = v0 + step.num_aux();

    let to_iter = |i: usize| if i < 4 { u0 + i } else { sh0 + i - 4 };
    let f: Vec<Poly> = step.outputs.comps.iter().map(|p| p.map_vars(to_iter)).collect();

    let mut comps = vec![Poly::zero(); dim];
    comps[t] = Poly::constant(1.0);
    comps[s] = Poly::var(cv).scale(2.0 * PI);
    comps[cv] = Poly::var(s).scale(-2.0 * PI);
    let gate = 4.0 * PI * b;
    comps[th1] = &(Poly::var(th1) * Poly::var(cv)) * &(Poly::constant(1.0) - Poly::var(s)).scale(gate);
    comps[th2] = &(Poly::var(th2) * Poly::var(cv)) * &(Poly::constant(1.0) + Poly::var(s)).scale(-gate);
    for i in 0..4 {
        comps[z0 + i] = (Poly::var(th1).scale(a)) * (&f[i] - &Poly::var(z0 + i));
        comps[u0 + i] = (Poly::var(th2).scale(a)) * (Poly::var(z0 + i) - Poly::var(u0 + i));
    }
    for (j, &(input, _)) in step.shifts.iter().enumerate() {
        comps[sh0 + j] = comps[u0 + input].clone();
    }
    for (j, w) in step.args.iter().enumerate() {
        let mut dw = Poly::zero();
        for i in 0..4 {
            let d = w.partial(i);
            if !d.is_zero() {
                dw = dw + &d.map_vars(to_iter) * &comps[u0 + i];
            }
        }
        let v = Poly::var(v0 + j);
        comps[v0 + j] = (Poly::constant(1.0) - &v * &v) * dw;
    }

    let mut names: Vec<String> = ["t", "S", "C", "Theta1", "Theta2"].map(String::from).to_vec();
    for p in ["z", "u"] {
        names.extend(["x", "s", "y", "q"].map(|c| format!("{p}_{c}")));
    }
    for &(input, root) in &step.shifts {
        names.push(format!("{}-{root}", names[u0 + input]));
    }
    for j in 0..step.k() {
        names.push(format!("v_x{j}"));
    }
    for j in 0..step.k() {
        names.push(format!("v_y{j}"));
    }

    let c = c0.to_array();
    let mut y0 = vec![0.0, 0.0, 1.0, (-b).exp(), (-b).exp()];
    y0.extend_from_slice(&c);
    y0.extend_from_slice(&c);
    y0.extend_from_slice(&step.lift(&c)[4..]);
    let mut chart_y0 = y0.clone();
    chart_y0[th1] = -b;
    chart_y0[th2] = -b;
    for (j, w) in step.args.iter().enumerate() {
        chart_y0[v0 + j] = w.eval(&c);
    }
    debug_assert_eq!(y0.len(), dim);

    let mut kinds = vec![VarKind::State; dim];
    kinds[th1] = VarKind::ExpGate;
    kinds[th2] = VarKind::ExpGate;
    for kd in kinds.iter_mut().skip(v0) {
        *kd = VarKind::TanhAux;
    }

    let bound = SpaceBound::Max(vec![SpaceBound::Time, SpaceBound::Const(params.mu.exp())]);
    let system = PivpSystem::new(PolyVector::new(comps), 0.0, y0, u0, bound, names)?;
    Ok(CompiledIterate {
        system,
        kinds,
        chart_y0,
        u: [u0, u0 + 1, u0 + 2, u0 + 3],
        z: [z0, z0 + 1, z0 + 2, z0 + 3],
        params: *params,
        machine: machine.name().map(String::from),
    })
}

impl CompiledIterate {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn degree(&self) -> u32 {
        self.system.poly.degree()
    }

    pub fn coeff_sum(&self) -> f64 {
        self.system.poly.coeff_sum()
    }

    pub fn num_terms(&self) -> usize {
        self.system.poly.num_terms()
    }

    pub fn to_doc(&self) -> CompiledDoc {
        let equations = self
            .system
            .poly
            .comps
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| TermDoc {
                        coeff: c,
                        monomial: m.iter().map(|&(v, e)| [v, e as usize]).collect(),
                    })
                    .collect()
            })
            .collect();
        CompiledDoc {
            machine: self.machine.clone(),
            variables: self.system.names.clone(),
            kinds: self.kinds.clone(),
            equations,
            initial: self.system.y0.clone(),
            chart_initial: self.chart_y0.clone(),
            t0: self.system.t0,
            outputs: OutputsDoc { u: self.u, z: self.z },
            space_bound: self.system.bound.to_string(),
            params: ParamsDoc::from(&self.params),
        }
    }

    pub fn from_doc(doc: &CompiledDoc) -> Result<Self> {
        let n = doc.variables.len();
        if doc.kinds.len() != n
            || doc.equations.len() != n
            || doc.initial.len() != n
            || doc.chart_initial.len() != n
        {
            return Err(Error::Document(format!(
                "{} variables but {} kinds, {} equations, {} initial values, {} chart values",
                n,
                doc.kinds.len(),
                doc.equations.len(),
                doc.initial.len(),
                doc.chart_initial.len()
            )));
        }
        if doc.outputs.u.iter().chain(&doc.outputs.z).any(|&i| i >= n) {
            return Err(Error::Document("output index out of range".into()));
        }
        let comps = doc
            .equations
            .iter()
            .map(|terms| {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    let mut m: Monomial = Vec::with_capacity(t.monomial.len());
                    for &[v, e] in &t.monomial {
                        if v >= n {
                            return Err(Error::Document(format!("variable {v} out of range")));
                        }
                        let e = u32::try_from(e).map_err(|_| Error::Document(format!("exponent {e} too large")))?;
                        m.push((v, e));
                    }
                    out.push((t.coeff, m));
                }
                Ok(Poly::from_terms(out))
            })
            .collect::<Result<Vec<_>>>()?;
        let params = IterateParams {
            lambda: doc.params.lambda,
            mu: doc.params.mu,
            tau: doc.params.tau,
            sigma_lambda: doc.params.sigma_lambda,
        };
        let bound = SpaceBound::Max(vec![SpaceBound::Time, SpaceBound::Const(params.mu.exp())]);
        let system = PivpSystem::new(
            PolyVector::new(comps),
            doc.t0,
            doc.initial.clone(),
            doc.outputs.u[0],
            bound,
            doc.variables.clone(),
        )?;
        Ok(CompiledIterate {
            system,
            kinds: doc.kinds.clone(),
            chart_y0: doc.chart_initial.clone(),
            u: doc.outputs.u,
            z: doc.outputs.z,
            params,
            machine: doc.machine.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: f64,
    /// `[variable, exponent]` pairs.
    pub monomial: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputsDoc {
    pub u: [usize; 4],
    pub z: [usize; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ParamsDoc {
    pub lambda: f64,
    pub mu: f64,
    pub tau: f64,
    pub sigma_lambda: f64,
    pub A: f64,
    pub B: f64,
}

impl From<&IterateParams> for ParamsDoc {
    fn from(p: &IterateParams) -> Self {
        ParamsDoc {
            lambda: p.lambda,
            mu: p.mu,
            tau: p.tau,
            sigma_lambda: p.sigma_lambda,
            A: p.a(),
            B: p.b(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine: Option<String>,
    pub variables: Vec<String>,
    pub kinds: Vec<VarKind>,
    /// One term list per derivative.
    pub equations: Vec<Vec<TermDoc>>,
    pub initial: Vec<f64>,
    /// Initial values in the integration chart of each kind.
    pub chart_initial: Vec<f64>,
    pub t0: f64,
    pub outputs: OutputsDoc,
    pub space_bound: String,
    pub params: ParamsDoc,
}

impl CompiledDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::tm::encode;

    fn counter_params() -> IterateParams {
        IterateParams::for_machine(&corpus::binary_counter().machine, 25.0).unwrap()
    }

    #[test]
    fn compiled_step_matches_robust_map() {
        let m = corpus::palindrome();
        let map = StepMap::new(&m.machine).unwrap();
        let cs = compile_step_robust(&m.machine, 20.0, 16.0).unwrap();
        assert_eq!(cs.num_aux(), 2 * 4);
        assert_eq!(cs.num_shifts(), 7 + 2);
        for c in [
            RealConfig4::new(0.3, 1.0, 0.1, 2.0),
            RealConfig4::new(0.05, 0.2, 0.6, 5.7),
            RealConfig4::new(0.74, 2.0, 0.0, 7.0),
        ] {
            let direct = map.robust(&c, 20.0, 16.0);
            let compiled = cs.eval(&c);
            let d = direct.sup_distance(compiled);
            assert!(d <= 1e-9 * direct.sup_norm().max(1.0), "{c:?}: {d}");
        }
    }

    #[test]
    fn gate_coefficients() {
        let p = IterateParams {
            lambda: 2.0,
            mu: 1.0,
            tau: 2.0,
            sigma_lambda: 16.0,
        };
        assert_eq!(p.a(), 90.0);
        assert_eq!(p.b(), 12.0);
    }

    #[test]
    fn iterate_layout() {
        let m = corpus::binary_counter();
        let c0 = RealConfig4::from(&encode(&m.machine.blank_config(), &m.machine).unwrap());
        let ci = compile_iterate(&m.machine, &counter_params(), &c0).unwrap();
        assert_eq!(ci.dim(), 13 + 3 + 2 * m.machine.k());
        assert_eq!(ci.kinds.iter().filter(|k| **k == VarKind::TanhAux).count(), 2 * m.machine.k());
        assert!(ci.degree() >= 3);
    }

    #[test]
    fn document_round_trips() {
        let m = corpus::binary_counter();
        let c0 = RealConfig4::from(&encode(&m.machine.blank_config(), &m.machine).unwrap());
        let ci = compile_iterate(&m.machine, &counter_params(), &c0).unwrap();
        let text = ci.to_doc().to_json();
        let doc = CompiledDoc::parse(&text).unwrap();
        let again = CompiledIterate::from_doc(&doc).unwrap().to_doc().to_json();
        assert_eq!(text, again);
    }

    #[test]
    fn malformed_document_is_rejected() {
        assert!(matches!(CompiledDoc::parse("{}"), Err(Error::Document(_))));
    }
}

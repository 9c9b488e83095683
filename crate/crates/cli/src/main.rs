//! `tmgpac`: validate Turing machines, run the exact interpreter, and compile
//! and simulate the polynomial ODE that iterates their step map.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tm_gpac::budget::{lambda_analytic, ln_rational};
use tm_gpac::compile::compile_iterate;
use tm_gpac::corpus;
use tm_gpac::helpers::{
    helper_error, helper_error_bound, sigma1, sigma_p, theta, xi, HelperKind, HelperParams,
};
use tm_gpac::lagrange::rational_to_decimal;
use tm_gpac::simulate::{
    decode_trajectory, rhs_equivalence, simulate_machine, write_trace_csv, Backend, IterateParams, SimConfig,
    VerdictReport,
};
use tm_gpac::step::{robust_bound, RealConfig4, StepMap};
use tm_gpac::tm::{encode, halted_at, parse_machine_with_tape, parse_tape, run};
use tm_gpac::{Configuration, Error, TuringMachine};

const EXIT_INVALID_MACHINE: u8 = 2;
const EXIT_BOUND_VIOLATION: u8 = 3;
const EXIT_INTEGRATOR: u8 = 4;

#[derive(Parser)]
#[command(name = "tmgpac", version, about = "Turing machines as polynomial ODEs, checked against an exact interpreter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a machine and report m, k and the structural checks.
    Validate {
        #[command(flatten)]
        machine: MachineArg,
    },
    /// Run the interpreter and print c_0..c_T with their exact encodings [c_n] = (0.x, s, 0.y, q).
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        /// Horizon T: number of steps to run.
        #[arg(short = 'T', long = "steps", default_value_t = 10)]
        steps: usize,
    },
    /// Print the interpolation constants delta, F, M, the Lipschitz/magnitude
    /// constants A_i, B_i, and K1, K2, K3 of the robust step.
    Constants {
        #[command(flatten)]
        machine: MachineArg,
        /// Target precision S (eps_T <= e^-S); with --horizon, also prints the analytic lambda.
        #[arg(short = 'S', long)]
        precision: Option<f64>,
        /// Horizon T for the analytic lambda = S + T ln K3 + ln(8 K1 + 5).
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
    },
    /// Integrate the iteration system for T unit periods and decode u(n) at every integer time.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Horizon T: number of simulated steps.
        #[arg(short = 'T', long, default_value_t = 8)]
        horizon: usize,
        /// Integration backend: `direct` (F and theta evaluated) or `compiled` (the polynomial system).
        #[arg(long, default_value = "direct")]
        backend: Backend,
        #[command(flatten)]
        numerics: NumericArgs,
        /// CSV trace: t, u1..u4, z1..z4, sup_norm.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON verdicts with the decoded configuration and error at each integer time.
        #[arg(long)]
        verdict: Option<PathBuf>,
        /// Samples per unit of time in the trace.
        #[arg(long, default_value_t = 16)]
        samples_per_unit: usize,
    },
    /// Emit the compiled polynomial initial value problem as JSON.
    Compile {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Output path for the document; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Random states at which to compare the compiled and direct right-hand sides.
        #[arg(long, default_value_t = 100)]
        check: usize,
        /// Seed for the spot-check states.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// CSV of (x, value, error, bound) for one helper: xi, sigma1, sigma-p:<p> or theta.
    ProbeHelpers {
        /// Helper: `xi` (vs sgn), `sigma1` (vs int_1), `sigma-p:<p>` (vs int_p), `theta` (tail on [1/2, 1]).
        #[arg(long)]
        kind: String,
        /// Sharpness y; the sharp-region error is e^-y.
        #[arg(short, long, default_value_t = 4.0)]
        y: f64,
        /// lambda of the helper.
        #[arg(short, long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
    },
    /// CSV of (perturbation, error, bound) for the robust step around reachable configurations.
    ProbeStep {
        #[command(flatten)]
        input: InputArgs,
        /// tau: sharpness of the robust step; error bound K1 (e^-tau + dist).
        #[arg(long, default_value_t = 20.0)]
        tau: f64,
        /// lambda of sigma inside int-bar; default 4k.
        #[arg(long)]
        sigma_lambda: Option<f64>,
        /// Interpreter steps whose configurations are perturbed.
        #[arg(short = 'T', long, default_value_t = 20)]
        steps: usize,
        /// Perturbations per configuration.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate over a grid of horizons T and gate lambdas in parallel and tabulate the verdicts.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// Horizons T.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
        horizons: Vec<usize>,
        /// Gate lambdas (each >= 1); tau defaults to lambda.
        #[arg(long, value_delimiter = ',', default_value = "25")]
        lambdas: Vec<f64>,
        #[arg(long, default_value = "direct")]
        backend: Backend,
        #[command(flatten)]
        numerics: NumericArgs,
    },
}

#[derive(Args)]
struct MachineArg {
    /// Machine JSON file, or a built-in name: binary-counter, unary-adder, palindrome.
    machine: String,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    machine: MachineArg,
    /// Initial tape: a JSON file or inline `{"left":[..],"head":h,"right":[..]}`.
    /// Defaults to the machine document's tape, else the blank tape in q0.
    #[arg(long)]
    tape: Option<String>,
}

#[derive(Args)]
struct ParamArgs {
    /// lambda: precision of the iteration gates, A = 10(lambda+mu)^2, B = 4(lambda+mu); at least 1.
    #[arg(short, long, default_value_t = 25.0)]
    lambda: f64,
    /// mu: bound exponent for ||F(u)|| <= e^mu; default ln(K2 + 1).
    #[arg(long)]
    mu: Option<f64>,
    /// tau: sharpness of the robust step; default lambda.
    #[arg(long)]
    tau: Option<f64>,
    /// lambda of sigma inside int-bar; default 4k.
    #[arg(long)]
    sigma_lambda: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self, machine: &TuringMachine) -> tm_gpac::Result<IterateParams> {
        IterateParams::new(machine, self.lambda, self.mu, self.tau, self.sigma_lambda)
    }
}

#[derive(Args)]
struct NumericArgs {
    /// Integrator tolerance (absolute and relative).
    #[arg(long, env = "TMGPAC_TOL", default_value_t = 1e-10)]
    tol: f64,
    /// Decoding radius around integers for q and s, and the initial tape radius.
    #[arg(long, default_value_t = 1e-6)]
    decode_eps: f64,
}

fn load_machine(arg: &MachineArg) -> tm_gpac::Result<(TuringMachine, Option<Configuration>)> {
    let path = Path::new(&arg.machine);
    if !path.exists() {
        if let Some(c) = corpus::by_name(&arg.machine) {
            return Ok((c.machine, Some(c.input)));
        }
    }
    let text = fs::read_to_string(path)?;
    parse_machine_with_tape(&text)
}

fn load_input(args: &InputArgs) -> tm_gpac::Result<(TuringMachine, Configuration)> {
    let (machine, doc_tape) = load_machine(&args.machine)?;
    let c0 = match &args.tape {
        Some(t) if t.trim_start().starts_with('{') => parse_tape(t, &machine)?,
        Some(t) => parse_tape(&fs::read_to_string(t)?, &machine)?,
        None => doc_tape.unwrap_or_else(|| machine.blank_config()),
    };
    Ok((machine, c0))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_validate(arg: &MachineArg) -> anyhow::Result<ExitCode> {
    let (m, tape) = load_machine(arg)?;
    println!("machine: {}", m.name().unwrap_or("(unnamed)"));
    println!("states m = {}, k = {} (alphabet 0..={}, blank 0)", m.m(), m.k(), m.k() - 2);
    println!("initial state q0 = {}", m.q0());
    println!("halting states: {:?}", m.halting());
    let loops = m.halting().iter().all(|&q| {
        (0..m.symbols() as u32).all(|s| {
            let t = m.transition(q, s);
            t.next == q && t.write == s
        })
    });
    println!("halting states loop in place: {}", if loops { "yes" } else { "no" });
    println!("transition table total over Q x Sigma: yes");
    if let Some(c) = tape {
        println!("initial configuration: {c}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(input: &InputArgs, steps: usize) -> anyhow::Result<ExitCode> {
    let (m, c0) = load_input(input)?;
    let trace = run(&m, &c0, steps);
    let mut out = output(None)?;
    for (n, c) in trace.iter().enumerate() {
        writeln!(out, "{n:>4}  {c}  {}", encode(c, &m)?)?;
    }
    if let Some(h) = halted_at(&trace, &m) {
        writeln!(out, "halted at n = {h} in state q{}", trace[h].state())?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_constants(arg: &MachineArg, s: Option<f64>, t: Option<usize>) -> anyhow::Result<ExitCode> {
    let (m, _) = load_machine(arg)?;
    let map = StepMap::new(&m)?;
    let mut out = output(None)?;
    let interps = [
        ("next state", map.next_interp()),
        ("written symbol", map.write_interp()),
        ("direction", map.dir_interp()),
    ];
    for (i, (what, p)) in interps.iter().enumerate() {
        let c = p.constants();
        writeln!(out, "interpolant {} ({what}):", i + 1)?;
        writeln!(out, "  delta = {}", c.delta)?;
        writeln!(out, "  F     = {}", c.f_max)?;
        writeln!(out, "  M     = {}", c.m_box)?;
    }
    let c = map.constants();
    for (name, v) in c.named() {
        writeln!(out, "{name:>3} = {v}  (~ {})", rational_to_decimal(v))?;
    }
    match (s, t) {
        (Some(s), Some(t)) => {
            let l = lambda_analytic(s, t, ln_rational(&c.k1));
            writeln!(out, "lambda(S = {s}, T = {t}) = {l}")?;
        }
        (None, None) => {}
        _ => bail!("the analytic lambda needs both -S and -T"),
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    input: &InputArgs,
    params: &ParamArgs,
    horizon: usize,
    backend: Backend,
    numerics: &NumericArgs,
    trace: Option<&Path>,
    verdict: Option<&Path>,
    samples_per_unit: usize,
) -> anyhow::Result<ExitCode> {
    let (m, c0) = load_input(input)?;
    let p = params.resolve(&m)?;
    let mut config = SimConfig::new(p, backend, numerics.tol);
    config.samples_per_unit = samples_per_unit.max(1);
    let traj = simulate_machine(&m, &c0, horizon, &config)?;
    let report = VerdictReport::new(&traj, decode_trajectory(&traj, &m, numerics.decode_eps)?);
    if let Some(path) = trace {
        let mut w = output(Some(path))?;
        write_trace_csv(&traj, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = verdict {
        fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "lambda = {}, mu = {:.6}, tau = {}, sigma_lambda = {}, A = {:.6}, B = {:.6}, backend = {backend}, tol = {:e}",
        p.lambda,
        p.mu,
        p.tau,
        p.sigma_lambda,
        p.a(),
        p.b(),
        numerics.tol
    );
    for s in &report.steps {
        println!(
            "n = {:>3}  {}  {}  |u(n) - [c_n]| = {:.3e}  eps_n = {:.3e}",
            s.n,
            if s.matches { "ok  " } else { "FAIL" },
            s.decoded.as_deref().or(s.decode_error.as_deref()).unwrap_or("?"),
            s.error,
            s.budget
        );
    }
    println!("sup-norm {:.6} (bound {:.6e}), steps {} accepted / {} rejected", report.sup_norm, report.sup_bound, report.accepted_steps, report.rejected_steps);
    if report.passed() {
        println!("verdict: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verdict: FAIL");
        Ok(ExitCode::from(EXIT_BOUND_VIOLATION))
    }
}

fn cmd_compile(input: &InputArgs, params: &ParamArgs, out: Option<&Path>, check: usize, seed: u64) -> anyhow::Result<ExitCode> {
    let (m, c0) = load_input(input)?;
    let p = params.resolve(&m)?;
    let ci = compile_iterate(&m, &p, &RealConfig4::from(&encode(&c0, &m)?))?;
    let mut w = output(out)?;
    writeln!(w, "{}", ci.to_doc().to_json())?;
    w.flush()?;
    drop(w);
    eprintln!(
        "dimension {}, degree {}, {} terms, coefficient sum {:.6e}",
        ci.dim(),
        ci.degree(),
        ci.num_terms(),
        ci.coeff_sum()
    );
    if check > 0 {
        let d = rhs_equivalence(&m, &p, check, &mut ChaCha8Rng::seed_from_u64(seed))?;
        eprintln!("rhs check over {check} states: {:.3e} (z, u), {:.3e} (tanh auxiliaries)", d.state, d.aux);
        if d.state > 1e-9 || d.aux > 1e-9 {
            return Ok(ExitCode::from(EXIT_BOUND_VIOLATION));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_kind(kind: &str) -> anyhow::Result<HelperKind> {
    Ok(match kind {
        "xi" => HelperKind::Xi,
        "sigma1" => HelperKind::Sigma1,
        "theta" => HelperKind::Theta,
        other => match other.strip_prefix("sigma-p:") {
            Some(p) => HelperKind::SigmaP(p.parse().context("sigma-p needs an integer p")?),
            None => bail!("unknown helper `{other}`; expected xi, sigma1, sigma-p:<p> or theta"),
        },
    })
}

fn cmd_probe_helpers(kind: &str, y: f64, lambda: f64, from: f64, to: f64, points: usize) -> anyhow::Result<ExitCode> {
    let kind = parse_kind(kind)?;
    let params = HelperParams::new(y, lambda);
    helper_error_bound(kind, params, from)?;
    let mut out = output(None)?;
    writeln!(out, "x,value,error,bound")?;
    let mut violated = false;
    for i in 0..points {
        let x = if points == 1 { from } else { from + (to - from) * i as f64 / (points - 1) as f64 };
        let value = match kind {
            HelperKind::Xi => xi(x, y, lambda),
            HelperKind::Sigma1 => sigma1(x, y, lambda),
            HelperKind::SigmaP(p) => sigma_p(p, x, y, lambda),
            HelperKind::Theta => theta(x, lambda),
        };
        let err = helper_error(kind, params, x);
        let bound = helper_error_bound(kind, params, x)?;
        violated |= err > bound + 1e-12;
        writeln!(out, "{x},{value},{err},{bound}")?;
    }
    out.flush()?;
    Ok(if violated { ExitCode::from(EXIT_BOUND_VIOLATION) } else { ExitCode::SUCCESS })
}

fn cmd_probe_step(input: &InputArgs, tau: f64, sigma_lambda: Option<f64>, steps: usize, samples: usize, seed: u64) -> anyhow::Result<ExitCode> {
    let (m, c0) = load_input(input)?;
    let map = StepMap::new(&m)?;
    let constants = map.constants();
    constants.check_finite()?;
    let sl = sigma_lambda.unwrap_or(4.0 * m.k() as f64);
    let radius = map.tape_radius(sl);
    if !(radius > 0.0) {
        bail!("sigma_lambda = {sl} leaves no perturbation room (radius {radius})");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = output(None)?;
    writeln!(out, "perturbation,error,bound")?;
    let mut violated = false;
    for c in run(&m, &c0, steps) {
        let exact = encode(&c, &m)?;
        let base = RealConfig4::from(&exact);
        let want = RealConfig4::from(&map.exact(&exact)?);
        for _ in 0..samples {
            let mut d = || rng.gen_range(-radius..=radius);
            let p = RealConfig4::new(base.x + d(), base.s + d(), base.y + d(), base.q + d());
            let dist = p.sup_distance(base);
            let err = map.robust(&p, tau, sl).sup_distance(want);
            let bound = robust_bound(&constants, tau, dist);
            violated |= err > bound;
            writeln!(out, "{dist:e},{err:e},{bound:e}")?;
        }
    }
    out.flush()?;
    Ok(if violated { ExitCode::from(EXIT_BOUND_VIOLATION) } else { ExitCode::SUCCESS })
}

fn cmd_sweep(
    input: &InputArgs,
    horizons: &[usize],
    lambdas: &[f64],
    backend: Backend,
    numerics: &NumericArgs,
) -> anyhow::Result<ExitCode> {
    let (m, c0) = load_input(input)?;
    let mut jobs = Vec::new();
    for &l in lambdas {
        let p = IterateParams::for_machine(&m, l)?;
        for &t in horizons {
            jobs.push((t, p));
        }
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(t, p)| {
                let (m, c0) = (&m, &c0);
                s.spawn(move || -> tm_gpac::Result<VerdictReport> {
                    let traj = simulate_machine(m, c0, t, &SimConfig::new(p, backend, numerics.tol))?;
                    Ok(VerdictReport::new(&traj, decode_trajectory(&traj, m, numerics.decode_eps)?))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    println!("{:>4} {:>8} {:>14} {:>12} {:>10} verdict", "T", "lambda", "sup_norm", "max_error", "steps");
    let mut all = true;
    for ((t, p), r) in jobs.iter().zip(results) {
        let r = r?;
        let max_err = r.steps.iter().map(|s| s.error).fold(0.0, f64::max);
        all &= r.passed();
        println!(
            "{t:>4} {:>8} {:>14.6} {max_err:>12.3e} {:>10} {}",
            p.lambda,
            r.sup_norm,
            r.accepted_steps,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(EXIT_BOUND_VIOLATION) })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Syntax { .. } | Error::InvalidMachine(_) | Error::InvalidConfig(_) | Error::DigitOutOfRange { .. }) => {
            EXIT_INVALID_MACHINE
        }
        Some(Error::Integration(_)) => EXIT_INTEGRATOR,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Validate { machine } => cmd_validate(&machine),
        Command::Oracle { input, steps } => cmd_oracle(&input, steps),
        Command::Constants {
            machine,
            precision,
            horizon,
        } => cmd_constants(&machine, precision, horizon),
        Command::Simulate {
            input,
            params,
            horizon,
            backend,
            numerics,
            trace,
            verdict,
            samples_per_unit,
        } => cmd_simulate(
            &input,
            &params,
            horizon,
            backend,
            &numerics,
            trace.as_deref(),
            verdict.as_deref(),
            samples_per_unit,
        ),
        Command::Compile {
            input,
            params,
            output,
            check,
            seed,
        } => cmd_compile(&input, &params, output.as_deref(), check, seed),
        Command::ProbeHelpers {
            kind,
            y,
            lambda,
            from,
            to,
            points,
        } => cmd_probe_helpers(&kind, y, lambda, from, to, points),
        Command::ProbeStep {
            input,
            tau,
            sigma_lambda,
            steps,
            samples,
            seed,
        } => cmd_probe_step(&input, tau, sigma_lambda, steps, samples, seed),
        Command::Sweep {
            input,
            horizons,
            lambdas,
            backend,
            numerics,
        } => cmd_sweep(&input, &horizons, &lambdas, backend, &numerics),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helper_kinds_parse() {
        assert_eq!(parse_kind("sigma-p:3").unwrap(), HelperKind::SigmaP(3));
        assert_eq!(parse_kind("theta").unwrap(), HelperKind::Theta);
        assert!(parse_kind("sigma-p:x").is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        let invalid = anyhow::Error::from(Error::InvalidMachine("k".into()));
        assert_eq!(exit_code(&invalid), EXIT_INVALID_MACHINE);
        let other = anyhow::Error::from(Error::Parameter("lambda".into()));
        assert_eq!(exit_code(&other), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

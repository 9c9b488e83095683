use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tm_gpac::helpers::{theta, xi};
use tm_gpac::ode::OdeOptions;
use tm_gpac::pivp::{
    pivp_compose, pivp_elementary, pivp_poly_apply, pivp_poly_precompose, pivp_product, pivp_sum, PivpSystem,
    SpaceBound,
};
use tm_gpac::poly::{Poly, PolyVector};

const TOL: f64 = 1e-11;

fn opts() -> OdeOptions {
    OdeOptions::with_tol(TOL).max_step(0.01)
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn assert_tracks(sys: &PivpSystem, times: &[f64], f: impl Fn(f64) -> f64, tol: f64) {
    let got = sys.output_at(times, &opts()).unwrap();
    for (t, g) in times.iter().zip(got) {
        assert!((g - f(*t)).abs() <= tol, "t = {t}: {g} vs {}", f(*t));
    }
}

#[test]
fn sum_of_sine_and_tanh() {
    let s = pivp_sum(&pivp_elementary("sin").unwrap(), &pivp_elementary("tanh").unwrap(), &opts()).unwrap();
    assert_tracks(&s, &grid(0.0, 2.0, 20), |t| t.sin() + t.tanh(), 1e-9);
    assert_eq!(s.bound.eval(1.3), 2.0);
    assert!(s.bound_excess(2.0, &opts()).unwrap() <= 0.0);
}

#[test]
fn product_of_sine_and_tanh() {
    let p = pivp_product(&pivp_elementary("sin").unwrap(), &pivp_elementary("tanh").unwrap(), &opts()).unwrap();
    assert_tracks(&p, &grid(0.0, 3.0, 30), |t| t.sin() * t.tanh(), 1e-9);
    assert!(p.bound_excess(3.0, &opts()).unwrap() <= 0.0);
}

#[test]
fn tanh_of_sine() {
    let c = pivp_compose(&pivp_elementary("tanh").unwrap(), &pivp_elementary("sin").unwrap(), &opts()).unwrap();
    assert_tracks(&c, &grid(0.0, 4.0, 40), |t| t.sin().tanh(), 1e-9);
    assert!(c.bound_excess(4.0, &opts()).unwrap() <= 0.0);
}

#[test]
fn closure_on_three_intervals() {
    let sin = pivp_elementary("sin").unwrap();
    let cos = pivp_elementary("cos").unwrap();
    let s = pivp_sum(&sin, &cos, &opts()).unwrap();
    for (a, b) in [(0.0, 1.0), (1.0, 2.5), (2.5, 6.0)] {
        assert_tracks(&s, &grid(a, b, 10), |t| t.sin() + t.cos(), 1e-9);
    }
}

#[test]
fn tanh_stays_under_unit_bound() {
    let tanh = pivp_elementary("tanh").unwrap();
    assert_tracks(&tanh, &[3.0], f64::tanh, 1e-8);
    assert!(tanh.bound_excess(10.0, &opts()).unwrap() <= 0.0);
}

#[test]
fn rotation_keeps_unit_circle() {
    let sin = pivp_elementary("sin").unwrap();
    for t in [0.5, 3.0, 9.0] {
        let y = sin.state_at(t, &opts()).unwrap();
        assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn identity_precomposition_is_neutral() {
    let tanh = pivp_elementary("tanh").unwrap();
    let id = PolyVector::new(vec![Poly::var(0)]);
    let p = pivp_poly_precompose(&tanh, &id, &opts()).unwrap();
    assert_tracks(&p, &grid(0.0, 2.0, 8), f64::tanh, 1e-9);
}

#[test]
fn xi_by_precomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tanh = pivp_elementary("tanh").unwrap();
    for _ in 0..10 {
        let (x, y, l) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
        let ramp = PolyVector::new(vec![Poly::var(0).scale(x * y * l)]);
        let sys = pivp_poly_precompose(&tanh, &ramp, &opts()).unwrap();
        let v = sys.output_at(&[1.0], &opts()).unwrap()[0];
        assert!((v - xi(x, y, l)).abs() < 1e-9, "{x} {y} {l}");
    }
}

#[test]
fn theta_by_exp_composition() {
    let lambda = 3.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let sine = pivp_poly_precompose(
        &pivp_elementary("sin").unwrap(),
        &PolyVector::new(vec![Poly::var(0).scale(two_pi)]),
        &opts(),
    )
    .unwrap();
    let gap = Poly::constant(1.0) - Poly::var(sine.output);
    let exponent = pivp_poly_apply(&(&gap * &gap).scale(-lambda), &sine).unwrap();
    let th = pivp_compose(&pivp_elementary("exp").unwrap(), &exponent, &opts()).unwrap();
    // theta drops to e^-4lambda and recovers, so the error must be relative.
    let relative = OdeOptions {
        atol: 1e-18,
        ..opts()
    };
    let times = grid(0.0, 2.0, 40);
    let got = th.output_at(&times, &relative).unwrap();
    for (t, g) in times.iter().zip(got) {
        assert!((g - theta(*t, lambda)).abs() <= 1e-9, "t = {t}");
    }
}

#[test]
fn projection_keeps_the_inner_bound() {
    let sin = pivp_elementary("sin").unwrap();
    let id = pivp_elementary("identity").unwrap();
    let c = pivp_compose(&id, &sin, &opts()).unwrap();
    assert_tracks(&c, &grid(0.0, 3.0, 12), f64::sin, 1e-9);
    assert_eq!(
        c.bound,
        SpaceBound::Max(vec![SpaceBound::Const(1.0), SpaceBound::compose(SpaceBound::Time, SpaceBound::Const(1.0))])
    );
    assert_eq!(c.bound.eval(7.0), 1.0);
}

#[test]
fn bound_expression_renders() {
    let s = pivp_sum(&pivp_elementary("sin").unwrap(), &pivp_elementary("exp").unwrap(), &opts()).unwrap();
    assert_eq!(s.bound.to_string(), "(1 + exp(|t|))");
}


use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;

use tm_gpac::corpus;
use tm_gpac::helpers::{helper_error, helper_error_bound, sigma_p, theta, HelperKind, HelperParams};
use tm_gpac::poly::Poly;
use tm_gpac::step::{robust_bound, RealConfig4, StepMap};
use tm_gpac::tm::{decode, decode_tape, encode, encode_tape, step_exact, tape_range_max, Configuration};

fn tape(k: usize, len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..(k as u32 - 1), 0..len)
}

fn counter_config() -> impl Strategy<Value = Configuration> {
    (tape(4, 12), 0u32..3, tape(4, 12), 0usize..2)
        .prop_map(|(l, h, r, q)| Configuration::new(l, h, r, q))
}

fn palindrome_config() -> impl Strategy<Value = Configuration> {
    (tape(4, 6), 0u32..3, tape(4, 6), 0usize..8)
        .prop_map(|(l, h, r, q)| Configuration::new(l, h, r, q))
}

proptest! {
    #[test]
    fn tape_encoding_round_trips(k in 3usize..8, len in 0usize..30, seed in any::<u64>()) {
        let digits: Vec<u32> = (0..len)
            .map(|i| ((seed >> (i % 60)) as u32 ^ i as u32) % (k as u32 - 1))
            .collect();
        let mut trimmed = digits.clone();
        while trimmed.last() == Some(&0) {
            trimmed.pop();
        }
        let v = encode_tape(&digits, k);
        prop_assert_eq!(decode_tape(&v, k, 64).unwrap(), trimmed);
    }

    #[test]
    fn encoded_tape_stays_in_range(k in 3usize..8, digits in tape(8, 40)) {
        let digits: Vec<u32> = digits.into_iter().map(|d| d % (k as u32 - 1)).collect();
        let v = encode_tape(&digits, k);
        prop_assert!(!v.is_negative());
        prop_assert!(v <= tape_range_max(k));
    }

    #[test]
    fn configuration_round_trips(c in counter_config()) {
        let m = corpus::binary_counter().machine;
        let rc = encode(&c, &m).unwrap();
        prop_assert_eq!(decode(&rc, &m, 64).unwrap(), c);
    }

    #[test]
    fn exact_map_commutes_with_interpreter(c in palindrome_config()) {
        let m = corpus::palindrome().machine;
        let map = StepMap::new(&m).unwrap();
        let next = map.exact(&encode(&c, &m).unwrap()).unwrap();
        prop_assert_eq!(next, encode(&step_exact(&c, &m), &m).unwrap());
    }

    #[test]
    fn robust_map_within_bound(c in counter_config(), dx in -1.0f64..1.0, ds in -1.0f64..1.0) {
        let m = corpus::binary_counter().machine;
        let map = StepMap::new(&m).unwrap();
        let sl = 4.0 * m.k() as f64;
        let radius = map.tape_radius(sl);
        let exact = encode(&c, &m).unwrap();
        let base = RealConfig4::from(&exact);
        let p = RealConfig4::new(base.x + dx * radius, base.s + ds * radius, base.y - dx * radius, base.q - ds * radius);
        let got = map.robust(&p, 20.0, sl);
        let want = RealConfig4::from(&map.exact(&exact).unwrap());
        let bound = robust_bound(&map.constants(), 20.0, p.sup_distance(base));
        prop_assert!(got.sup_distance(want) <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn sigma_p_is_monotone(p in 1u32..6, x in -2.0f64..8.0, h in 0.0f64..1.0, y in 0.5f64..10.0, l in 2.5f64..20.0) {
        prop_assert!(sigma_p(p, x + h, y, l) >= sigma_p(p, x, y, l) - 1e-15);
    }

    #[test]
    fn sigma_p_saturates(p in 1u32..6, x in -2.0f64..8.0, y in 0.5f64..10.0, l in 2.5f64..20.0) {
        let v = sigma_p(p, x, y, l);
        prop_assert!((0.0..=p as f64).contains(&v));
    }

    #[test]
    fn theta_is_periodic(t in -5.0f64..5.0, n in -3i32..3, l in 0.1f64..50.0) {
        let a = theta(t, l);
        let b = theta(t + n as f64, l);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300 || (a - b).abs() < 1e-13);
    }

    #[test]
    fn theta_tail_is_small(phase in 0.5f64..1.0, n in -3i32..3, l in 0.1f64..50.0) {
        prop_assert!(theta(phase + n as f64, l) <= (-l).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn helper_errors_respect_bounds(x in -3.0f64..6.0, y in 1.0f64..12.0, l in 2.5f64..30.0) {
        let params = HelperParams::new(y, l);
        for kind in [HelperKind::Xi, HelperKind::Sigma1, HelperKind::SigmaP(4), HelperKind::Theta] {
            let bound = helper_error_bound(kind, params, x).unwrap();
            prop_assert!(helper_error(kind, params, x) <= bound + 1e-12, "{:?} at {}", kind, x);
        }
    }

    #[test]
    fn polynomial_evaluation_is_a_ring_map(
        a in prop::collection::vec((-3.0f64..3.0, 0usize..3, 0u32..3), 1..6),
        b in prop::collection::vec((-3.0f64..3.0, 0usize..3, 0u32..3), 1..6),
        x in prop::array::uniform3(-1.5f64..1.5),
    ) {
        let build = |ts: &[(f64, usize, u32)]| Poly::from_terms(ts.iter().map(|&(c, v, e)| (c, vec![(v, e)])));
        let (p, q) = (build(&a), build(&b));
        let scale = 1.0 + p.coeff_sum() * q.coeff_sum() * 16.0;
        prop_assert!(((&p * &q).eval(&x) - p.eval(&x) * q.eval(&x)).abs() <= 1e-12 * scale);
        prop_assert!(((&p + &q).eval(&x) - p.eval(&x) - q.eval(&x)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn partial_matches_finite_difference(
        a in prop::collection::vec((-3.0f64..3.0, 0usize..2, 0u32..4), 1..6),
        x in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let p = Poly::from_terms(a.iter().map(|&(c, v, e)| (c, vec![(v, e)])));
        let h = 1e-6;
        let fd = (p.eval(&[x[0] + h, x[1]]) - p.eval(&[x[0] - h, x[1]])) / (2.0 * h);
        prop_assert!((p.partial(0).eval(&x) - fd).abs() <= 1e-6 * (1.0 + p.coeff_sum()));
    }
}

#[test]
fn encoded_values_are_dyadic_for_k4() {
    let v = encode_tape(&[1, 2, 1], 4);
    assert_eq!(v, BigRational::new(25.into(), 64.into()));
    assert_eq!(v.to_f64().unwrap(), 25.0 / 64.0);
}

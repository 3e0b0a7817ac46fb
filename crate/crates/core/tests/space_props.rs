use lychaos_core::space::{frechet_metric, seminorm, NormExponent, SeminormFamily, SeminormRule, SpaceSpec, TruncatedVector};
use proptest::prelude::*;

const LEN: usize = 12;
const TERMS: usize = 30;
const SLACK: f64 = 1e-12;

fn spaces() -> Vec<SpaceSpec> {
    let one = NormExponent::Finite(1.0);
    vec![
        SpaceSpec::frechet("prefix", SeminormFamily::new(SeminormRule::Prefix { norm: one })).unwrap(),
        SpaceSpec::frechet("poly", SeminormFamily::new(SeminormRule::PolynomialWeights { norm: NormExponent::Sup })).unwrap(),
        SpaceSpec::frechet("renormed", SeminormFamily::new(SeminormRule::Renormed { norm: one })).unwrap(),
        SpaceSpec::l2(),
    ]
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, LEN)
}

fn vec_in(space: &SpaceSpec, c: &[f64]) -> TruncatedVector {
    space.vector(c.to_vec()).unwrap()
}

fn lin(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

fn d(space: &SpaceSpec, x: &[f64], y: &[f64]) -> f64 {
    frechet_metric(space, &vec_in(space, x), &vec_in(space, y), TERMS).unwrap().value
}

proptest! {
    #[test]
    fn metric_is_subadditive_under_sums(x in coeffs(), y in coeffs(), u in coeffs(), v in coeffs()) {
        for s in spaces() {
            let lhs = d(&s, &lin(1.0, &x, 1.0, &u), &lin(1.0, &y, 1.0, &v));
            prop_assert!(lhs <= d(&s, &x, &y) + d(&s, &u, &v) + SLACK, "{}", s.id);
        }
    }

    #[test]
    fn scaling_costs_at_most_one_plus_modulus(x in coeffs(), y in coeffs(), c in -20.0f64..20.0) {
        for s in spaces() {
            let lhs = d(&s, &lin(c, &x, 0.0, &y), &lin(0.0, &x, c, &y));
            prop_assert!(lhs <= (c.abs() + 1.0) * d(&s, &x, &y) + SLACK, "{}", s.id);
        }
    }

    #[test]
    fn distinct_multiples_stay_apart(x in coeffs(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let zero = vec![0.0; LEN];
        for s in spaces() {
            let lhs = d(&s, &lin(a, &x, 0.0, &x), &lin(b, &x, 0.0, &x));
            let t = (a - b).abs();
            prop_assert!(lhs >= t / (1.0 + t) * d(&s, &zero, &x) - SLACK, "{}", s.id);
        }
    }

    #[test]
    fn truncation_error_within_tail_bound(x in coeffs(), y in coeffs(), terms in 1usize..40, extra in 1usize..20) {
        for s in spaces() {
            let (vx, vy) = (vec_in(&s, &x), vec_in(&s, &y));
            let short = frechet_metric(&s, &vx, &vy, terms).unwrap();
            let long = frechet_metric(&s, &vx, &vy, terms + extra).unwrap();
            prop_assert!(long.value >= short.value);
            prop_assert!(long.value - short.value <= short.tail_bound, "{}", s.id);
            prop_assert!(short.value < 1.0);
        }
    }

    #[test]
    fn seminorms_increase_with_index(x in coeffs(), n in 1usize..30) {
        for s in spaces() {
            let v = vec_in(&s, &x);
            prop_assert!(seminorm(&s, n, &v).unwrap() <= seminorm(&s, n + 1, &v).unwrap(), "{}", s.id);
        }
    }
}

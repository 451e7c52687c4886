use loewner::random::{self, trial_rng};
use loewner::{leq, Algebra, Element, Tolerances};
use proptest::prelude::*;
use rand::Rng;

fn signature() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

/// `inf{t : −t ≤ a ≤ t}` by bisection on the order alone.
fn norm_by_order(a: &Element) -> f64 {
    let alg = a.algebra();
    let inside = |t: f64| leq(&alg.scalar(-t), a, &tol()).unwrap() && leq(a, &alg.scalar(t), &tol()).unwrap();
    let (mut lo, mut hi) = (0.0, 1.0);
    while !inside(hi) {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn leq_is_transitive_on_monotone_triples(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let a = random::hermitian(&mut rng, &alg, 1.0);
        let b = &a + &random::positive(&mut rng, &alg, 1.0);
        let c = &b + &random::positive(&mut rng, &alg, 1.0);
        prop_assert!(leq(&a, &b, &tol()).unwrap());
        prop_assert!(leq(&b, &c, &tol()).unwrap());
        prop_assert!(leq(&a, &c, &tol()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn leq_is_reflexive_and_antisymmetric(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let a = random::hermitian(&mut rng, &alg, 3.0);
        prop_assert!(leq(&a, &a, &tol()).unwrap());
        let b = if rng.random_bool(0.5) { a.clone() } else { random::hermitian(&mut rng, &alg, 3.0) };
        if leq(&a, &b, &tol()).unwrap() && leq(&b, &a, &tol()).unwrap() {
            prop_assert!(a.dist(&b) <= tol().eq_tol * a.opnorm().max(1.0));
        }
    }

    #[test]
    fn congruence_preserves_order(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let a = random::hermitian(&mut rng, &alg, 1.0);
        let b = &a + &random::positive(&mut rng, &alg, 1.0);
        let m = Element::from_blocks(
            alg.clone(),
            alg.blocks().iter().map(|&n| random::gaussian_matrix(&mut rng, n, n)).collect(),
            false,
        )
        .unwrap();
        prop_assert!(leq(&a.adjoint_congruence_by(&m), &b.adjoint_congruence_by(&m), &tol()).unwrap());
    }

    #[test]
    fn funcalc_is_multiplicative(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let a = random::hermitian(&mut trial_rng(seed, 0), &alg, 1.0);
        let f = |x: f64| x.exp();
        let g = |x: f64| x * x + 1.0;
        let fg = a.funcalc(&tol(), |x| f(x) * g(x)).unwrap();
        let prod = &a.funcalc(&tol(), f).unwrap() * &a.funcalc(&tol(), g).unwrap();
        prop_assert!(fg.dist(&prod) <= tol().eq_tol * fg.opnorm().max(1.0));
    }

    #[test]
    fn spectral_norm_matches_order_norm(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let a = random::hermitian(&mut trial_rng(seed, 0), &alg, 2.0);
        prop_assert!((a.opnorm() - norm_by_order(&a)).abs() <= 1e-8);
    }
}

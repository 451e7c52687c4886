use loewner::effects::{
    homo_certificate, inf_p_with_halfsup, max_scaling_below, orth_by_order, spectral_staircase, sup_with_half,
};
use loewner::projections::{
    block_ranks, mvn_equivalent, orthogonal_direct, proj_inf, proj_sup, two_projection_position,
};
use loewner::random::{self, trial_rng, TrialRng};
use loewner::{leq, Algebra, Element, Tolerances};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn signature() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=3)
}

/// A projection pair; orthogonal half of the time.
fn pair(rng: &mut TrialRng, alg: &Algebra) -> (Element, Element) {
    let p = random::projection_any_rank(rng, alg);
    let q = if rng.random_bool(0.5) {
        random::projection_orthogonal_to(rng, &p)
    } else {
        random::projection_any_rank(rng, alg)
    };
    (p, q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn inf_absorbs_sup(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let (p, q) = pair(&mut trial_rng(seed, 0), &alg);
        let s = proj_sup(&p, &q, &tol()).unwrap();
        prop_assert!(proj_inf(&p, &s, &tol()).unwrap().dist(&p) <= tol().eq_tol);
    }

    #[test]
    fn halmos_position_reconstructs(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let (p, q) = pair(&mut trial_rng(seed, 0), &alg);
        let pos = two_projection_position(&p, &q, &tol()).unwrap();
        prop_assert!(pos.reconstruct_p().dist(&p) <= 1e-8);
        prop_assert!(pos.reconstruct_q().dist(&q) <= 1e-8);
        prop_assert!(pos.resolution().dist(&alg.unit()) <= 1e-8);
    }

    #[test]
    fn orthogonality_from_position(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let (p, q) = pair(&mut trial_rng(seed, 0), &alg);
        let pos = two_projection_position(&p, &q, &tol()).unwrap();
        let meet_zero = proj_inf(&p, &q, &tol()).unwrap().is_zero(tol().eq_tol);
        let by_position = meet_zero && pos.generic.is_empty() && pos.p_and_q.is_zero(tol().eq_tol);
        prop_assert_eq!(orthogonal_direct(&p, &q, &tol()).unwrap(), by_position);
    }

    #[test]
    fn orth_by_order_matches_direct(seed: u64) {
        let alg = Algebra::new(vec![4, 2, 1]).unwrap();
        let (p, q) = pair(&mut trial_rng(seed, 0), &alg);
        prop_assert_eq!(orth_by_order(&p, &q, &tol()).unwrap(), orthogonal_direct(&p, &q, &tol()).unwrap());
    }

    #[test]
    fn inf_with_halfsup_is_greatest_lower_bound(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let (p, q) = pair(&mut rng, &alg);
        let sup = sup_with_half(&q, &tol()).unwrap();
        let inf = inf_p_with_halfsup(&p, &q, &tol()).unwrap();
        prop_assert!(leq(&inf, &p, &tol()).unwrap());
        prop_assert!(leq(&inf, &sup, &tol()).unwrap());
        // Lower bounds of both: scaled copies of p below sup, and
        // compressions of sup to subprojections of p that stay below p.
        let s = max_scaling_below(&p, &sup, 1.0, &tol()).unwrap();
        prop_assert!(leq(&p.scale(s), &inf, &tol()).unwrap());
        let e = random::effect(&mut rng, &alg);
        let below = inf.sqrt_pos(&tol()).unwrap();
        prop_assert!(leq(&e.congruence_by(&below), &inf, &tol()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sup_with_half_is_least_upper_bound(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let q = random::projection_any_rank(&mut rng, &alg);
        let w = random::effect_in(&mut rng, &alg, 0.5, 1.0);
        let qp = q.complement();
        let u = &q + &w.congruence_by(&qp);
        prop_assert!(leq(&sup_with_half(&q, &tol()).unwrap(), &u, &tol()).unwrap());
    }

    #[test]
    fn murray_von_neumann_is_transitive(seed: u64, blocks in signature()) {
        let alg = Algebra::new(blocks).unwrap();
        let mut rng = trial_rng(seed, 0);
        let p = random::projection_any_rank(&mut rng, &alg);
        let ranks = block_ranks(&p, &tol()).unwrap();
        let q = random::projection(&mut rng, &alg, &ranks);
        let r = if rng.random_bool(0.5) {
            random::projection(&mut rng, &alg, &ranks)
        } else {
            random::projection_any_rank(&mut rng, &alg)
        };
        prop_assert!(mvn_equivalent(&p, &q, &tol()).unwrap());
        if mvn_equivalent(&q, &r, &tol()).unwrap() {
            prop_assert!(mvn_equivalent(&p, &r, &tol()).unwrap());
        }
    }

    #[test]
    fn staircase_refines(seed: u64, blocks in signature(), n in 1u32..20) {
        let alg = Algebra::new(blocks).unwrap();
        let a = random::effect(&mut trial_rng(seed, 0), &alg);
        let coarse = spectral_staircase(&a, n, &tol()).unwrap();
        let fine = spectral_staircase(&a, 2 * n, &tol()).unwrap();
        prop_assert!(fine.residual <= coarse.residual + tol().eq_tol);
        let gap = &a - &coarse.sum(&alg);
        prop_assert!(gap.lambda_min(&tol()).unwrap() >= -1e-12);
        prop_assert!(gap.lambda_max(&tol()).unwrap() <= 1.0 / n as f64 + 1e-12);
    }
}

#[test]
fn bisection_agrees_with_infimum_coefficient_on_grid() {
    let base = Algebra::new(vec![1]).unwrap();
    let mut rng = trial_rng(11, 0);
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        let cert = homo_certificate(t, &base, 4, &mut rng, &tol()).unwrap();
        assert!((cert.bisection_coefficient - 1.0 / (2.0 - t)).abs() <= 1e-8, "t = {t}");
        assert!(cert.passes(), "t = {t}: {cert:?}");
    }
}

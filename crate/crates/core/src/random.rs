//! Seeded random instances: unitaries, hermitian elements, effects,
//! projections and positive invertible elements.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Algebra, CMat, Element, Tolerances};
use crate::error::{Error, Result};
use crate::interval::IntervalKind;
use crate::maps::{JordanSpec, MapNode, OrderIsoExpr};

pub type TrialRng = ChaCha8Rng;

/// Independent stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of the
/// diagonal of R pushed back into Q.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = u.column_mut(j);
        col *= phase;
    }
    u
}

/// `u · diag(values) · uᴴ` per block with random unitaries.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, mut values: impl FnMut(&mut R) -> f64) -> Element {
    let blocks = alg
        .blocks()
        .iter()
        .map(|&n| {
            let u = unitary(rng, n);
            let d = DVector::from_iterator(n, (0..n).map(|_| Complex64::new(values(rng), 0.0)));
            &u * CMat::from_diagonal(&d) * u.adjoint()
        })
        .collect();
    Element::from_blocks(alg.clone(), blocks, true).expect("unitary conjugate of a real diagonal is hermitian")
}

/// Hermitian element with spectrum uniform in `[-scale, scale]`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, scale: f64) -> Element {
    with_spectrum(rng, alg, |r| scale * (2.0 * r.random::<f64>() - 1.0))
}

/// Effect with spectrum uniform in `[0, 1]`.
pub fn effect<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra) -> Element {
    with_spectrum(rng, alg, |r| r.random::<f64>())
}

/// Effect with spectrum uniform in `[lo, hi] ⊂ [0, 1]`.
pub fn effect_in<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, lo: f64, hi: f64) -> Element {
    with_spectrum(rng, alg, |r| lo + (hi - lo) * r.random::<f64>())
}

/// Positive element with spectrum uniform in `[0, scale]`.
pub fn positive<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, scale: f64) -> Element {
    with_spectrum(rng, alg, |r| scale * r.random::<f64>())
}

/// Positive invertible element with `λ_min ≥ 1/condition_cap` and
/// `λ_max ≤ 1`.
pub fn pos_invertible<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, condition_cap: f64) -> Element {
    let lo = condition_cap.max(1.0).recip().ln();
    with_spectrum(rng, alg, |r| (lo * r.random::<f64>()).exp())
}

/// Positive element with spectrum log-uniform in `[lo, hi]`.
pub fn pos_log_uniform<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, lo: f64, hi: f64) -> Element {
    let (a, b) = (lo.ln(), hi.ln());
    with_spectrum(rng, alg, |r| (a + (b - a) * r.random::<f64>()).exp())
}

/// Projection of the given rank in every block, on a Haar-random frame.
pub fn projection<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, ranks: &[usize]) -> Element {
    let blocks = alg
        .blocks()
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| {
            let r = r.min(n);
            let u = unitary(rng, n);
            let cols = u.columns(0, r);
            cols * cols.adjoint()
        })
        .collect();
    Element::from_blocks(alg.clone(), blocks, true).expect("frame projections are hermitian")
}

/// Projection with independently uniform ranks per block.
pub fn projection_any_rank<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra) -> Element {
    let ranks: Vec<usize> = alg.blocks().iter().map(|&n| rng.random_range(0..=n)).collect();
    projection(rng, alg, &ranks)
}

/// A projection inside the range of `1 − p`: compresses a random frame of
/// `range(1 − p)`.
pub fn projection_orthogonal_to<R: Rng + ?Sized>(rng: &mut R, p: &Element) -> Element {
    let alg = p.algebra();
    let blocks = p
        .blocks()
        .iter()
        .map(|pb| {
            let n = pb.nrows();
            let free = n - (pb.trace().re.round() as usize).min(n);
            let r = rng.random_range(0..=free);
            let comp = CMat::identity(n, n) - pb;
            // Orthonormal columns spanning range(1 − p), via a random unitary
            // pushed through the complement and re-orthonormalized.
            let g = &comp * gaussian_matrix(rng, n, free.max(1));
            let q = g.qr().q();
            let cols = q.columns(0, r);
            cols * cols.adjoint()
        })
        .collect();
    Element::from_blocks(alg.clone(), blocks, true).expect("frame projections are hermitian")
}

/// A random member of the given interval: effects with uniform spectrum,
/// cone elements in `[0, scale]`, strict cone elements log-uniform in
/// `[1/scale, scale]` and hermitian elements in `[-scale, scale]`.
pub fn interval_element<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, kind: IntervalKind, scale: f64) -> Element {
    match kind {
        IntervalKind::Effect => effect(rng, alg),
        IntervalKind::Cone => positive(rng, alg, scale),
        IntervalKind::ConeStrict => pos_log_uniform(rng, alg, scale.recip(), scale),
        IntervalKind::Sa => hermitian(rng, alg, scale),
    }
}

/// Random Jordan *-isomorphism from `source` onto `target`: a random
/// dimension-preserving block matching, Haar unitaries and fair-coin
/// transpose flags.
pub fn jordan_spec<R: Rng + ?Sized>(rng: &mut R, source: &Algebra, target: &Algebra) -> Result<JordanSpec> {
    let mut free: Vec<usize> = (0..target.num_blocks()).collect();
    let mut permutation = Vec::with_capacity(source.num_blocks());
    for &n in source.blocks() {
        let candidates: Vec<usize> = (0..free.len()).filter(|&k| target.blocks()[free[k]] == n).collect();
        if candidates.is_empty() {
            return Err(Error::Parameter(format!(
                "no Jordan *-isomorphism from {source} onto {target}"
            )));
        }
        let pick = candidates[rng.random_range(0..candidates.len())];
        permutation.push(free.swap_remove(pick));
    }
    let unitaries = source.blocks().iter().map(|&n| unitary(rng, n)).collect();
    let transpose = source.blocks().iter().map(|&n| n > 1 && rng.random_bool(0.5)).collect();
    JordanSpec::new(
        source.clone(),
        target.clone(),
        permutation,
        unitaries,
        transpose,
        &Tolerances::default(),
    )
}

/// A random canonical order automorphism of the `kind` interval of `alg`:
/// `Φ_α⁻¹ ∘ Φ_T ∘ J` on effects, `a ↦ bJ(a)b` on cones and `bJ(a)b + c` on
/// the hermitian part. Parameters stay in ranges that keep conditioning
/// moderate.
pub fn order_iso_expr<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra, kind: IntervalKind) -> Result<OrderIsoExpr> {
    let spec = jordan_spec(rng, alg, alg)?;
    let maps = match kind {
        IntervalKind::Effect => vec![
            MapNode::PhiAlphaInv {
                alpha: rng.random_range(0.3..1.5),
            },
            MapNode::PhiT {
                t: pos_log_uniform(rng, alg, 0.5, 2.0),
            },
            MapNode::Jordan { spec },
        ],
        IntervalKind::Cone | IntervalKind::ConeStrict => vec![
            MapNode::Congruence {
                b: pos_log_uniform(rng, alg, 0.5, 2.0),
            },
            MapNode::Jordan { spec },
        ],
        IntervalKind::Sa => vec![
            MapNode::Shift {
                c: hermitian(rng, alg, 1.0),
            },
            MapNode::Congruence {
                b: pos_log_uniform(rng, alg, 0.5, 2.0),
            },
            MapNode::Jordan { spec },
        ],
    };
    OrderIsoExpr::new(MapNode::Compose { maps }, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::{block_ranks, is_projection, orthogonal_direct};

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = trial_rng(7, 0);
        for n in 1..6 {
            let u = unitary(&mut rng, n);
            let err = (u.adjoint() * &u - CMat::identity(n, n)).norm();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn generators_land_in_their_sets() {
        let tol = Tolerances::default();
        let alg = Algebra::new(vec![1, 2, 3]).unwrap();
        let mut rng = trial_rng(11, 3);
        for _ in 0..20 {
            let e = effect(&mut rng, &alg);
            assert!(crate::IntervalKind::Effect.contains(&e, &tol));
            let p = projection(&mut rng, &alg, &[1, 1, 2]);
            assert!(is_projection(&p, &tol));
            assert_eq!(block_ranks(&p, &tol).unwrap(), vec![1, 1, 2]);
            let b = pos_invertible(&mut rng, &alg, 100.0);
            assert!(b.lambda_min(&tol).unwrap() >= 0.01 - 1e-12);
            let q = projection_orthogonal_to(&mut rng, &p);
            assert!(is_projection(&q, &tol));
            assert!(orthogonal_direct(&p, &q, &tol).unwrap());
        }
    }

    #[test]
    fn random_maps_are_valid() {
        let tol = Tolerances::default();
        let alg = Algebra::new(vec![2, 1, 2]).unwrap();
        let mut rng = trial_rng(21, 0);
        for kind in IntervalKind::ALL {
            let e = order_iso_expr(&mut rng, &alg, kind).unwrap();
            for _ in 0..5 {
                let a = interval_element(&mut rng, &alg, kind, 2.0);
                assert!(kind.contains(&e.evaluate(&a, &tol).unwrap(), &tol));
            }
        }
        let spec = jordan_spec(&mut rng, &alg, &Algebra::new(vec![1, 2, 2]).unwrap()).unwrap();
        assert_eq!(spec.permutation()[1], 0);
        assert!(jordan_spec(&mut rng, &alg, &Algebra::new(vec![2, 3]).unwrap()).is_err());
    }

    #[test]
    fn streams_are_reproducible() {
        let alg = Algebra::new(vec![2]).unwrap();
        let a = hermitian(&mut trial_rng(5, 9), &alg, 1.0);
        let b = hermitian(&mut trial_rng(5, 9), &alg, 1.0);
        let c = hermitian(&mut trial_rng(5, 10), &alg, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

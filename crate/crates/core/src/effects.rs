//! Effect-algebra identities on projections: the supremum of a projection
//! with `½`, the infimum of a projection with that supremum, the order
//! characterization of orthogonality, and spectral staircases.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, CMat, Element, Tolerances};
use crate::error::{Error, Result};
use crate::interval::IntervalKind;
use crate::projections::{require_projection, two_projection_position};
use crate::random;

/// `0 ≤ a ≤ 1`. Non-hermitian input is an error.
pub fn in_effect(a: &Element, tol: &Tolerances) -> Result<bool> {
    let h = a.to_hermitian(tol)?;
    Ok(IntervalKind::Effect.contains(&h, tol))
}

/// `q + ½q⊥`, the least effect above both `q` and `½`.
pub fn sup_with_half(q: &Element, tol: &Tolerances) -> Result<Element> {
    let q = require_projection(q, tol)?;
    Ok(&q + &q.complement().scale(0.5))
}

/// Largest `s ∈ [0, hi]` with `s·x ≤ u`, by bisection on the smallest
/// eigenvalue of `u − s·x`. `x` must be positive and `u` must dominate `0`.
pub fn max_scaling_below(x: &Element, u: &Element, hi: f64, tol: &Tolerances) -> Result<f64> {
    let fits = |s: f64| -> Result<bool> { Ok((u - &x.scale(s)).lambda_min(tol)? >= 0.0) };
    if fits(hi)? {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Numerical witness that `(1/(2−t))p` is the infimum of `p` and
/// `sup{q, ½}` for the pair `p = [[1,0],[0,0]]`,
/// `q = [[t, √(t(1−t))],[√(t(1−t)), 1−t]]` in `M₂(base)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomoCertificate {
    pub t: f64,
    /// `1/(2−t)`.
    pub coefficient: f64,
    /// Largest `s` with `s·p ≤ sup{q, ½}`, found by bisection.
    pub bisection_coefficient: f64,
    /// Negative part of `λ_min(sup{q,½} − (1/(2−t))p)` and of
    /// `λ_min(p − (1/(2−t))p)`.
    pub residual_lower: f64,
    /// `‖(q + ½q⊥ − (1/(2−t))p) − ½vvᴴ‖`.
    pub residual_factor: f64,
    /// Worst violation of `a ≤ (1/(2−t))p` over sampled maximal lower bounds,
    /// together with the defect of the congruence `wᴴ(q + ½q⊥)w = (1/(2−t))p`.
    pub maximality_residual: f64,
    pub samples: usize,
}

impl HomoCertificate {
    pub const BUDGET: f64 = 1e-9;

    pub fn max_residual(&self) -> f64 {
        self.residual_lower
            .max(self.residual_factor)
            .max(self.maximality_residual)
    }

    pub fn passes(&self) -> bool {
        self.max_residual() <= Self::BUDGET
    }
}

/// Doubles every block: `M₂(⊕ M_n) = ⊕ M_{2n}`.
pub fn doubled(base: &Algebra) -> Result<Algebra> {
    Algebra::new(base.blocks().iter().map(|n| 2 * n).collect())
}

/// Element of `M₂(base)` whose 2×2 block pattern is `[[x11, x12],[x21, x22]]`
/// times the unit of `base`.
pub fn scalar_pattern(base: &Algebra, m: [[f64; 2]; 2]) -> Result<Element> {
    let alg = doubled(base)?;
    let blocks = base
        .blocks()
        .iter()
        .map(|&n| {
            CMat::from_fn(2 * n, 2 * n, |i, j| {
                if i % n == j % n {
                    Complex64::new(m[i / n][j / n], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Element::from_blocks(alg, blocks, false)
}

/// `diag(x, 0)` in `M₂(base)` for `x` in `base`.
fn upper_corner(x: &Element) -> Result<Element> {
    let base = x.algebra();
    let blocks = x
        .blocks()
        .iter()
        .map(|b| {
            let n = b.nrows();
            let mut m = CMat::zeros(2 * n, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(b);
            m
        })
        .collect();
    Element::from_blocks(doubled(base)?, blocks, true)
}

/// Builds the certificate for `t ∈ [0, 1]` with `samples` random maximal
/// lower bounds.
pub fn homo_certificate<R: Rng + ?Sized>(
    t: f64,
    base: &Algebra,
    samples: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<HomoCertificate> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("t = {t} is outside [0, 1]")));
    }
    let beta = (t * (1.0 - t)).sqrt();
    let coefficient = 1.0 / (2.0 - t);
    let p = scalar_pattern(base, [[1.0, 0.0], [0.0, 0.0]])?.to_hermitian(tol)?;
    let q = scalar_pattern(base, [[t, beta], [beta, 1.0 - t]])?.to_hermitian(tol)?;
    let sup = sup_with_half(&q, tol)?;
    let lower = p.scale(coefficient);

    let residual_lower = [(&sup - &lower).lambda_min(tol)?, (&p - &lower).lambda_min(tol)?]
        .into_iter()
        .fold(0.0f64, |acc, l| acc.max(-l));

    let v1 = (t * (1.0 - t) / (2.0 - t)).sqrt();
    let v2 = (2.0 - t).sqrt();
    let half_vv = scalar_pattern(base, [[v1 * v1, v1 * v2], [v1 * v2, v2 * v2]])?.scale(0.5);
    let residual_factor = (&(&sup - &lower) - &half_vv).opnorm();

    let w = scalar_pattern(base, [[1.0, 0.0], [-beta / (2.0 - t), 0.0]])?;
    let bisection_coefficient = max_scaling_below(&p, &sup, 1.0, tol)?;
    let mut maximality_residual = (&sup.adjoint_congruence_by(&w) - &lower).opnorm();
    for _ in 0..samples {
        let x = upper_corner(&random::effect(rng, base))?;
        let xmax = x.lambda_max(tol)?;
        if xmax <= 0.0 {
            continue;
        }
        // Largest multiple of x below both p and sup{q, ½}.
        let s = max_scaling_below(&x, &sup, 1.0 / xmax, tol)?;
        let a = x.scale(s);
        let fixed = (&a.adjoint_congruence_by(&w) - &a).opnorm();
        let violation = (-(&lower - &a).lambda_min(tol)?).max(0.0);
        maximality_residual = maximality_residual.max(fixed).max(violation);
    }

    Ok(HomoCertificate {
        t,
        coefficient,
        bisection_coefficient,
        residual_lower,
        residual_factor,
        maximality_residual,
        samples,
    })
}

/// `inf{p, sup{q, ½}}` through the two-projection position:
/// `(p∧q) + ½(p∧q⊥) + Σ (1/(2−t))·eeᴴ` over generic frames.
pub fn inf_p_with_halfsup(p: &Element, q: &Element, tol: &Tolerances) -> Result<Element> {
    let pos = two_projection_position(p, q, tol)?;
    let alg = pos.algebra().clone();
    let base = &pos.p_and_q + &pos.p_and_q_perp.scale(0.5);
    Ok(pos
        .generic
        .iter()
        .fold(base, |acc, g| &acc + &g.p_part(&alg).scale(1.0 / (2.0 - g.t))))
}

/// Orthogonality decided through the order: `inf{p, sup{q, ½}} = ½p`.
pub fn orth_by_order(p: &Element, q: &Element, tol: &Tolerances) -> Result<bool> {
    let inf = inf_p_with_halfsup(p, q, tol)?;
    let p = require_projection(p, tol)?;
    Ok(inf.dist(&p.scale(0.5)) <= tol.eq_tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StairStep {
    pub t: f64,
    pub projection: Element,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Staircase {
    pub n: u32,
    pub steps: Vec<StairStep>,
    /// `‖a − Σ tᵢpᵢ‖`.
    pub residual: f64,
}

impl Staircase {
    pub fn sum(&self, alg: &Algebra) -> Element {
        self.steps
            .iter()
            .fold(alg.zero(), |acc, s| &acc + &s.projection.scale(s.t))
    }
}

/// Grid index `k` with `k/n ≤ λ`, snapping values within `1e-9` of the next
/// grid point onto it.
fn grid_floor(lambda: f64, n: u32) -> u32 {
    let x = lambda * n as f64;
    let mut k = x.floor();
    if (x - (k + 1.0)).abs() <= 1e-9 {
        k += 1.0;
    }
    k.clamp(0.0, n as f64) as u32
}

/// Mutually orthogonal spectral projections `pᵢ` and grid values
/// `tᵢ ∈ {1/n, …, 1}` with `0 ≤ a − Σ tᵢpᵢ ≤ 1/n`, certified.
pub fn spectral_staircase(a: &Element, n: u32, tol: &Tolerances) -> Result<Staircase> {
    if n == 0 {
        return Err(Error::Parameter("staircase resolution n must be at least 1".into()));
    }
    let a = IntervalKind::Effect.require(a, tol)?;
    let alg = a.algebra().clone();
    let spectra = a.spectra(tol)?;

    let mut per_level: Vec<Vec<CMat>> = vec![alg.zero().into_blocks(); n as usize + 1];
    for (b, s) in spectra.iter().enumerate() {
        for (k, &lam) in s.values.iter().enumerate() {
            let level = grid_floor(lam, n) as usize;
            let v = s.vectors.column(k);
            per_level[level][b] += v * v.adjoint();
        }
    }
    let mut steps = Vec::new();
    for level in (1..=n as usize).rev() {
        let blocks = std::mem::take(&mut per_level[level]);
        if blocks.iter().all(|m| m.iter().all(|z| z.norm() == 0.0)) {
            continue;
        }
        steps.push(StairStep {
            t: level as f64 / n as f64,
            projection: Element::from_blocks_with(alg.clone(), blocks, true, tol)?,
        });
    }
    let mut stair = Staircase {
        n,
        steps,
        residual: 0.0,
    };
    let rest = &a - &stair.sum(&alg);
    stair.residual = rest.opnorm();
    if !rest.is_positive(tol)? {
        return Err(Error::certificate("staircase lower bound", -rest.lambda_min(tol)?, 0.0));
    }
    let gap = rest.scale(-1.0).add_scalar(1.0 / n as f64);
    if !gap.is_positive(tol)? {
        return Err(Error::certificate("staircase 1/n bound", -gap.lambda_min(tol)?, 0.0));
    }
    Ok(stair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::orthogonal_direct;
    use crate::random::trial_rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn in_effect_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert!(in_effect(&alg.scalar(0.5), &tol()).unwrap());
        assert!(in_effect(&Element::diagonal(&alg, &[vec![1.0, 0.0]]).unwrap(), &tol()).unwrap());
        assert!(!in_effect(&alg.scalar(1.01), &tol()).unwrap());
    }

    #[test]
    fn sup_with_half_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert!(sup_with_half(&alg.zero(), &tol()).unwrap().dist(&alg.scalar(0.5)) < 1e-15);
        assert!(sup_with_half(&alg.unit(), &tol()).unwrap().dist(&alg.unit()) < 1e-15);
        let q = Element::diagonal(&alg, &[vec![1.0, 0.0]]).unwrap();
        let s = sup_with_half(&q, &tol()).unwrap();
        assert!(s.dist(&Element::diagonal(&alg, &[vec![1.0, 0.5]]).unwrap()) < 1e-15);
        assert!(matches!(
            sup_with_half(&alg.scalar(0.3), &tol()),
            Err(Error::NotProjection(_))
        ));
    }

    #[test]
    fn homo_certificate_edges() {
        let base = Algebra::new(vec![1]).unwrap();
        let mut rng = trial_rng(1, 0);
        for (t, coef) in [(0.5, 2.0 / 3.0), (0.0, 0.5), (1.0, 1.0)] {
            let cert = homo_certificate(t, &base, 20, &mut rng, &tol()).unwrap();
            assert!((cert.coefficient - coef).abs() < 1e-15);
            assert!((cert.bisection_coefficient - coef).abs() < 1e-8);
            assert!(cert.passes(), "{cert:?}");
        }
        assert!(homo_certificate(1.5, &base, 1, &mut rng, &tol()).is_err());
        assert!(homo_certificate(-0.1, &base, 1, &mut rng, &tol()).is_err());
    }

    #[test]
    fn homo_certificate_over_matrix_base() {
        let base = Algebra::new(vec![2, 1]).unwrap();
        let mut rng = trial_rng(2, 0);
        let cert = homo_certificate(0.3, &base, 10, &mut rng, &tol()).unwrap();
        assert!(cert.passes(), "{cert:?}");
    }

    #[test]
    fn wrong_coefficient_is_not_a_lower_bound() {
        // Slightly above 1/(2−t) must break the lower-bound property.
        let base = Algebra::new(vec![1]).unwrap();
        let t = 0.4;
        let beta = (t * (1.0f64 - t)).sqrt();
        let p = scalar_pattern(&base, [[1.0, 0.0], [0.0, 0.0]])
            .unwrap()
            .to_hermitian(&tol())
            .unwrap();
        let q = scalar_pattern(&base, [[t, beta], [beta, 1.0 - t]])
            .unwrap()
            .to_hermitian(&tol())
            .unwrap();
        let sup = sup_with_half(&q, &tol()).unwrap();
        let above = p.scale(1.0 / (2.0 - t) + 1e-6);
        assert!((&sup - &above).lambda_min(&tol()).unwrap() < 0.0);
    }

    #[test]
    fn infimum_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        let p = Element::diagonal(&alg, &[vec![1.0, 0.0]]).unwrap();
        assert!(inf_p_with_halfsup(&p, &p, &tol()).unwrap().dist(&p) < 1e-12);
        assert!(
            inf_p_with_halfsup(&p, &p.complement(), &tol())
                .unwrap()
                .dist(&p.scale(0.5))
                < 1e-12
        );

        let th: f64 = 0.9;
        let t = th.cos().powi(2);
        let q = Element::real_symmetric(
            &alg,
            &[vec![
                vec![t, th.cos() * th.sin()],
                vec![th.cos() * th.sin(), th.sin().powi(2)],
            ]],
        )
        .unwrap();
        let inf = inf_p_with_halfsup(&p, &q, &tol()).unwrap();
        assert!(inf.dist(&p.scale(1.0 / (2.0 - t))) < 1e-12);
    }

    #[test]
    fn orth_by_order_examples() {
        let alg = Algebra::new(vec![3]).unwrap();
        let mut rng = trial_rng(4, 0);
        let p = random::projection(&mut rng, &alg, &[1]);
        assert!(orth_by_order(&p, &p.complement(), &tol()).unwrap());
        assert!(!orth_by_order(&p, &p, &tol()).unwrap());
        for _ in 0..50 {
            let p = random::projection_any_rank(&mut rng, &alg);
            let q = if rng.random_bool(0.5) {
                random::projection_orthogonal_to(&mut rng, &p)
            } else {
                random::projection_any_rank(&mut rng, &alg)
            };
            assert_eq!(
                orth_by_order(&p, &q, &tol()).unwrap(),
                orthogonal_direct(&p, &q, &tol()).unwrap()
            );
        }
    }

    #[test]
    fn staircase_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        let s = spectral_staircase(&alg.scalar(0.5), 2, &tol()).unwrap();
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.steps[0].t, 0.5);
        assert!(s.steps[0].projection.dist(&alg.unit()) < 1e-15);
        assert!(s.residual < 1e-15);

        let a = Element::diagonal(&alg, &[vec![0.3, 0.9]]).unwrap();
        let s = spectral_staircase(&a, 10, &tol()).unwrap();
        let ts: Vec<f64> = s.steps.iter().map(|st| st.t).collect();
        assert_eq!(ts, vec![0.9, 0.3]);
        assert!(
            s.steps[0]
                .projection
                .dist(&Element::diagonal(&alg, &[vec![0.0, 1.0]]).unwrap())
                < 1e-15
        );
        assert!(s.residual < 1e-12);

        let a = Element::diagonal(&alg, &[vec![1.0, 0.7]]).unwrap();
        let s = spectral_staircase(&a, 1, &tol()).unwrap();
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.steps[0].t, 1.0);
        assert!(s.residual <= 1.0);

        assert!(spectral_staircase(&alg.scalar(1.5), 4, &tol()).is_err());
        assert!(spectral_staircase(&alg.scalar(0.5), 0, &tol()).is_err());
    }

    #[test]
    fn bisection_finds_frame_coefficient() {
        let base = Algebra::new(vec![1]).unwrap();
        for k in [0, 13, 50, 77, 100] {
            let t = k as f64 / 100.0;
            let beta = (t * (1.0f64 - t)).sqrt();
            let p = scalar_pattern(&base, [[1.0, 0.0], [0.0, 0.0]])
                .unwrap()
                .to_hermitian(&tol())
                .unwrap();
            let q = scalar_pattern(&base, [[t, beta], [beta, 1.0 - t]])
                .unwrap()
                .to_hermitian(&tol())
                .unwrap();
            let s = max_scaling_below(&p, &sup_with_half(&q, &tol()).unwrap(), 2.0, &tol()).unwrap();
            assert!((s - 1.0 / (2.0 - t)).abs() < 1e-8, "t={t}: {s}");
        }
    }
}

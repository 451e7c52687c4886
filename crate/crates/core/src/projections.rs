//! The projection lattice of a finite-dimensional algebra: meets and joins,
//! Murray–von Neumann comparison, the two-projection position and the
//! central type decomposition.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, CMat, Element, Tolerances, ONE};
use crate::error::{Error, Result};
use crate::interchange::cmat;

pub fn is_projection(p: &Element, tol: &Tolerances) -> bool {
    let Ok(h) = p.to_hermitian(tol) else {
        return false;
    };
    (&(&h * &h) - &h).opnorm() <= tol.eq_tol
}

/// Symmetrized copy of `p`, or [`Error::NotProjection`].
pub fn require_projection(p: &Element, tol: &Tolerances) -> Result<Element> {
    let h = p
        .to_hermitian(tol)
        .map_err(|_| Error::NotProjection(p.hermitian_defect()))?;
    let defect = (&(&h * &h) - &h).opnorm();
    if defect > tol.eq_tol {
        return Err(Error::NotProjection(defect));
    }
    Ok(h)
}

/// Orthonormal basis (as columns) of `{x : m x = 0}` with singular values
/// below `rank_tol` relative to the largest one.
fn null_space(m: &CMat, tol: &Tolerances) -> CMat {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.max().max(1.0);
    let mut cols = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol.rank_tol * smax {
            cols.push(vt.row(i).adjoint());
        }
    }
    debug_assert!(m.nrows() >= n, "wide inputs lose null directions");
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

fn column_projection(cols: &CMat) -> CMat {
    cols * cols.adjoint()
}

fn stacked(a: &CMat, b: &CMat) -> CMat {
    let n = a.ncols();
    let mut s = CMat::zeros(a.nrows() + b.nrows(), n);
    s.rows_mut(0, a.nrows()).copy_from(a);
    s.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    s
}

fn identity_like(m: &CMat) -> CMat {
    CMat::identity(m.nrows(), m.ncols())
}

/// Meet `p ∧ q`: projection onto `range(p) ∩ range(q)`.
pub fn proj_inf(p: &Element, q: &Element, tol: &Tolerances) -> Result<Element> {
    p.algebra().check_same(q.algebra())?;
    let p = require_projection(p, tol)?;
    let q = require_projection(q, tol)?;
    let blocks = p
        .blocks()
        .iter()
        .zip(q.blocks())
        .map(|(pb, qb)| {
            let i = identity_like(pb);
            column_projection(&null_space(&stacked(&(&i - pb), &(&i - qb)), tol))
        })
        .collect();
    Element::from_blocks_with(p.algebra().clone(), blocks, true, tol)
}

/// Join `p ∨ q`: projection onto `range(p) + range(q)`.
pub fn proj_sup(p: &Element, q: &Element, tol: &Tolerances) -> Result<Element> {
    let p = require_projection(p, tol)?;
    let q = require_projection(q, tol)?;
    Ok(proj_inf(&p.complement(), &q.complement(), tol)?.complement())
}

/// `pq = 0` within `eq_tol`.
pub fn orthogonal_direct(p: &Element, q: &Element, tol: &Tolerances) -> Result<bool> {
    p.algebra().check_same(q.algebra())?;
    let p = require_projection(p, tol)?;
    let q = require_projection(q, tol)?;
    Ok((&p * &q).opnorm() <= tol.eq_tol)
}

/// Rank of a projection in every block.
pub fn block_ranks(p: &Element, tol: &Tolerances) -> Result<Vec<usize>> {
    let p = require_projection(p, tol)?;
    Ok(p.blocks()
        .iter()
        .map(|b| b.trace().re.round().max(0.0) as usize)
        .collect())
}

/// `p ∼ q`: equal rank in every block.
pub fn mvn_equivalent(p: &Element, q: &Element, tol: &Tolerances) -> Result<bool> {
    p.algebra().check_same(q.algebra())?;
    Ok(block_ranks(p, tol)? == block_ranks(q, tol)?)
}

/// `p ⪯ q`: rank of `p` at most rank of `q` in every block.
pub fn mvn_subordinate(p: &Element, q: &Element, tol: &Tolerances) -> Result<bool> {
    p.algebra().check_same(q.algebra())?;
    let (rp, rq) = (block_ranks(p, tol)?, block_ranks(q, tol)?);
    Ok(rp.iter().zip(&rq).all(|(a, b)| a <= b))
}

/// A partial isometry `v` with `vvᴴ = p` and `vᴴv = q`, when `p ∼ q`.
pub fn mvn_partial_isometry(p: &Element, q: &Element, tol: &Tolerances) -> Result<Option<Element>> {
    if !mvn_equivalent(p, q, tol)? {
        return Ok(None);
    }
    let mut blocks = Vec::new();
    for (pb, qb) in p.blocks().iter().zip(q.blocks()) {
        let n = pb.nrows();
        let rp = range_basis(pb, tol);
        let rq = range_basis(qb, tol);
        blocks.push(if rp.ncols() == 0 {
            CMat::zeros(n, n)
        } else {
            &rp * rq.adjoint()
        });
    }
    Ok(Some(Element::from_blocks(p.algebra().clone(), blocks, false)?))
}

/// Orthonormal basis of the range of a projection block.
fn range_basis(pb: &CMat, tol: &Tolerances) -> CMat {
    null_space(&(identity_like(pb) - pb), tol)
}

/// One two-dimensional invariant subspace of the generic part. In the frame
/// `(e, f)`, `p = [[1,0],[0,0]]` and `q = [[t, √(t(1−t))],[√(t(1−t)), 1−t]]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericFrame {
    pub t: f64,
    pub block: usize,
    /// `n × 2` matrix with orthonormal columns `e ∈ range(p)`, `f ∈ range(p)⊥`.
    #[serde(with = "cmat")]
    pub frame: CMat,
}

impl GenericFrame {
    pub fn beta(&self) -> f64 {
        (self.t * (1.0 - self.t)).max(0.0).sqrt()
    }

    fn embed(&self, alg: &Algebra, small: [[f64; 2]; 2]) -> Element {
        let m = DMatrix::from_fn(2, 2, |i, j| Complex64::new(small[i][j], 0.0));
        let mut out = alg.zero().into_blocks();
        out[self.block] = &self.frame * m * self.frame.adjoint();
        Element::from_blocks(alg.clone(), out, true).expect("frame embedding is hermitian")
    }

    /// `e eᴴ`: the compression of `p` to this frame.
    pub fn p_part(&self, alg: &Algebra) -> Element {
        self.embed(alg, [[1.0, 0.0], [0.0, 0.0]])
    }

    pub fn q_part(&self, alg: &Algebra) -> Element {
        let b = self.beta();
        self.embed(alg, [[self.t, b], [b, 1.0 - self.t]])
    }

    /// Projection onto the whole frame.
    pub fn support(&self, alg: &Algebra) -> Element {
        self.embed(alg, [[1.0, 0.0], [0.0, 1.0]])
    }
}

/// The Halmos position of a pair of projections.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoProjectionPosition {
    pub p_and_q: Element,
    pub p_and_q_perp: Element,
    pub p_perp_and_q: Element,
    pub p_perp_and_q_perp: Element,
    pub generic: Vec<GenericFrame>,
}

impl TwoProjectionPosition {
    pub fn algebra(&self) -> &Algebra {
        self.p_and_q.algebra()
    }

    pub fn reconstruct_p(&self) -> Element {
        let alg = self.algebra();
        self.generic
            .iter()
            .fold(&self.p_and_q + &self.p_and_q_perp, |acc, g| &acc + &g.p_part(alg))
    }

    pub fn reconstruct_q(&self) -> Element {
        let alg = self.algebra();
        self.generic
            .iter()
            .fold(&self.p_and_q + &self.p_perp_and_q, |acc, g| &acc + &g.q_part(alg))
    }

    /// Corners plus frame supports; equals the unit when the decomposition is
    /// complete.
    pub fn resolution(&self) -> Element {
        let alg = self.algebra();
        let corners = &(&self.p_and_q + &self.p_and_q_perp) + &(&self.p_perp_and_q + &self.p_perp_and_q_perp);
        self.generic.iter().fold(corners, |acc, g| &acc + &g.support(alg))
    }
}

/// Splits a pair of projections into the four corner meets and a list of
/// two-dimensional generic frames with angle parameters `t ∈ (0, 1)`.
pub fn two_projection_position(p: &Element, q: &Element, tol: &Tolerances) -> Result<TwoProjectionPosition> {
    p.algebra().check_same(q.algebra())?;
    let p = require_projection(p, tol)?;
    let q = require_projection(q, tol)?;
    let (pc, qc) = (p.complement(), q.complement());
    let p_and_q = proj_inf(&p, &q, tol)?;
    let p_and_q_perp = proj_inf(&p, &qc, tol)?;
    let p_perp_and_q = proj_inf(&pc, &q, tol)?;
    let p_perp_and_q_perp = proj_inf(&pc, &qc, tol)?;

    // The generic part of p: p minus both corners below it.
    let p0 = &(&p - &p_and_q) - &p_and_q_perp;
    let compressed = &(&p0 * &q) * &p0;
    let spectra = compressed.to_hermitian(tol)?.spectra(tol)?;
    let cut = tol.rank_tol.max(tol.eq_tol);
    let mut generic = Vec::new();
    for (block, spec) in spectra.iter().enumerate() {
        let (pb, qb) = (p.block(block), q.block(block));
        let n = pb.nrows();
        for (k, &t) in spec.values.iter().enumerate() {
            if t <= cut || t >= 1.0 - cut {
                continue;
            }
            let e = spec.vectors.column(k).into_owned();
            // Align the eigenvector with p's range before building f.
            let e = pb * e;
            let e = &e / Complex64::new(e.norm(), 0.0);
            let qe = qb * &e;
            let beta = (t * (1.0 - t)).sqrt();
            let f = (&qe - &e * Complex64::new(t, 0.0)) / Complex64::new(beta, 0.0);
            let f = (identity_like(pb) - pb) * f;
            let f = &f / Complex64::new(f.norm(), 0.0);
            let mut frame = CMat::zeros(n, 2);
            frame.set_column(0, &e);
            frame.set_column(1, &f);
            generic.push(GenericFrame { t, block, frame });
        }
    }
    Ok(TwoProjectionPosition {
        p_and_q,
        p_and_q_perp,
        p_perp_and_q,
        p_perp_and_q_perp,
        generic,
    })
}

/// Central projections `p(n)` grouping the blocks of dimension `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypeDecomposition {
    pub by_dimension: BTreeMap<usize, Element>,
    /// Block dimension of each block, in order.
    pub classification: Vec<usize>,
    algebra: Algebra,
}

impl TypeDecomposition {
    /// `p(n)`; zero when no block has dimension `n`.
    pub fn central(&self, n: usize) -> Element {
        self.by_dimension
            .get(&n)
            .cloned()
            .unwrap_or_else(|| self.algebra.zero())
    }

    /// Indices of the blocks of dimension one (the commutative summand).
    pub fn abelian_blocks(&self) -> Vec<usize> {
        self.blocks_where(|n| n == 1)
    }

    pub fn non_abelian_blocks(&self) -> Vec<usize> {
        self.blocks_where(|n| n != 1)
    }

    fn blocks_where(&self, f: impl Fn(usize) -> bool) -> Vec<usize> {
        self.classification
            .iter()
            .enumerate()
            .filter(|(_, &n)| f(n))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn type_decomposition(alg: &Algebra) -> TypeDecomposition {
    let mut by_dimension: BTreeMap<usize, Element> = BTreeMap::new();
    for (i, &n) in alg.blocks().iter().enumerate() {
        let u = alg.block_unit(i);
        let entry = by_dimension.entry(n).or_insert_with(|| alg.zero());
        *entry = &*entry + &u;
    }
    TypeDecomposition {
        by_dimension,
        classification: alg.blocks().to_vec(),
        algebra: alg.clone(),
    }
}

/// Commutes with every matrix unit of the algebra.
pub fn is_central(p: &Element, tol: &Tolerances) -> Result<bool> {
    let p = require_projection(p, tol)?;
    for pb in p.blocks() {
        let n = pb.nrows();
        for j in 0..n {
            for k in 0..n {
                let mut e = CMat::zeros(n, n);
                e[(j, k)] = ONE;
                let comm = pb * &e - &e * pb;
                if comm.iter().map(|z| z.norm()).fold(0.0, f64::max) > tol.eq_tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Rank at most one in every block.
pub fn is_abelian_projection(p: &Element, tol: &Tolerances) -> Result<bool> {
    Ok(block_ranks(p, tol)?.iter().all(|&r| r <= 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rank_one(alg: &Algebra, block: usize, v: &[f64]) -> Element {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = v.len();
        let mut blocks = alg.zero().into_blocks();
        blocks[block] = CMat::from_fn(n, n, |i, j| c(v[i] * v[j] / (norm * norm)));
        Element::from_blocks(alg.clone(), blocks, true).unwrap()
    }

    #[test]
    fn projection_predicate() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert!(is_projection(&alg.unit(), &tol()));
        assert!(is_projection(
            &Element::diagonal(&alg, &[vec![1.0, 0.0]]).unwrap(),
            &tol()
        ));
        assert!(!is_projection(&alg.scalar(0.5), &tol()));
    }

    #[test]
    fn meet_and_join() {
        let alg = Algebra::new(vec![2]).unwrap();
        let p = rank_one(&alg, 0, &[1.0, 0.0]);
        assert!(proj_inf(&p, &p, &tol()).unwrap().dist(&p) < 1e-12);
        assert!(proj_sup(&p, &p, &tol()).unwrap().dist(&p) < 1e-12);

        let pc = p.complement();
        assert!(proj_inf(&p, &pc, &tol()).unwrap().is_zero(1e-12));
        assert!(proj_sup(&p, &pc, &tol()).unwrap().dist(&alg.unit()) < 1e-12);

        let q = rank_one(&alg, 0, &[1.0, 1.0]);
        assert!(proj_inf(&p, &q, &tol()).unwrap().is_zero(1e-12));
        assert!(proj_sup(&p, &q, &tol()).unwrap().dist(&alg.unit()) < 1e-12);

        assert!(matches!(
            proj_inf(&alg.scalar(0.5), &p, &tol()),
            Err(Error::NotProjection(_))
        ));
    }

    #[test]
    fn orthogonality() {
        let alg = Algebra::new(vec![2]).unwrap();
        let p = rank_one(&alg, 0, &[1.0, 0.0]);
        assert!(orthogonal_direct(&p, &p.complement(), &tol()).unwrap());
        assert!(!orthogonal_direct(&p, &p, &tol()).unwrap());
        // ‖pq‖ = √t in the frame; here t = cos²θ.
        let th: f64 = 1.2;
        let q = rank_one(&alg, 0, &[th.cos(), th.sin()]);
        let pq = (&p * &q).opnorm();
        assert!((pq - th.cos().abs()).abs() < 1e-12);
        assert!(!orthogonal_direct(&p, &q, &tol()).unwrap());
    }

    #[test]
    fn murray_von_neumann() {
        let alg = Algebra::new(vec![2, 2]).unwrap();
        let p = rank_one(&alg, 0, &[1.0, 0.0]);
        let q = rank_one(&alg, 0, &[0.3, -1.0]);
        assert!(mvn_equivalent(&p, &p, &tol()).unwrap());
        assert!(mvn_equivalent(&p, &q, &tol()).unwrap());
        assert!(!mvn_equivalent(&p, &alg.block_unit(0), &tol()).unwrap());
        assert!(mvn_subordinate(&p, &alg.block_unit(0), &tol()).unwrap());
        // Same rank, different block.
        assert!(!mvn_equivalent(&p, &rank_one(&alg, 1, &[1.0, 0.0]), &tol()).unwrap());

        let v = mvn_partial_isometry(&p, &q, &tol()).unwrap().unwrap();
        assert!((&v * &v.adjoint()).dist(&p) < 1e-12);
        assert!((&v.adjoint() * &v).dist(&q) < 1e-12);
    }

    #[test]
    fn position_of_commuting_pair() {
        let alg = Algebra::new(vec![3]).unwrap();
        let p = Element::diagonal(&alg, &[vec![1.0, 1.0, 0.0]]).unwrap();
        let q = Element::diagonal(&alg, &[vec![0.0, 1.0, 1.0]]).unwrap();
        let pos = two_projection_position(&p, &q, &tol()).unwrap();
        assert!(pos.generic.is_empty());
        assert!(
            pos.p_and_q
                .dist(&Element::diagonal(&alg, &[vec![0.0, 1.0, 0.0]]).unwrap())
                < 1e-12
        );
        assert!(
            pos.p_and_q_perp
                .dist(&Element::diagonal(&alg, &[vec![1.0, 0.0, 0.0]]).unwrap())
                < 1e-12
        );
        assert!(
            pos.p_perp_and_q
                .dist(&Element::diagonal(&alg, &[vec![0.0, 0.0, 1.0]]).unwrap())
                < 1e-12
        );
        assert!(pos.p_perp_and_q_perp.is_zero(1e-12));
    }

    #[test]
    fn position_of_rotated_line() {
        let alg = Algebra::new(vec![2]).unwrap();
        let th: f64 = 0.7;
        let p = rank_one(&alg, 0, &[1.0, 0.0]);
        let q = rank_one(&alg, 0, &[th.cos(), th.sin()]);
        let pos = two_projection_position(&p, &q, &tol()).unwrap();
        assert_eq!(pos.generic.len(), 1);
        assert!((pos.generic[0].t - th.cos().powi(2)).abs() < 1e-12);
        assert!(pos.reconstruct_p().dist(&p) < 1e-12);
        assert!(pos.reconstruct_q().dist(&q) < 1e-12);
        assert!(pos.resolution().dist(&alg.unit()) < 1e-12);
    }

    #[test]
    fn position_of_orthogonal_pair() {
        let alg = Algebra::new(vec![2]).unwrap();
        let p = rank_one(&alg, 0, &[1.0, 2.0]);
        let pos = two_projection_position(&p, &p.complement(), &tol()).unwrap();
        assert!(pos.generic.is_empty());
        assert!(pos.p_and_q.is_zero(1e-12));
    }

    #[test]
    fn type_decompositions() {
        let alg = Algebra::new(vec![1, 1, 3]).unwrap();
        let td = type_decomposition(&alg);
        assert_eq!(
            td.central(1),
            Element::diagonal(&alg, &[vec![1.0], vec![1.0], vec![0.0; 3]]).unwrap()
        );
        assert_eq!(
            td.central(3),
            Element::diagonal(&alg, &[vec![0.0], vec![0.0], vec![1.0; 3]]).unwrap()
        );
        assert_eq!(td.abelian_blocks(), vec![0, 1]);

        let m2 = Algebra::new(vec![2]).unwrap();
        assert!(type_decomposition(&m2).central(1).is_zero(0.0));

        let alg = Algebra::new(vec![1, 2, 2]).unwrap();
        let td = type_decomposition(&alg);
        assert_eq!(
            td.central(2),
            Element::diagonal(&alg, &[vec![0.0], vec![1.0; 2], vec![1.0; 2]]).unwrap()
        );
        let total = td.by_dimension.values().fold(alg.zero(), |acc, p| &acc + p);
        assert_eq!(total, alg.unit());
    }

    #[test]
    fn central_and_abelian() {
        let alg = Algebra::new(vec![1, 2]).unwrap();
        let p1 = type_decomposition(&alg).central(1);
        assert!(is_central(&p1, &tol()).unwrap());
        let r = rank_one(&alg, 1, &[1.0, -1.0]);
        assert!(is_abelian_projection(&r, &tol()).unwrap());
        assert!(!is_central(&r, &tol()).unwrap());

        let m3 = Algebra::new(vec![3]).unwrap();
        assert!(is_central(&m3.unit(), &tol()).unwrap());
        assert!(!is_abelian_projection(&m3.unit(), &tol()).unwrap());
    }
}

//! Finite-dimensional C*-algebras `M_{n_1} ⊕ … ⊕ M_{n_k}` and their elements.
//!
//! Elements are stored as one dense complex matrix per block. Everything that
//! depends on the Loewner order goes through a per-block hermitian
//! eigendecomposition, with tolerances scaled by the operator norm.

use std::env;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerances used by every order and spectral decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub psd_tol: f64,
    pub herm_tol: f64,
    pub eq_tol: f64,
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd_tol: 1e-9,
            herm_tol: 1e-10,
            eq_tol: 1e-8,
            rank_tol: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(psd_tol: f64, herm_tol: f64, eq_tol: f64, rank_tol: f64) -> Result<Self> {
        let tol = Tolerances {
            psd_tol,
            herm_tol,
            eq_tol,
            rank_tol,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("psd_tol", self.psd_tol),
            ("herm_tol", self.herm_tol),
            ("eq_tol", self.eq_tol),
            ("rank_tol", self.rank_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Defaults overridden by `LOEWNER_TOL_PSD`, `LOEWNER_TOL_HERM`,
    /// `LOEWNER_TOL_EQ` and `LOEWNER_TOL_RANK` when set.
    pub fn from_env() -> Result<Self> {
        let mut tol = Tolerances::default();
        for (var, slot) in [
            ("LOEWNER_TOL_PSD", &mut tol.psd_tol),
            ("LOEWNER_TOL_HERM", &mut tol.herm_tol),
            ("LOEWNER_TOL_EQ", &mut tol.eq_tol),
            ("LOEWNER_TOL_RANK", &mut tol.rank_tol),
        ] {
            if let Ok(raw) = env::var(var) {
                *slot = raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("{var}={raw:?} is not a number")))?;
            }
        }
        tol.validate()?;
        Ok(tol)
    }
}

/// A finite direct sum of full matrix algebras, identified by its block sizes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AlgebraRepr", into = "AlgebraRepr")]
pub struct Algebra {
    blocks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraRepr {
    blocks: Vec<usize>,
}

impl TryFrom<AlgebraRepr> for Algebra {
    type Error = Error;
    fn try_from(r: AlgebraRepr) -> Result<Self> {
        Algebra::new(r.blocks)
    }
}

impl From<Algebra> for AlgebraRepr {
    fn from(a: Algebra) -> Self {
        AlgebraRepr { blocks: a.blocks }
    }
}

impl Algebra {
    pub const DEFAULT_DIMENSION_CAP: usize = 256;

    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        Self::with_cap(blocks, Self::DEFAULT_DIMENSION_CAP)
    }

    /// `cap` bounds the complex dimension `Σ nᵢ²`.
    pub fn with_cap(blocks: Vec<usize>, cap: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("at least one block is required".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidAlgebra("block dimensions must be positive".into()));
        }
        let dim: usize = blocks.iter().map(|n| n * n).sum();
        if dim > cap {
            return Err(Error::InvalidAlgebra(format!(
                "total dimension {dim} exceeds the cap {cap}"
            )));
        }
        Ok(Algebra { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Complex dimension `Σ nᵢ²`, which is also the real dimension of the
    /// hermitian part.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    /// The subalgebra made of the listed blocks, in the given order.
    pub fn sub_algebra(&self, indices: &[usize]) -> Result<Algebra> {
        Algebra::new(indices.iter().map(|&i| self.blocks[i]).collect())
    }

    pub fn check_same(&self, other: &Algebra) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch {
                left: self.blocks.clone(),
                right: other.blocks.clone(),
            })
        }
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect(),
            hermitian: true,
        }
    }

    pub fn unit(&self) -> Element {
        self.scalar(1.0)
    }

    pub fn scalar(&self, s: f64) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|&n| CMat::identity(n, n) * Complex64::new(s, 0.0))
                .collect(),
            hermitian: true,
        }
    }

    /// Unit of block `i`, i.e. the minimal central projection supported there.
    pub fn block_unit(&self, i: usize) -> Element {
        let mut e = self.zero();
        e.blocks[i] = CMat::identity(self.blocks[i], self.blocks[i]);
        e
    }

    /// Orthonormal basis of the hermitian part for `⟨x, y⟩ = Re tr(xy)`:
    /// per block `E_jj`, `(E_jk + E_kj)/√2` and `i(E_jk − E_kj)/√2` for `j < k`.
    pub fn hermitian_basis(&self) -> Vec<Element> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(self.dimension());
        for (b, &n) in self.blocks.iter().enumerate() {
            for j in 0..n {
                let mut e = self.zero();
                e.blocks[b][(j, j)] = ONE;
                out.push(e);
                for k in (j + 1)..n {
                    let mut s = self.zero();
                    s.blocks[b][(j, k)] = Complex64::new(r, 0.0);
                    s.blocks[b][(k, j)] = Complex64::new(r, 0.0);
                    out.push(s);
                    let mut a = self.zero();
                    a.blocks[b][(j, k)] = Complex64::new(0.0, r);
                    a.blocks[b][(k, j)] = Complex64::new(0.0, -r);
                    out.push(a);
                }
            }
        }
        out
    }

    /// Coordinates of a hermitian element in [`Algebra::hermitian_basis`].
    pub fn hermitian_coords(&self, h: &Element) -> Result<DVector<f64>> {
        self.check_same(&h.algebra)?;
        let r = std::f64::consts::SQRT_2;
        let mut v = Vec::with_capacity(self.dimension());
        for (b, &n) in self.blocks.iter().enumerate() {
            let m = &h.blocks[b];
            for j in 0..n {
                v.push(m[(j, j)].re);
                for k in (j + 1)..n {
                    // Re tr(S h) and Re tr(A h) for the two off-diagonal basis elements.
                    v.push(r * 0.5 * (m[(j, k)].re + m[(k, j)].re));
                    v.push(r * 0.5 * (m[(j, k)].im - m[(k, j)].im));
                }
            }
        }
        Ok(DVector::from_vec(v))
    }

    pub fn from_hermitian_coords(&self, coords: &DVector<f64>) -> Result<Element> {
        if coords.len() != self.dimension() {
            return Err(Error::Shape(format!(
                "expected {} hermitian coordinates, got {}",
                self.dimension(),
                coords.len()
            )));
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = self.zero();
        let mut idx = 0;
        for (b, &n) in self.blocks.iter().enumerate() {
            let m = &mut out.blocks[b];
            for j in 0..n {
                m[(j, j)] = Complex64::new(coords[idx], 0.0);
                idx += 1;
                for k in (j + 1)..n {
                    let (s, a) = (coords[idx], coords[idx + 1]);
                    idx += 2;
                    m[(j, k)] = Complex64::new(r * s, r * a);
                    m[(k, j)] = Complex64::new(r * s, -r * a);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

/// Spectral data of one hermitian block: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

/// A block-diagonal element of an [`Algebra`].
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    algebra: Algebra,
    blocks: Vec<CMat>,
    hermitian: bool,
}

fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn hermitian_defect(m: &CMat) -> f64 {
    frob(&(m - m.adjoint())) / (1.0 + frob(m))
}

fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

impl Element {
    /// Builds an element from per-block matrices. With `hermitian` set the
    /// blocks must be hermitian within the default `herm_tol`; they are then
    /// symmetrized.
    pub fn from_blocks(algebra: Algebra, blocks: Vec<CMat>, hermitian: bool) -> Result<Self> {
        Self::from_blocks_with(algebra, blocks, hermitian, &Tolerances::default())
    }

    pub fn from_blocks_with(algebra: Algebra, blocks: Vec<CMat>, hermitian: bool, tol: &Tolerances) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "{} blocks given for an algebra with {} blocks",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (i, (m, &n)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Shape(format!(
                    "block {i} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Shape(format!("block {i} has non-finite entries")));
            }
        }
        let e = Element {
            algebra,
            blocks,
            hermitian: false,
        };
        if hermitian {
            e.to_hermitian(tol)
        } else {
            Ok(e)
        }
    }

    /// Block-diagonal matrices infer their algebra from the block shapes.
    pub fn from_matrices(blocks: Vec<CMat>, hermitian: bool) -> Result<Self> {
        let dims = blocks.iter().map(|m| m.nrows()).collect();
        Self::from_blocks(Algebra::new(dims)?, blocks, hermitian)
    }

    /// Hermitian element whose blocks are real diagonal matrices.
    pub fn diagonal(algebra: &Algebra, diagonals: &[Vec<f64>]) -> Result<Self> {
        if diagonals.len() != algebra.num_blocks() {
            return Err(Error::Shape("one diagonal per block is required".into()));
        }
        let mut blocks = Vec::with_capacity(diagonals.len());
        for (d, &n) in diagonals.iter().zip(algebra.blocks()) {
            if d.len() != n {
                return Err(Error::Shape(format!(
                    "diagonal of length {} for block of size {n}",
                    d.len()
                )));
            }
            blocks.push(CMat::from_diagonal(&DVector::from_iterator(
                n,
                d.iter().map(|&x| Complex64::new(x, 0.0)),
            )));
        }
        Self::from_blocks(algebra.clone(), blocks, true)
    }

    /// Hermitian element from real symmetric per-block matrices given row-major.
    pub fn real_symmetric(algebra: &Algebra, rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let blocks = rows
            .iter()
            .map(|b| {
                let n = b.len();
                CMat::from_fn(n, n, |i, j| {
                    Complex64::new(b[i].get(j).copied().unwrap_or(f64::NAN), 0.0)
                })
            })
            .collect();
        Self::from_blocks(algebra.clone(), blocks, true)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks.iter().map(hermitian_defect).fold(0.0, f64::max)
    }

    /// Symmetrized copy with the hermitian flag set, or an error when the
    /// asymmetry exceeds `herm_tol`.
    pub fn to_hermitian(&self, tol: &Tolerances) -> Result<Element> {
        if self.hermitian {
            return Ok(self.clone());
        }
        let defect = self.hermitian_defect();
        if defect > tol.herm_tol {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(symmetrize).collect(),
            hermitian: true,
        })
    }

    fn map_blocks(&self, hermitian: bool, f: impl Fn(&CMat) -> CMat) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
            hermitian,
        }
    }

    fn zip_blocks(&self, other: &Element, hermitian: bool, f: impl Fn(&CMat, &CMat) -> CMat) -> Element {
        assert_eq!(self.algebra, other.algebra, "algebra mismatch");
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
            hermitian,
        }
    }

    pub fn scale(&self, s: f64) -> Element {
        let s = Complex64::new(s, 0.0);
        self.map_blocks(self.hermitian, |m| m * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Element {
        self.map_blocks(self.hermitian && s.im == 0.0, |m| m * s)
    }

    pub fn adjoint(&self) -> Element {
        self.map_blocks(self.hermitian, |m| m.adjoint())
    }

    /// Entrywise transpose in every block (no conjugation).
    pub fn transpose(&self) -> Element {
        self.map_blocks(self.hermitian, |m| m.transpose())
    }

    /// `a + s·1`.
    pub fn add_scalar(&self, s: f64) -> Element {
        let s = Complex64::new(s, 0.0);
        self.map_blocks(self.hermitian, |m| {
            let n = m.nrows();
            m + CMat::identity(n, n) * s
        })
    }

    /// `1 − a`.
    pub fn complement(&self) -> Element {
        self.neg().add_scalar(1.0)
    }

    /// `b·a·b`, hermitian when both factors are.
    pub fn congruence_by(&self, b: &Element) -> Element {
        let herm = self.hermitian && b.hermitian;
        let out = b.zip_blocks(self, false, |bb, aa| bb * aa * bb);
        if herm {
            out.map_blocks(true, symmetrize)
        } else {
            out
        }
    }

    /// `mᴴ·a·m`.
    pub fn adjoint_congruence_by(&self, m: &Element) -> Element {
        let herm = self.hermitian;
        let out = m.zip_blocks(self, false, |mm, aa| mm.adjoint() * aa * mm);
        if herm {
            out.map_blocks(true, symmetrize)
        } else {
            out
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|m| m.trace()).sum()
    }

    /// Frobenius norm over all blocks.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Operator norm: the largest singular value over all blocks.
    pub fn opnorm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| {
                if m.nrows() == 1 {
                    m[(0, 0)].norm()
                } else {
                    m.clone().singular_values().max()
                }
            })
            .fold(0.0, f64::max)
    }

    /// `‖a − b‖` in operator norm.
    pub fn dist(&self, other: &Element) -> f64 {
        (self - other).opnorm()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.opnorm() <= tol
    }

    /// Per-block spectra of the symmetrized element.
    pub fn spectra(&self, tol: &Tolerances) -> Result<Vec<BlockSpectrum>> {
        let h = self.to_hermitian(tol)?;
        Ok(h.blocks
            .iter()
            .map(|m| {
                let n = m.nrows();
                if n == 1 {
                    return BlockSpectrum {
                        values: DVector::from_element(1, m[(0, 0)].re),
                        vectors: CMat::identity(1, 1),
                    };
                }
                let eig = SymmetricEigen::new(m.clone());
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                BlockSpectrum {
                    values: DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i])),
                    vectors: CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
                }
            })
            .collect())
    }

    pub fn eigenvalues(&self, tol: &Tolerances) -> Result<Vec<f64>> {
        let mut all: Vec<f64> = self
            .spectra(tol)?
            .into_iter()
            .flat_map(|s| s.values.iter().copied().collect::<Vec<_>>())
            .collect();
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    pub fn lambda_min(&self, tol: &Tolerances) -> Result<f64> {
        Ok(self
            .spectra(tol)?
            .iter()
            .map(|s| s.values[0])
            .fold(f64::INFINITY, f64::min))
    }

    pub fn lambda_max(&self, tol: &Tolerances) -> Result<f64> {
        Ok(self
            .spectra(tol)?
            .iter()
            .map(|s| s.values[s.values.len() - 1])
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `0 ≤ a` up to `psd_tol·max(1, ‖a‖)`.
    pub fn is_positive(&self, tol: &Tolerances) -> Result<bool> {
        let lmin = self.lambda_min(tol)?;
        Ok(lmin >= -tol.psd_tol * self.opnorm().max(1.0))
    }

    /// `0 < a`: smallest eigenvalue above `psd_tol·max(1, ‖a‖)`.
    pub fn is_strictly_positive(&self, tol: &Tolerances) -> Result<bool> {
        let lmin = self.lambda_min(tol)?;
        Ok(lmin > tol.psd_tol * self.opnorm().max(1.0))
    }

    /// Applies `f` to the spectrum of every block.
    pub fn funcalc(&self, tol: &Tolerances, f: impl Fn(f64) -> f64) -> Result<Element> {
        let spectra = self.spectra(tol)?;
        let mut blocks = Vec::with_capacity(spectra.len());
        for s in spectra {
            let mut fv = Vec::with_capacity(s.values.len());
            for &lam in s.values.iter() {
                let y = f(lam);
                if !y.is_finite() {
                    return Err(Error::FunctionUndefined(lam));
                }
                fv.push(Complex64::new(y, 0.0));
            }
            let d = CMat::from_diagonal(&DVector::from_vec(fv));
            blocks.push(symmetrize(&(&s.vectors * d * s.vectors.adjoint())));
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
            hermitian: true,
        })
    }

    fn positive_spectrum_gate(&self, tol: &Tolerances) -> Result<()> {
        let lmin = self.lambda_min(tol)?;
        if lmin < -tol.psd_tol * self.opnorm().max(1.0) {
            return Err(Error::NotPositive(lmin));
        }
        Ok(())
    }

    fn invertible_gate(&self, tol: &Tolerances) -> Result<()> {
        let scale = self.opnorm().max(1.0);
        let smallest = self
            .eigenvalues(tol)?
            .into_iter()
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min);
        if smallest <= tol.psd_tol * scale {
            return Err(Error::Singular(smallest));
        }
        Ok(())
    }

    /// Positive square root; eigenvalues within the positivity slack are
    /// clamped to zero.
    pub fn sqrt_pos(&self, tol: &Tolerances) -> Result<Element> {
        self.positive_spectrum_gate(tol)?;
        self.funcalc(tol, |x| x.max(0.0).sqrt())
    }

    /// Inverse of an invertible hermitian element.
    pub fn inverse(&self, tol: &Tolerances) -> Result<Element> {
        self.invertible_gate(tol)?;
        self.funcalc(tol, |x| 1.0 / x)
    }

    /// `a^r` for positive `a`; negative exponents need invertibility.
    pub fn power(&self, r: f64, tol: &Tolerances) -> Result<Element> {
        self.positive_spectrum_gate(tol)?;
        if r < 0.0 {
            self.invertible_gate(tol)?;
        }
        self.funcalc(tol, |x| x.max(0.0).powf(r))
    }

    /// Spectral projection onto eigenvalues with `|λ| > rank_tol·‖a‖`.
    pub fn range_projection(&self, tol: &Tolerances) -> Result<Element> {
        let norm = self.opnorm();
        if norm == 0.0 {
            return Ok(self.algebra.zero());
        }
        let cut = tol.rank_tol * norm;
        self.funcalc(tol, |x| if x.abs() > cut { 1.0 } else { 0.0 })
    }

    /// `½(ab + ba)`.
    pub fn jordan_product(&self, other: &Element) -> Result<Element> {
        self.algebra.check_same(&other.algebra)?;
        let herm = self.hermitian && other.hermitian;
        let out = self.zip_blocks(other, false, |a, b| (a * b + b * a) * Complex64::new(0.5, 0.0));
        Ok(if herm { out.map_blocks(true, symmetrize) } else { out })
    }

    /// Restriction to a subset of blocks, as an element of the sub-algebra.
    pub fn restrict(&self, indices: &[usize]) -> Result<Element> {
        let alg = self.algebra.sub_algebra(indices)?;
        Ok(Element {
            algebra: alg,
            blocks: indices.iter().map(|&i| self.blocks[i].clone()).collect(),
            hermitian: self.hermitian,
        })
    }

    /// Replaces the listed blocks of `self` with the blocks of `part`.
    pub fn with_blocks_from(&self, indices: &[usize], part: &Element) -> Result<Element> {
        if indices.len() != part.algebra.num_blocks() {
            return Err(Error::Shape("index list does not match the part".into()));
        }
        let mut out = self.clone();
        for (k, &i) in indices.iter().enumerate() {
            if self.algebra.blocks[i] != part.algebra.blocks[k] {
                return Err(Error::Shape(format!("block {i} has a different size in the part")));
            }
            out.blocks[i] = part.blocks[k].clone();
        }
        out.hermitian = self.hermitian && part.hermitian;
        Ok(out)
    }

    /// Returns a copy with the hermitian flag cleared, for inputs that must
    /// go through the numeric check again.
    pub fn forget_hermitian(mut self) -> Element {
        self.hermitian = false;
        self
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.zip_blocks(rhs, self.hermitian && rhs.hermitian, |a, b| a + b)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.zip_blocks(rhs, self.hermitian && rhs.hermitian, |a, b| a - b)
    }
}

/// Block-wise matrix product. Panics on algebra mismatch.
impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.zip_blocks(rhs, false, |a, b| a * b)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

/// `a ≤ b` in the Loewner order.
pub fn leq(a: &Element, b: &Element, tol: &Tolerances) -> Result<bool> {
    a.algebra.check_same(&b.algebra)?;
    let a = a.to_hermitian(tol)?;
    let b = b.to_hermitian(tol)?;
    (&b - &a).is_positive(tol)
}

/// `a < b`, i.e. `b − a` positive invertible.
pub fn lt_strict(a: &Element, b: &Element, tol: &Tolerances) -> Result<bool> {
    a.algebra.check_same(&b.algebra)?;
    let a = a.to_hermitian(tol)?;
    let b = b.to_hermitian(tol)?;
    (&b - &a).is_strictly_positive(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn algebra_validation() {
        assert!(Algebra::new(vec![]).is_err());
        assert!(Algebra::new(vec![2, 0]).is_err());
        assert!(Algebra::new(vec![16]).is_ok());
        assert!(Algebra::new(vec![16, 1]).is_err());
        assert!(Algebra::with_cap(vec![3, 3], 17).is_err());
        assert_eq!(Algebra::new(vec![2, 3]).unwrap().dimension(), 13);
    }

    #[test]
    fn unit_blocks() {
        let a = Algebra::new(vec![1, 3]).unwrap();
        let u = a.unit();
        assert_eq!(u.block(0), &CMat::identity(1, 1));
        assert_eq!(u.block(1), &CMat::identity(3, 3));
        assert!(u.is_hermitian_flagged());
        let uu = u.jordan_product(&u).unwrap();
        assert_eq!(uu, u);
    }

    #[test]
    fn jordan_product_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        let x = Element::real_symmetric(&alg, &[vec![vec![0.0, 1.0], vec![1.0, 0.0]]]).unwrap();
        let z = Element::diagonal(&alg, &[vec![1.0, -1.0]]).unwrap();
        assert!(x.jordan_product(&z).unwrap().is_zero(1e-15));
        assert_eq!(alg.unit().jordan_product(&x).unwrap(), x);

        let a = Element::diagonal(&alg, &[vec![2.0, 3.0]]).unwrap();
        let b = Element::diagonal(&alg, &[vec![5.0, -1.0]]).unwrap();
        let p = a.jordan_product(&b).unwrap();
        assert_eq!(p, Element::diagonal(&alg, &[vec![10.0, -3.0]]).unwrap());

        let other = Algebra::new(vec![1, 1]).unwrap();
        assert!(matches!(
            a.jordan_product(&other.unit()),
            Err(Error::AlgebraMismatch { .. })
        ));
    }

    #[test]
    fn jordan_product_hermitian_flag() {
        let alg = Algebra::new(vec![2]).unwrap();
        let h = alg.unit();
        let m = Element::from_blocks(
            alg.clone(),
            vec![CMat::from_row_slice(2, 2, &[ONE, ONE, Complex64::new(0.0, 0.0), ONE])],
            false,
        )
        .unwrap();
        assert!(h.jordan_product(&h).unwrap().is_hermitian_flagged());
        assert!(!h.jordan_product(&m).unwrap().is_hermitian_flagged());
    }

    #[test]
    fn positivity_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert!(alg.unit().is_positive(&tol()).unwrap());
        let d = Element::diagonal(&alg, &[vec![1.0, -0.001]]).unwrap();
        assert!(!d.is_positive(&tol()).unwrap());

        let nonherm = Element::from_blocks(
            alg.clone(),
            vec![CMat::from_row_slice(2, 2, &[ONE, ONE, Complex64::new(0.0, 0.0), ONE])],
            false,
        )
        .unwrap();
        assert!(matches!(nonherm.is_positive(&tol()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn gram_matrix_is_positive() {
        let alg = Algebra::new(vec![3]).unwrap();
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(1.0, 2.0),
                c(-0.5, 0.0),
                c(0.3, -1.0),
                c(0.0, 0.0),
                c(2.0, 1.0),
                c(1.0, 1.0),
                c(-3.0, 0.5),
                c(0.2, 0.2),
                c(0.1, 0.0),
            ],
        );
        let g = Element::from_blocks(alg, vec![m.adjoint() * &m], true).unwrap();
        assert!(g.is_positive(&tol()).unwrap());
    }

    #[test]
    fn order_examples() {
        let alg = Algebra::new(vec![2, 1]).unwrap();
        let a = Element::diagonal(&alg, &[vec![0.2, -0.7], vec![3.0]]).unwrap();
        assert!(leq(&a, &a, &tol()).unwrap());
        assert!(!lt_strict(&a, &a, &tol()).unwrap());
        assert!(lt_strict(&alg.zero(), &alg.unit(), &tol()).unwrap());

        let p = Element::diagonal(&alg, &[vec![1.0, 0.0], vec![1.0]]).unwrap();
        assert!(leq(&p, &alg.unit(), &tol()).unwrap());
        assert!(!lt_strict(&p, &alg.unit(), &tol()).unwrap());
        assert!(lt_strict(&alg.zero(), &alg.unit(), &tol()).unwrap());
    }

    #[test]
    fn opnorm_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert_abs_diff_eq!(alg.unit().opnorm(), 1.0, epsilon = 1e-15);
        let d = Element::diagonal(&alg, &[vec![3.0, -5.0]]).unwrap();
        assert_abs_diff_eq!(d.opnorm(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn funcalc_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        let a = Element::diagonal(&alg, &[vec![0.0, 2f64.ln()]]).unwrap();
        let e = a.funcalc(&tol(), f64::exp).unwrap();
        assert!(e.dist(&Element::diagonal(&alg, &[vec![1.0, 2.0]]).unwrap()) < 1e-14);
        assert!(a.funcalc(&tol(), |x| x).unwrap().dist(&a) < 1e-15);
        let neg = Element::diagonal(&alg, &[vec![-1.0, 1.0]]).unwrap();
        assert!(matches!(neg.funcalc(&tol(), f64::ln), Err(Error::FunctionUndefined(_))));
    }

    #[test]
    fn specializations() {
        let alg = Algebra::new(vec![2]).unwrap();
        assert!(alg.unit().sqrt_pos(&tol()).unwrap().dist(&alg.unit()) < 1e-15);
        let d = Element::diagonal(&alg, &[vec![2.0, 4.0]]).unwrap();
        let inv = d.inverse(&tol()).unwrap();
        assert!(inv.dist(&Element::diagonal(&alg, &[vec![0.5, 0.25]]).unwrap()) < 1e-15);
        assert!(matches!(
            Element::diagonal(&alg, &[vec![0.0, 1.0]]).unwrap().inverse(&tol()),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            Element::diagonal(&alg, &[vec![-1.0, 1.0]]).unwrap().sqrt_pos(&tol()),
            Err(Error::NotPositive(_))
        ));
        let p = d.power(-0.5, &tol()).unwrap();
        let expect = Element::diagonal(&alg, &[vec![2f64.powf(-0.5), 0.5]]).unwrap();
        assert!(p.dist(&expect) < 1e-15);
    }

    #[test]
    fn range_projection_examples() {
        let alg = Algebra::new(vec![2]).unwrap();
        let a = Element::diagonal(&alg, &[vec![2.0, -1.0]]).unwrap();
        assert!(a.range_projection(&tol()).unwrap().dist(&alg.unit()) < 1e-14);
        assert!(alg.zero().range_projection(&tol()).unwrap().is_zero(0.0));

        let v = [c(1.0, 1.0), c(2.0, -0.5)];
        let m = CMat::from_fn(2, 2, |i, j| v[i] * v[j].conj());
        let vv = Element::from_blocks(alg.clone(), vec![m.clone()], true).unwrap();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let expect = Element::from_blocks(alg, vec![m / c(norm2, 0.0)], true).unwrap();
        let rp = vv.range_projection(&tol()).unwrap();
        assert!(rp.dist(&expect) < 1e-12);
        assert!((&rp * &vv).dist(&vv) < 1e-12);
    }

    #[test]
    fn hermitian_coords_roundtrip() {
        let alg = Algebra::new(vec![1, 3]).unwrap();
        let basis = alg.hermitian_basis();
        assert_eq!(basis.len(), alg.dimension());
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                let ip = (bi * bj).trace().re;
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
            let coords = alg.hermitian_coords(bi).unwrap();
            assert_abs_diff_eq!(coords[i], 1.0, epsilon = 1e-15);
            assert!(alg.from_hermitian_coords(&coords).unwrap().dist(bi) < 1e-15);
        }
    }

    #[test]
    fn tolerances_reject_nonpositive() {
        assert!(Tolerances::new(0.0, 1e-10, 1e-8, 1e-9).is_err());
        assert!(Tolerances::new(1e-9, 1e-10, 1e-8, 1e-9).is_ok());
    }
}

//! Recovery of canonical parameters from black-box order isomorphisms.
//!
//! Every procedure here only evaluates the supplied callbacks; the
//! returned records carry the residuals of the certificates that were
//! checked, and a procedure fails with [`Error::Certificate`] when one of
//! them exceeds its budget.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::algebra::{Algebra, CMat, Element, Tolerances};
use crate::error::{Error, Result};
use crate::interval::IntervalKind;
use crate::maps::{JordanSpec, MapNode, OrderIsoExpr};
use crate::random::{self, trial_rng, TrialRng};

/// Residual budget for linearity, Jordan and reconstruction certificates.
pub const RESIDUAL_BUDGET: f64 = 1e-6;

pub type MapFn = Arc<dyn Fn(&Element) -> Result<Element> + Send + Sync>;

/// `‖x − y‖ / max(1, ‖y‖)` in operator norm.
pub fn rel_dist(x: &Element, y: &Element) -> f64 {
    x.dist(y) / y.opnorm().max(1.0)
}

/// A map between operator intervals known only through callbacks.
#[derive(Clone)]
pub struct BlackBoxMap {
    source: Algebra,
    target: Algebra,
    kind: IntervalKind,
    target_kind: IntervalKind,
    forward: MapFn,
    backward: Option<MapFn>,
    tol: Tolerances,
}

impl fmt::Debug for BlackBoxMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxMap")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("kind", &self.kind)
            .field("target_kind", &self.target_kind)
            .field("has_inverse", &self.backward.is_some())
            .finish()
    }
}

impl BlackBoxMap {
    /// Number of interval members pushed through a callback on construction.
    pub const PROBES: usize = 10;
    const PROBE_SEED: u64 = 0x0b1a_cb0c;

    pub fn new(
        source: Algebra,
        target: Algebra,
        kind: IntervalKind,
        target_kind: IntervalKind,
        forward: impl Fn(&Element) -> Result<Element> + Send + Sync + 'static,
        tol: &Tolerances,
    ) -> Result<Self> {
        let map = BlackBoxMap {
            source,
            target,
            kind,
            target_kind,
            forward: Arc::new(forward),
            backward: None,
            tol: *tol,
        };
        let mut rng = trial_rng(Self::PROBE_SEED, 0);
        for _ in 0..Self::PROBES {
            let a = random::interval_element(&mut rng, &map.source, map.kind, 1.0);
            map.eval(&a)?;
        }
        Ok(map)
    }

    pub fn with_inverse(
        mut self,
        backward: impl Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    ) -> Result<Self> {
        self.backward = Some(Arc::new(backward));
        let mut rng = trial_rng(Self::PROBE_SEED, 1);
        for _ in 0..Self::PROBES {
            let b = random::interval_element(&mut rng, &self.target, self.target_kind, 1.0);
            self.eval_inverse(&b)?;
        }
        Ok(self)
    }

    /// Wraps an expression; its inverse expression becomes the inverse
    /// callback.
    pub fn from_expr(expr: &OrderIsoExpr, source: &Algebra, tol: &Tolerances) -> Result<Self> {
        let target = expr.target_algebra().unwrap_or_else(|| source.clone());
        if let Some(s) = expr.source_algebra() {
            s.check_same(source)?;
        }
        let fwd = expr.clone();
        let inv = expr.inverse()?;
        let t = *tol;
        BlackBoxMap::new(
            source.clone(),
            target,
            expr.source_interval(),
            expr.target_interval(),
            move |a| fwd.evaluate(a, &t),
            tol,
        )?
        .with_inverse(move |b| inv.evaluate(b, &t))
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn kind(&self) -> IntervalKind {
        self.kind
    }

    pub fn target_kind(&self) -> IntervalKind {
        self.target_kind
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn has_inverse(&self) -> bool {
        self.backward.is_some()
    }

    fn checked(
        f: &MapFn,
        a: &Element,
        (src, src_kind): (&Algebra, IntervalKind),
        (tgt, tgt_kind): (&Algebra, IntervalKind),
        tol: &Tolerances,
    ) -> Result<Element> {
        src.check_same(a.algebra())?;
        let a = src_kind.require(a, tol)?;
        let out = f(&a)?;
        tgt.check_same(out.algebra())?;
        out.to_hermitian(tol)
            .ok()
            .filter(|h| tgt_kind.contains(h, tol))
            .ok_or_else(|| Error::Callback(format!("output left the {tgt_kind} interval")))
    }

    /// `Φ(a)`, with interval membership checked on both sides.
    pub fn eval(&self, a: &Element) -> Result<Element> {
        Self::checked(
            &self.forward,
            a,
            (&self.source, self.kind),
            (&self.target, self.target_kind),
            &self.tol,
        )
    }

    pub fn eval_inverse(&self, b: &Element) -> Result<Element> {
        let g = self
            .backward
            .as_ref()
            .ok_or_else(|| Error::Precondition("inverse callback missing".into()))?;
        Self::checked(
            g,
            b,
            (&self.target, self.target_kind),
            (&self.source, self.kind),
            &self.tol,
        )
    }
}

fn real_matrix_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

/// A real-linear map between hermitian parts, stored as its matrix in the
/// orthonormal bases of [`Algebra::hermitian_basis`].
#[derive(Clone, Debug, Serialize)]
pub struct LinearMapRecord {
    pub source: Algebra,
    pub target: Algebra,
    #[serde(serialize_with = "real_matrix_rows")]
    pub matrix: DMatrix<f64>,
    pub superposition_residual: f64,
    pub jordan_residual: f64,
    pub unital_residual: f64,
    pub spec: Option<JordanSpec>,
}

impl LinearMapRecord {
    pub fn apply(&self, h: &Element) -> Result<Element> {
        let x = self.source.hermitian_coords(h)?;
        self.target.from_hermitian_coords(&(&self.matrix * x))
    }

    /// Complex-linear extension `x ↦ L(Re x) + i L(Im x)`.
    pub fn apply_complex(&self, x: &Element) -> Result<Element> {
        let adj = x.adjoint();
        let re = (x + &adj).scale(0.5);
        let im = (x - &adj).scale_complex(Complex64::new(0.0, -0.5));
        Ok(&self.apply(&re)? + &self.apply(&im)?.scale_complex(Complex64::i()))
    }
}

/// Builds the matrix of `probe` on the hermitian basis and certifies
/// superposition on `pairs` random pairs; Jordan and unital residuals are
/// recorded but not gated.
pub fn linearize(
    source: &Algebra,
    target: &Algebra,
    probe: &dyn Fn(&Element) -> Result<Element>,
    pairs: usize,
    rng: &mut TrialRng,
) -> Result<LinearMapRecord> {
    let basis = source.hermitian_basis();
    let mut matrix = DMatrix::zeros(target.dimension(), source.dimension());
    for (j, e) in basis.iter().enumerate() {
        matrix.set_column(j, &target.hermitian_coords(&probe(e)?)?);
    }
    let mut rec = LinearMapRecord {
        source: source.clone(),
        target: target.clone(),
        matrix,
        superposition_residual: 0.0,
        jordan_residual: 0.0,
        unital_residual: 0.0,
        spec: None,
    };
    for _ in 0..pairs {
        let h1 = random::hermitian(rng, source, 1.0);
        let h2 = random::hermitian(rng, source, 1.0);
        let (p1, p2, p12) = (probe(&h1)?, probe(&h2)?, probe(&(&h1 + &h2))?);
        let scale = p1.opnorm().max(p2.opnorm()).max(1.0);
        let additive = (&p12 - &(&p1 + &p2)).opnorm() / scale;
        let matched = p1.dist(&rec.apply(&h1)?) / scale;
        rec.superposition_residual = rec.superposition_residual.max(additive).max(matched);

        let l1 = rec.apply(&h1)?;
        let sq = rec.apply(&(&h1 * &h1))?;
        let jordan = sq.dist(&(&l1 * &l1)) / l1.opnorm().powi(2).max(1.0);
        rec.jordan_residual = rec.jordan_residual.max(jordan);
    }
    rec.unital_residual = rec.apply(&source.unit())?.dist(&target.unit());
    if rec.superposition_residual > RESIDUAL_BUDGET {
        return Err(Error::certificate(
            "superposition",
            rec.superposition_residual,
            RESIDUAL_BUDGET,
        ));
    }
    Ok(rec)
}

/// Knobs shared by the decomposition procedures.
#[derive(Clone, Copy, Debug)]
pub struct DecomposeConfig {
    pub seed: u64,
    pub validation: usize,
    pub pairs: usize,
    pub fit_spec: bool,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            seed: 0,
            validation: 50,
            pairs: 30,
            fit_spec: true,
        }
    }
}

/// Linear extension of an effect automorphism fixing `½`, through the chart
/// `h ↦ (h + ‖h‖)/(2‖h‖ + 1)` into the effect interval:
/// `J(h) = (2‖h‖+1)·J_eff(chart(h)) − ‖h‖·1`.
pub fn extend_effect_to_linear(j_eff: &BlackBoxMap, pairs: usize, rng: &mut TrialRng) -> Result<LinearMapRecord> {
    if j_eff.kind() != IntervalKind::Effect || j_eff.target_kind() != IntervalKind::Effect {
        return Err(Error::Precondition(
            "linear extension needs an effect-to-effect map".into(),
        ));
    }
    let tol = j_eff.tolerances();
    let half_img = j_eff.eval(&j_eff.source().scalar(0.5))?;
    let drift = half_img.dist(&j_eff.target().scalar(0.5));
    if drift > tol.eq_tol {
        return Err(Error::Precondition(format!("map does not fix 1/2 (drift {drift:e})")));
    }
    let probe = |h: &Element| -> Result<Element> {
        let n = h.opnorm();
        let s = 2.0 * n + 1.0;
        let x = h.add_scalar(n).scale(1.0 / s);
        Ok(j_eff.eval(&x)?.scale(s).add_scalar(-n))
    };
    linearize(j_eff.source(), j_eff.target(), &probe, pairs, rng)
}

/// Fits block permutation, unitaries and transpose flags to a linear map
/// that is a Jordan *-isomorphism. Each `u` carries a phase gauge: the first
/// nonzero entry of its first column is made real positive.
pub fn fit_jordan_spec(rec: &LinearMapRecord, tol: &Tolerances) -> Result<JordanSpec> {
    let (src, tgt) = (&rec.source, &rec.target);
    let k = src.num_blocks();
    if tgt.num_blocks() != k {
        return Err(Error::Precondition(format!(
            "{src} and {tgt} have different block counts"
        )));
    }
    let mut permutation = Vec::with_capacity(k);
    let mut unitaries = Vec::with_capacity(k);
    let mut transpose = Vec::with_capacity(k);
    for i in 0..k {
        let n = src.blocks()[i];
        let img = rec.apply(&src.block_unit(i))?;
        let j = (0..k)
            .filter(|&j| tgt.blocks()[j] == n)
            .min_by(|&x, &y| {
                let dx = img.dist(&tgt.block_unit(x));
                let dy = img.dist(&tgt.block_unit(y));
                dx.total_cmp(&dy)
            })
            .ok_or_else(|| Error::Precondition(format!("no target block of size {n} for block {i}")))?;
        let central = img.dist(&tgt.block_unit(j));
        if central > RESIDUAL_BUDGET {
            return Err(Error::certificate(
                format!("central image of block {i}"),
                central,
                RESIDUAL_BUDGET,
            ));
        }

        // Images of the matrix units of block i inside target block j.
        let mut f = vec![vec![CMat::zeros(n, n); n]; n];
        for (a, row) in f.iter_mut().enumerate() {
            for (b, slot) in row.iter_mut().enumerate() {
                let mut e = src.zero();
                let mut blocks = e.into_blocks();
                blocks[i][(a, b)] = Complex64::new(1.0, 0.0);
                e = Element::from_blocks(src.clone(), blocks, false)?;
                *slot = rec.apply_complex(&e)?.block(j).clone();
            }
        }
        let (mut mult, mut anti) = (0.0f64, 0.0f64);
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    mult = mult.max((&f[a][b] * &f[b][d] - &f[a][d]).norm());
                    anti = anti.max((&f[b][d] * &f[a][b] - &f[a][d]).norm());
                }
            }
        }
        let flip = if n == 1 || mult <= RESIDUAL_BUDGET {
            false
        } else if anti <= RESIDUAL_BUDGET {
            true
        } else {
            return Err(Error::certificate(
                format!("block {i} is neither multiplicative nor antimultiplicative"),
                mult.min(anti),
                RESIDUAL_BUDGET,
            ));
        };

        let f00 = Element::from_matrices(vec![f[0][0].clone()], false)?.to_hermitian(&Tolerances {
            herm_tol: RESIDUAL_BUDGET,
            ..*tol
        })?;
        let spec0 = &f00.spectra(tol)?[0];
        let u0 = spec0.vectors.column(n - 1).into_owned();
        let mut u = CMat::zeros(n, n);
        for c in 0..n {
            let col: DVector<Complex64> = if flip { &f[0][c] * &u0 } else { &f[c][0] * &u0 };
            u.set_column(c, &col);
        }
        // Nearest unitary, then the phase gauge.
        let svd = u.svd(true, true);
        let mut u = svd.u.expect("requested") * svd.v_t.expect("requested");
        if let Some(z) = u.column(0).iter().copied().find(|z| z.norm() > 1e-8) {
            u *= z.conj() / z.norm();
        }
        permutation.push(j);
        unitaries.push(u);
        transpose.push(flip);
    }
    let spec = JordanSpec::new(src.clone(), tgt.clone(), permutation, unitaries, transpose, tol)?;
    let mut fit = 0.0f64;
    for e in src.hermitian_basis() {
        fit = fit.max(spec.apply(&e)?.dist(&rec.apply(&e)?));
    }
    if fit > RESIDUAL_BUDGET {
        return Err(Error::certificate("Jordan spec fit", fit, RESIDUAL_BUDGET));
    }
    Ok(spec)
}

/// `Φ = Φ_α⁻¹ ∘ Φ_T ∘ J` on the effect interval.
#[derive(Clone, Debug, Serialize)]
pub struct EffectDecomposition {
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t: Element,
    #[serde(rename = "J")]
    pub linear: LinearMapRecord,
    pub residual: f64,
    pub validation_samples: usize,
}

impl EffectDecomposition {
    pub fn recompose(&self, a: &Element, tol: &Tolerances) -> Result<Element> {
        let j = self.linear.apply(a)?;
        let t = MapNode::PhiT { t: self.t.clone() }.apply(&j, tol)?;
        MapNode::PhiAlphaInv { alpha: self.alpha }.apply(&t, tol)
    }

    /// The recomposed map as an expression, when a Jordan spec was fitted.
    pub fn expression(&self) -> Option<OrderIsoExpr> {
        let spec = self.linear.spec.clone()?;
        let maps = vec![
            MapNode::PhiAlphaInv { alpha: self.alpha },
            MapNode::PhiT { t: self.t.clone() },
            MapNode::Jordan { spec },
        ];
        OrderIsoExpr::new(MapNode::Compose { maps }, IntervalKind::Effect).ok()
    }
}

fn maybe_fit(rec: &mut LinearMapRecord, cfg: &DecomposeConfig, tol: &Tolerances) {
    if cfg.fit_spec {
        rec.spec = fit_jordan_spec(rec, tol).ok();
    }
}

fn gate_jordan(rec: &LinearMapRecord) -> Result<()> {
    if rec.jordan_residual > RESIDUAL_BUDGET {
        return Err(Error::certificate(
            "Jordan product",
            rec.jordan_residual,
            RESIDUAL_BUDGET,
        ));
    }
    Ok(())
}

fn validate(
    phi: &BlackBoxMap,
    samples: usize,
    rng: &mut TrialRng,
    scale: f64,
    recompose: impl Fn(&Element) -> Result<Element>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random::interval_element(rng, phi.source(), phi.kind(), scale);
        worst = worst.max(rel_dist(&recompose(&a)?, &phi.eval(&a)?));
    }
    if worst > RESIDUAL_BUDGET {
        return Err(Error::certificate("reconstruction", worst, RESIDUAL_BUDGET));
    }
    Ok(worst)
}

pub fn decompose_effect_iso(phi: &BlackBoxMap, cfg: &DecomposeConfig) -> Result<EffectDecomposition> {
    if phi.kind() != IntervalKind::Effect || phi.target_kind() != IntervalKind::Effect {
        return Err(Error::IntervalMismatch {
            expected: IntervalKind::Effect,
            found: if phi.kind() == IntervalKind::Effect {
                phi.target_kind()
            } else {
                phi.kind()
            },
        });
    }
    let tol = *phi.tolerances();
    let h = phi.eval(&phi.source().scalar(0.5))?;
    let margin = h.lambda_min(&tol)?.min(h.complement().lambda_min(&tol)?);
    if margin <= tol.psd_tol {
        return Err(Error::Precondition(format!(
            "Φ(1/2) and 1 − Φ(1/2) must be invertible (spectral margin {margin:e})"
        )));
    }
    let epsilon = 0.5 * margin;
    let alpha = ((1.0 - 2.0 * epsilon) / epsilon).sqrt();
    let c = MapNode::PhiAlpha { alpha }.apply(&h, &tol)?;
    let (lo, hi) = (c.lambda_min(&tol)?, c.lambda_max(&tol)?);
    if !(lo > 0.5 && hi < 1.0) {
        return Err(Error::Precondition(format!(
            "Φ_α(Φ(1/2)) has spectrum [{lo}, {hi}] outside (1/2, 1)"
        )));
    }
    let t = c.funcalc(&tol, |x| ((2.0 * x - 1.0) / (1.0 - x)).sqrt())?;

    let inner = phi.clone();
    let t_eff = t.clone();
    let j_eff = BlackBoxMap::new(
        phi.source().clone(),
        phi.target().clone(),
        IntervalKind::Effect,
        IntervalKind::Effect,
        move |a| {
            let x = MapNode::PhiAlpha { alpha }.apply(&inner.eval(a)?, &tol)?;
            MapNode::PhiTInv { t: t_eff.clone() }.apply(&x, &tol)
        },
        &tol,
    )?;
    let mut rng = trial_rng(cfg.seed, 0);
    let mut linear = extend_effect_to_linear(&j_eff, cfg.pairs, &mut rng)?;
    gate_jordan(&linear)?;
    maybe_fit(&mut linear, cfg, &tol);

    let mut out = EffectDecomposition {
        epsilon,
        alpha,
        t,
        linear,
        residual: 0.0,
        validation_samples: cfg.validation,
    };
    let mut rng = trial_rng(cfg.seed, 1);
    out.residual = validate(phi, cfg.validation, &mut rng, 1.0, |a| out.recompose(a, &tol))?;
    Ok(out)
}

/// `Φ(a) = bJ(a)b` on a cone.
#[derive(Clone, Debug, Serialize)]
pub struct ConeDecomposition {
    pub s: f64,
    pub b: Element,
    #[serde(rename = "J")]
    pub linear: LinearMapRecord,
    pub residual: f64,
    pub validation_samples: usize,
}

impl ConeDecomposition {
    pub fn recompose(&self, a: &Element) -> Result<Element> {
        Ok(self.linear.apply(a)?.congruence_by(&self.b))
    }
}

pub fn decompose_cone_iso(phi: &BlackBoxMap, cfg: &DecomposeConfig) -> Result<ConeDecomposition> {
    let kind = phi.kind();
    if !matches!(kind, IntervalKind::Cone | IntervalKind::ConeStrict) || phi.target_kind() != kind {
        return Err(Error::IntervalMismatch {
            expected: IntervalKind::Cone,
            found: kind,
        });
    }
    let tol = *phi.tolerances();
    // Any s > 0 gives Φ(s)/s = b² for a map of this form; with an inverse
    // at hand take s above Φ⁻¹(1).
    let s = if phi.has_inverse() {
        phi.eval_inverse(&phi.target().unit())?.opnorm() + 1.0
    } else {
        1.0
    };
    let b = phi.eval(&phi.source().scalar(s))?.scale(1.0 / s).sqrt_pos(&tol)?;
    let b_inv = b.inverse(&tol)?;
    let probe = |h: &Element| -> Result<Element> {
        let m = h.opnorm() + 1.0;
        let upper = phi.eval(&h.add_scalar(m))?;
        let base = phi.eval(&phi.source().scalar(m))?;
        Ok((&upper - &base).congruence_by(&b_inv))
    };
    let mut rng = trial_rng(cfg.seed, 0);
    let mut linear = linearize(phi.source(), phi.target(), &probe, cfg.pairs, &mut rng)?;
    gate_jordan(&linear)?;
    maybe_fit(&mut linear, cfg, &tol);
    let mut out = ConeDecomposition {
        s,
        b,
        linear,
        residual: 0.0,
        validation_samples: cfg.validation,
    };
    let mut rng = trial_rng(cfg.seed, 1);
    out.residual = validate(phi, cfg.validation, &mut rng, 2.0, |a| out.recompose(a))?;
    Ok(out)
}

/// `Φ(a) = bJ(a)b + c` on the hermitian part.
#[derive(Clone, Debug, Serialize)]
pub struct SaDecomposition {
    pub b: Element,
    pub c: Element,
    #[serde(rename = "J")]
    pub linear: LinearMapRecord,
    pub residual: f64,
    pub validation_samples: usize,
}

impl SaDecomposition {
    pub fn recompose(&self, a: &Element) -> Result<Element> {
        Ok(&self.linear.apply(a)?.congruence_by(&self.b) + &self.c)
    }
}

/// Reduces to the cone case through `a ↦ Φ(0) − Φ(−a)`.
pub fn decompose_sa_iso(phi: &BlackBoxMap, cfg: &DecomposeConfig) -> Result<SaDecomposition> {
    if phi.kind() != IntervalKind::Sa || phi.target_kind() != IntervalKind::Sa {
        return Err(Error::IntervalMismatch {
            expected: IntervalKind::Sa,
            found: phi.kind(),
        });
    }
    let tol = *phi.tolerances();
    let c = phi.eval(&phi.source().zero())?;
    let (fwd, bwd) = (phi.clone(), phi.clone());
    let (c1, c2) = (c.clone(), c.clone());
    let mut cone = BlackBoxMap::new(
        phi.source().clone(),
        phi.target().clone(),
        IntervalKind::Cone,
        IntervalKind::Cone,
        move |a| Ok(&c1 - &fwd.eval(&a.scale(-1.0))?),
        &tol,
    )?;
    if phi.has_inverse() {
        cone = cone.with_inverse(move |y| Ok(bwd.eval_inverse(&(&c2 - y))?.scale(-1.0)))?;
    }
    let inner = decompose_cone_iso(&cone, cfg)?;
    let mut out = SaDecomposition {
        b: inner.b,
        c,
        linear: inner.linear,
        residual: 0.0,
        validation_samples: cfg.validation,
    };
    let mut rng = trial_rng(cfg.seed, 2);
    out.residual = validate(phi, cfg.validation, &mut rng, 2.0, |a| out.recompose(a))?;
    Ok(out)
}

/// `Φ(f)(y) = f_y(f(μ(y)))` for maps between function algebras on finite
/// sets, with each `f_y` tabulated on a uniform grid.
#[derive(Clone, Debug, Serialize)]
pub struct CommDecomposition {
    pub interval: IntervalKind,
    /// `mu[y]` is the source point feeding target point `y`.
    pub mu: Vec<usize>,
    pub grid: Vec<f64>,
    pub tables: Vec<Vec<f64>>,
    pub residual: f64,
    pub interpolation_residual: f64,
    pub validation_samples: usize,
}

impl CommDecomposition {
    /// Piecewise-linear reading of the `f_y` table; clamped to the grid.
    pub fn interpolate(&self, y: usize, t: f64) -> f64 {
        let g = &self.grid;
        let m = g.len() - 1;
        let pos = ((t - g[0]) / (g[m] - g[0]) * m as f64).clamp(0.0, m as f64);
        let k = (pos.floor() as usize).min(m - 1);
        let w = pos - k as f64;
        (1.0 - w) * self.tables[y][k] + w * self.tables[y][k + 1]
    }
}

fn diag_values(x: &Element) -> Vec<f64> {
    x.blocks().iter().map(|b| b[(0, 0)].re).collect()
}

/// Grid bounds for the commutative decomposition: `[0,1]` for effects,
/// `[0, span]` for the cone, `[−span, span]` for the hermitian part.
pub fn grid_bounds(kind: IntervalKind, span: f64) -> Result<(f64, f64)> {
    match kind {
        IntervalKind::Effect => Ok((0.0, 1.0)),
        IntervalKind::Cone => Ok((0.0, span)),
        IntervalKind::Sa => Ok((-span, span)),
        IntervalKind::ConeStrict => Err(Error::Parameter(
            "the commutative decomposition takes effect, cone or sa".into(),
        )),
    }
}

pub fn decompose_commutative(
    phi: &BlackBoxMap,
    grid: usize,
    span: f64,
    cfg: &DecomposeConfig,
) -> Result<CommDecomposition> {
    let (src, tgt) = (phi.source(), phi.target());
    if !src.is_commutative() || !tgt.is_commutative() || src.num_blocks() != tgt.num_blocks() {
        return Err(Error::Precondition(format!(
            "need commutative algebras of equal size, got {src} and {tgt}"
        )));
    }
    if grid < 1 || !(span > 0.0) {
        return Err(Error::Parameter("grid must be positive and span > 0".into()));
    }
    let kind = phi.kind();
    let (lo, hi) = grid_bounds(kind, span)?;
    let n = src.num_blocks();
    let knots: Vec<f64> = (0..=grid).map(|k| lo + (hi - lo) * k as f64 / grid as f64).collect();
    let mut tables = vec![Vec::with_capacity(grid + 1); n];
    for &t in &knots {
        let v = diag_values(&phi.eval(&src.scalar(t))?);
        for (y, table) in tables.iter_mut().enumerate() {
            table.push(v[y]);
        }
    }
    for (y, table) in tables.iter().enumerate() {
        if let Some(k) = table.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(format!(
                "f_{y} is not strictly increasing at knot {k}"
            )));
        }
        if kind == IntervalKind::Effect {
            let drift = table[0].abs().max((table[grid] - 1.0).abs());
            if drift > 1e-9 {
                return Err(Error::certificate(format!("endpoints of f_{y}"), drift, 1e-9));
            }
        }
    }

    // Bump probes lo·1 + (hi − lo)·χ_x: target point y sees f_y(hi) exactly
    // when μ(y) = x and f_y(lo) otherwise.
    const SEP_TOL: f64 = 1e-7;
    let mut mu = vec![None; n];
    for x in 0..n {
        let mut vals = vec![vec![lo]; n];
        vals[x][0] = hi;
        let v = diag_values(&phi.eval(&Element::diagonal(src, &vals)?)?);
        for y in 0..n {
            let (f_lo, f_hi) = (tables[y][0], tables[y][grid]);
            let near_hi = (v[y] - f_hi).abs() <= SEP_TOL * f_hi.abs().max(1.0);
            let near_lo = (v[y] - f_lo).abs() <= SEP_TOL * f_lo.abs().max(1.0);
            match (near_hi, near_lo, mu[y]) {
                (true, false, None) => mu[y] = Some(x),
                (true, false, Some(prev)) => {
                    return Err(Error::Precondition(format!(
                        "target point {y} follows both {prev} and {x}; not of product form"
                    )))
                }
                (false, true, _) => {}
                _ => {
                    return Err(Error::Precondition(format!(
                        "probe at source point {x} does not separate target point {y}; not of product form"
                    )))
                }
            }
        }
    }
    let mu: Vec<usize> = mu
        .into_iter()
        .enumerate()
        .map(|(y, m)| m.ok_or_else(|| Error::Precondition(format!("no source point feeds target point {y}"))))
        .collect::<Result<_>>()?;
    let mut seen = vec![false; n];
    for &x in &mu {
        if std::mem::replace(&mut seen[x], true) {
            return Err(Error::Precondition(format!("μ is not injective: {mu:?}")));
        }
    }

    let mut out = CommDecomposition {
        interval: kind,
        mu,
        grid: knots,
        tables,
        residual: 0.0,
        interpolation_residual: 0.0,
        validation_samples: cfg.validation,
    };
    let mut rng = trial_rng(cfg.seed, 1);
    for _ in 0..cfg.validation {
        let f: Vec<f64> = (0..n)
            .map(|_| lo + (hi - lo) * rand::Rng::random::<f64>(&mut rng))
            .collect();
        let image = diag_values(&phi.eval(&Element::diagonal(
            src,
            &f.iter().map(|&v| vec![v]).collect::<Vec<_>>(),
        )?)?);
        for y in 0..n {
            let t = f[out.mu[y]];
            let direct = diag_values(&phi.eval(&src.scalar(t))?)[y];
            let scale = direct.abs().max(1.0);
            out.residual = out.residual.max((image[y] - direct).abs() / scale);
            out.interpolation_residual = out
                .interpolation_residual
                .max((image[y] - out.interpolate(y, t)).abs() / scale);
        }
    }
    if out.residual > RESIDUAL_BUDGET {
        return Err(Error::certificate("product form", out.residual, RESIDUAL_BUDGET));
    }
    Ok(out)
}

/// The restrictions of an order isomorphism to the abelian summand (the
/// one-dimensional blocks) and to its complement.
#[derive(Clone, Debug)]
pub struct CentralSplit {
    pub abelian: Option<BlackBoxMap>,
    pub rest: Option<BlackBoxMap>,
    pub source_abelian: Vec<usize>,
    pub source_rest: Vec<usize>,
    pub target_abelian: Vec<usize>,
    pub target_rest: Vec<usize>,
    pub residual: f64,
}

fn split_indices(alg: &Algebra) -> (Vec<usize>, Vec<usize>) {
    (0..alg.num_blocks()).partition(|&i| alg.blocks()[i] == 1)
}

fn factor(phi: &BlackBoxMap, src_idx: &[usize], tgt_idx: &[usize]) -> Result<Option<BlackBoxMap>> {
    if src_idx.is_empty() {
        return Ok(None);
    }
    let tol = *phi.tolerances();
    let filler = phi.kind().filler();
    let target_filler = phi.target_kind().filler();
    let sub_src = phi.source().sub_algebra(src_idx)?;
    let sub_tgt = phi.target().sub_algebra(tgt_idx)?;
    let (whole_src, whole_tgt) = (phi.source().scalar(filler), phi.target().scalar(target_filler));
    let (fwd, si, ti) = (phi.clone(), src_idx.to_vec(), tgt_idx.to_vec());
    let embed_src = whole_src.clone();
    let mut map = BlackBoxMap::new(
        sub_src,
        sub_tgt,
        phi.kind(),
        phi.target_kind(),
        move |x| fwd.eval(&embed_src.with_blocks_from(&si, x)?)?.restrict(&ti),
        &tol,
    )?;
    if phi.has_inverse() {
        let (bwd, si, ti) = (phi.clone(), src_idx.to_vec(), tgt_idx.to_vec());
        map = map.with_inverse(move |y| bwd.eval_inverse(&whole_tgt.with_blocks_from(&ti, y)?)?.restrict(&si))?;
    }
    Ok(Some(map))
}

/// Splits `Φ` along the abelian central summand, after checking on `pairs`
/// random pairs that each part of `Φ(a)` depends only on the matching part
/// of `a`.
pub fn central_split(phi: &BlackBoxMap, pairs: usize, rng: &mut TrialRng) -> Result<CentralSplit> {
    let tol = *phi.tolerances();
    let (sa, sr) = split_indices(phi.source());
    let (ta, tr) = split_indices(phi.target());
    if sa.len() != ta.len() {
        return Err(Error::Precondition(format!(
            "abelian summands differ: {} one-dimensional blocks in the source, {} in the target",
            sa.len(),
            ta.len()
        )));
    }
    let mut residual = 0.0f64;
    for _ in 0..pairs {
        let a = random::interval_element(rng, phi.source(), phi.kind(), 1.0);
        let other = random::interval_element(rng, phi.source(), phi.kind(), 1.0);
        let img = phi.eval(&a)?;
        for (keep_t, swap_s) in [(&ta, &sr), (&tr, &sa)] {
            if keep_t.is_empty() || swap_s.is_empty() {
                continue;
            }
            let moved = a.with_blocks_from(swap_s, &other.restrict(swap_s)?)?;
            let lhs = img.restrict(keep_t)?;
            let rhs = phi.eval(&moved)?.restrict(keep_t)?;
            residual = residual.max(rel_dist(&rhs, &lhs));
        }
    }
    if residual > tol.eq_tol {
        return Err(Error::certificate(
            "central split well-definedness",
            residual,
            tol.eq_tol,
        ));
    }
    Ok(CentralSplit {
        abelian: factor(phi, &sa, &ta)?,
        rest: factor(phi, &sr, &tr)?,
        source_abelian: sa,
        source_rest: sr,
        target_abelian: ta,
        target_rest: tr,
        residual,
    })
}

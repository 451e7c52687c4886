//! Canonical order isomorphisms between operator intervals, as a composable
//! expression tree.
//!
//! A [`MapNode`] is one constructor or a composition; an [`OrderIsoExpr`]
//! pairs a node with the declared source interval. `Compose` lists maps in
//! written order, so `[f, g, h]` is `f ∘ g ∘ h` and `h` is applied first.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{Algebra, CMat, Element, Tolerances};
use crate::error::{Error, Result};
use crate::interchange::cmat_list;
use crate::interval::IntervalKind;

/// A Jordan *-isomorphism between finite direct sums of matrix blocks:
/// source block `i` is sent to target block `permutation[i]` by
/// `x ↦ uᵢ τᵢ(x) uᵢᴴ`, where `τᵢ` is the transpose when `transpose[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JordanSpecRepr", into = "JordanSpecRepr")]
pub struct JordanSpec {
    source: Algebra,
    target: Algebra,
    permutation: Vec<usize>,
    unitaries: Vec<CMat>,
    transpose: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JordanSpecRepr {
    source: Algebra,
    target: Algebra,
    permutation: Vec<usize>,
    #[serde(with = "cmat_list")]
    unitaries: Vec<CMat>,
    transpose: Vec<bool>,
}

impl TryFrom<JordanSpecRepr> for JordanSpec {
    type Error = Error;
    fn try_from(r: JordanSpecRepr) -> Result<Self> {
        JordanSpec::new(
            r.source,
            r.target,
            r.permutation,
            r.unitaries,
            r.transpose,
            &Tolerances::default(),
        )
    }
}

impl From<JordanSpec> for JordanSpecRepr {
    fn from(s: JordanSpec) -> Self {
        JordanSpecRepr {
            source: s.source,
            target: s.target,
            permutation: s.permutation,
            unitaries: s.unitaries,
            transpose: s.transpose,
        }
    }
}

impl JordanSpec {
    pub fn new(
        source: Algebra,
        target: Algebra,
        permutation: Vec<usize>,
        unitaries: Vec<CMat>,
        transpose: Vec<bool>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let k = source.num_blocks();
        let mut src_dims = source.blocks().to_vec();
        let mut tgt_dims = target.blocks().to_vec();
        src_dims.sort_unstable();
        tgt_dims.sort_unstable();
        if src_dims != tgt_dims {
            return Err(Error::Parameter(format!(
                "no Jordan *-isomorphism from {source} onto {target}: block dimensions differ"
            )));
        }
        if permutation.len() != k || unitaries.len() != k || transpose.len() != k {
            return Err(Error::Shape(
                "permutation, unitaries and transpose flags need one entry per block".into(),
            ));
        }
        let mut seen = vec![false; k];
        for (i, &j) in permutation.iter().enumerate() {
            if j >= k || seen[j] {
                return Err(Error::Parameter(format!(
                    "permutation {permutation:?} is not a bijection"
                )));
            }
            seen[j] = true;
            let n = source.blocks()[i];
            if target.blocks()[j] != n {
                return Err(Error::Parameter(format!(
                    "source block {i} (M{n}) cannot map to target block {j} (M{})",
                    target.blocks()[j]
                )));
            }
            let u = &unitaries[i];
            if u.nrows() != n || u.ncols() != n {
                return Err(Error::Shape(format!("unitary {i} must be {n}x{n}")));
            }
            let defect = (u.adjoint() * u - CMat::identity(n, n)).norm();
            if defect > tol.eq_tol {
                return Err(Error::Parameter(format!(
                    "matrix {i} is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(JordanSpec {
            source,
            target,
            permutation,
            unitaries,
            transpose,
        })
    }

    pub fn identity(alg: &Algebra) -> Self {
        let k = alg.num_blocks();
        JordanSpec {
            source: alg.clone(),
            target: alg.clone(),
            permutation: (0..k).collect(),
            unitaries: alg.blocks().iter().map(|&n| CMat::identity(n, n)).collect(),
            transpose: vec![false; k],
        }
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn unitaries(&self) -> &[CMat] {
        &self.unitaries
    }

    pub fn transpose_flags(&self) -> &[bool] {
        &self.transpose
    }

    pub fn apply(&self, a: &Element) -> Result<Element> {
        self.source.check_same(a.algebra())?;
        let mut out: Vec<CMat> = self.target.zero().into_blocks();
        for (i, x) in a.blocks().iter().enumerate() {
            let x = if self.transpose[i] { x.transpose() } else { x.clone() };
            let u = &self.unitaries[i];
            out[self.permutation[i]] = u * x * u.adjoint();
        }
        Element::from_blocks(self.target.clone(), out, a.is_hermitian_flagged())
    }

    pub fn inverse(&self) -> JordanSpec {
        let k = self.source.num_blocks();
        let mut permutation = vec![0; k];
        let mut unitaries = vec![CMat::zeros(0, 0); k];
        let mut transpose = vec![false; k];
        for i in 0..k {
            let j = self.permutation[i];
            permutation[j] = i;
            let u = &self.unitaries[i];
            unitaries[j] = if self.transpose[i] { u.transpose() } else { u.adjoint() };
            transpose[j] = self.transpose[i];
        }
        JordanSpec {
            source: self.target.clone(),
            target: self.source.clone(),
            permutation,
            unitaries,
            transpose,
        }
    }
}

/// `f_α(t) = t / (tα + 1 − α)` for `α < 1`.
pub fn f_alpha(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha < 1.0) {
        return Err(Error::Parameter(format!("f_alpha needs alpha < 1, got {alpha}")));
    }
    Ok(t / (t * alpha + 1.0 - alpha))
}

/// One constructor of the canonical families, or a composition of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MapNode {
    /// `(1+T⁻²)^{1/2}(1 − (1+TaT)⁻¹)(1+T⁻²)^{1/2}` on effects.
    #[serde(rename = "phi_T")]
    PhiT {
        #[serde(rename = "T")]
        t: Element,
    },
    #[serde(rename = "phi_T_inv")]
    PhiTInv {
        #[serde(rename = "T")]
        t: Element,
    },
    /// `(1+α²)a(1+α²a)⁻¹` on effects.
    #[serde(rename = "phi_alpha")]
    PhiAlpha { alpha: f64 },
    /// `a(1+α²(1−a))⁻¹` on effects.
    #[serde(rename = "phi_alpha_inv")]
    PhiAlphaInv { alpha: f64 },
    #[serde(rename = "jordan")]
    Jordan { spec: JordanSpec },
    /// `a ↦ bab` for positive invertible `b`.
    #[serde(rename = "congruence")]
    Congruence { b: Element },
    /// `a ↦ a + c` on the hermitian part.
    #[serde(rename = "shift")]
    Shift { c: Element },
    /// Spectral `f_α` on effects, `α < 1`.
    #[serde(rename = "f_alpha")]
    FAlpha { alpha: f64 },
    /// `a ↦ J(exp a)` from the hermitian part onto the strict cone; the
    /// source must be commutative.
    #[serde(rename = "exp_iso")]
    ExpIso { spec: JordanSpec },
    /// `b ↦ J⁻¹(log b)`, the inverse of `exp_iso`.
    #[serde(rename = "log_iso")]
    LogIso { spec: JordanSpec },
    /// `T(a(T²−1)+1)⁻¹aT` on effects.
    #[serde(rename = "direct_T")]
    DirectT {
        #[serde(rename = "T")]
        t: Element,
    },
    #[serde(rename = "direct_T_inv")]
    DirectTInv {
        #[serde(rename = "T")]
        t: Element,
    },
    /// `a ↦ 1 − Φ(1 − a)`.
    #[serde(rename = "perp")]
    Perp { map: Box<MapNode> },
    #[serde(rename = "compose")]
    Compose { maps: Vec<MapNode> },
}

fn positive_invertible(t: &Element, what: &str, tol: &Tolerances) -> Result<Element> {
    let t = t.to_hermitian(tol)?;
    if !t.is_strictly_positive(tol)? {
        return Err(Error::Precondition(format!("{what} must be positive invertible")));
    }
    Ok(t)
}

fn effect_only(kind: IntervalKind, name: &str) -> Result<IntervalKind> {
    if kind == IntervalKind::Effect {
        Ok(kind)
    } else {
        Err(Error::Parameter(format!(
            "{name} acts on the effect interval, not on {kind}"
        )))
    }
}

fn nonzero_alpha(alpha: f64) -> Result<()> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be a nonzero real, got {alpha}")));
    }
    Ok(())
}

impl MapNode {
    pub fn name(&self) -> &'static str {
        match self {
            MapNode::PhiT { .. } => "phi_T",
            MapNode::PhiTInv { .. } => "phi_T_inv",
            MapNode::PhiAlpha { .. } => "phi_alpha",
            MapNode::PhiAlphaInv { .. } => "phi_alpha_inv",
            MapNode::Jordan { .. } => "jordan",
            MapNode::Congruence { .. } => "congruence",
            MapNode::Shift { .. } => "shift",
            MapNode::FAlpha { .. } => "f_alpha",
            MapNode::ExpIso { .. } => "exp_iso",
            MapNode::LogIso { .. } => "log_iso",
            MapNode::DirectT { .. } => "direct_T",
            MapNode::DirectTInv { .. } => "direct_T_inv",
            MapNode::Perp { .. } => "perp",
            MapNode::Compose { .. } => "compose",
        }
    }

    /// Target interval for the given source interval, or an error when the
    /// constructor does not act on it.
    pub fn target_kind(&self, source: IntervalKind) -> Result<IntervalKind> {
        use IntervalKind::*;
        match self {
            MapNode::PhiT { .. }
            | MapNode::PhiTInv { .. }
            | MapNode::PhiAlpha { .. }
            | MapNode::PhiAlphaInv { .. }
            | MapNode::FAlpha { .. }
            | MapNode::DirectT { .. }
            | MapNode::DirectTInv { .. }
            | MapNode::Perp { .. } => effect_only(source, self.name()),
            MapNode::Jordan { .. } => Ok(source),
            MapNode::Congruence { .. } => match source {
                Cone | ConeStrict | Sa => Ok(source),
                Effect => Err(Error::Parameter(
                    "congruence does not preserve the effect interval".into(),
                )),
            },
            MapNode::Shift { .. } => match source {
                Sa => Ok(Sa),
                other => Err(Error::IntervalMismatch {
                    expected: Sa,
                    found: other,
                }),
            },
            MapNode::ExpIso { .. } => match source {
                Sa => Ok(ConeStrict),
                other => Err(Error::IntervalMismatch {
                    expected: Sa,
                    found: other,
                }),
            },
            MapNode::LogIso { .. } => match source {
                ConeStrict => Ok(Sa),
                other => Err(Error::IntervalMismatch {
                    expected: ConeStrict,
                    found: other,
                }),
            },
            MapNode::Compose { maps } => maps.iter().rev().try_fold(source, |k, m| m.target_kind(k)),
        }
    }

    /// Source and target algebras when the node pins them down.
    pub fn algebras(&self) -> Result<(Option<Algebra>, Option<Algebra>)> {
        Ok(match self {
            MapNode::PhiT { t } | MapNode::PhiTInv { t } | MapNode::DirectT { t } | MapNode::DirectTInv { t } => {
                (Some(t.algebra().clone()), Some(t.algebra().clone()))
            }
            MapNode::Congruence { b: x } | MapNode::Shift { c: x } => {
                (Some(x.algebra().clone()), Some(x.algebra().clone()))
            }
            MapNode::Jordan { spec } | MapNode::ExpIso { spec } => {
                (Some(spec.source.clone()), Some(spec.target.clone()))
            }
            MapNode::LogIso { spec } => (Some(spec.target.clone()), Some(spec.source.clone())),
            MapNode::PhiAlpha { .. } | MapNode::PhiAlphaInv { .. } | MapNode::FAlpha { .. } => (None, None),
            MapNode::Perp { map } => map.algebras()?,
            MapNode::Compose { maps } => {
                // Walk innermost to outermost, checking adjacent algebras agree.
                let mut source: Option<Algebra> = None;
                let mut current: Option<Algebra> = None;
                for m in maps.iter().rev() {
                    let (s, t) = m.algebras()?;
                    if let (Some(c), Some(s)) = (&current, &s) {
                        c.check_same(s)?;
                    }
                    if source.is_none() && current.is_none() {
                        source = s.clone();
                    }
                    current = t.or(current).or(s);
                }
                (source, current)
            }
        })
    }

    pub fn apply(&self, a: &Element, tol: &Tolerances) -> Result<Element> {
        match self {
            MapNode::PhiT { t } => phi_t(t, a, tol),
            MapNode::PhiTInv { t } => phi_t_inv(t, a, tol),
            MapNode::PhiAlpha { alpha } => {
                nonzero_alpha(*alpha)?;
                let k = 1.0 + alpha * alpha;
                a.funcalc(tol, |x| k * x / (1.0 + (k - 1.0) * x))
            }
            MapNode::PhiAlphaInv { alpha } => {
                nonzero_alpha(*alpha)?;
                let s = alpha * alpha;
                a.funcalc(tol, |x| x / (1.0 + s * (1.0 - x)))
            }
            MapNode::FAlpha { alpha } => {
                f_alpha(*alpha, 0.0)?;
                a.funcalc(tol, |x| x / (x * alpha + 1.0 - alpha))
            }
            MapNode::Jordan { spec } => spec.apply(a),
            MapNode::Congruence { b } => {
                let b = positive_invertible(b, "congruence factor b", tol)?;
                b.algebra().check_same(a.algebra())?;
                Ok(a.to_hermitian(tol)?.congruence_by(&b))
            }
            MapNode::Shift { c } => {
                let c = c.to_hermitian(tol)?;
                c.algebra().check_same(a.algebra())?;
                Ok(&a.to_hermitian(tol)? + &c)
            }
            MapNode::ExpIso { spec } => {
                if !spec.source.is_commutative() {
                    return Err(Error::Precondition(format!(
                        "exp_iso needs a commutative source algebra, got {}",
                        spec.source
                    )));
                }
                spec.apply(&a.funcalc(tol, f64::exp)?)
            }
            MapNode::LogIso { spec } => {
                if !spec.source.is_commutative() {
                    return Err(Error::Precondition(format!(
                        "log_iso needs a commutative algebra, got {}",
                        spec.source
                    )));
                }
                let pre = spec.inverse().apply(a)?;
                if !pre.is_strictly_positive(tol)? {
                    return Err(Error::OutsideInterval(IntervalKind::ConeStrict));
                }
                pre.funcalc(tol, f64::ln)
            }
            MapNode::DirectT { t } => direct_t(t, a, tol),
            MapNode::DirectTInv { t } => direct_t_inv(t, a, tol),
            MapNode::Perp { map } => Ok(map.apply(&a.complement(), tol)?.complement()),
            MapNode::Compose { maps } => maps.iter().rev().try_fold(a.clone(), |x, m| m.apply(&x, tol)),
        }
    }

    /// The inverse map, as another expression.
    pub fn inverse(&self) -> Result<MapNode> {
        Ok(match self {
            MapNode::PhiT { t } => MapNode::PhiTInv { t: t.clone() },
            MapNode::PhiTInv { t } => MapNode::PhiT { t: t.clone() },
            MapNode::PhiAlpha { alpha } => MapNode::PhiAlphaInv { alpha: *alpha },
            MapNode::PhiAlphaInv { alpha } => MapNode::PhiAlpha { alpha: *alpha },
            MapNode::FAlpha { alpha } => {
                f_alpha(*alpha, 0.0)?;
                MapNode::FAlpha {
                    alpha: -alpha / (1.0 - alpha),
                }
            }
            MapNode::Jordan { spec } => MapNode::Jordan { spec: spec.inverse() },
            MapNode::Congruence { b } => MapNode::Congruence {
                b: b.inverse(&Tolerances::default())?,
            },
            MapNode::Shift { c } => MapNode::Shift { c: c.scale(-1.0) },
            MapNode::ExpIso { spec } => MapNode::LogIso { spec: spec.clone() },
            MapNode::LogIso { spec } => MapNode::ExpIso { spec: spec.clone() },
            MapNode::DirectT { t } => MapNode::DirectTInv { t: t.clone() },
            MapNode::DirectTInv { t } => MapNode::DirectT { t: t.clone() },
            MapNode::Perp { map } => MapNode::Perp {
                map: Box::new(map.inverse()?),
            },
            MapNode::Compose { maps } => MapNode::Compose {
                maps: maps.iter().rev().map(MapNode::inverse).collect::<Result<_>>()?,
            },
        })
    }
}

fn phi_t(t: &Element, a: &Element, tol: &Tolerances) -> Result<Element> {
    let t = positive_invertible(t, "T", tol)?;
    t.algebra().check_same(a.algebra())?;
    let a = IntervalKind::Effect.require(a, tol)?;
    let d = t.funcalc(tol, |x| (1.0 + 1.0 / (x * x)).sqrt())?;
    let m = a.congruence_by(&t).add_scalar(1.0);
    let inner = m.inverse(tol)?.complement();
    Ok(inner.congruence_by(&d))
}

fn phi_t_inv(t: &Element, a: &Element, tol: &Tolerances) -> Result<Element> {
    let t = positive_invertible(t, "T", tol)?;
    t.algebra().check_same(a.algebra())?;
    let a = IntervalKind::Effect.require(a, tol)?;
    let e = t.funcalc(tol, |x| x / (x * x + 1.0).sqrt())?;
    let t_inv = t.inverse(tol)?;
    let inner = a.congruence_by(&e).complement().inverse(tol)?.add_scalar(-1.0);
    Ok(inner.congruence_by(&t_inv))
}

fn general_inverse(m: &Element) -> Result<Element> {
    let blocks = m
        .blocks()
        .iter()
        .map(|b| b.clone().try_inverse().ok_or(Error::Singular(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Element::from_blocks(m.algebra().clone(), blocks, false)
}

fn direct_t(t: &Element, a: &Element, tol: &Tolerances) -> Result<Element> {
    let t = positive_invertible(t, "T", tol)?;
    t.algebra().check_same(a.algebra())?;
    let a = IntervalKind::Effect.require(a, tol)?;
    let k = (&t * &t).add_scalar(-1.0);
    let m = (&a * &k).add_scalar(1.0);
    let x = &general_inverse(&m)? * &a;
    (&(&t * &x) * &t).to_hermitian(&Tolerances {
        herm_tol: tol.herm_tol.max(tol.eq_tol),
        ..*tol
    })
}

fn direct_t_inv(t: &Element, b: &Element, tol: &Tolerances) -> Result<Element> {
    let t = positive_invertible(t, "T", tol)?;
    t.algebra().check_same(b.algebra())?;
    let b = IntervalKind::Effect.require(b, tol)?;
    let t_inv = t.inverse(tol)?;
    let x = b.congruence_by(&t_inv);
    let k = (&t * &t).add_scalar(-1.0);
    let m = (&x * &k).scale(-1.0).add_scalar(1.0);
    (&general_inverse(&m)? * &x).to_hermitian(&Tolerances {
        herm_tol: tol.herm_tol.max(tol.eq_tol),
        ..*tol
    })
}

/// A map expression with its declared source interval. Algebra-agnostic
/// expressions (built only from scalar constructors) may carry an explicit
/// source algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderIsoExpr {
    pub map: MapNode,
    pub interval: IntervalKind,
    pub source: Option<Algebra>,
}

impl OrderIsoExpr {
    pub fn new(map: MapNode, interval: IntervalKind) -> Result<Self> {
        map.target_kind(interval)?;
        map.algebras()?;
        Ok(OrderIsoExpr {
            map,
            interval,
            source: None,
        })
    }

    pub fn with_source(mut self, alg: Algebra) -> Result<Self> {
        if let (Some(s), _) = self.map.algebras()? {
            s.check_same(&alg)?;
        }
        self.source = Some(alg);
        Ok(self)
    }

    pub fn source_interval(&self) -> IntervalKind {
        self.interval
    }

    pub fn target_interval(&self) -> IntervalKind {
        self.map.target_kind(self.interval).expect("checked on construction")
    }

    pub fn source_algebra(&self) -> Option<Algebra> {
        self.map
            .algebras()
            .ok()
            .and_then(|(s, _)| s)
            .or_else(|| self.source.clone())
    }

    pub fn target_algebra(&self) -> Option<Algebra> {
        self.map
            .algebras()
            .ok()
            .and_then(|(_, t)| t)
            .or_else(|| self.source.clone())
    }

    /// Evaluates the expression, asserting source and target interval
    /// membership.
    pub fn evaluate(&self, a: &Element, tol: &Tolerances) -> Result<Element> {
        let a = self.interval.require(a, tol)?;
        let out = self.map.apply(&a, tol)?;
        self.target_interval().require(&out, tol)
    }

    pub fn inverse(&self) -> Result<OrderIsoExpr> {
        let mut inv = OrderIsoExpr::new(self.map.inverse()?, self.target_interval())?;
        inv.source = self.target_algebra();
        Ok(inv)
    }

    /// `a ↦ 1 − Φ(1 − a)` for effect-interval expressions.
    pub fn perp(&self) -> Result<OrderIsoExpr> {
        effect_only(self.interval, "perp")?;
        let mut out = OrderIsoExpr::new(
            MapNode::Perp {
                map: Box::new(self.map.clone()),
            },
            IntervalKind::Effect,
        )?;
        out.source = self.source.clone();
        Ok(out)
    }
}

/// `f_1 ∘ f_2 ∘ … ∘ f_n`; the declared interval is the one of `f_n`.
pub fn compose(exprs: Vec<OrderIsoExpr>) -> Result<OrderIsoExpr> {
    let Some(last) = exprs.last() else {
        return Err(Error::Parameter("compose needs at least one map".into()));
    };
    let interval = last.interval;
    let source = last.source_algebra();
    // Each inner target interval must match the next outer source interval.
    for pair in exprs.windows(2) {
        let (outer, inner) = (&pair[0], &pair[1]);
        if inner.target_interval() != outer.interval {
            return Err(Error::IntervalMismatch {
                expected: outer.interval,
                found: inner.target_interval(),
            });
        }
    }
    let mut out = OrderIsoExpr::new(
        MapNode::Compose {
            maps: exprs.into_iter().map(|e| e.map).collect(),
        },
        interval,
    )?;
    out.source = source;
    Ok(out)
}

impl Serialize for OrderIsoExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let mut v = serde_json::to_value(&self.map).map_err(S::Error::custom)?;
        let obj = v.as_object_mut().expect("map nodes serialize to objects");
        obj.insert(
            "interval".into(),
            serde_json::to_value(self.interval).map_err(S::Error::custom)?,
        );
        if let Some(src) = &self.source {
            obj.insert("source".into(), serde_json::to_value(src).map_err(S::Error::custom)?);
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrderIsoExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut v = serde_json::Value::deserialize(d)?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("map expression must be a JSON object"))?;
        let interval = match obj.remove("interval") {
            Some(i) => serde_json::from_value(i).map_err(D::Error::custom)?,
            None => IntervalKind::Effect,
        };
        let source: Option<Algebra> = match obj.remove("source") {
            Some(s) => Some(serde_json::from_value(s).map_err(D::Error::custom)?),
            None => None,
        };
        let map: MapNode = serde_json::from_value(v).map_err(D::Error::custom)?;
        let mut expr = OrderIsoExpr::new(map, interval).map_err(D::Error::custom)?;
        if let Some(src) = source {
            expr = expr.with_source(src).map_err(D::Error::custom)?;
        }
        Ok(expr)
    }
}

impl fmt::Display for OrderIsoExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(m: &MapNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match m {
                MapNode::Compose { maps } => {
                    for (i, inner) in maps.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" ∘ ")?;
                        }
                        node(inner, f)?;
                    }
                    Ok(())
                }
                MapNode::Perp { map } => {
                    f.write_str("perp(")?;
                    node(map, f)?;
                    f.write_str(")")
                }
                MapNode::PhiAlpha { alpha } | MapNode::PhiAlphaInv { alpha } | MapNode::FAlpha { alpha } => {
                    write!(f, "{}[{alpha}]", m.name())
                }
                other => f.write_str(other.name()),
            }
        }
        node(&self.map, f)?;
        write!(f, " on {}", self.interval)
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{Element, Tolerances};
use crate::error::{Error, Result};

/// The operator intervals order isomorphisms act between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// `[0, 1]`
    Effect,
    /// `a ≥ 0`
    Cone,
    /// `a > 0`
    ConeStrict,
    /// all hermitian elements
    Sa,
}

impl IntervalKind {
    pub const ALL: [IntervalKind; 4] = [
        IntervalKind::Effect,
        IntervalKind::Cone,
        IntervalKind::ConeStrict,
        IntervalKind::Sa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntervalKind::Effect => "effect",
            IntervalKind::Cone => "cone",
            IntervalKind::ConeStrict => "cone_strict",
            IntervalKind::Sa => "sa",
        }
    }

    /// Membership test; non-hermitian elements are never members.
    pub fn contains(self, a: &Element, tol: &Tolerances) -> bool {
        let Ok(h) = a.to_hermitian(tol) else {
            return false;
        };
        match self {
            IntervalKind::Sa => true,
            IntervalKind::Cone => h.is_positive(tol).unwrap_or(false),
            IntervalKind::ConeStrict => h.is_strictly_positive(tol).unwrap_or(false),
            IntervalKind::Effect => {
                h.is_positive(tol).unwrap_or(false) && h.complement().is_positive(tol).unwrap_or(false)
            }
        }
    }

    pub fn require(self, a: &Element, tol: &Tolerances) -> Result<Element> {
        let h = a.to_hermitian(tol)?;
        if self.contains(&h, tol) {
            Ok(h)
        } else {
            Err(Error::OutsideInterval(self))
        }
    }

    /// A fixed interior point, used to fill blocks a probe does not touch.
    pub fn filler(self) -> f64 {
        match self {
            IntervalKind::Effect | IntervalKind::Cone | IntervalKind::Sa => 0.0,
            IntervalKind::ConeStrict => 1.0,
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for IntervalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IntervalKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown interval kind {s:?}")))
    }
}

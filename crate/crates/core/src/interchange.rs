//! JSON interchange.
//!
//! An element is `{"blocks": [block, ...], "hermitian": bool}` where each
//! block is a row-major list of rows and every entry is a `[re, im]` pair. An
//! algebra is `{"blocks": [n1, n2, ...]}`. Floats are written with 17
//! significant digits so that every double survives a roundtrip.

use std::io;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::algebra::{Algebra, CMat, Element};
use crate::error::Result;

pub(crate) fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMat, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(n, m, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// `#[serde(with = "cmat")]` for a single complex matrix.
pub(crate) mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        rows_to_matrix(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "cmat_list")]` for a list of complex matrices.
pub(crate) mod cmat_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let blocks = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        blocks
            .iter()
            .map(|b| rows_to_matrix(b).map_err(D::Error::custom))
            .collect()
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Element", 2)?;
        st.serialize_field("blocks", &self.blocks().iter().map(matrix_to_rows).collect::<Vec<_>>())?;
        st.serialize_field("hermitian", &self.is_hermitian_flagged())?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRepr {
    #[serde(with = "cmat_list")]
    blocks: Vec<CMat>,
    #[serde(default)]
    hermitian: bool,
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        for (i, m) in repr.blocks.iter().enumerate() {
            if m.nrows() != m.ncols() {
                return Err(D::Error::custom(format!("block {i} is not square")));
            }
        }
        let dims = repr.blocks.iter().map(|m| m.nrows()).collect();
        let alg = Algebra::new(dims).map_err(D::Error::custom)?;
        Element::from_blocks(alg, repr.blocks, repr.hermitian).map_err(D::Error::custom)
    }
}

/// Pretty printer that writes every float as `{:.16e}`.
pub struct DigitsFormatter {
    inner: PrettyFormatter<'static>,
}

impl Default for DigitsFormatter {
    fn default() -> Self {
        DigitsFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for DigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        // Adding +0 folds -0 into 0.
        let value = value + 0.0;
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Compact writer with the same float format, one value per line.
#[derive(Default)]
pub struct CompactDigitsFormatter;

impl Formatter for CompactDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        DigitsFormatter::default().write_f64(w, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, DigitsFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CompactDigitsFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_json_shape() {
        let alg = Algebra::new(vec![1, 2]).unwrap();
        let e = Element::diagonal(&alg, &[vec![0.5], vec![1.0, -2.0]]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json_line(&e).unwrap()).unwrap();
        assert_eq!(v["hermitian"], true);
        assert_eq!(v["blocks"][1][1][1][0].as_f64(), Some(-2.0));
        assert_eq!(v["blocks"][0][0][0][1].as_f64(), Some(0.0));
    }

    #[test]
    fn seventeen_digits() {
        let s = to_json_line(&[0.1f64, 1.0 / 3.0, -0.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,3.3333333333333331e-1,0.0000000000000000e0]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], 1.0 / 3.0);
    }

    #[test]
    fn rejects_bad_elements() {
        assert!(serde_json::from_str::<Element>(r#"{"blocks":[[[[1,0],[0,0]]]],"hermitian":true}"#).is_err());
        let nonherm = r#"{"blocks":[[[[0,0],[1,0]],[[0,0],[0,0]]]],"hermitian":true}"#;
        assert!(serde_json::from_str::<Element>(nonherm).is_err());
        let ok = r#"{"blocks":[[[[0,0],[1,0]],[[0,0],[0,0]]]],"hermitian":false}"#;
        assert!(serde_json::from_str::<Element>(ok).is_ok());
        assert!(serde_json::from_str::<Element>(r#"{"blocks":[],"hermitian":true}"#).is_err());
        assert!(serde_json::from_str::<Element>(r#"{"blocks":[[[[1,0]]]],"extra":1}"#).is_err());
    }

    #[test]
    fn algebra_json() {
        let a: Algebra = serde_json::from_str(r#"{"blocks":[2,3]}"#).unwrap();
        assert_eq!(a.blocks(), &[2, 3]);
        assert!(serde_json::from_str::<Algebra>(r#"{"blocks":[0]}"#).is_err());
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"blocks":[2,3]}"#);
    }
}

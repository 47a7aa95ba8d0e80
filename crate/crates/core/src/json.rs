//! Versioned JSON documents holding structure-constant tensors.
//!
//! Layout: `{"schema": 1, "dim": N, "exact": bool, "tensors": [{"label",
//! "entries": [[i, j, k, value...], ...]}], "meta": {...}}`. Entries are
//! the nonzero `c^k_{ij}` in lexicographic order. A floating value is
//! `re, im`; an exact value is one `"p/q"` string per coordinate over the
//! field named in `meta.field`.

use std::path::Path;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::degenerate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};
use crate::lie::LieStructure;
use crate::scalar::{Scalar, C64};

pub const SCHEMA_VERSION: u64 = 1;

/// Scalars that can be written as JSON cells.
pub trait JsonScalar: Scalar {
    const EXACT: bool;
    /// Name of the coefficient field for exact scalars.
    fn field() -> Option<String>;
    fn to_cells(&self) -> Vec<Value>;
    fn from_cells(cells: &[Value]) -> Result<Self>;
}

fn number(v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Malformed(format!("expected a number, found {v}")))
}

fn rational(v: &Value) -> Result<BigRational> {
    let s = v.as_str().ok_or_else(|| Error::Malformed(format!("expected a rational string, found {v}")))?;
    BigRational::from_str(s).map_err(|_| Error::Malformed(format!("cannot parse rational {s:?}")))
}

impl JsonScalar for C64 {
    const EXACT: bool = false;

    fn field() -> Option<String> {
        None
    }

    fn to_cells(&self) -> Vec<Value> {
        vec![Value::from(self.re), Value::from(self.im)]
    }

    fn from_cells(cells: &[Value]) -> Result<Self> {
        match cells {
            [re, im] => Ok(C64::new(number(re)?, number(im)?)),
            _ => Err(Error::Malformed(format!("complex entry needs 2 values, found {}", cells.len()))),
        }
    }
}

impl JsonScalar for BigRational {
    const EXACT: bool = true;

    fn field() -> Option<String> {
        Some("rational".into())
    }

    fn to_cells(&self) -> Vec<Value> {
        vec![Value::from(self.to_string())]
    }

    fn from_cells(cells: &[Value]) -> Result<Self> {
        match cells {
            [v] => rational(v),
            _ => Err(Error::Malformed(format!("rational entry needs 1 value, found {}", cells.len()))),
        }
    }
}

impl<const N: usize> JsonScalar for Cyclotomic<N> {
    const EXACT: bool = true;

    fn field() -> Option<String> {
        Some(format!("cyclotomic-{N}"))
    }

    fn to_cells(&self) -> Vec<Value> {
        self.coords().iter().map(|c| Value::from(c.to_string())).collect()
    }

    fn from_cells(cells: &[Value]) -> Result<Self> {
        if cells.len() != Self::degree() {
            return Err(Error::Malformed(format!("cyclotomic-{N} entry needs {} values, found {}", Self::degree(), cells.len())));
        }
        Ok(Self::from_coords(cells.iter().map(rational).collect::<Result<_>>()?))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// `[re, im]` of the modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    /// Which construction produced the tensors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub label: String,
    pub entries: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorDocument {
    pub schema: u64,
    pub dim: usize,
    pub exact: bool,
    pub tensors: Vec<TensorRecord>,
    pub meta: Meta,
}

fn index(v: &Value, dim: usize) -> Result<usize> {
    let i = v.as_u64().ok_or_else(|| Error::Malformed(format!("expected an index, found {v}")))? as usize;
    if i >= dim {
        return Err(Error::Malformed(format!("index {i} out of range for dim {dim}")));
    }
    Ok(i)
}

impl TensorDocument {
    pub fn from_structures<S: JsonScalar>(tensors: &[&LieStructure<S>], mut meta: Meta) -> Result<Self> {
        let dim = tensors.first().map_or(0, |t| t.dim());
        if tensors.iter().any(|t| t.dim() != dim) {
            return Err(Error::InvalidParameter("tensors must share a dimension".into()));
        }
        meta.field = S::field();
        let records = tensors
            .iter()
            .map(|t| {
                let entries = t
                    .entries()
                    .filter(|(_, _, _, v)| !v.is_zero())
                    .map(|(i, j, k, v)| {
                        let mut row = vec![Value::from(i), Value::from(j), Value::from(k)];
                        row.extend(v.to_cells());
                        row
                    })
                    .collect();
                TensorRecord { label: t.label.clone(), entries }
            })
            .collect();
        Ok(Self { schema: SCHEMA_VERSION, dim, exact: S::EXACT, tensors: records, meta })
    }

    /// Rebuilds the tensors; fails on a scalar-kind mismatch or when an
    /// entry contradicts antisymmetry.
    pub fn to_structures<S: JsonScalar>(&self) -> Result<Vec<LieStructure<S>>> {
        if self.exact != S::EXACT || self.meta.field != S::field() {
            return Err(Error::Malformed(format!(
                "document holds {} entries over {:?}, requested {:?}",
                if self.exact { "exact" } else { "floating" },
                self.meta.field,
                S::field()
            )));
        }
        let d = self.dim;
        self.tensors
            .iter()
            .map(|rec| {
                let mut raw: Vec<Option<S>> = vec![None; d * d * d];
                for row in &rec.entries {
                    if row.len() < 4 {
                        return Err(Error::Malformed(format!("entry {row:?} is too short")));
                    }
                    let (i, j, k) = (index(&row[0], d)?, index(&row[1], d)?, index(&row[2], d)?);
                    raw[(i * d + j) * d + k] = Some(S::from_cells(&row[3..])?);
                }
                let get = |i: usize, j: usize, k: usize| raw[(i * d + j) * d + k].clone().unwrap_or_else(S::zero);
                for i in 0..d {
                    for j in i..d {
                        for k in 0..d {
                            if get(i, j, k) != -get(j, i, k) {
                                return Err(Error::Malformed(format!("tensor {:?} is not antisymmetric at ({i}, {j}, {k})", rec.label)));
                            }
                        }
                    }
                }
                let mut t = LieStructure::from_upper(d, rec.label.clone(), get);
                t.label = rec.label.clone();
                Ok(t)
            })
            .collect()
    }

    /// Text with one entry per line and a trailing newline; identical
    /// documents give identical bytes.
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::from("{\n");
        s.push_str(&format!("  \"schema\": {},\n  \"dim\": {},\n  \"exact\": {},\n  \"tensors\": [", self.schema, self.dim, self.exact));
        for (t, rec) in self.tensors.iter().enumerate() {
            s.push_str(if t == 0 { "\n" } else { ",\n" });
            s.push_str(&format!("    {{\n      \"label\": {},\n      \"entries\": [", serde_json::to_string(&rec.label)?));
            for (e, row) in rec.entries.iter().enumerate() {
                s.push_str(if e == 0 { "\n        " } else { ",\n        " });
                s.push_str(&serde_json::to_string(row)?);
            }
            s.push_str(if rec.entries.is_empty() { "]\n    }" } else { "\n      ]\n    }" });
        }
        s.push_str(if self.tensors.is_empty() { "],\n" } else { "\n  ],\n" });
        s.push_str(&format!("  \"meta\": {}\n}}\n", serde_json::to_string(&self.meta)?));
        Ok(s)
    }

    /// Parses a document, checking the schema version before the layout.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let found = value
            .get("schema")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing integer field \"schema\"".into()))?;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
        }
        let doc: Self = serde_json::from_value(value)?;
        if doc.exact != doc.meta.field.is_some() {
            return Err(Error::Malformed("\"exact\" disagrees with meta.field".into()));
        }
        Ok(doc)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

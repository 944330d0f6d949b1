//! Reading the small JSON documents that describe tableaux and vector fields.
//!
//! Objects are read entry by entry so duplicate and unknown keys can be
//! reported instead of silently resolved.

use std::fmt;

use num_rational::BigRational;
use serde::de::{Deserialize, Deserializer, MapAccess, Visitor};
use serde_json::Value;
use thiserror::Error;

use crate::algebra::{parse_rational, AlgebraError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("duplicate field {0:?}")]
    DuplicateField(String),
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("field {field:?} must be {expected}")]
    WrongType {
        field: String,
        expected: &'static str,
    },
    #[error("dimension mismatch in {field:?}: expected {expected} entries, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed rational in {field:?}: {source}")]
    Rational { field: String, source: AlgebraError },
    #[error("malformed polynomial in {field:?}: {source}")]
    Polynomial { field: String, source: AlgebraError },
    #[error("{0}")]
    Invalid(String),
}

struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> Result<Entries, M::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    entries.push((k, v));
                }
                Ok(Entries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

/// Top-level object of a document with a fixed set of allowed keys.
pub(crate) struct Object {
    entries: Vec<(String, Value)>,
}

impl Object {
    pub(crate) fn parse(text: &str, allowed: &[&str]) -> Result<Self, DocumentError> {
        let Entries(entries) =
            serde_json::from_str(text).map_err(|e| DocumentError::Json(e.to_string()))?;
        for (k, (key, _)) in entries.iter().enumerate() {
            if !allowed.contains(&key.as_str()) {
                return Err(DocumentError::UnknownField(key.clone()));
            }
            if entries[..k].iter().any(|(other, _)| other == key) {
                return Err(DocumentError::DuplicateField(key.clone()));
            }
        }
        Ok(Object { entries })
    }

    pub(crate) fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub(crate) fn require(&self, key: &'static str) -> Result<&Value, DocumentError> {
        self.get(key).ok_or(DocumentError::MissingField(key))
    }
}

pub(crate) fn as_positive_integer(field: &str, v: &Value) -> Result<usize, DocumentError> {
    v.as_u64()
        .filter(|&n| n >= 1)
        .map(|n| n as usize)
        .ok_or_else(|| DocumentError::WrongType {
            field: field.to_string(),
            expected: "a positive integer",
        })
}

pub(crate) fn as_array<'v>(field: &str, v: &'v Value) -> Result<&'v Vec<Value>, DocumentError> {
    v.as_array().ok_or_else(|| DocumentError::WrongType {
        field: field.to_string(),
        expected: "an array",
    })
}

pub(crate) fn as_string<'v>(field: &str, v: &'v Value) -> Result<&'v str, DocumentError> {
    v.as_str().ok_or_else(|| DocumentError::WrongType {
        field: field.to_string(),
        expected: "a string",
    })
}

/// A rational given as a string such as `"-3/7"` or `"0.5"`; plain JSON
/// numbers are read through their decimal text.
pub(crate) fn as_rational(field: &str, v: &Value) -> Result<BigRational, DocumentError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => {
            return Err(DocumentError::WrongType {
                field: field.to_string(),
                expected: "a rational string",
            })
        }
    };
    parse_rational(&text).map_err(|source| DocumentError::Rational {
        field: field.to_string(),
        source,
    })
}

pub(crate) fn rational_vector(
    field: &str,
    v: &Value,
    len: usize,
) -> Result<Vec<BigRational>, DocumentError> {
    let items = as_array(field, v)?;
    if items.len() != len {
        return Err(DocumentError::Dimension {
            field: field.to_string(),
            expected: len,
            found: items.len(),
        });
    }
    items
        .iter()
        .enumerate()
        .map(|(k, x)| as_rational(&format!("{field}[{}]", k + 1), x))
        .collect()
}

/// Comma separated rationals, as given on a command line: `1,0` or `1/2`.
pub fn parse_rational_list(text: &str) -> Result<Vec<BigRational>, AlgebraError> {
    text.split(',').map(|s| parse_rational(s.trim())).collect()
}

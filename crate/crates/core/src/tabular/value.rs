use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnSpec, DEFAULT_DATE_FORMAT, FALLBACK_DATE_FORMAT};

/// A single non-missing cell. Integers are kept apart from reals so that
/// identifiers and counts round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Date(NaiveDate),
    Text(String),
}

pub(crate) fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

impl Value {
    /// Numeric view: booleans as 0/1, dates as days since 1970-01-01.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Date(d) => Some((*d - epoch()).num_days() as f64),
            Value::Text(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(i64::from(*b)),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<NaiveDate> {
        match self {
            Value::Date(d) => Some(*d),
            _ => None,
        }
    }

    pub(crate) fn render(&self, spec: &ColumnSpec) -> String {
        match self {
            Value::Date(d) => d.format(spec.output_date_format()).to_string(),
            other => other.to_string(),
        }
    }

    /// Parse a raw (already trimmed, nonempty) cell according to a column spec.
    pub(crate) fn parse(raw: &str, spec: &ColumnSpec) -> Option<Value> {
        match spec.kind {
            ColumnKind::Integer => raw.parse::<i64>().ok().map(Value::Int),
            ColumnKind::Real => raw
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Value::Real),
            ColumnKind::Categorical => Some(Value::Text(raw.to_owned())),
            ColumnKind::Boolean => match raw.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => Some(Value::Bool(true)),
                "0" | "false" | "no" => Some(Value::Bool(false)),
                _ => None,
            },
            ColumnKind::Date => {
                let parse = |fmt: &str| NaiveDate::parse_from_str(raw, fmt).ok();
                match &spec.date_format {
                    Some(fmt) => parse(fmt),
                    None => parse(DEFAULT_DATE_FORMAT).or_else(|| parse(FALLBACK_DATE_FORMAT)),
                }
                .map(Value::Date)
            }
        }
    }

    pub(crate) fn matches_kind(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Value::Int(_), ColumnKind::Integer)
                | (Value::Real(_), ColumnKind::Real)
                | (Value::Text(_), ColumnKind::Categorical)
                | (Value::Date(_), ColumnKind::Date)
                | (Value::Bool(_), ColumnKind::Boolean)
        )
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // `{}` on f64 prints the shortest string that parses back to the same bits.
            Value::Real(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Date(d) => write!(f, "{}", d.format(DEFAULT_DATE_FORMAT)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

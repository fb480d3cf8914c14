//! Scalar values and domains.
//!
//! Seven base domains plus reference domains, one per class. A reference
//! domain stores object identifiers and shares its value space with `dOID`;
//! the class tag only matters to the type checker and the path resolver.
//! `NULL` is not a domain: any attribute can carry it.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Attribute domain tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Domain {
    Integer,
    Float,
    String,
    DateTime,
    Boolean,
    /// Object identifiers, the union of all reference domains.
    Oid,
    /// Reference domain named after a class; stored as OIDs.
    Ref(std::string::String),
}

impl Domain {
    /// True when two domains share a value representation. Every reference
    /// domain is storage-compatible with `dOID` and with every other
    /// reference domain.
    pub fn storage_eq(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Oid | Domain::Ref(_), Domain::Oid | Domain::Ref(_)) => true,
            (a, b) => a == b,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Domain::Integer | Domain::Float)
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Domain::Oid | Domain::Ref(_))
    }

    /// Parse a domain name as it appears in machine text.
    pub fn parse(name: &str) -> Option<Domain> {
        match name.to_ascii_uppercase().as_str() {
            "INTEGER" => Some(Domain::Integer),
            "FLOAT" => Some(Domain::Float),
            "STRING" => Some(Domain::String),
            "DATETIME" => Some(Domain::DateTime),
            "BOOLEAN" => Some(Domain::Boolean),
            _ if name == "dOID" || name.eq_ignore_ascii_case("DOID") => Some(Domain::Oid),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Integer => write!(f, "INTEGER"),
            Domain::Float => write!(f, "FLOAT"),
            Domain::String => write!(f, "STRING"),
            Domain::DateTime => write!(f, "DATETIME"),
            Domain::Boolean => write!(f, "BOOLEAN"),
            Domain::Oid => write!(f, "dOID"),
            Domain::Ref(c) => write!(f, "{c}"),
        }
    }
}

/// Opaque object identifier. Only object creation mints these; no literal
/// syntax exists for them in either source language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Oid(pub u64);

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

/// Calendar date, day precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Date> {
        let max_day = match month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            2 => {
                if year % 4 == 0 && (year % 100 != 0 || year % 400 == 0) {
                    29
                } else {
                    28
                }
            }
            _ => return Err(Error::TypeError(format!("bad month {month} in date"))),
        };
        if day == 0 || day > max_day {
            return Err(Error::TypeError(format!("bad day {day} in date")));
        }
        Ok(Date { year, month, day })
    }

    /// Accepts `YYYY-MM-DD` and `YYYY.MM.DD`.
    pub fn parse(text: &str) -> Result<Date> {
        let sep = if text.contains('-') { '-' } else { '.' };
        let parts: Vec<&str> = text.split(sep).collect();
        if parts.len() != 3 {
            return Err(Error::TypeError(format!("cannot parse `{text}` as a date")));
        }
        let bad = |_| Error::TypeError(format!("cannot parse `{text}` as a date"));
        Date::new(
            parts[0].parse().map_err(bad)?,
            parts[1].parse().map_err(bad)?,
            parts[2].parse().map_err(bad)?,
        )
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

/// A scalar value. `Null` can appear under any domain.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Integer(i64),
    Float(f64),
    String(std::string::String),
    DateTime(Date),
    Boolean(bool),
    Oid(Oid),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Domain of a non-null value; `None` for NULL.
    pub fn domain(&self) -> Option<Domain> {
        match self {
            Value::Null => None,
            Value::Integer(_) => Some(Domain::Integer),
            Value::Float(_) => Some(Domain::Float),
            Value::String(_) => Some(Domain::String),
            Value::DateTime(_) => Some(Domain::DateTime),
            Value::Boolean(_) => Some(Domain::Boolean),
            Value::Oid(_) => Some(Domain::Oid),
        }
    }

    /// Fit a value into a domain for storage. INTEGER widens to FLOAT and
    /// STRING parses into DATETIME; everything else must match exactly.
    pub fn coerce_to(self, domain: &Domain) -> Result<Value> {
        match (&self, domain) {
            (Value::Null, _) => Ok(Value::Null),
            (Value::Integer(_), Domain::Integer) => Ok(self),
            (Value::Integer(i), Domain::Float) => Ok(Value::Float(*i as f64)),
            (Value::Float(_), Domain::Float) => Ok(self),
            (Value::String(_), Domain::String) => Ok(self),
            (Value::String(s), Domain::DateTime) => Ok(Value::DateTime(Date::parse(s)?)),
            (Value::DateTime(_), Domain::DateTime) => Ok(self),
            (Value::Boolean(_), Domain::Boolean) => Ok(self),
            (Value::Oid(_), Domain::Oid | Domain::Ref(_)) => Ok(self),
            (v, d) => Err(Error::TypeError(format!(
                "value {} does not fit domain {d}",
                v.render()
            ))),
        }
    }

    /// Render for display and tuple files. NULL is rendered by the caller
    /// (it differs between aligned and tab output).
    pub fn render(&self) -> std::string::String {
        match self {
            Value::Null => "NULL".into(),
            Value::Integer(i) => i.to_string(),
            Value::Float(x) => x.to_string(),
            Value::String(s) => s.clone(),
            Value::DateTime(d) => d.to_string(),
            Value::Boolean(b) => b.to_string(),
            Value::Oid(o) => o.to_string(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Boolean(_) => 1,
            Value::Integer(_) => 2,
            Value::Float(_) => 3,
            Value::String(_) => 4,
            Value::DateTime(_) => 5,
            Value::Oid(_) => 6,
        }
    }
}

/// Total order used for duplicate elimination and deterministic output.
/// NULL sorts first and compares equal to NULL; mixed INTEGER/FLOAT compare
/// numerically so coerced columns stay duplicate-free.
impl Ord for Value {
    fn cmp(&self, other: &Value) -> Ordering {
        use Value::*;
        match (self, other) {
            (Null, Null) => Ordering::Equal,
            (Integer(a), Integer(b)) => a.cmp(b),
            (Integer(a), Float(b)) => (*a as f64).total_cmp(b),
            (Float(a), Integer(b)) => a.total_cmp(&(*b as f64)),
            (Float(a), Float(b)) => a.total_cmp(b),
            (String(a), String(b)) => a.cmp(b),
            (DateTime(a), DateTime(b)) => a.cmp(b),
            (Boolean(a), Boolean(b)) => a.cmp(b),
            (Oid(a), Oid(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

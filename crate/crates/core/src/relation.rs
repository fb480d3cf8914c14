//! Schemas, tuples, and duplicate-free relations — the single value format
//! of the target machine.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::value::{Domain, Value};

/// Attribute name. Opaque to the algebra; dots inside (`Items.Art`) are
/// meaningful only to the translator that generated them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrName(String);

impl AttrName {
    pub fn new(s: impl Into<String>) -> AttrName {
        AttrName(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AttrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AttrName {
    fn from(s: &str) -> AttrName {
        AttrName(s.to_string())
    }
}

impl From<String> for AttrName {
    fn from(s: String) -> AttrName {
        AttrName(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: AttrName,
    pub domain: Domain,
}

/// Ordered attribute list with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    attrs: Vec<Attribute>,
}

impl Schema {
    pub fn new(attrs: Vec<Attribute>) -> Result<Schema> {
        for (i, a) in attrs.iter().enumerate() {
            if attrs[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::DuplicateAttribute(a.name.to_string()));
            }
        }
        Ok(Schema { attrs })
    }

    /// Convenience constructor from `(name, domain)` pairs.
    pub fn of(pairs: &[(&str, Domain)]) -> Schema {
        Schema::new(
            pairs
                .iter()
                .map(|(n, d)| Attribute {
                    name: AttrName::from(*n),
                    domain: d.clone(),
                })
                .collect(),
        )
        .expect("duplicate attribute in literal schema")
    }

    pub fn attrs(&self) -> &[Attribute] {
        &self.attrs
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.name.as_str() == name)
    }

    pub fn domain_of(&self, name: &str) -> Option<&Domain> {
        self.index_of(name).map(|i| &self.attrs[i].domain)
    }

    pub fn names(&self) -> impl Iterator<Item = &AttrName> {
        self.attrs.iter().map(|a| &a.name)
    }

    /// Set operations require equal names in order and storage-compatible
    /// domains.
    pub fn setop_compatible(&self, other: &Schema) -> bool {
        self.arity() == other.arity()
            && self
                .attrs
                .iter()
                .zip(other.attrs.iter())
                .all(|(a, b)| a.name == b.name && a.domain.storage_eq(&b.domain))
    }
}

/// Positional value list aligned with a schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tuple(pub Vec<Value>);

impl Tuple {
    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

/// Schema plus a set of tuples. Set semantics throughout: inserting an
/// attribute-wise equal tuple (NULLs comparing equal) is a no-op.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn new(schema: Schema) -> Relation {
        Relation {
            schema,
            tuples: BTreeSet::new(),
        }
    }

    /// Build from rows, coercing each value to its attribute domain.
    pub fn from_rows(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Relation> {
        let mut rel = Relation::new(schema);
        for row in rows {
            rel.insert(row)?;
        }
        Ok(rel)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.tuples.contains(t)
    }

    /// Validates arity and domains (with storage coercion) then inserts.
    pub fn insert(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.schema.arity() {
            return Err(Error::SchemaMismatch(format!(
                "tuple arity {} vs schema arity {}",
                row.len(),
                self.schema.arity()
            )));
        }
        let mut vals = Vec::with_capacity(row.len());
        for (v, a) in row.into_iter().zip(self.schema.attrs.iter()) {
            vals.push(v.coerce_to(&a.domain)?);
        }
        self.tuples.insert(Tuple(vals));
        Ok(())
    }

    /// Inserts a tuple that is already known to fit the schema.
    pub(crate) fn insert_unchecked(&mut self, t: Tuple) {
        self.tuples.insert(t);
    }

    pub fn single_value(&self) -> Option<&Value> {
        if self.schema.arity() == 1 && self.tuples.len() == 1 {
            self.tuples.iter().next().map(|t| &t.0[0])
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_schema() -> Schema {
        Schema::of(&[("i", Domain::Integer)])
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let r = Schema::new(vec![
            Attribute {
                name: "a".into(),
                domain: Domain::Integer,
            },
            Attribute {
                name: "a".into(),
                domain: Domain::Float,
            },
        ]);
        assert_eq!(r, Err(Error::DuplicateAttribute("a".into())));
    }

    #[test]
    fn set_semantics_deduplicate() {
        let mut r = Relation::new(int_schema());
        r.insert(vec![Value::Integer(1)]).unwrap();
        r.insert(vec![Value::Integer(1)]).unwrap();
        r.insert(vec![Value::Null]).unwrap();
        r.insert(vec![Value::Null]).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn insert_coerces_and_checks() {
        let mut r = Relation::new(Schema::of(&[("x", Domain::Float)]));
        r.insert(vec![Value::Integer(2)]).unwrap();
        assert!(r.contains(&Tuple(vec![Value::Float(2.0)])));
        assert!(r.insert(vec![Value::String("no".into())]).is_err());
        assert!(r
            .insert(vec![Value::Integer(1), Value::Integer(2)])
            .is_err());
    }
}

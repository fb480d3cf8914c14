//! A relational target machine driven by CREATE/SET/GET/TRANS/EXEC over
//! real and virtual relvars, plus a translator that compiles an
//! object-oriented persistent-data language — classes, components, methods,
//! multiple inheritance, references, path queries — into machine commands,
//! with iterator-free group execution and polymorphic binding.

pub mod algebra;
pub mod engine;
pub mod error;
pub mod lex;
pub mod machine;
pub mod oo;
pub mod relation;
pub mod scalar;
pub mod value;

pub use engine::Engine;
pub use error::{Error, Result};
pub use relation::{AttrName, Attribute, Relation, Schema, Tuple};
pub use value::{Date, Domain, Oid, Value};

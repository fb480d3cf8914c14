//! Shared fixtures: the trade-company example advanced to its two
//! snapshot states.
#![allow(dead_code)]

pub mod thesis;

use rxo_core::oo::parser::parse_commands;
use rxo_core::relation::{Relation, Schema};
use rxo_core::value::{Domain, Value};
use rxo_core::Engine;

pub fn s(v: &str) -> Value {
    Value::String(v.into())
}

pub fn i(v: i64) -> Value {
    Value::Integer(v)
}

pub fn rel(pairs: &[(&str, Domain)], rows: Vec<Vec<Value>>) -> Relation {
    Relation::from_rows(Schema::of(pairs), rows).unwrap()
}

pub fn query_result(e: &mut Engine) -> Relation {
    e.execute_source(QUERY).unwrap().remove(0)
}

/// The classes of the running example, unimplemented.
pub const CLASSES: &str = r#"
CLASS BANKS ( Name STRING );
CLASS CONTRACTORS ( Name STRING, Bank BANKS, ID STRING ) KEY (ID);
CLASS GOODS (
  Art STRING,
  Turnover SET OF ( DocN STRING, Cntr CONTRACTORS, Pieces INTEGER ) KEY (DocN),
  Pieces INTEGER
) KEY (Art);
CLASS DOCS (
  DocN STRING, Date DATETIME, Comment STRING, Cntr CONTRACTORS,
  DoShip(inDate DATETIME),
  Items SET OF ( Art STRING, Pieces INTEGER ) KEY (Art)
) KEY (DocN)
REFERENCE Items (.Art) ON GOODS (.Art);
"#;

pub const QUERY: &str = r#"
SELECT #S.DocN, #S.Comment, #S.Items.Art, #S.Items.Pieces
FROM DOCS<DocN LIKE "%1"> #S;
"#;

fn script() -> String {
    std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scripts/trade.rxo"
    ))
    .expect("golden script")
}

/// Engine advanced to just after the three Items inserts (first snapshot).
pub fn fig1_engine() -> Engine {
    let mut e = Engine::new();
    let all = parse_commands(&script()).expect("script parses");
    // commands up to (not including) the CLASS VALUERECORDS definition
    let cut = all
        .iter()
        .position(|c| c.to_string().starts_with("CLASS VALUERECORDS"))
        .expect("VALUERECORDS marker");
    for cmd in &all[..cut] {
        e.execute_command(cmd)
            .unwrap_or_else(|err| panic!("command failed: {cmd}\n  {err}"));
    }
    e
}

/// Engine advanced through the whole script (second snapshot).
pub fn fig2_engine() -> Engine {
    let mut e = Engine::new();
    for cmd in parse_commands(&script()).expect("script parses") {
        e.execute_command(&cmd)
            .unwrap_or_else(|err| panic!("command failed: {cmd}\n  {err}"));
    }
    e
}

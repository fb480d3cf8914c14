//! Benchmark fixtures: engines advanced to the example states and synthetic
//! relations for the algebra evaluator.

use rxo_core::oo::parser::parse_commands;
use rxo_core::relation::{Relation, Schema};
use rxo_core::value::{Domain, Value};
use rxo_core::Engine;

pub fn trade_script() -> String {
    std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scripts/trade.rxo"
    ))
    .expect("golden script")
}

/// Engine advanced through the whole trade-company script.
pub fn trade_engine() -> Engine {
    let mut e = Engine::new();
    for cmd in parse_commands(&trade_script()).expect("script parses") {
        e.execute_command(&cmd).expect("script command");
    }
    e
}

/// Synthetic pair of relations for join/union pipelines: `n` rows each.
pub fn synthetic(n: i64) -> (Relation, Relation) {
    let left = Relation::from_rows(
        Schema::of(&[("k", Domain::Integer), ("v", Domain::Integer)]),
        (0..n)
            .map(|i| vec![Value::Integer(i), Value::Integer(i * 3 % 17)])
            .collect(),
    )
    .unwrap();
    let right = Relation::from_rows(
        Schema::of(&[("k2", Domain::Integer), ("w", Domain::Integer)]),
        (0..n)
            .map(|i| vec![Value::Integer(i % (n / 2 + 1)), Value::Integer(i)])
            .collect(),
    )
    .unwrap();
    (left, right)
}

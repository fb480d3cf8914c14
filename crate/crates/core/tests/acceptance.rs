//! Acceptance suite: one criterion per test, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines
//! for passing criteria too.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::thesis;
use common::{fig1_engine, fig2_engine, i, query_result, rel, s, CLASSES};
use rxo_core::value::{Domain, Value};
use rxo_core::{Engine, Error};

fn criterion(n: u32, desc: &str, budget: Duration, f: impl FnOnce()) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    match &result {
        Ok(()) if elapsed <= budget => {
            println!("criterion {n}: PASS ({elapsed:.2?}) — {desc}");
        }
        Ok(()) => {
            println!("criterion {n}: FAIL (over budget: {elapsed:.2?} > {budget:.2?}) — {desc}");
            panic!("criterion {n} exceeded its time budget");
        }
        Err(_) => {
            println!("criterion {n}: FAIL ({elapsed:.2?}) — {desc}");
        }
    }
    if let Err(p) = result {
        std::panic::resume_unwind(p);
    }
}

#[test]
fn criterion_1_pre_implementation_query_is_empty() {
    criterion(
        1,
        "query over unimplemented classes returns the empty relation",
        Duration::from_secs(1),
        || {
            let mut e = Engine::new();
            e.execute_source(CLASSES).unwrap();
            let r = query_result(&mut e);
            assert!(r.is_empty());
        },
    );
}

#[test]
fn criterion_2_first_snapshot_values() {
    criterion(
        2,
        "first snapshot: Turnover, Pieces on stock, and the query row",
        Duration::from_secs(1),
        || {
            let mut e = fig1_engine();
            let axe = e
                .execute_source(
                    r#"SELECT #t.DocN, #t.Pieces FROM GOODS<.Art = "Axe">.Turnover #t;"#,
                )
                .unwrap()
                .remove(0);
            assert_eq!(
                axe,
                rel(
                    &[("DocN", Domain::String), ("Pieces", Domain::Integer)],
                    vec![vec![s("Ship1"), i(2)], vec![s("Ship2"), i(5)]],
                )
            );
            let tie = e
                .execute_source(
                    r#"SELECT #t.DocN, #t.Pieces FROM GOODS<.Art = "Tie">.Turnover #t;"#,
                )
                .unwrap()
                .remove(0);
            assert_eq!(
                tie,
                rel(
                    &[("DocN", Domain::String), ("Pieces", Domain::Integer)],
                    vec![vec![s("Ship2"), i(10)]],
                )
            );
            let stock = e
                .execute_source("SELECT #g.Art, #g.Pieces FROM GOODS #g;")
                .unwrap()
                .remove(0);
            assert_eq!(
                stock,
                rel(
                    &[("Art", Domain::String), ("Pieces", Domain::Integer)],
                    vec![vec![s("Axe"), i(7)], vec![s("Tie"), i(10)]],
                )
            );
            let q = query_result(&mut e);
            assert_eq!(
                q,
                rel(
                    &[
                        ("DocN", Domain::String),
                        ("Comment", Domain::String),
                        ("Items.Art", Domain::String),
                        ("Items.Pieces", Domain::Integer),
                    ],
                    vec![vec![s("Ship1"), Value::Null, s("Axe"), i(2)]],
                )
            );
        },
    );
}

#[test]
fn criterion_3_second_snapshot_values() {
    criterion(
        3,
        "second snapshot: polymorphic query, Amount 1520, stock 57/60",
        Duration::from_secs(2),
        || {
            let mut e = fig2_engine();
            let q = query_result(&mut e);
            assert_eq!(
                q,
                rel(
                    &[
                        ("DocN", Domain::String),
                        ("Comment", Domain::String),
                        ("Items.Art", Domain::String),
                        ("Items.Pieces", Domain::Integer),
                    ],
                    vec![
                        vec![s("Ship1"), s("Shipped!"), s("Axe"), i(2)],
                        vec![s("Sale1"), s("Sold!"), s("Tie"), i(50)],
                        vec![s("Sale1"), s("Sold!"), s("Axe"), i(50)],
                    ],
                )
            );
            let amount = e
                .execute_source("SELECT #vr.Amount FROM VALUERECORDS #vr;")
                .unwrap()
                .remove(0);
            assert_eq!(amount.len(), 1);
            let got = match amount.iter().next().unwrap().values()[0] {
                Value::Float(x) => x,
                ref other => panic!("Amount is {other:?}"),
            };
            assert!((got - 1520.0).abs() < 1e-9, "Amount = {got}");
            let stock = e
                .execute_source("SELECT #g.Art, #g.Pieces FROM GOODS #g;")
                .unwrap()
                .remove(0);
            assert_eq!(
                stock,
                rel(
                    &[("Art", Domain::String), ("Pieces", Domain::Integer)],
                    vec![vec![s("Axe"), i(57)], vec![s("Tie"), i(60)]],
                )
            );
        },
    );
}

#[test]
fn criterion_4_reference_queries() {
    criterion(
        4,
        "reference-chain query tables, including the NULL-padded row",
        Duration::from_secs(2),
        || {
            let mut e = fig2_engine();
            let by_ref = e
                .execute_source(
                    r#"SELECT #gt.DocN, #gt.Cntr.Name, #gt.Cntr.Bank.Name
                       FROM GOODS<.Art LIKE "A%">.Turnover #gt;"#,
                )
                .unwrap()
                .remove(0);
            assert_eq!(
                by_ref,
                rel(
                    &[
                        ("DocN", Domain::String),
                        ("Cntr.Name", Domain::String),
                        ("Cntr.Bank.Name", Domain::String),
                    ],
                    vec![
                        vec![s("Sale1"), s("TheRetail"), s("TheBank")],
                        vec![s("Ship1"), s("TheShop"), s("TheBank")],
                        vec![s("Ship2"), s("TheShop"), s("TheBank")],
                    ],
                )
            );
            let against_ref = e
                .execute_source(
                    r#"SELECT #d.DocN, #d.Items.Art, #d.Items.Pieces
                       FROM DOCS[.Cntr.Name = "TheRetail"] #d;"#,
                )
                .unwrap()
                .remove(0);
            assert_eq!(
                against_ref,
                rel(
                    &[
                        ("DocN", Domain::String),
                        ("Items.Art", Domain::String),
                        ("Items.Pieces", Domain::Integer),
                    ],
                    vec![
                        vec![s("Sale1"), s("Axe"), i(50)],
                        vec![s("Sale1"), s("Tie"), i(50)],
                        vec![s("Ship3"), Value::Null, Value::Null],
                    ],
                )
            );
        },
    );
}

#[test]
fn criterion_5_translation_thesis_oracle() {
    criterion(
        5,
        "group execution equals sequential singleton execution, 220 instances",
        Duration::from_secs(60),
        || {
            for seed in 1000..1220 {
                thesis::run_instance(seed);
            }
        },
    );
}

#[test]
fn criterion_6_branch_set_partition() {
    criterion(
        6,
        "branch sets plus outthese partition the input at every boundary",
        Duration::from_secs(60),
        || {
            // golden procedures: the DoShip group call runs instrumented
            let e = fig2_engine();
            assert!(
                e.db().partition_checks > 0,
                "golden run executed {} partition checks",
                e.db().partition_checks
            );
            // randomized procedures assert the partition inside run_instance;
            // any violation raises and fails the run
            for seed in 5000..5060 {
                thesis::run_instance(seed);
            }
        },
    );
}

#[test]
fn criterion_7_constraint_behavior() {
    criterion(
        7,
        "foreign-key and key violations reject and roll back completely",
        Duration::from_secs(2),
        || {
            let mut e = fig2_engine();
            let before = e.db().clone();
            let err = e
                .execute_source(
                    r#"INSERT INTO DOCS<.DocN = "Ship1">.Items (Art, Pieces) VALUES ("Hat", 1);"#,
                )
                .unwrap_err();
            assert!(matches!(err, Error::ForeignKeyViolation { .. }), "{err:?}");
            assert_eq!(e.db(), &before);
            let err = e
                .execute_source(r#"NEW GOODS WITH SET .Art := "Axe";"#)
                .unwrap_err();
            assert!(matches!(err, Error::KeyViolation { .. }), "{err:?}");
            assert_eq!(e.db(), &before);
        },
    );
}

#[test]
fn criterion_8_persistence_round_trip() {
    criterion(
        8,
        "save/load of the second snapshot; queries identical, OIDs continue",
        Duration::from_secs(5),
        || {
            let dir = std::env::temp_dir().join(format!("rxo-acceptance-{}", std::process::id()));
            let _ = std::fs::remove_dir_all(&dir);
            let mut e = fig2_engine();
            e.save(&dir).unwrap();
            let mut loaded = Engine::load(&dir).unwrap();
            assert_eq!(loaded.db(), e.db());
            assert_eq!(query_result(&mut e), query_result(&mut loaded));
            let amount_before = e
                .execute_source("SELECT #vr.Amount FROM VALUERECORDS #vr;")
                .unwrap()
                .remove(0);
            let amount_after = loaded
                .execute_source("SELECT #vr.Amount FROM VALUERECORDS #vr;")
                .unwrap()
                .remove(0);
            assert_eq!(amount_before, amount_after);
            let top = loaded.db().oid_counter();
            loaded
                .execute_source(r#"NEW GOODS WITH SET .Art := "Hat";"#)
                .unwrap();
            let fresh = loaded.group_oids(r#"GOODS<.Art = "Hat">"#).unwrap();
            assert_eq!(fresh.len(), 1);
            assert!(fresh[0].0 >= top, "fresh OIDs stay above loaded ones");
            let _ = std::fs::remove_dir_all(&dir);
        },
    );
}

#[test]
fn criterion_9_algebra_laws_against_brute_force() {
    criterion(
        9,
        "algebra laws and brute-force oracle, 1000+ randomized cases",
        Duration::from_secs(30),
        || {
            // the dedicated property suite (tests/algebra_laws.rs) runs the
            // named laws at 200 cases each; this run drives the same oracle
            // comparisons through one randomized composite per case
            use rxo_core::algebra::{eval_algebra, AlgebraExpr, MapEnv};
            use rxo_core::relation::{Relation, Schema};
            let mut rng = thesis::Rng::new(77);
            for case in 0..1100 {
                let arity = 2 + rng.below(2) as usize;
                let rows = |rng: &mut thesis::Rng| -> Vec<Vec<Value>> {
                    let n = rng.below(7) as usize;
                    (0..n)
                        .map(|_| {
                            (0..arity)
                                .map(|_| {
                                    if rng.chance(20) {
                                        Value::Null
                                    } else {
                                        Value::Integer(rng.int(-2, 3))
                                    }
                                })
                                .collect()
                        })
                        .collect()
                };
                let names: Vec<String> = (0..arity).map(|k| format!("a{k}")).collect();
                let pairs: Vec<(&str, Domain)> = names
                    .iter()
                    .map(|n| (n.as_str(), Domain::Integer))
                    .collect();
                let schema = Schema::of(&pairs);
                let ra = Relation::from_rows(schema.clone(), rows(&mut rng)).unwrap();
                let rb = Relation::from_rows(schema.clone(), rows(&mut rng)).unwrap();
                let env = MapEnv::with(&[("A", ra.clone()), ("B", rb.clone())]);
                let a = AlgebraExpr::relvar("A");
                let b = AlgebraExpr::relvar("B");
                // union commutativity
                let ab = eval_algebra(&AlgebraExpr::union(a.clone(), b.clone()), &env).unwrap();
                let ba = eval_algebra(&AlgebraExpr::union(b.clone(), a.clone()), &env).unwrap();
                assert_eq!(ab, ba, "case {case}");
                // brute-force union / difference / intersect
                let mut expect: Vec<&rxo_core::Tuple> = ra.iter().chain(rb.iter()).collect();
                expect.sort();
                expect.dedup();
                assert_eq!(ab.len(), expect.len(), "case {case}");
                let diff =
                    eval_algebra(&AlgebraExpr::difference(a.clone(), b.clone()), &env).unwrap();
                let expect_diff: Vec<_> = ra.iter().filter(|t| !rb.contains(t)).collect();
                assert_eq!(diff.len(), expect_diff.len(), "case {case}");
                let sect =
                    eval_algebra(&AlgebraExpr::intersect(a.clone(), b.clone()), &env).unwrap();
                let expect_sect: Vec<_> = ra.iter().filter(|t| rb.contains(t)).collect();
                assert_eq!(sect.len(), expect_sect.len(), "case {case}");
                // left join superset law
                let lj = AlgebraExpr::left_join_on(
                    a.clone(),
                    AlgebraExpr::rename(
                        b.clone(),
                        (0..arity)
                            .map(|k| {
                                (
                                    format!("a{k}").as_str().into(),
                                    format!("b{k}").as_str().into(),
                                )
                            })
                            .collect(),
                    ),
                    vec![("a0".into(), "b0".into())],
                );
                let back = eval_algebra(
                    &AlgebraExpr::Project {
                        input: Box::new(lj),
                        items: names
                            .iter()
                            .map(|n| {
                                (
                                    rxo_core::scalar::ScalarExpr::attr(n.as_str()),
                                    n.as_str().into(),
                                )
                            })
                            .collect(),
                    },
                    &env,
                )
                .unwrap();
                assert_eq!(back, ra, "case {case}: left join superset law");
                // inner join against the brute-force enumeration
                let join = eval_algebra(
                    &AlgebraExpr::join_on(
                        a.clone(),
                        AlgebraExpr::rename(
                            b.clone(),
                            (0..arity)
                                .map(|k| {
                                    (
                                        format!("a{k}").as_str().into(),
                                        format!("z{k}").as_str().into(),
                                    )
                                })
                                .collect(),
                        ),
                        vec![("a0".into(), "z0".into())],
                    ),
                    &env,
                )
                .unwrap();
                let mut expect_join = 0usize;
                {
                    use std::collections::BTreeSet;
                    let mut seen = BTreeSet::new();
                    for x in ra.iter() {
                        for y in rb.iter() {
                            let (l, r) = (&x.values()[0], &y.values()[0]);
                            if !l.is_null() && !r.is_null() && l == r {
                                let mut row = x.values().to_vec();
                                row.extend(y.values()[1..].iter().cloned());
                                if seen.insert(row) {
                                    expect_join += 1;
                                }
                            }
                        }
                    }
                }
                assert_eq!(join.len(), expect_join, "case {case}: join oracle");
                // projection idempotence
                let p1 = AlgebraExpr::project_attrs(a.clone(), &["a1", "a0"]);
                let p2 = AlgebraExpr::project_attrs(p1.clone(), &["a1", "a0"]);
                assert_eq!(
                    eval_algebra(&p1, &env).unwrap(),
                    eval_algebra(&p2, &env).unwrap(),
                    "case {case}: projection idempotence"
                );
                // selection fusion
                let k1 = rng.int(-2, 3);
                let k2 = rng.int(-2, 3);
                let c1 = rxo_core::scalar::ScalarExpr::bin(
                    rxo_core::scalar::BinOp::Lt,
                    rxo_core::scalar::ScalarExpr::attr("a0"),
                    rxo_core::scalar::ScalarExpr::lit(Value::Integer(k1)),
                );
                let c2 = rxo_core::scalar::ScalarExpr::bin(
                    rxo_core::scalar::BinOp::Ge,
                    rxo_core::scalar::ScalarExpr::attr("a1"),
                    rxo_core::scalar::ScalarExpr::lit(Value::Integer(k2)),
                );
                let chained = AlgebraExpr::select(
                    AlgebraExpr::select(a.clone(), c1.clone()),
                    c2.clone(),
                );
                let fused = AlgebraExpr::select(
                    a.clone(),
                    rxo_core::scalar::ScalarExpr::and(c1, c2),
                );
                assert_eq!(
                    eval_algebra(&chained, &env).unwrap(),
                    eval_algebra(&fused, &env).unwrap(),
                    "case {case}: selection fusion"
                );
                // rename and its inverse
                let renamed = AlgebraExpr::rename(
                    AlgebraExpr::rename(a.clone(), vec![("a0".into(), "t".into())]),
                    vec![("t".into(), "a0".into())],
                );
                assert_eq!(
                    eval_algebra(&renamed, &env).unwrap(),
                    ra,
                    "case {case}: rename inverse"
                );
            }
        },
    );
}

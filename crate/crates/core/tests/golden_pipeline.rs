//! End-to-end replay of the trade-company example, checked state by state.

mod common;

use common::{fig1_engine, fig2_engine, i, query_result, rel, s, CLASSES};
use rxo_core::value::{Domain, Value};
use rxo_core::{Engine, Error};

#[test]
fn query_is_empty_before_implementation() {
    let mut e = Engine::new();
    e.execute_source(CLASSES).unwrap();
    let r = query_result(&mut e);
    assert!(r.is_empty(), "pre-implementation query must be empty");
    assert_eq!(r.schema().arity(), 4);
}

#[test]
fn first_snapshot_query_and_calculated_components() {
    let mut e = fig1_engine();
    // the query: one row, Comment still NULL
    let r = query_result(&mut e);
    assert_eq!(
        r,
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
    // Turnover per article: Axe from Ship1 and Ship2, Tie from Ship2
    let axe = e
        .execute_source(r#"SELECT #t.DocN, #t.Pieces FROM GOODS<.Art = "Axe">.Turnover #t;"#)
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
        .execute_source(r#"SELECT #t.DocN, #t.Pieces FROM GOODS<.Art = "Tie">.Turnover #t;"#)
        .unwrap()
        .remove(0);
    assert_eq!(
        tie,
        rel(
            &[("DocN", Domain::String), ("Pieces", Domain::Integer)],
            vec![vec![s("Ship2"), i(10)]],
        )
    );
    // Pieces on stock, calculated by the procedure-valued component
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
}

#[test]
fn second_snapshot_polymorphic_query() {
    let mut e = fig2_engine();
    let r = query_result(&mut e);
    assert_eq!(
        r,
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
    // the abstract class query sees the posted amount
    let amount = e
        .execute_source("SELECT #vr.Amount FROM VALUERECORDS #vr;")
        .unwrap()
        .remove(0);
    assert_eq!(
        amount,
        rel(
            &[("Amount", Domain::Float)],
            vec![vec![Value::Float(1520.0)]]
        )
    );
    // stock now includes the calculated sale items
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
    // Turnover for Axe gained the Sale1 row
    let axe = e
        .execute_source(r#"SELECT #t.DocN, #t.Pieces FROM GOODS<.Art = "Axe">.Turnover #t;"#)
        .unwrap()
        .remove(0);
    assert_eq!(
        axe,
        rel(
            &[("DocN", Domain::String), ("Pieces", Domain::Integer)],
            vec![
                vec![s("Sale1"), i(50)],
                vec![s("Ship1"), i(2)],
                vec![s("Ship2"), i(5)]
            ],
        )
    );
}

#[test]
fn reference_chain_queries() {
    let mut e = fig2_engine();
    // through references: articles starting with A, their turnover partners
    let r = e
        .execute_source(
            r#"SELECT #gt.DocN, #gt.Cntr.Name, #gt.Cntr.Bank.Name
               FROM GOODS<.Art LIKE "A%">.Turnover #gt;"#,
        )
        .unwrap()
        .remove(0);
    assert_eq!(
        r,
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
    // against references: contractors of the %1 documents
    let r = e
        .execute_source(
            r#"SELECT #c.Name, #c.ID, #c.Bank.Name
               FROM DOCS[.DocN LIKE "%1"].Cntr #c;"#,
        )
        .unwrap()
        .remove(0);
    assert_eq!(
        r,
        rel(
            &[
                ("Name", Domain::String),
                ("ID", Domain::String),
                ("Bank.Name", Domain::String),
            ],
            vec![
                vec![s("TheRetail"), s("CoID002"), s("TheBank")],
                vec![s("TheShop"), s("CoID001"), s("TheBank")],
            ],
        )
    );
    // documents referencing TheRetail, including the item-less Ship3
    let r = e
        .execute_source(
            r#"SELECT #d.DocN, #d.Items.Art, #d.Items.Pieces
               FROM DOCS[.Cntr.Name = "TheRetail"] #d;"#,
        )
        .unwrap()
        .remove(0);
    assert_eq!(
        r,
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
}

#[test]
fn constraints_hold_and_roll_back() {
    let mut e = fig2_engine();
    let before = e.db().clone();
    // unknown article: the Items -> GOODS foreign key rejects the insert
    let err = e
        .execute_source(
            r#"INSERT INTO DOCS<.DocN = "Ship1">.Items (Art, Pieces) VALUES ("Hat", 1);"#,
        )
        .unwrap_err();
    assert!(
        matches!(err, Error::ForeignKeyViolation { .. }),
        "got {err:?}"
    );
    assert_eq!(e.db(), &before, "failed insert must leave no trace");
    // duplicate article: the GOODS class key rejects the whole NEW
    let err = e
        .execute_source(r#"NEW GOODS WITH SET .Art := "Axe";"#)
        .unwrap_err();
    assert!(matches!(err, Error::KeyViolation { .. }), "got {err:?}");
    assert_eq!(e.db(), &before, "failed NEW must leave no trace");
}

#[test]
fn fresh_objects_share_one_oid_across_ancestors() {
    let e = fig2_engine();
    let sales = e
        .db()
        .get(&rxo_core::machine::text::parse_rvalue_text("real_R_SALES[OID]").unwrap())
        .unwrap();
    assert_eq!(sales.len(), 1);
    let in_docs = e
        .db()
        .get(
            &rxo_core::machine::text::parse_rvalue_text("real_R_SALES[OID] MINUS real_R_DOCS[OID]")
                .unwrap(),
        )
        .unwrap();
    assert!(in_docs.is_empty(), "SALES objects appear in real_R_DOCS");
    let in_vr = e
        .db()
        .get(
            &rxo_core::machine::text::parse_rvalue_text(
                "real_R_SALES[OID] MINUS real_R_VALUERECORDS[OID]",
            )
            .unwrap(),
        )
        .unwrap();
    assert!(
        in_vr.is_empty(),
        "SALES objects appear in real_R_VALUERECORDS"
    );
}

#[test]
fn doship_runs_once_per_object() {
    let mut e = fig2_engine();
    let before = e.db().clone();
    // Date is set now, so a second run selects nobody and changes nothing
    e.execute_source(r#"EXEC DOCS<DocN LIKE "%1">.DoShip('2011.05.05');"#)
        .unwrap();
    assert_eq!(e.db(), &before);
}

#[test]
fn update_and_delete_through_oviews() {
    let mut e = fig2_engine();
    e.execute_source(r#"UPDATE CONTRACTORS<.ID = "CoID001"> SET (.Name := "TheShop2");"#)
        .unwrap();
    let r = e
        .execute_source(r#"SELECT #c.Name FROM CONTRACTORS<.ID = "CoID001"> #c;"#)
        .unwrap()
        .remove(0);
    assert_eq!(
        r,
        rel(&[("Name", Domain::String)], vec![vec![s("TheShop2")]])
    );
    // updating nobody is a no-op, not an error
    let before = e.db().clone();
    e.execute_source(r#"UPDATE CONTRACTORS<.ID = "missing"> SET (.Name := "X");"#)
        .unwrap();
    assert_eq!(e.db(), &before);
    // deleting the stored Items rows of Ship2
    e.execute_source(r#"DELETE FROM DOCS<.DocN = "Ship2">.Items;"#)
        .unwrap();
    let r = e
        .execute_source(r#"SELECT #d.Items.Art FROM DOCS<.DocN = "Ship2"> #d;"#)
        .unwrap()
        .remove(0);
    assert_eq!(
        r,
        rel(&[("Items.Art", Domain::String)], vec![vec![Value::Null]])
    );
}

#[test]
fn calculated_members_reject_writes() {
    let mut e = fig2_engine();
    // Items of Sale1 is calculated in SALES
    let err = e
        .execute_source(
            r#"INSERT INTO SALES<.DocN = "Sale1">.Items (Art, Pieces) VALUES ("Axe", 1);"#,
        )
        .unwrap_err();
    assert!(
        matches!(err, Error::NotUpdatableCalculated { .. }),
        "got {err:?}"
    );
    // but the same insert against the stored scope still works
    e.execute_source(r#"INSERT INTO DOCS<.DocN = "Ship3">.Items (Art, Pieces) VALUES ("Axe", 1);"#)
        .unwrap();
}

#[test]
fn save_load_round_trip_preserves_everything() {
    let dir = std::env::temp_dir().join(format!("rxo-golden-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let mut e = fig2_engine();
    e.save(&dir).unwrap();
    let mut loaded = Engine::load(&dir).unwrap();
    assert_eq!(loaded.db(), e.db());
    let r1 = query_result(&mut e);
    let r2 = query_result(&mut loaded);
    assert_eq!(r1, r2);
    // counters continue strictly above everything loaded
    let max_before = e.db().oid_counter();
    loaded
        .execute_source(r#"NEW GOODS WITH SET .Art := "Hat";"#)
        .unwrap();
    assert!(loaded.db().oid_counter() > max_before);
    let _ = std::fs::remove_dir_all(&dir);
}

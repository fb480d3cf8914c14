use super::text::{parse_commands, parse_one_command, parse_rvalue_text};
use super::*;

fn run(db: &mut Database, src: &str) -> Result<Vec<Relation>> {
    let mut out = Vec::new();
    for cmd in parse_commands(src)? {
        out.extend(db.execute(&cmd)?);
    }
    Ok(out)
}

fn db_with(src: &str) -> Database {
    let mut db = Database::new();
    run(&mut db, src).expect("setup commands must succeed");
    db
}

fn ints(rows: &[i64]) -> Relation {
    Relation::from_rows(
        Schema::of(&[("i", Domain::Integer)]),
        rows.iter().map(|i| vec![Value::Integer(*i)]).collect(),
    )
    .unwrap()
}

#[test]
fn create_with_keys_and_fkey() {
    let db = db_with(
        "CREATE R_CONTRACTORS (OID: dOID, Name: STRING) KEY(OID);\
         CREATE R_DOCS (OID: dOID, DocN: STRING, Date: DATETIME, Cntr: dOID) \
           KEY(OID) KEY(DocN) FKEY(Cntr) ON R_CONTRACTORS(OID);",
    );
    let d = db.relvar("R_DOCS").unwrap();
    assert_eq!(d.keys.len(), 2);
    assert_eq!(d.fkeys.len(), 1);
    assert_eq!(d.fkeys[0].target, "R_CONTRACTORS");
}

#[test]
fn virtual_over_empty_real_is_empty() {
    let mut db = db_with("CREATE R (i: INTEGER); CREATE V AS R[i];");
    let out = run(&mut db, "GET V;").unwrap();
    assert!(out[0].is_empty());
    assert!(db.relvar("V").unwrap().is_virtual());
}

#[test]
fn self_referencing_virtual_is_cyclic() {
    let mut db = db_with("CREATE R (i: INTEGER);");
    let err = run(&mut db, "CREATE V AS V[i];").unwrap_err();
    assert_eq!(err, Error::CyclicDefinition("V".into()));
    // a cycle of length 2 through redefinition
    run(&mut db, "CREATE V AS R; CREATE W AS V;").unwrap();
    let err = run(&mut db, "CREATE V AS W;").unwrap_err();
    assert_eq!(err, Error::CyclicDefinition("V".into()));
}

#[test]
fn foreign_key_violation_on_insert() {
    let mut db = db_with(
        "CREATE R_GOODS (Art: STRING) KEY(Art);\
         CREATE Items (Art: STRING, Pieces: INTEGER) FKEY(Art) ON R_GOODS(Art);\
         INSERT R_GOODS VALUES (\"Axe\");",
    );
    let before = db.clone();
    let err = run(&mut db, "INSERT Items VALUES (\"Hat\", 1);").unwrap_err();
    assert!(matches!(err, Error::ForeignKeyViolation { .. }));
    assert_eq!(db, before, "failed command must leave the value unchanged");
    run(&mut db, "INSERT Items VALUES (\"Axe\", 2);").unwrap();
}

#[test]
fn fkey_may_target_a_virtual_relvar() {
    let mut db = db_with(
        "CREATE Base (Art: STRING);\
         CREATE V AS Base[Art];\
         CREATE T (a: STRING) FKEY(a) ON V(Art);\
         INSERT Base VALUES (\"x\");",
    );
    run(&mut db, "INSERT T VALUES (\"x\");").unwrap();
    let err = run(&mut db, "INSERT T VALUES (\"y\");").unwrap_err();
    assert!(matches!(err, Error::ForeignKeyViolation { .. }));
}

#[test]
fn self_assignment_is_identity() {
    let mut db = db_with("CREATE R (i: INTEGER); INSERT R VALUES (1), (2);");
    let before = db.clone();
    run(&mut db, "SET R := R;").unwrap();
    assert_eq!(db, before);
}

#[test]
fn duplicate_key_raises() {
    let mut db = db_with(
        "CREATE R_DOCS (OID: dOID, DocN: STRING) KEY(OID) KEY(DocN);\
         INSERT R_DOCS RELATION (OID: dOID, DocN: STRING) {};",
    );
    // NULL key attributes are exempt from uniqueness
    run(
        &mut db,
        "INSERT R_DOCS VALUES (1, NULL); INSERT R_DOCS VALUES (2, NULL);",
    )
    .unwrap_err(); // OID attr comes from a literal: no OID literals exist
    run(&mut db, "UPDATE R_DOCS SET DocN := \"Ship1\";").unwrap();
    assert!(db
        .get(&parse_rvalue_text("R_DOCS").unwrap())
        .unwrap()
        .is_empty());
}

#[test]
fn duplicate_key_raises_via_update() {
    // keys checked after every command; build two rows then collide them
    let mut db = db_with("CREATE R (k: INTEGER, v: STRING) KEY(k);");
    run(&mut db, "INSERT R VALUES (1, \"a\"), (2, \"b\");").unwrap();
    let err = run(&mut db, "UPDATE R SET k := 1 WHERE v = \"b\";").unwrap_err();
    assert_eq!(
        err,
        Error::KeyViolation {
            relvar: "R".into(),
            key: "k".into()
        }
    );
    // rollback left both rows intact
    let r = db.get(&parse_rvalue_text("R[k]").unwrap()).unwrap();
    assert_eq!(
        r,
        Relation::from_rows(
            Schema::of(&[("k", Domain::Integer)]),
            vec![vec![Value::Integer(1)], vec![Value::Integer(2)]],
        )
        .unwrap()
    );
}

#[test]
fn get_unknown_relvar() {
    let db = Database::new();
    assert_eq!(
        db.get(&AlgebraExpr::relvar("ZZ")),
        Err(Error::UnknownRelvar("ZZ".into()))
    );
}

#[test]
fn chained_virtuals_equal_hand_inlining() {
    let mut db = db_with(
        "CREATE R (i: INTEGER, j: INTEGER);\
         INSERT R VALUES (1, 10), (2, 20), (3, 30);\
         CREATE V1 AS R WHERE i > 1;\
         CREATE V2 AS V1[j];",
    );
    let through_virtuals = run(&mut db, "GET V2;").unwrap().remove(0);
    let inlined = run(&mut db, "GET (R WHERE i > 1)[j];").unwrap().remove(0);
    assert_eq!(through_virtuals, inlined);
}

#[test]
fn transaction_rolls_back_all_commands() {
    let mut db = db_with("CREATE R (k: INTEGER, v: STRING) KEY(k); INSERT R VALUES (7, \"a\");");
    let before = db.clone();
    // first insert is fine, second violates the key: nothing may remain
    let err = run(
        &mut db,
        "EXEC begin INSERT R VALUES (1, \"x\"); INSERT R VALUES (7, \"b\"); end;",
    )
    .unwrap_err();
    assert!(matches!(err, Error::KeyViolation { .. }));
    assert_eq!(db, before);
}

#[test]
fn empty_exec_is_noop() {
    let mut db = db_with("CREATE R (i: INTEGER);");
    let before = db.clone();
    run(&mut db, "EXEC begin end;").unwrap();
    assert_eq!(db, before);
}

#[test]
fn stored_transaction_with_scalar_param() {
    let mut db = db_with(
        "CREATE R (i: INTEGER);\
         TRANS add (x: INTEGER) AS begin INSERT R VALUES (x); end;",
    );
    run(&mut db, "EXEC add (1); EXEC add (2);").unwrap();
    let r = db.get(&parse_rvalue_text("R").unwrap()).unwrap();
    assert_eq!(r, ints(&[1, 2]));
    // arity mismatch
    let err = run(&mut db, "EXEC add (1, 2);").unwrap_err();
    assert!(matches!(err, Error::ArgumentMismatch { .. }));
    let err = run(&mut db, "EXEC nope (1);").unwrap_err();
    assert_eq!(err, Error::UnknownTransaction("nope".into()));
}

#[test]
fn transaction_with_relation_param_and_control_flow() {
    let mut db = db_with(
        "CREATE R (i: INTEGER);\
         TRANS drain (g: (i: INTEGER)) AS begin \
           DECLARE pending := g; \
           WHILE COUNT(pending) begin \
             INSERT R pending; \
             SET pending := pending MINUS pending; \
           end; \
         end;",
    );
    run(&mut db, "EXEC drain (RELATION (i: INTEGER) {(4), (5)});").unwrap();
    let r = db.get(&parse_rvalue_text("R").unwrap()).unwrap();
    assert_eq!(r, ints(&[4, 5]));
}

#[test]
fn while_loop_limit() {
    let mut db = db_with("CREATE R (i: INTEGER); INSERT R VALUES (1);");
    db.loop_limit = 50;
    let err = run(
        &mut db,
        "EXEC begin WHILE COUNT(R) begin SET R := R; end; end;",
    )
    .unwrap_err();
    assert_eq!(err, Error::LoopLimitExceeded(50));
}

#[test]
fn virtual_procedure_definition() {
    let mut db = db_with(
        "CREATE R (i: INTEGER);\
         INSERT R VALUES (1), (2), (5);\
         CREATE V AS begin DECLARE big := R WHERE i > 1; RETURN big[i]; end;",
    );
    let out = run(&mut db, "GET V;").unwrap();
    assert_eq!(out[0], ints(&[2, 5]));
}

#[test]
fn partition_command_checks_cover_and_disjointness() {
    let mut db = db_with(
        "CREATE G (i: INTEGER); INSERT G VALUES (1), (2);\
         CREATE A AS G WHERE i = 1;\
         CREATE B AS G WHERE i = 2;",
    );
    run(&mut db, "EXEC begin PARTITION G INTO (A, B); end;").unwrap();
    assert_eq!(db.partition_checks, 1);
    let err = run(&mut db, "EXEC begin PARTITION G INTO (A, A); end;").unwrap_err();
    assert!(matches!(err, Error::PartitionViolation(_)));
    let err = run(&mut db, "EXEC begin PARTITION G INTO (A); end;").unwrap_err();
    assert!(matches!(err, Error::PartitionViolation(_)));
}

#[test]
fn oid_monotonicity() {
    let mut db = Database::new();
    let a = db.next_oid();
    let b = db.next_oid();
    assert!(b > a);
    assert!(db.oid_counter() > b.0);
}

#[test]
fn print_parse_round_trip() {
    let texts = [
        "CREATE R (a: INTEGER, s: STRING) KEY(a) FKEY(s) ON T(k);",
        "CREATE V (x: INTEGER) AS (R MINUS R)[a AS x];",
        "SET R := (R JOIN S ON (a = b, c)) UNION RELATION (a: INTEGER) {(1), (2)};",
        "GET ((R WHERE ((a > 1) AND (s LIKE \"x%\")))[a, (a + 1) AS nxt]) GROUP BY (nxt) AGG (SUM(a) AS total, COUNT() AS n);",
        "GET R RENAME a AS b LEFT JOIN S ON (b) TIMES T;",
        "TRANS t (x: INTEGER, g: (OID: dOID)) AS begin DECLARE tmp := g; IF COUNT(tmp) THEN begin INSERT R VALUES (x); end ELSE begin DELETE R WHERE (a = x); end; EXEC u (x, tmp); end;",
        "EXEC begin PARTITION G INTO (A, B); GET `DOCS.DoShip'`; end;",
        "UPDATE R SET a := (a + 1), s := \"z\" WHERE (a <> 0);",
        "CREATE P AS begin DECLARE t := R[a]; RETURN t MINUS t; end;",
        "INSERT R (a) VALUES (1), (2);",
    ];
    for text in texts {
        let cmd = parse_one_command(text).unwrap_or_else(|e| panic!("parse `{text}`: {e}"));
        let printed = cmd.to_string();
        let reparsed =
            parse_one_command(&printed).unwrap_or_else(|e| panic!("reparse `{printed}`: {e}"));
        assert_eq!(cmd, reparsed, "round trip changed `{text}` -> `{printed}`");
    }
}

#[test]
fn save_load_round_trip() {
    let dir = std::env::temp_dir().join(format!("rxo-machine-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let mut db = db_with(
        "CREATE R (k: INTEGER, s: STRING, f: FLOAT, d: DATETIME, b: BOOLEAN, o: dOID) KEY(k);\
         CREATE V AS R WHERE k > 0;\
         TRANS t (x: INTEGER) AS begin INSERT R VALUES (x, NULL, NULL, NULL, NULL, NULL); end;",
    );
    run(
        &mut db,
        "INSERT R VALUES (1, \"a\\tb\\nc\\\\d\", 1.5, \"2010-01-02\", TRUE, NULL);\
         INSERT R VALUES (2, \"\\\\N\", 0.000000001, NULL, FALSE, NULL);",
    )
    .unwrap();
    let minted = db.next_oid();
    run(&mut db, "UPDATE R SET o := NULL WHERE k = 2;").unwrap();

    super::persist::save_plain(&db, &dir).unwrap();
    let loaded = super::persist::load_plain(&dir).unwrap();
    assert_eq!(loaded, db);
    // mutation after saving does not affect the file copy
    let mut mutated = db.clone();
    run(&mut mutated, "DELETE R WHERE k = 1;").unwrap();
    let loaded2 = super::persist::load_plain(&dir).unwrap();
    assert_eq!(loaded2, db);
    // counter survives: next id is strictly above anything minted before
    let mut loaded3 = loaded2;
    assert!(loaded3.next_oid() > minted);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn load_of_empty_directory_is_format_error() {
    let dir = std::env::temp_dir().join(format!("rxo-empty-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let err = super::persist::load_plain(&dir).unwrap_err();
    assert!(matches!(err, Error::Format { .. }));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oid_literals_do_not_exist() {
    // no token or command can produce an OID value from source text: the
    // only dOID constructor the machine text offers is NULL
    let mut db = db_with("CREATE R (o: dOID);");
    let err = run(&mut db, "INSERT R VALUES (7);").unwrap_err();
    assert!(matches!(err, Error::TypeError(_)));
}

#[test]
fn atomicity_under_injected_failures() {
    // a body of five commands with a failing command spliced into every
    // position: the post-state always equals the pre-state
    let setup = "CREATE R (k: INTEGER, v: STRING) KEY(k);\
                 CREATE S (n: INTEGER);\
                 INSERT R VALUES (1, \"one\");";
    let body: Vec<&str> = vec![
        "INSERT S VALUES (10);",
        "UPDATE R SET v := \"uno\" WHERE k = 1;",
        "INSERT R VALUES (2, \"two\");",
        "DELETE S WHERE n = 10;",
        "SET S := S UNION RELATION (n: INTEGER) {(11)};",
    ];
    let poison = "INSERT R VALUES (1, \"dup\");"; // key violation
    for pos in 0..=body.len() {
        let mut db = db_with(setup);
        let before = db.clone();
        let mut cmds: Vec<&str> = body.clone();
        cmds.insert(pos, poison);
        let script = format!("EXEC begin {} end;", cmds.join(" "));
        let err = run(&mut db, &script).unwrap_err();
        assert!(matches!(err, Error::KeyViolation { .. }), "pos {pos}: {err}");
        assert_eq!(db, before, "failure at position {pos} must undo everything");
    }
}

//! File persistence for the database value.
//!
//! A database saves into one directory: `catalog.txt` holds the OID counter,
//! the class DDL log (opaque to the machine), user relvar and transaction
//! definitions in machine text, and the list of stored relvars; each stored
//! relvar keeps its tuples in `<name>.tup`, one line per tuple,
//! tab-separated, `\N` for NULL, `\t` `\n` `\\` escapes, UTF-8, sorted.
//!
//! Definitions emitted by the translator are not written; the loader replays
//! the DDL log, which regenerates them, and then refills the stored tuples.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::relation::{Relation, Schema};
use crate::value::{Date, Domain, Oid, Value};

use super::Database;

const HEADER: &str = "rxo catalog 1";

/// Catalog file contents, prior to interpretation.
#[derive(Debug, Default, PartialEq)]
pub struct CatalogFile {
    pub oid_counter: u64,
    /// Class-layer DDL command texts, replayed in order by the engine.
    pub ddl: Vec<String>,
    /// User CREATE texts in creation order.
    pub defs: Vec<String>,
    /// User TRANS texts in creation order.
    pub trans: Vec<String>,
    /// Real relvars whose tuples live in `<name>.tup`.
    pub data_names: Vec<String>,
}

/// Write `catalog.txt` and one tuple file per stored relvar.
pub fn save_database(db: &Database, ddl: &[String], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut defs: Vec<&super::RelVarDef> = db.relvars().filter(|d| !d.generated).collect();
    defs.sort_by_key(|d| d.seq);
    let mut trans: Vec<&super::TransactionDef> =
        db.transactions().filter(|t| !t.generated).collect();
    trans.sort_by_key(|t| t.seq);

    let mut data_names: Vec<String> = db
        .relvars()
        .filter(|d| !d.is_virtual())
        .map(|d| d.name.clone())
        .collect();
    data_names.sort();

    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&format!("oid {}\n", db.oid_counter()));
    out.push_str(&format!("ddl {}\n", ddl.len()));
    for line in ddl {
        out.push_str(&format!("  {line}\n"));
    }
    out.push_str(&format!("defs {}\n", defs.len()));
    for d in &defs {
        out.push_str(&format!("  {}\n", d.to_create_text()));
    }
    out.push_str(&format!("trans {}\n", trans.len()));
    for t in &trans {
        out.push_str(&format!("  {}\n", t.to_trans_text()));
    }
    out.push_str(&format!("data {}\n", data_names.len()));
    for n in &data_names {
        out.push_str(&format!("  {n}\n"));
    }
    fs::write(dir.join("catalog.txt"), out)?;

    for name in &data_names {
        let rel = db
            .get(&crate::algebra::AlgebraExpr::relvar(name.clone()))
            .expect("stored relvar must evaluate");
        let mut text = String::new();
        for t in rel.iter() {
            let fields: Vec<String> = t.values().iter().map(encode_field).collect();
            text.push_str(&fields.join("\t"));
            text.push('\n');
        }
        fs::write(dir.join(file_name(name)), text)?;
    }
    Ok(())
}

/// Read and split `catalog.txt`. Interpretation (DDL replay, definition
/// parsing) is the caller's job.
pub fn read_catalog(dir: &Path) -> Result<CatalogFile> {
    let path = dir.join("catalog.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::Format {
        path: path.display().to_string(),
        line: 0,
        detail: format!("cannot read catalog: {e}"),
    })?;
    let mut lines = text.lines().enumerate();
    let fail = |line: usize, detail: &str| Error::Format {
        path: path.display().to_string(),
        line: line + 1,
        detail: detail.into(),
    };
    let (i, first) = lines.next().ok_or_else(|| fail(0, "empty catalog"))?;
    if first != HEADER {
        return Err(fail(i, "bad catalog header"));
    }
    let mut cat = CatalogFile::default();
    let (i, oid_line) = lines.next().ok_or_else(|| fail(i, "missing oid line"))?;
    cat.oid_counter = oid_line
        .strip_prefix("oid ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fail(i, "bad oid line"))?;
    for section in ["ddl", "defs", "trans", "data"] {
        let (i, head) = lines
            .next()
            .ok_or_else(|| fail(0, &format!("missing `{section}` section")))?;
        let count: usize = head
            .strip_prefix(&format!("{section} "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail(i, &format!("bad `{section}` section header")))?;
        let bucket = match section {
            "ddl" => &mut cat.ddl,
            "defs" => &mut cat.defs,
            "trans" => &mut cat.trans,
            _ => &mut cat.data_names,
        };
        for _ in 0..count {
            let (i, line) = lines
                .next()
                .ok_or_else(|| fail(0, &format!("truncated `{section}` section")))?;
            let line = line
                .strip_prefix("  ")
                .ok_or_else(|| fail(i, "section lines must be indented"))?;
            bucket.push(line.to_string());
        }
    }
    Ok(cat)
}

/// Load the tuples of one relvar into a relation with the given schema.
pub fn read_tuples(dir: &Path, name: &str, schema: &Schema) -> Result<Relation> {
    let path = dir.join(file_name(name));
    let text = fs::read_to_string(&path).map_err(|e| Error::Format {
        path: path.display().to_string(),
        line: 0,
        detail: format!("cannot read tuples: {e}"),
    })?;
    let mut rel = Relation::new(schema.clone());
    for (lineno, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != schema.arity() {
            return Err(Error::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: format!("{} fields, schema has {}", fields.len(), schema.arity()),
            });
        }
        let mut vals = Vec::with_capacity(fields.len());
        for (field, attr) in fields.iter().zip(schema.attrs()) {
            let v = decode_field(field, &attr.domain).map_err(|detail| Error::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                detail,
            })?;
            vals.push(v);
        }
        rel.insert(vals).map_err(|e| Error::Format {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: e.to_string(),
        })?;
    }
    Ok(rel)
}

fn file_name(relvar: &str) -> String {
    let mut out = String::new();
    for c in relvar.chars() {
        if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            out.push(c);
        } else {
            out.push_str(&format!("%{:02X}", c as u32));
        }
    }
    out.push_str(".tup");
    out
}

fn encode_field(v: &Value) -> String {
    match v {
        Value::Null => "\\N".into(),
        Value::Integer(i) => i.to_string(),
        Value::Float(x) => format!("{x}"),
        Value::String(s) => {
            let mut out = String::with_capacity(s.len());
            for c in s.chars() {
                match c {
                    '\\' => out.push_str("\\\\"),
                    '\t' => out.push_str("\\t"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out
        }
        Value::DateTime(d) => d.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Oid(o) => o.0.to_string(),
    }
}

fn decode_field(field: &str, domain: &Domain) -> std::result::Result<Value, String> {
    if field == "\\N" {
        return Ok(Value::Null);
    }
    match domain {
        Domain::Integer => field
            .parse()
            .map(Value::Integer)
            .map_err(|_| format!("bad INTEGER `{field}`")),
        Domain::Float => field
            .parse()
            .map(Value::Float)
            .map_err(|_| format!("bad FLOAT `{field}`")),
        Domain::String => {
            let mut out = String::with_capacity(field.len());
            let mut chars = field.chars();
            while let Some(c) = chars.next() {
                if c != '\\' {
                    out.push(c);
                    continue;
                }
                match chars.next() {
                    Some('\\') => out.push('\\'),
                    Some('t') => out.push('\t'),
                    Some('n') => out.push('\n'),
                    other => return Err(format!("bad escape `\\{:?}`", other)),
                }
            }
            Ok(Value::String(out))
        }
        Domain::DateTime => Date::parse(field)
            .map(Value::DateTime)
            .map_err(|e| e.to_string()),
        Domain::Boolean => match field {
            "true" => Ok(Value::Boolean(true)),
            "false" => Ok(Value::Boolean(false)),
            _ => Err(format!("bad BOOLEAN `{field}`")),
        },
        Domain::Oid | Domain::Ref(_) => field
            .parse()
            .map(|n| Value::Oid(Oid(n)))
            .map_err(|_| format!("bad OID `{field}`")),
    }
}

/// Machine-only save: no class layer, so the DDL log is empty.
pub fn save_plain(db: &Database, dir: &Path) -> Result<()> {
    save_database(db, &[], dir)
}

/// Machine-only load, for databases saved without a class layer.
pub fn load_plain(dir: &Path) -> Result<Database> {
    let cat = read_catalog(dir)?;
    if !cat.ddl.is_empty() {
        return Err(Error::Format {
            path: dir.join("catalog.txt").display().to_string(),
            line: 0,
            detail: "database has a class layer; load it through the engine".into(),
        });
    }
    let mut db = Database::new();
    restore_defs_and_data(&mut db, &cat, dir)?;
    Ok(db)
}

/// Shared tail of loading: user definitions, transactions, tuples, counter,
/// and a full constraint sweep.
pub fn restore_defs_and_data(db: &mut Database, cat: &CatalogFile, dir: &Path) -> Result<()> {
    for text in &cat.defs {
        let cmd = super::text::parse_one_command(text)?;
        // run directly: definitions must not be wrapped in the usual
        // copy-swap, the caller owns the working database
        match cmd {
            super::MachineCmd::CreateReal {
                name,
                schema,
                keys,
                fkeys,
            } => db.create_real(&name, schema, keys, fkeys, false)?,
            super::MachineCmd::CreateVirtual {
                name,
                declared_schema,
                def,
                keys,
                fkeys,
            } => db.create_virtual(&name, declared_schema, def, keys, fkeys, false)?,
            _ => {
                return Err(Error::Format {
                    path: dir.join("catalog.txt").display().to_string(),
                    line: 0,
                    detail: "defs section must contain CREATE commands".into(),
                })
            }
        }
    }
    for text in &cat.trans {
        match super::text::parse_one_command(text)? {
            super::MachineCmd::DefTrans(def) => db.define_transaction(def)?,
            _ => {
                return Err(Error::Format {
                    path: dir.join("catalog.txt").display().to_string(),
                    line: 0,
                    detail: "trans section must contain TRANS commands".into(),
                })
            }
        }
    }
    for name in &cat.data_names {
        let schema = db
            .relvar(name)
            .ok_or_else(|| Error::Format {
                path: dir.join("catalog.txt").display().to_string(),
                line: 0,
                detail: format!("data section names unknown relvar `{name}`"),
            })?
            .schema
            .clone();
        let rel = read_tuples(dir, name, &schema)?;
        db.set_data_unchecked(name, rel)?;
    }
    db.set_oid_counter(cat.oid_counter);
    db.check_all_constraints()?;
    Ok(())
}

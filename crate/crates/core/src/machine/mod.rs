//! The programmable relational system: named real and virtual relvars, the
//! machine command set (CREATE / SET / GET / TRANS / EXEC plus the
//! INSERT/UPDATE/DELETE sugar), key and foreign-key enforcement, and atomic
//! transactions.
//!
//! The machine knows nothing about classes or objects. Commands execute
//! against a working copy of the whole database value; the copy replaces the
//! live value only when every command succeeded, so a failing transaction
//! body leaves the database exactly as it was.

pub mod persist;
pub mod text;

use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{eval_algebra, schema_of, AlgebraEnv, AlgebraExpr};
use crate::error::{Error, Result};
use crate::relation::{AttrName, Relation, Schema, Tuple};
use crate::scalar::{eval_scalar, Params, ScalarExpr};
use crate::value::{Domain, Oid, Value};

/// Default cap on group loop iterations; WHILE raises once it is hit.
pub const DEFAULT_LOOP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ForeignKey {
    pub attrs: Vec<AttrName>,
    pub target: String,
    pub target_attrs: Vec<AttrName>,
}

/// Straight-line procedure body allowed as a virtual relvar definition:
/// local declarations followed by one `RETURN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcDef {
    pub locals: Vec<(String, AlgebraExpr)>,
    pub ret: AlgebraExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VirtualDef {
    Expr(AlgebraExpr),
    Proc(ProcDef),
}

impl VirtualDef {
    fn referenced_relvars(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            VirtualDef::Expr(e) => e.referenced_relvars(&mut out),
            VirtualDef::Proc(p) => {
                for (_, e) in &p.locals {
                    e.referenced_relvars(&mut out);
                }
                p.ret.referenced_relvars(&mut out);
                // names bound by the locals are not external references
                out.retain(|n| !p.locals.iter().any(|(l, _)| l == n));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelVarKind {
    Real,
    Virtual(VirtualDef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelVarDef {
    pub name: String,
    pub schema: Schema,
    pub kind: RelVarKind,
    pub keys: Vec<Vec<AttrName>>,
    pub fkeys: Vec<ForeignKey>,
    /// Emitted by the translator; regenerated from the class catalog on load.
    pub generated: bool,
    /// Creation order, used to replay user definitions when loading.
    pub seq: u64,
}

impl RelVarDef {
    pub fn is_virtual(&self) -> bool {
        matches!(self.kind, RelVarKind::Virtual(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Scalar(Domain),
    Relation(Schema),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransParam {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransactionDef {
    pub name: String,
    pub params: Vec<TransParam>,
    pub body: Vec<MachineCmd>,
    pub generated: bool,
    pub seq: u64,
}

/// Argument of an EXEC. A bare name parses as an rvalue and is resolved
/// against relations first, then scalar parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecArg {
    Rvalue(AlgebraExpr),
    Scalar(ScalarExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MachineCmd {
    CreateReal {
        name: String,
        schema: Schema,
        keys: Vec<Vec<AttrName>>,
        fkeys: Vec<ForeignKey>,
    },
    CreateVirtual {
        name: String,
        declared_schema: Option<Schema>,
        def: VirtualDef,
        keys: Vec<Vec<AttrName>>,
        fkeys: Vec<ForeignKey>,
    },
    Assign {
        name: String,
        rvalue: AlgebraExpr,
    },
    /// `SET target := target UNION rvalue`, with per-attribute coercion.
    Insert {
        name: String,
        rvalue: AlgebraExpr,
    },
    /// Row-literal insert; unlisted attributes become NULL.
    InsertValues {
        name: String,
        attrs: Option<Vec<AttrName>>,
        rows: Vec<Vec<ScalarExpr>>,
    },
    Update {
        name: String,
        sets: Vec<(AttrName, ScalarExpr)>,
        wher: Option<ScalarExpr>,
    },
    Delete {
        name: String,
        wher: Option<ScalarExpr>,
    },
    Get {
        rvalue: AlgebraExpr,
    },
    DefTrans(TransactionDef),
    ExecTrans {
        name: String,
        args: Vec<ExecArg>,
    },
    ExecBlock {
        body: Vec<MachineCmd>,
    },
    /// Local relvar, empty or initialized; visible to the rest of the frame.
    DeclareLocal {
        name: String,
        schema: Option<Schema>,
        init: Option<AlgebraExpr>,
    },
    IfCount {
        cond: AlgebraExpr,
        then_body: Vec<MachineCmd>,
        else_body: Vec<MachineCmd>,
    },
    WhileCount {
        cond: AlgebraExpr,
        body: Vec<MachineCmd>,
    },
    /// Instrumentation: asserts the parts are pairwise disjoint and union to
    /// the whole. Emitted by the translator at statement boundaries.
    Partition {
        whole: AlgebraExpr,
        parts: Vec<AlgebraExpr>,
    },
    /// Raises unless the expression evaluates to exactly one tuple; backs
    /// the FIRST OF cardinality rule.
    AssertOne {
        expr: AlgebraExpr,
    },
}

/// The total database value: schema, stored tuples, transactions, and the
/// OID fountain.
#[derive(Debug, Clone)]
pub struct Database {
    relvars: BTreeMap<String, RelVarDef>,
    data: BTreeMap<String, Relation>,
    transactions: BTreeMap<String, TransactionDef>,
    oid_counter: u64,
    next_seq: u64,
    gen_mode: bool,
    pub loop_limit: u64,
    /// Count of partition assertions executed (instrumentation, not state).
    pub partition_checks: u64,
}

/// Value equality: definitions, stored tuples, transactions, and the OID
/// counter. Creation sequence numbers and instrumentation counters are
/// bookkeeping, not part of the database value.
impl PartialEq for Database {
    fn eq(&self, other: &Database) -> bool {
        let defs_eq = self.relvars.len() == other.relvars.len()
            && self.relvars.iter().all(|(k, a)| {
                other.relvars.get(k).is_some_and(|b| {
                    a.name == b.name
                        && a.schema == b.schema
                        && a.kind == b.kind
                        && a.keys == b.keys
                        && a.fkeys == b.fkeys
                        && a.generated == b.generated
                })
            });
        let trans_eq = self.transactions.len() == other.transactions.len()
            && self.transactions.iter().all(|(k, a)| {
                other.transactions.get(k).is_some_and(|b| {
                    a.name == b.name
                        && a.params == b.params
                        && a.body == b.body
                        && a.generated == b.generated
                })
            });
        defs_eq && trans_eq && self.data == other.data && self.oid_counter == other.oid_counter
    }
}

impl Eq for Database {}

impl Default for Database {
    fn default() -> Database {
        Database::new()
    }
}

/// Execution frame: relation/scalar parameters and locals of the running
/// transaction body. Virtual relvar definitions never see a frame.
#[derive(Default)]
struct Frame {
    locals: BTreeMap<String, Relation>,
    rel_params: BTreeMap<String, Relation>,
    scalar_params: Params,
    param_domains: BTreeMap<String, Domain>,
}

struct DbEnv<'a> {
    db: &'a Database,
    frame: Option<&'a Frame>,
    empty_params: Params,
    empty_domains: BTreeMap<String, Domain>,
}

impl<'a> DbEnv<'a> {
    fn new(db: &'a Database, frame: Option<&'a Frame>) -> DbEnv<'a> {
        DbEnv {
            db,
            frame,
            empty_params: Params::new(),
            empty_domains: BTreeMap::new(),
        }
    }
}

impl<'a> AlgebraEnv for DbEnv<'a> {
    fn relation(&self, name: &str) -> Result<Relation> {
        if let Some(f) = self.frame {
            if let Some(r) = f.locals.get(name) {
                return Ok(r.clone());
            }
            if let Some(r) = f.rel_params.get(name) {
                return Ok(r.clone());
            }
        }
        self.db.value_of(name, &mut Vec::new())
    }

    fn relation_schema(&self, name: &str) -> Result<Schema> {
        if let Some(f) = self.frame {
            if let Some(r) = f.locals.get(name) {
                return Ok(r.schema().clone());
            }
            if let Some(r) = f.rel_params.get(name) {
                return Ok(r.schema().clone());
            }
        }
        self.db
            .relvars
            .get(name)
            .map(|d| d.schema.clone())
            .ok_or_else(|| Error::UnknownRelvar(name.into()))
    }

    fn scalar_params(&self) -> &Params {
        match self.frame {
            Some(f) => &f.scalar_params,
            None => &self.empty_params,
        }
    }

    fn param_domains(&self) -> &BTreeMap<String, Domain> {
        match self.frame {
            Some(f) => &f.param_domains,
            None => &self.empty_domains,
        }
    }
}

impl Database {
    pub fn new() -> Database {
        Database {
            relvars: BTreeMap::new(),
            data: BTreeMap::new(),
            transactions: BTreeMap::new(),
            oid_counter: 1,
            next_seq: 1,
            gen_mode: false,
            loop_limit: DEFAULT_LOOP_LIMIT,
            partition_checks: 0,
        }
    }

    pub fn relvar(&self, name: &str) -> Option<&RelVarDef> {
        self.relvars.get(name)
    }

    pub fn relvars(&self) -> impl Iterator<Item = &RelVarDef> {
        self.relvars.values()
    }

    pub fn transaction(&self, name: &str) -> Option<&TransactionDef> {
        self.transactions.get(name)
    }

    pub fn transactions(&self) -> impl Iterator<Item = &TransactionDef> {
        self.transactions.values()
    }

    pub fn oid_counter(&self) -> u64 {
        self.oid_counter
    }

    pub(crate) fn set_oid_counter(&mut self, n: u64) {
        self.oid_counter = n;
    }

    /// Mint a fresh OID, strictly above everything issued before.
    pub fn next_oid(&mut self) -> Oid {
        let oid = Oid(self.oid_counter);
        self.oid_counter += 1;
        oid
    }

    /// Current value of a relvar; virtual definitions expand recursively.
    /// `stack` detects definition cycles that slipped past creation checks.
    fn value_of(&self, name: &str, stack: &mut Vec<String>) -> Result<Relation> {
        let def = self
            .relvars
            .get(name)
            .ok_or_else(|| Error::UnknownRelvar(name.into()))?;
        match &def.kind {
            RelVarKind::Real => Ok(self.data[name].clone()),
            RelVarKind::Virtual(vdef) => {
                if stack.iter().any(|n| n == name) {
                    return Err(Error::CyclicDefinition(name.into()));
                }
                stack.push(name.to_string());
                let out = self.eval_virtual(vdef, stack);
                stack.pop();
                out
            }
        }
    }

    fn eval_virtual(&self, vdef: &VirtualDef, stack: &mut Vec<String>) -> Result<Relation> {
        struct VirtualEnv<'a> {
            db: &'a Database,
            stack: std::cell::RefCell<&'a mut Vec<String>>,
            locals: BTreeMap<String, Relation>,
            empty_params: Params,
            empty_domains: BTreeMap<String, Domain>,
        }
        impl<'a> AlgebraEnv for VirtualEnv<'a> {
            fn relation(&self, name: &str) -> Result<Relation> {
                if let Some(r) = self.locals.get(name) {
                    return Ok(r.clone());
                }
                self.db.value_of(name, &mut self.stack.borrow_mut())
            }
            fn relation_schema(&self, name: &str) -> Result<Schema> {
                if let Some(r) = self.locals.get(name) {
                    return Ok(r.schema().clone());
                }
                self.db
                    .relvars
                    .get(name)
                    .map(|d| d.schema.clone())
                    .ok_or_else(|| Error::UnknownRelvar(name.into()))
            }
            fn scalar_params(&self) -> &Params {
                &self.empty_params
            }
            fn param_domains(&self) -> &BTreeMap<String, Domain> {
                &self.empty_domains
            }
        }
        let mut env = VirtualEnv {
            db: self,
            stack: std::cell::RefCell::new(stack),
            locals: BTreeMap::new(),
            empty_params: Params::new(),
            empty_domains: BTreeMap::new(),
        };
        match vdef {
            VirtualDef::Expr(e) => eval_algebra(e, &env),
            VirtualDef::Proc(p) => {
                for (name, init) in &p.locals {
                    let v = eval_algebra(init, &env)?;
                    env.locals.insert(name.clone(), v);
                }
                eval_algebra(&p.ret, &env)
            }
        }
    }

    /// Evaluate an rvalue against the current database value (the GET
    /// command, minus output routing).
    pub fn get(&self, rvalue: &AlgebraExpr) -> Result<Relation> {
        eval_algebra(rvalue, &DbEnv::new(self, None))
    }

    /// Static schema of an rvalue against the catalog.
    pub fn schema_of_expr(&self, rvalue: &AlgebraExpr) -> Result<Schema> {
        schema_of(rvalue, &DbEnv::new(self, None))
    }

    /// Execute one top-level command. All effects land on a working copy
    /// that replaces the live value only on success; GET output is returned.
    pub fn execute(&mut self, cmd: &MachineCmd) -> Result<Vec<Relation>> {
        let mut work = self.clone();
        let mut out = Vec::new();
        let mut frame = Frame::default();
        work.run_cmd(cmd, &mut frame, &mut out)?;
        *self = work;
        Ok(out)
    }

    /// Execute a sequence atomically (used by the translator for compound
    /// emissions such as NEW).
    pub fn execute_all(&mut self, cmds: &[MachineCmd]) -> Result<Vec<Relation>> {
        let mut work = self.clone();
        let mut out = Vec::new();
        let mut frame = Frame::default();
        for cmd in cmds {
            work.run_cmd(cmd, &mut frame, &mut out)?;
        }
        *self = work;
        Ok(out)
    }

    /// As `execute_all`, with every CREATE marked as translator-emitted so
    /// persistence skips it and rebuilds it from the class DDL instead.
    pub fn execute_all_generated(&mut self, cmds: &[MachineCmd]) -> Result<Vec<Relation>> {
        let mut work = self.clone();
        work.gen_mode = true;
        let mut out = Vec::new();
        let mut frame = Frame::default();
        for cmd in cmds {
            work.run_cmd(cmd, &mut frame, &mut out)?;
        }
        work.gen_mode = false;
        *self = work;
        Ok(out)
    }

    fn run_cmds(
        &mut self,
        cmds: &[MachineCmd],
        frame: &mut Frame,
        out: &mut Vec<Relation>,
    ) -> Result<()> {
        for cmd in cmds {
            self.run_cmd(cmd, frame, out)?;
        }
        Ok(())
    }

    fn run_cmd(
        &mut self,
        cmd: &MachineCmd,
        frame: &mut Frame,
        out: &mut Vec<Relation>,
    ) -> Result<()> {
        match cmd {
            MachineCmd::CreateReal {
                name,
                schema,
                keys,
                fkeys,
            } => {
                let generated = self.gen_mode;
                self.create_real(name, schema.clone(), keys.clone(), fkeys.clone(), generated)
            }
            MachineCmd::CreateVirtual {
                name,
                declared_schema,
                def,
                keys,
                fkeys,
            } => {
                let generated = self.gen_mode;
                self.create_virtual(
                    name,
                    declared_schema.clone(),
                    def.clone(),
                    keys.clone(),
                    fkeys.clone(),
                    generated,
                )
            }
            MachineCmd::Assign { name, rvalue } => {
                let value = eval_algebra(rvalue, &DbEnv::new(self, Some(frame)))?;
                self.assign(name, value, frame)
            }
            MachineCmd::Insert { name, rvalue } => {
                let add = eval_algebra(rvalue, &DbEnv::new(self, Some(frame)))?;
                let old = self.readable(name, frame)?;
                let mut rows: Vec<Vec<Value>> = old.iter().map(|t| t.values().to_vec()).collect();
                rows.extend(add.iter().map(|t| t.values().to_vec()));
                if !schema_assignable(old.schema(), add.schema()) {
                    return Err(Error::SchemaMismatch(format!(
                        "INSERT into `{name}`: row schema does not fit"
                    )));
                }
                let value = Relation::from_rows(old.schema().clone(), rows)?;
                self.assign(name, value, frame)
            }
            MachineCmd::InsertValues { name, attrs, rows } => {
                let old = self.readable(name, frame)?;
                let schema = old.schema().clone();
                let positions: Vec<usize> = match attrs {
                    None => (0..schema.arity()).collect(),
                    Some(list) => list
                        .iter()
                        .map(|a| {
                            schema
                                .index_of(a.as_str())
                                .ok_or_else(|| Error::UnknownAttribute(a.to_string()))
                        })
                        .collect::<Result<_>>()?,
                };
                let env = DbEnv::new(self, Some(frame));
                let empty_schema = Schema::default();
                let empty_tuple = Tuple(vec![]);
                let mut new_rows: Vec<Vec<Value>> =
                    old.iter().map(|t| t.values().to_vec()).collect();
                for row in rows {
                    if row.len() != positions.len() {
                        return Err(Error::SchemaMismatch(format!(
                            "VALUES row has {} items, expected {}",
                            row.len(),
                            positions.len()
                        )));
                    }
                    let mut vals = vec![Value::Null; schema.arity()];
                    for (expr, pos) in row.iter().zip(positions.iter()) {
                        vals[*pos] =
                            eval_scalar(expr, &empty_schema, &empty_tuple, env.scalar_params())?;
                    }
                    new_rows.push(vals);
                }
                let value = Relation::from_rows(schema, new_rows)?;
                self.assign(name, value, frame)
            }
            MachineCmd::Update { name, sets, wher } => {
                let old = self.readable(name, frame)?;
                let schema = old.schema().clone();
                for (a, _) in sets {
                    if schema.index_of(a.as_str()).is_none() {
                        return Err(Error::UnknownAttribute(a.to_string()));
                    }
                }
                let params = frame.scalar_params.clone();
                let mut rows = Vec::with_capacity(old.len());
                for t in old.iter() {
                    let hit = match wher {
                        None => true,
                        Some(c) => {
                            matches!(eval_scalar(c, &schema, t, &params)?, Value::Boolean(true))
                        }
                    };
                    let mut vals = t.values().to_vec();
                    if hit {
                        for (a, e) in sets {
                            let idx = schema.index_of(a.as_str()).unwrap();
                            vals[idx] = eval_scalar(e, &schema, t, &params)?;
                        }
                    }
                    rows.push(vals);
                }
                let value = Relation::from_rows(schema, rows)?;
                self.assign(name, value, frame)
            }
            MachineCmd::Delete { name, wher } => {
                let old = self.readable(name, frame)?;
                let schema = old.schema().clone();
                let params = frame.scalar_params.clone();
                let mut rows = Vec::new();
                for t in old.iter() {
                    let hit = match wher {
                        None => true,
                        Some(c) => {
                            matches!(eval_scalar(c, &schema, t, &params)?, Value::Boolean(true))
                        }
                    };
                    if !hit {
                        rows.push(t.values().to_vec());
                    }
                }
                let value = Relation::from_rows(schema, rows)?;
                self.assign(name, value, frame)
            }
            MachineCmd::Get { rvalue } => {
                let r = eval_algebra(rvalue, &DbEnv::new(self, Some(frame)))?;
                out.push(r);
                Ok(())
            }
            MachineCmd::DefTrans(def) => self.define_transaction(def.clone()),
            MachineCmd::ExecTrans { name, args } => self.exec_transaction(name, args, frame, out),
            MachineCmd::ExecBlock { body } => {
                let mut inner = Frame::default();
                self.run_cmds(body, &mut inner, out)
            }
            MachineCmd::DeclareLocal { name, schema, init } => {
                let rel = match (schema, init) {
                    (Some(s), None) => Relation::new(s.clone()),
                    (None, Some(e)) => eval_algebra(e, &DbEnv::new(self, Some(frame)))?,
                    (Some(s), Some(e)) => {
                        let v = eval_algebra(e, &DbEnv::new(self, Some(frame)))?;
                        if !schema_assignable(s, v.schema()) {
                            return Err(Error::SchemaMismatch(format!(
                                "DECLARE `{name}`: initializer does not fit declared schema"
                            )));
                        }
                        let rows = v.iter().map(|t| t.values().to_vec()).collect();
                        Relation::from_rows(s.clone(), rows)?
                    }
                    (None, None) => {
                        return Err(Error::SchemaMismatch(format!(
                            "DECLARE `{name}` needs a schema or an initializer"
                        )))
                    }
                };
                frame.locals.insert(name.clone(), rel);
                Ok(())
            }
            MachineCmd::IfCount {
                cond,
                then_body,
                else_body,
            } => {
                let c = eval_algebra(cond, &DbEnv::new(self, Some(frame)))?;
                if !c.is_empty() {
                    self.run_cmds(then_body, frame, out)
                } else {
                    self.run_cmds(else_body, frame, out)
                }
            }
            MachineCmd::WhileCount { cond, body } => {
                let mut iterations: u64 = 0;
                loop {
                    let c = eval_algebra(cond, &DbEnv::new(self, Some(frame)))?;
                    if c.is_empty() {
                        return Ok(());
                    }
                    iterations += 1;
                    if iterations > self.loop_limit {
                        return Err(Error::LoopLimitExceeded(self.loop_limit));
                    }
                    self.run_cmds(body, frame, out)?;
                }
            }
            MachineCmd::Partition { whole, parts } => {
                let env = DbEnv::new(self, Some(frame));
                let whole_rel = eval_algebra(whole, &env)?;
                let mut seen: BTreeSet<Tuple> = BTreeSet::new();
                let mut total = 0usize;
                for p in parts {
                    let r = eval_algebra(p, &env)?;
                    for t in r.iter() {
                        if !seen.insert(t.clone()) {
                            return Err(Error::PartitionViolation(format!(
                                "element {:?} appears in two branch sets",
                                t.values()
                            )));
                        }
                        if !whole_rel.contains(t) {
                            return Err(Error::PartitionViolation(
                                "branch sets exceed the input group".into(),
                            ));
                        }
                        total += 1;
                    }
                }
                if total != whole_rel.len() {
                    return Err(Error::PartitionViolation(format!(
                        "branch sets cover {total} of {} input objects",
                        whole_rel.len()
                    )));
                }
                self.partition_checks += 1;
                Ok(())
            }
            MachineCmd::AssertOne { expr } => {
                let r = eval_algebra(expr, &DbEnv::new(self, Some(frame)))?;
                if r.len() != 1 {
                    return Err(Error::FirstOfCardinality(r.len()));
                }
                Ok(())
            }
        }
    }

    /// Register a real relvar.
    pub fn create_real(
        &mut self,
        name: &str,
        schema: Schema,
        keys: Vec<Vec<AttrName>>,
        fkeys: Vec<ForeignKey>,
        generated: bool,
    ) -> Result<()> {
        if self.relvars.contains_key(name) {
            return Err(Error::DuplicateName(name.into()));
        }
        self.validate_constraints(name, &schema, &keys, &fkeys)?;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.data
            .insert(name.to_string(), Relation::new(schema.clone()));
        self.relvars.insert(
            name.to_string(),
            RelVarDef {
                name: name.to_string(),
                schema,
                kind: RelVarKind::Real,
                keys,
                fkeys,
                generated,
                seq,
            },
        );
        Ok(())
    }

    /// Register or redefine a virtual relvar. Redefinition is allowed only
    /// for an existing virtual; a real relvar is never silently replaced.
    pub fn create_virtual(
        &mut self,
        name: &str,
        declared_schema: Option<Schema>,
        def: VirtualDef,
        keys: Vec<Vec<AttrName>>,
        fkeys: Vec<ForeignKey>,
        generated: bool,
    ) -> Result<()> {
        if let Some(existing) = self.relvars.get(name) {
            if !existing.is_virtual() {
                return Err(Error::DuplicateName(name.into()));
            }
        }
        // cycle check: expanding the new definition must never reach `name`
        let mut stack: Vec<String> = def.referenced_relvars();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == name {
                return Err(Error::CyclicDefinition(name.into()));
            }
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(d) = self.relvars.get(&n) {
                if let RelVarKind::Virtual(v) = &d.kind {
                    stack.extend(v.referenced_relvars());
                }
            } else {
                return Err(Error::UnknownRelvar(n));
            }
        }
        // infer the schema; reject definitions that do not typecheck now
        let schema = {
            let probe = RelVarDef {
                name: name.to_string(),
                schema: Schema::default(),
                kind: RelVarKind::Virtual(def.clone()),
                keys: vec![],
                fkeys: vec![],
                generated,
                seq: 0,
            };
            let old = self.relvars.insert(name.to_string(), probe);
            let inferred = self.schema_of_virtual(&def);
            match old {
                Some(o) => {
                    self.relvars.insert(name.to_string(), o);
                }
                None => {
                    self.relvars.remove(name);
                }
            }
            inferred?
        };
        if let Some(declared) = &declared_schema {
            if !declared.setop_compatible(&schema) {
                return Err(Error::SchemaMismatch(format!(
                    "declared schema of `{name}` does not match its definition"
                )));
            }
        }
        let schema = declared_schema.unwrap_or(schema);
        self.validate_constraints(name, &schema, &keys, &fkeys)?;
        let seq = match self.relvars.get(name) {
            Some(old) => old.seq,
            None => {
                let s = self.next_seq;
                self.next_seq += 1;
                s
            }
        };
        self.relvars.insert(
            name.to_string(),
            RelVarDef {
                name: name.to_string(),
                schema,
                kind: RelVarKind::Virtual(def),
                keys,
                fkeys,
                generated,
                seq,
            },
        );
        Ok(())
    }

    fn schema_of_virtual(&self, def: &VirtualDef) -> Result<Schema> {
        match def {
            VirtualDef::Expr(e) => self.schema_of_expr(e),
            VirtualDef::Proc(p) => {
                struct ProcEnv<'a> {
                    db: &'a Database,
                    local_schemas: BTreeMap<String, Schema>,
                    empty_params: Params,
                    empty_domains: BTreeMap<String, Domain>,
                }
                impl<'a> AlgebraEnv for ProcEnv<'a> {
                    fn relation(&self, _name: &str) -> Result<Relation> {
                        unreachable!("schema inference never evaluates")
                    }
                    fn relation_schema(&self, name: &str) -> Result<Schema> {
                        if let Some(s) = self.local_schemas.get(name) {
                            return Ok(s.clone());
                        }
                        self.db
                            .relvars
                            .get(name)
                            .map(|d| d.schema.clone())
                            .ok_or_else(|| Error::UnknownRelvar(name.into()))
                    }
                    fn scalar_params(&self) -> &Params {
                        &self.empty_params
                    }
                    fn param_domains(&self) -> &BTreeMap<String, Domain> {
                        &self.empty_domains
                    }
                }
                let mut env = ProcEnv {
                    db: self,
                    local_schemas: BTreeMap::new(),
                    empty_params: Params::new(),
                    empty_domains: BTreeMap::new(),
                };
                for (n, e) in &p.locals {
                    let s = schema_of(e, &env)?;
                    env.local_schemas.insert(n.clone(), s);
                }
                schema_of(&p.ret, &env)
            }
        }
    }

    fn validate_constraints(
        &self,
        name: &str,
        schema: &Schema,
        keys: &[Vec<AttrName>],
        fkeys: &[ForeignKey],
    ) -> Result<()> {
        for key in keys {
            for a in key {
                if schema.index_of(a.as_str()).is_none() {
                    return Err(Error::UnknownAttribute(format!("{a} in KEY of {name}")));
                }
            }
        }
        for fk in fkeys {
            if fk.attrs.len() != fk.target_attrs.len() {
                return Err(Error::SchemaMismatch(format!(
                    "FKEY on `{name}`: attribute count mismatch"
                )));
            }
            for a in &fk.attrs {
                if schema.index_of(a.as_str()).is_none() {
                    return Err(Error::UnknownAttribute(format!("{a} in FKEY of {name}")));
                }
            }
            let target = self
                .relvars
                .get(&fk.target)
                .ok_or_else(|| Error::UnknownRelvar(fk.target.clone()))?;
            for a in &fk.target_attrs {
                if target.schema.index_of(a.as_str()).is_none() {
                    return Err(Error::UnknownAttribute(format!(
                        "{a} in FKEY target {}",
                        fk.target
                    )));
                }
            }
        }
        Ok(())
    }

    fn readable(&self, name: &str, frame: &Frame) -> Result<Relation> {
        if let Some(r) = frame.locals.get(name) {
            return Ok(r.clone());
        }
        if let Some(r) = frame.rel_params.get(name) {
            return Ok(r.clone());
        }
        self.value_of(name, &mut Vec::new())
    }

    /// Store a new value into a real relvar (local or global) and, for
    /// globals, check every constraint. The caller already works on a copy,
    /// so an error simply propagates.
    fn assign(&mut self, name: &str, value: Relation, frame: &mut Frame) -> Result<()> {
        if frame.locals.contains_key(name) {
            let old = &frame.locals[name];
            let coerced = coerce_into(old.schema(), value, name)?;
            frame.locals.insert(name.to_string(), coerced);
            return Ok(());
        }
        if frame.rel_params.contains_key(name) {
            // parameters are caller-owned values
            return Err(Error::VirtualTargetNotUpdatable(format!(
                "parameter `{name}`"
            )));
        }
        let def = self
            .relvars
            .get(name)
            .ok_or_else(|| Error::UnknownRelvar(name.into()))?;
        if def.is_virtual() {
            return Err(Error::VirtualTargetNotUpdatable(name.into()));
        }
        let coerced = coerce_into(&def.schema, value, name)?;
        let old = self.data.insert(name.to_string(), coerced);
        if let Err(e) = self.check_all_constraints() {
            // roll the single assignment back before reporting
            self.data.insert(name.to_string(), old.unwrap());
            return Err(e);
        }
        Ok(())
    }

    /// Raw tuple load used by persistence; constraints checked afterwards
    /// in one sweep.
    pub(crate) fn set_data_unchecked(&mut self, name: &str, value: Relation) -> Result<()> {
        let def = self
            .relvars
            .get(name)
            .ok_or_else(|| Error::UnknownRelvar(name.into()))?;
        if def.is_virtual() {
            return Err(Error::VirtualTargetNotUpdatable(name.into()));
        }
        self.data.insert(name.to_string(), value);
        Ok(())
    }

    /// Keys and foreign keys of every real relvar, checked against the
    /// current value. Foreign keys may target virtual relvars; those are
    /// checked against their current evaluation.
    pub fn check_all_constraints(&self) -> Result<()> {
        for def in self.relvars.values() {
            if def.is_virtual() {
                continue;
            }
            let rel = &self.data[&def.name];
            for key in &def.keys {
                let idx: Vec<usize> = key
                    .iter()
                    .map(|a| def.schema.index_of(a.as_str()).unwrap())
                    .collect();
                let mut seen: BTreeSet<Vec<Value>> = BTreeSet::new();
                for t in rel.iter() {
                    let kv: Vec<Value> = idx.iter().map(|i| t.values()[*i].clone()).collect();
                    if kv.iter().any(Value::is_null) {
                        continue;
                    }
                    if !seen.insert(kv) {
                        return Err(Error::KeyViolation {
                            relvar: def.name.clone(),
                            key: key
                                .iter()
                                .map(|a| a.to_string())
                                .collect::<Vec<_>>()
                                .join(", "),
                        });
                    }
                }
            }
            for fk in &def.fkeys {
                let idx: Vec<usize> = fk
                    .attrs
                    .iter()
                    .map(|a| def.schema.index_of(a.as_str()).unwrap())
                    .collect();
                // rows with a NULL reference attribute are exempt
                let rows_to_check: Vec<Vec<Value>> = rel
                    .iter()
                    .filter_map(|t| {
                        let kv: Vec<Value> = idx.iter().map(|i| t.values()[*i].clone()).collect();
                        if kv.iter().any(Value::is_null) {
                            None
                        } else {
                            Some(kv)
                        }
                    })
                    .collect();
                if rows_to_check.is_empty() {
                    continue;
                }
                let target = self.value_of(&fk.target, &mut Vec::new())?;
                let tidx: Vec<usize> = fk
                    .target_attrs
                    .iter()
                    .map(|a| {
                        target
                            .schema()
                            .index_of(a.as_str())
                            .ok_or_else(|| Error::UnknownAttribute(a.to_string()))
                    })
                    .collect::<Result<_>>()?;
                let present: BTreeSet<Vec<Value>> = target
                    .iter()
                    .map(|t| tidx.iter().map(|i| t.values()[*i].clone()).collect())
                    .collect();
                for kv in rows_to_check {
                    if !present.contains(&kv) {
                        return Err(Error::ForeignKeyViolation {
                            relvar: def.name.clone(),
                            fkey: fk
                                .attrs
                                .iter()
                                .map(|a| a.to_string())
                                .collect::<Vec<_>>()
                                .join(", "),
                            target: fk.target.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Store a transaction definition.
    pub fn define_transaction(&mut self, mut def: TransactionDef) -> Result<()> {
        // generated bindings are redefined freely; user transactions are not
        if let Some(existing) = self.transactions.get(&def.name) {
            if !(existing.generated && def.generated) {
                return Err(Error::DuplicateName(def.name.clone()));
            }
        }
        self.validate_body(&def.body, &def.params)?;
        def.seq = self.next_seq;
        self.next_seq += 1;
        self.transactions.insert(def.name.clone(), def);
        Ok(())
    }

    pub(crate) fn remove_generated_transactions(&mut self) {
        self.transactions.retain(|_, t| !t.generated);
    }

    /// Definition-time walk: every relvar reference must be a global, a
    /// parameter, or a local declared earlier in the body.
    fn validate_body(&self, body: &[MachineCmd], params: &[TransParam]) -> Result<()> {
        let mut names: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
        self.validate_cmds(body, &mut names)
    }

    fn validate_cmds(&self, cmds: &[MachineCmd], names: &mut BTreeSet<String>) -> Result<()> {
        let check_expr = |e: &AlgebraExpr, names: &BTreeSet<String>| -> Result<()> {
            let mut refs = Vec::new();
            e.referenced_relvars(&mut refs);
            for r in refs {
                if !names.contains(&r) && !self.relvars.contains_key(&r) {
                    return Err(Error::UnknownRelvar(r));
                }
            }
            Ok(())
        };
        for cmd in cmds {
            match cmd {
                MachineCmd::DeclareLocal { name, init, .. } => {
                    if let Some(e) = init {
                        check_expr(e, names)?;
                    }
                    names.insert(name.clone());
                }
                MachineCmd::Assign { name, rvalue } | MachineCmd::Insert { name, rvalue } => {
                    if !names.contains(name) && !self.relvars.contains_key(name) {
                        return Err(Error::UnknownRelvar(name.clone()));
                    }
                    check_expr(rvalue, names)?;
                }
                MachineCmd::InsertValues { name, .. }
                | MachineCmd::Update { name, .. }
                | MachineCmd::Delete { name, .. } => {
                    if !names.contains(name) && !self.relvars.contains_key(name) {
                        return Err(Error::UnknownRelvar(name.clone()));
                    }
                }
                MachineCmd::Get { rvalue } => check_expr(rvalue, names)?,
                MachineCmd::ExecTrans { args, .. } => {
                    for a in args {
                        if let ExecArg::Rvalue(e) = a {
                            // a bare name may be a scalar parameter; those are
                            // resolved dynamically, so only check composites
                            if !matches!(e, AlgebraExpr::Relvar(_)) {
                                check_expr(e, names)?;
                            }
                        }
                    }
                }
                MachineCmd::ExecBlock { body } => {
                    let mut inner = names.clone();
                    self.validate_cmds(body, &mut inner)?;
                }
                MachineCmd::IfCount {
                    cond,
                    then_body,
                    else_body,
                } => {
                    check_expr(cond, names)?;
                    self.validate_cmds(then_body, names)?;
                    self.validate_cmds(else_body, names)?;
                }
                MachineCmd::WhileCount { cond, body } => {
                    check_expr(cond, names)?;
                    self.validate_cmds(body, names)?;
                }
                MachineCmd::Partition { whole, parts } => {
                    check_expr(whole, names)?;
                    for p in parts {
                        check_expr(p, names)?;
                    }
                }
                MachineCmd::AssertOne { expr } => check_expr(expr, names)?,
                MachineCmd::CreateReal { .. }
                | MachineCmd::CreateVirtual { .. }
                | MachineCmd::DefTrans(_) => {}
            }
        }
        Ok(())
    }

    fn exec_transaction(
        &mut self,
        name: &str,
        args: &[ExecArg],
        caller: &mut Frame,
        out: &mut Vec<Relation>,
    ) -> Result<()> {
        let def = self
            .transactions
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownTransaction(name.into()))?;
        if args.len() != def.params.len() {
            return Err(Error::ArgumentMismatch {
                trans: name.into(),
                detail: format!("{} arguments, {} parameters", args.len(), def.params.len()),
            });
        }
        let mut frame = Frame::default();
        for (param, arg) in def.params.iter().zip(args.iter()) {
            match &param.kind {
                ParamKind::Relation(schema) => {
                    let rel = match arg {
                        ExecArg::Rvalue(e) => eval_algebra(e, &DbEnv::new(self, Some(caller)))?,
                        ExecArg::Scalar(_) => {
                            return Err(Error::ArgumentMismatch {
                                trans: name.into(),
                                detail: format!("parameter `{}` takes a relation", param.name),
                            })
                        }
                    };
                    let rel = coerce_into(schema, rel, &param.name)?;
                    frame.rel_params.insert(param.name.clone(), rel);
                }
                ParamKind::Scalar(domain) => {
                    let value = match arg {
                        ExecArg::Scalar(e) => {
                            let empty_schema = Schema::default();
                            let empty_tuple = Tuple(vec![]);
                            eval_scalar(e, &empty_schema, &empty_tuple, &caller.scalar_params)?
                        }
                        ExecArg::Rvalue(AlgebraExpr::Relvar(n))
                            if caller.scalar_params.contains_key(n) =>
                        {
                            caller.scalar_params[n].clone()
                        }
                        ExecArg::Rvalue(e) => {
                            let rel = eval_algebra(e, &DbEnv::new(self, Some(caller)))?;
                            match rel.single_value() {
                                Some(v) => v.clone(),
                                None => {
                                    return Err(Error::ArgumentMismatch {
                                        trans: name.into(),
                                        detail: format!(
                                            "parameter `{}` takes a scalar",
                                            param.name
                                        ),
                                    })
                                }
                            }
                        }
                    };
                    let value = value.coerce_to(domain)?;
                    frame
                        .param_domains
                        .insert(param.name.clone(), domain.clone());
                    frame.scalar_params.insert(param.name.clone(), value);
                }
            }
        }
        self.run_cmds(&def.body, &mut frame, out)
    }
}

/// Check that a source schema can be stored into a destination schema:
/// same attribute names in order, domains equal or coercible
/// (INTEGER into FLOAT, STRING into DATETIME).
fn schema_assignable(dst: &Schema, src: &Schema) -> bool {
    dst.arity() == src.arity()
        && dst.attrs().iter().zip(src.attrs().iter()).all(|(d, s)| {
            d.name == s.name
                && (d.domain.storage_eq(&s.domain)
                    || (d.domain == Domain::Float && s.domain == Domain::Integer)
                    || (d.domain == Domain::DateTime && s.domain == Domain::String))
        })
}

fn coerce_into(dst: &Schema, src: Relation, name: &str) -> Result<Relation> {
    if src.schema() == dst {
        return Ok(src);
    }
    if !schema_assignable(dst, src.schema()) {
        return Err(Error::SchemaMismatch(format!(
            "value does not fit the schema of `{name}`"
        )));
    }
    let rows = src.iter().map(|t| t.values().to_vec()).collect();
    Relation::from_rows(dst.clone(), rows)
}

#[cfg(test)]
mod tests;

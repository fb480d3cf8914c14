//! The execution façade: one object holding the machine database and the
//! class catalog, accepting source commands and routing them through the
//! parser, the translator, and the machine.
//!
//! Every command is atomic: the engine snapshots both the database value
//! and the catalog, and an error anywhere restores the snapshot.

use std::path::Path;

use crate::error::{Error, Result};
use crate::machine::{persist, Database, MachineCmd};
use crate::oo::ast::CommandAst;
use crate::oo::catalog::Catalog;
use crate::oo::parser;
use crate::oo::translator::Translator;
use crate::relation::Relation;
use crate::value::{Domain, Oid};

#[derive(Clone, Default)]
pub struct Engine {
    db: Database,
    cat: Catalog,
}

impl Engine {
    pub fn new() -> Engine {
        Engine {
            db: Database::new(),
            cat: Catalog::new(),
        }
    }

    pub fn db(&self) -> &Database {
        &self.db
    }

    pub fn catalog(&self) -> &Catalog {
        &self.cat
    }

    pub fn translator(&self) -> Translator<'_> {
        Translator::new(&self.cat, &self.db)
    }

    /// Parse and run a whole source text; output relations of every GET and
    /// SELECT in order. Stops at the first error.
    pub fn execute_source(&mut self, text: &str) -> Result<Vec<Relation>> {
        let cmds = parser::parse_commands(text)?;
        let mut out = Vec::new();
        for cmd in &cmds {
            out.extend(self.execute_command(cmd)?);
        }
        Ok(out)
    }

    /// Run one command atomically.
    pub fn execute_command(&mut self, cmd: &CommandAst) -> Result<Vec<Relation>> {
        let snapshot_db = self.db.clone();
        let snapshot_cat = self.cat.clone();
        match self.apply(cmd) {
            Ok(out) => Ok(out),
            Err(e) => {
                self.db = snapshot_db;
                self.cat = snapshot_cat;
                Err(e)
            }
        }
    }

    fn apply(&mut self, cmd: &CommandAst) -> Result<Vec<Relation>> {
        match cmd {
            CommandAst::ClassCreate { .. } => {
                self.cat.define_class(cmd)?;
                let name = match cmd {
                    CommandAst::ClassCreate { name, .. } => name.clone(),
                    _ => unreachable!(),
                };
                let create_cmds = self.translator().translate_class_create(&name)?;
                self.db.execute_all_generated(&create_cmds)?;
                self.rebuild()?;
                self.cat.record_ddl(cmd.to_string());
                Ok(vec![])
            }
            CommandAst::Realize {
                class,
                members,
                body,
            } => {
                for m in members {
                    self.cat.register_implementation(class, m, body)?;
                }
                self.rebuild()?;
                self.cat.record_ddl(cmd.to_string());
                Ok(vec![])
            }
            CommandAst::New(n) => {
                let mut next = self.db.oid_counter();
                let cmds = {
                    let tr = self.translator();
                    let mut alloc = || {
                        let o = Oid(next);
                        next += 1;
                        o
                    };
                    tr.translate_new(n, &mut alloc)?.0
                };
                self.db.set_oid_counter(next);
                self.db.execute_all(&cmds)?;
                Ok(vec![])
            }
            CommandAst::MethodExec {
                group,
                method,
                args,
            } => {
                let cmds = self
                    .translator()
                    .translate_method_exec(group, method, args)?;
                self.db.execute_all(&cmds)?;
                Ok(vec![])
            }
            CommandAst::Select(sel) => {
                let (expr, _names) = self.translator().translate_select(sel)?;
                let rel = self.db.get(&expr)?;
                Ok(vec![rel])
            }
            CommandAst::Insert {
                target,
                attrs,
                rows,
            } => {
                let cmds = self.translator().translate_insert(target, attrs, rows)?;
                self.db.execute_all(&cmds)?;
                Ok(vec![])
            }
            CommandAst::Update { target, sets } => {
                let cmds = self.translator().translate_update(target, sets)?;
                self.db.execute_all(&cmds)?;
                Ok(vec![])
            }
            CommandAst::Delete { target } => {
                let cmds = self.translator().translate_delete(target)?;
                self.db.execute_all(&cmds)?;
                Ok(vec![])
            }
            CommandAst::Machine(m) => {
                self.check_machine_cmd(m)?;
                self.db.execute(m)
            }
        }
    }

    /// Reference domains in raw CREATE commands must name defined classes.
    fn check_machine_cmd(&self, cmd: &MachineCmd) -> Result<()> {
        let check_schema = |schema: &crate::relation::Schema| -> Result<()> {
            for a in schema.attrs() {
                if let Domain::Ref(class) = &a.domain {
                    if !self.cat.has_class(class) {
                        return Err(Error::UnknownClass(class.clone()));
                    }
                }
            }
            Ok(())
        };
        match cmd {
            MachineCmd::CreateReal { schema, .. } => check_schema(schema),
            MachineCmd::CreateVirtual {
                declared_schema: Some(schema),
                ..
            } => check_schema(schema),
            _ => Ok(()),
        }
    }

    /// Regenerate every bound relation and binding transaction from the
    /// catalog. Runs after any class DDL.
    fn rebuild(&mut self) -> Result<()> {
        let cmds = self.translator().rebuild_bindings()?;
        self.db.remove_generated_transactions();
        self.db.execute_all_generated(&cmds)?;
        Ok(())
    }

    /// Run a method binding directly on a given group of objects,
    /// bypassing path selection. Used by tests exercising group execution.
    pub fn run_method_on(
        &mut self,
        class: &str,
        method: &str,
        oids: &[Oid],
        args: &[crate::value::Value],
    ) -> Result<()> {
        use crate::algebra::AlgebraExpr;
        use crate::machine::ExecArg;
        use crate::relation::{AttrName, Schema};
        use crate::scalar::ScalarExpr;
        let em = self.cat.member(class, method)?;
        let root = em.root().to_string();
        let params = match &em.spec {
            crate::oo::catalog::MemberSpec::Method { params } => params.clone(),
            _ => return Err(Error::UnknownMethod(method.to_string())),
        };
        if args.len() != params.len() {
            return Err(Error::ArgumentMismatch {
                trans: method.to_string(),
                detail: "argument count".into(),
            });
        }
        let these = AlgebraExpr::Values {
            schema: Schema::of(&[("OID", Domain::Oid)]),
            rows: oids
                .iter()
                .map(|o| vec![ScalarExpr::Lit(crate::value::Value::Oid(*o))])
                .collect(),
        };
        let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for (v, (p, t)) in args.iter().zip(params.iter()) {
            let e = ScalarExpr::Lit(v.clone().coerce_to(&t.storage_domain())?);
            items.push((e, AttrName::from(p.as_str())));
        }
        let par = AlgebraExpr::Project {
            input: Box::new(these.clone()),
            items,
        };
        let cmd = MachineCmd::ExecTrans {
            name: crate::oo::translator::binding_trans_name(&root, method),
            args: vec![ExecArg::Rvalue(these), ExecArg::Rvalue(par)],
        };
        self.db.execute(&cmd)?;
        Ok(())
    }

    /// The OID set a NEW command would act on; exposed so tests can find
    /// objects by component values.
    pub fn group_oids(&self, path_text: &str) -> Result<Vec<Oid>> {
        let path = parser::parse_path_text(path_text)?;
        let expr = self.translator().eval_group_reference(&path)?;
        let rel = self.db.get(&expr)?;
        Ok(rel
            .iter()
            .filter_map(|t| match &t.values()[0] {
                crate::value::Value::Oid(o) => Some(*o),
                _ => None,
            })
            .collect())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        persist::save_database(&self.db, self.cat.ddl_log(), dir)
    }

    pub fn load(dir: &Path) -> Result<Engine> {
        let file = persist::read_catalog(dir)?;
        let mut engine = Engine::new();
        for ddl in &file.ddl {
            let cmd = parser::parse_one(ddl)?;
            match &cmd {
                CommandAst::ClassCreate { .. } | CommandAst::Realize { .. } => {
                    engine.apply(&cmd)?;
                }
                other => {
                    return Err(Error::Format {
                        path: dir.join("catalog.txt").display().to_string(),
                        line: 0,
                        detail: format!("unexpected DDL entry: {other}"),
                    })
                }
            }
        }
        persist::restore_defs_and_data(&mut engine.db, &file, dir)?;
        Ok(engine)
    }
}

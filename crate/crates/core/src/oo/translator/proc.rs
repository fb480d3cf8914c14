//! Iterator-free translation of procedures.
//!
//! A procedure over one object becomes a transaction over a group: the
//! group arrives as the unary OID relation `these` plus a parameter
//! relation `R_par(OID, …)`; locals live in `R_local(OID, …)` with one row
//! per group member. Control flow splits the group into branch sets:
//!
//! ```text
//!   IF c THEN S      →  brT := br⟨c⟩; br := br − brT;
//!                       IF COUNT(brT) THEN S'(brT);
//!                       br := br ∪ brT
//!   WHILE c S        →  brT := br⟨c⟩; br := br − brT;
//!                       WHILE COUNT(brT) { S'(brT);
//!                         br := br ∪ (brT − brT⟨c⟩); brT := brT⟨c⟩ }
//!   RETURN           →  outthese := outthese ∪ br; br := ∅
//!   C := f(…)        →  stored rows of the branch objects replaced with
//!                       f' joined to the branch set
//! ```
//!
//! After every translated statement an instrumentation command asserts the
//! branch sets plus `outthese` still partition the input group.

use super::*;

pub struct ProcBuilder<'t, 'c> {
    tr: &'t Translator<'c>,
    class: String,
    params: Vec<(String, Domain)>,
    locals: Vec<(String, Domain)>,
    branch_count: usize,
    fo_count: usize,
    /// Static stored-implementation check on component writes; commands
    /// that already ran the per-object dynamic check switch it off.
    check_writes: bool,
}

fn loc_attr(n: &str) -> String {
    format!("loc.{n}")
}

fn par_attr(n: &str) -> String {
    format!("par.{n}")
}

impl<'t, 'c> ProcBuilder<'t, 'c> {
    pub fn new(
        tr: &'t Translator<'c>,
        class: &str,
        params: &[(String, TypeName)],
    ) -> Result<ProcBuilder<'t, 'c>> {
        Ok(ProcBuilder {
            tr,
            class: class.to_string(),
            params: params
                .iter()
                .map(|(n, t)| (n.clone(), t.storage_domain()))
                .collect(),
            locals: Vec::new(),
            branch_count: 0,
            fo_count: 0,
            check_writes: true,
        })
    }

    pub fn without_write_checks(mut self) -> Self {
        self.check_writes = false;
        self
    }

    /// Body of p': expects relation parameters `these` and `R_par` bound in
    /// the frame.
    pub fn build_transaction_body(mut self, stmts: &[Stmt]) -> Result<Vec<MachineCmd>> {
        collect_locals(stmts, &mut self.locals)?;
        let mut cmds = Vec::new();
        // R_local: one row per group member, all locals NULL
        let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for (n, d) in &self.locals {
            items.push((
                ScalarExpr::Cast(Box::new(ScalarExpr::Lit(Value::Null)), d.clone()),
                AttrName::from(n.as_str()),
            ));
        }
        cmds.push(MachineCmd::DeclareLocal {
            name: "R_local".into(),
            schema: None,
            init: Some(AlgebraExpr::Project {
                input: Box::new(AlgebraExpr::relvar("these")),
                items,
            }),
        });
        cmds.push(MachineCmd::DeclareLocal {
            name: "outthese".into(),
            schema: None,
            init: Some(AlgebraExpr::difference(
                AlgebraExpr::relvar("these"),
                AlgebraExpr::relvar("these"),
            )),
        });
        let br0 = self.fresh_branch();
        cmds.push(MachineCmd::DeclareLocal {
            name: br0.clone(),
            schema: None,
            init: Some(AlgebraExpr::relvar("these")),
        });
        let mut live = vec![br0.clone()];
        self.translate_stmts(stmts, &br0, &mut live, &mut cmds)?;
        Ok(cmds)
    }

    fn fresh_branch(&mut self) -> String {
        let n = format!("brthese{}", self.branch_count);
        self.branch_count += 1;
        n
    }

    fn boundary_check(&self, live: &[String]) -> MachineCmd {
        let mut parts: Vec<AlgebraExpr> = live
            .iter()
            .map(|n| AlgebraExpr::relvar(n.clone()))
            .collect();
        parts.push(AlgebraExpr::relvar("outthese"));
        MachineCmd::Partition {
            whole: AlgebraExpr::relvar("these"),
            parts,
        }
    }

    fn translate_stmts(
        &mut self,
        stmts: &[Stmt],
        br: &str,
        live: &mut Vec<String>,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        for s in stmts {
            self.translate_stmt(s, br, live, out)?;
            out.push(self.boundary_check(live));
        }
        Ok(())
    }

    fn translate_stmt(
        &mut self,
        stmt: &Stmt,
        br: &str,
        live: &mut Vec<String>,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        match stmt {
            Stmt::Declare { name, init, .. } => {
                if let Some(e) = init {
                    self.assign_local(name, e, br, out)?;
                }
                Ok(())
            }
            Stmt::Assign { target, value } => self.translate_assign(target, value, br, out),
            Stmt::Return { value } => {
                if value.is_some() {
                    return Err(Error::Unsupported(
                        "methods return no value; RETURN stands alone".into(),
                    ));
                }
                out.push(MachineCmd::Assign {
                    name: "outthese".into(),
                    rvalue: AlgebraExpr::union(
                        AlgebraExpr::relvar("outthese"),
                        AlgebraExpr::relvar(br),
                    ),
                });
                out.push(MachineCmd::Assign {
                    name: br.to_string(),
                    rvalue: AlgebraExpr::difference(
                        AlgebraExpr::relvar(br),
                        AlgebraExpr::relvar(br),
                    ),
                });
                Ok(())
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let br_true = self.fresh_branch();
                let filtered = self.filter_branch(br, cond, out)?;
                out.push(MachineCmd::DeclareLocal {
                    name: br_true.clone(),
                    schema: None,
                    init: Some(filtered),
                });
                out.push(MachineCmd::Assign {
                    name: br.to_string(),
                    rvalue: AlgebraExpr::difference(
                        AlgebraExpr::relvar(br),
                        AlgebraExpr::relvar(br_true.clone()),
                    ),
                });
                live.push(br_true.clone());
                let mut then_cmds = Vec::new();
                self.translate_stmts(then_body, &br_true, live, &mut then_cmds)?;
                out.push(MachineCmd::IfCount {
                    cond: AlgebraExpr::relvar(br_true.clone()),
                    then_body: then_cmds,
                    else_body: Vec::new(),
                });
                if !else_body.is_empty() {
                    let mut else_cmds = Vec::new();
                    self.translate_stmts(else_body, br, live, &mut else_cmds)?;
                    out.push(MachineCmd::IfCount {
                        cond: AlgebraExpr::relvar(br.to_string()),
                        then_body: else_cmds,
                        else_body: Vec::new(),
                    });
                }
                // merge the surviving branch objects back
                out.push(MachineCmd::Assign {
                    name: br.to_string(),
                    rvalue: AlgebraExpr::union(
                        AlgebraExpr::relvar(br),
                        AlgebraExpr::relvar(br_true.clone()),
                    ),
                });
                out.push(MachineCmd::Assign {
                    name: br_true.clone(),
                    rvalue: AlgebraExpr::difference(
                        AlgebraExpr::relvar(br_true.clone()),
                        AlgebraExpr::relvar(br_true.clone()),
                    ),
                });
                live.retain(|n| n != &br_true);
                Ok(())
            }
            Stmt::While { cond, body } => {
                let br_true = self.fresh_branch();
                let filtered = self.filter_branch(br, cond, out)?;
                out.push(MachineCmd::DeclareLocal {
                    name: br_true.clone(),
                    schema: None,
                    init: Some(filtered),
                });
                out.push(MachineCmd::Assign {
                    name: br.to_string(),
                    rvalue: AlgebraExpr::difference(
                        AlgebraExpr::relvar(br),
                        AlgebraExpr::relvar(br_true.clone()),
                    ),
                });
                live.push(br_true.clone());
                let mut loop_cmds = Vec::new();
                self.translate_stmts(body, &br_true, live, &mut loop_cmds)?;
                // objects that stopped satisfying the condition rejoin br
                let still = self.filter_branch(&br_true, cond, &mut loop_cmds)?;
                loop_cmds.push(MachineCmd::Assign {
                    name: br.to_string(),
                    rvalue: AlgebraExpr::union(
                        AlgebraExpr::relvar(br),
                        AlgebraExpr::difference(
                            AlgebraExpr::relvar(br_true.clone()),
                            still.clone(),
                        ),
                    ),
                });
                loop_cmds.push(MachineCmd::Assign {
                    name: br_true.clone(),
                    rvalue: still,
                });
                loop_cmds.push(self.boundary_check(live));
                out.push(MachineCmd::WhileCount {
                    cond: AlgebraExpr::relvar(br_true.clone()),
                    body: loop_cmds,
                });
                live.retain(|n| n != &br_true);
                Ok(())
            }
            Stmt::Call { method, args } => self.translate_call(method, args, br, out),
            Stmt::New(_) => Err(Error::Unsupported(
                "NEW inside method bodies is not supported; use constructors".into(),
            )),
        }
    }

    /// `br⟨cond⟩`: the branch members whose per-object condition holds.
    fn filter_branch(
        &mut self,
        br: &str,
        cond: &OoExpr,
        out: &mut Vec<MachineCmd>,
    ) -> Result<AlgebraExpr> {
        let (env, pred) = self.env_for(br, std::slice::from_ref(cond), out)?;
        Ok(AlgebraExpr::Project {
            input: Box::new(AlgebraExpr::select(env, pred[0].clone())),
            items: vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
        })
    }

    /// Build the per-object environment for a branch: OID joined with
    /// parameters, locals, referenced own components, and FIRST OF
    /// constants; convert the given expressions against it.
    fn env_for(
        &mut self,
        br: &str,
        exprs: &[OoExpr],
        out: &mut Vec<MachineCmd>,
    ) -> Result<(AlgebraExpr, Vec<ScalarExpr>)> {
        let mut env = AlgebraExpr::relvar(br);
        if !self.params.is_empty() {
            let renames: Vec<(AttrName, AttrName)> = self
                .params
                .iter()
                .map(|(n, _)| {
                    (
                        AttrName::from(n.as_str()),
                        AttrName::from(par_attr(n).as_str()),
                    )
                })
                .collect();
            env = AlgebraExpr::join_common(
                env,
                AlgebraExpr::rename(AlgebraExpr::relvar("R_par"), renames),
                "OID",
            );
        }
        if !self.locals.is_empty() {
            let renames: Vec<(AttrName, AttrName)> = self
                .locals
                .iter()
                .map(|(n, _)| {
                    (
                        AttrName::from(n.as_str()),
                        AttrName::from(loc_attr(n).as_str()),
                    )
                })
                .collect();
            env = AlgebraExpr::join_common(
                env,
                AlgebraExpr::rename(AlgebraExpr::relvar("R_local"), renames),
                "OID",
            );
        }
        let mut joined_frees: Vec<String> = Vec::new();
        let mut converted = Vec::new();
        for e in exprs {
            let conv = self.convert_expr(e, &mut env, &mut joined_frees, out)?;
            converted.push(conv);
        }
        Ok((env, converted))
    }

    fn convert_expr(
        &mut self,
        e: &OoExpr,
        env: &mut AlgebraExpr,
        joined_frees: &mut Vec<String>,
        out: &mut Vec<MachineCmd>,
    ) -> Result<ScalarExpr> {
        Ok(match e {
            OoExpr::FirstOf(path) => {
                let oids = self.tr.eval_group_reference(path)?;
                self.fo_count += 1;
                let name = format!("firstof{}", self.fo_count);
                let attr = format!("fo.{}", self.fo_count);
                out.push(MachineCmd::DeclareLocal {
                    name: name.clone(),
                    schema: None,
                    init: Some(oids),
                });
                out.push(MachineCmd::AssertOne {
                    expr: AlgebraExpr::relvar(name.clone()),
                });
                *env = AlgebraExpr::Product(
                    Box::new(env.clone()),
                    Box::new(AlgebraExpr::rename(
                        AlgebraExpr::relvar(name),
                        vec![("OID".into(), AttrName::from(attr.as_str()))],
                    )),
                );
                ScalarExpr::attr(attr)
            }
            OoExpr::Neg(a) => {
                ScalarExpr::Neg(Box::new(self.convert_expr(a, env, joined_frees, out)?))
            }
            OoExpr::Not(a) => {
                ScalarExpr::Not(Box::new(self.convert_expr(a, env, joined_frees, out)?))
            }
            OoExpr::Bin(op, a, b) => ScalarExpr::Bin(
                *op,
                Box::new(self.convert_expr(a, env, joined_frees, out)?),
                Box::new(self.convert_expr(b, env, joined_frees, out)?),
            ),
            OoExpr::Like(a, p) => ScalarExpr::Like(
                Box::new(self.convert_expr(a, env, joined_frees, out)?),
                p.clone(),
            ),
            OoExpr::IsNull(a, neg) => ScalarExpr::IsNull(
                Box::new(self.convert_expr(a, env, joined_frees, out)?),
                *neg,
            ),
            OoExpr::Lit(v) => ScalarExpr::Lit(v.clone()),
            OoExpr::Path(p) => self.convert_path(p, env, joined_frees)?,
            OoExpr::Agg(..) => {
                return Err(Error::Unsupported(
                    "aggregates appear only in select bodies".into(),
                ))
            }
            OoExpr::New(_) => return Err(Error::GroupNewUnsupported(0)),
            OoExpr::Subquery(_) => {
                return Err(Error::Unsupported(
                    "subqueries are whole assignment right-hand sides".into(),
                ))
            }
        })
    }

    fn convert_path(
        &self,
        p: &PathExpr,
        env: &mut AlgebraExpr,
        joined_frees: &mut Vec<String>,
    ) -> Result<ScalarExpr> {
        let segs = condition_path_segs(p)?;
        if segs.len() == 1 && matches!(p.head, PathHead::Name(_)) {
            if self.locals.iter().any(|(n, _)| *n == segs[0]) {
                return Ok(ScalarExpr::attr(loc_attr(&segs[0])));
            }
            if self.params.iter().any(|(n, _)| *n == segs[0]) {
                return Ok(ScalarExpr::attr(par_attr(&segs[0])));
            }
        }
        // own component path, joined on demand
        let resolved = self.tr.resolve_post(&self.class, &segs)?;
        if resolved.domain_opt().is_none() {
            return Err(Error::NonTerminalProjection(segs.join(".")));
        }
        let post = resolved.into_post(&segs);
        let attr = format!("this.{}", post.text);
        if !joined_frees.contains(&attr) {
            let col = self.tr.free_col(&self.class, &post)?;
            *env = AlgebraExpr::left_join_on(env.clone(), col, vec![("OID".into(), "OID".into())]);
            joined_frees.push(attr.clone());
        }
        Ok(ScalarExpr::attr(attr))
    }

    fn translate_assign(
        &mut self,
        target: &PathExpr,
        value: &OoExpr,
        br: &str,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        let member = assign_target_member(target)?;
        if self.locals.iter().any(|(n, _)| n == &member) && matches!(target.head, PathHead::Name(_))
        {
            return self.assign_local(&member, value, br, out);
        }
        if self.params.iter().any(|(n, _)| n == &member) {
            return Err(Error::Unsupported(format!(
                "parameter `{member}` is read-only"
            )));
        }
        let em = self.tr.cat.member(&self.class, &member)?;
        match &em.spec {
            MemberSpec::Scalar(ty) => {
                if self.check_writes {
                    self.check_writable(&member)?;
                }
                let declared = ty.storage_domain();
                // one replacement per declaring root
                for root in em.declarers.clone() {
                    self.replace_scalar(&root, &member, &declared, value, br, out)?;
                }
                Ok(())
            }
            MemberSpec::Complex { attrs, .. } => {
                let OoExpr::Subquery(sub) = value else {
                    return Err(Error::Unsupported(
                        "complex components are assigned from subqueries".into(),
                    ));
                };
                if self.check_writes {
                    self.check_writable(&member)?;
                }
                let extra = self.extras();
                let v = self.tr.translate_impl_select(&self.class, sub, &extra)?;
                let conformed = self.tr.conform_complex(v, &member, attrs, &self.class)?;
                let root = em.root().to_string();
                let real = real_complex_name(&root, &member);
                // unchanged rows of other objects, plus the new rows
                out.push(MachineCmd::Assign {
                    name: real.clone(),
                    rvalue: AlgebraExpr::union(
                        AlgebraExpr::join_common(
                            AlgebraExpr::relvar(real.clone()),
                            AlgebraExpr::difference(
                                AlgebraExpr::Project {
                                    input: Box::new(AlgebraExpr::relvar(real.clone())),
                                    items: vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
                                },
                                AlgebraExpr::relvar(br),
                            ),
                            "OID",
                        ),
                        AlgebraExpr::join_common(conformed, AlgebraExpr::relvar(br), "OID"),
                    ),
                });
                Ok(())
            }
            MemberSpec::Method { .. } => Err(Error::KindMismatch {
                member,
                detail: "methods cannot be assigned".into(),
            }),
        }
    }

    /// Writes need a stored implementation somewhere in the member's
    /// hierarchy; a member calculated everywhere rejects assignment.
    fn check_writable(&self, member: &str) -> Result<()> {
        let impls = self.tr.cat.implementations(&self.class, member)?;
        if impls.is_empty() || impls.iter().any(|(_, b)| matches!(b, ImplBody::Stored)) {
            Ok(())
        } else {
            Err(Error::NotUpdatableCalculated {
                member: member.to_string(),
            })
        }
    }

    fn extras(&self) -> ExtraCols {
        let mut entries = Vec::new();
        for (n, d) in &self.params {
            entries.push(ExtraCol {
                source: n.clone(),
                attr: par_attr(n),
                expr: AlgebraExpr::Project {
                    input: Box::new(AlgebraExpr::relvar("R_par")),
                    items: vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (ScalarExpr::attr(n.as_str()), AttrName::from(n.as_str())),
                    ],
                },
                domain: d.clone(),
            });
        }
        for (n, d) in &self.locals {
            entries.push(ExtraCol {
                source: n.clone(),
                attr: loc_attr(n),
                expr: AlgebraExpr::Project {
                    input: Box::new(AlgebraExpr::relvar("R_local")),
                    items: vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (ScalarExpr::attr(n.as_str()), AttrName::from(n.as_str())),
                    ],
                },
                domain: d.clone(),
            });
        }
        ExtraCols { entries }
    }

    /// REPLACE of the branch objects' rows in one stored scalar relation,
    /// with the target attribute recomputed.
    fn replace_scalar(
        &mut self,
        root: &str,
        member: &str,
        declared: &Domain,
        value: &OoExpr,
        br: &str,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        let real = real_scalar_name(root);
        let schema = self
            .tr
            .db
            .relvar(&real)
            .map(|d| d.schema.clone())
            .ok_or_else(|| Error::UnknownRelvar(real.clone()))?;
        let (value_attr_expr, value_join): (ScalarExpr, Option<AlgebraExpr>) = match value {
            OoExpr::Subquery(sub) => {
                let extra = self.extras();
                let v = self.tr.translate_impl_select(&self.class, sub, &extra)?;
                if v.cols.len() != 1 {
                    return Err(Error::TypeError(format!(
                        "assignment to `{member}` needs a single-column subquery"
                    )));
                }
                let vattr = format!("q.{member}");
                let proj = AlgebraExpr::Project {
                    input: Box::new(v.expr),
                    items: vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (
                            ScalarExpr::attr(v.cols[0].0.as_str()),
                            AttrName::from(vattr.as_str()),
                        ),
                    ],
                };
                (ScalarExpr::attr(vattr), Some(proj))
            }
            _ => {
                let (env, converted) = self.env_for(br, std::slice::from_ref(value), out)?;
                // fold the whole environment into one value column; the cast
                // types untyped NULLs and widens INTEGER into FLOAT
                let vattr = format!("q.{member}");
                let proj = AlgebraExpr::Project {
                    input: Box::new(env),
                    items: vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (
                            ScalarExpr::Cast(Box::new(converted[0].clone()), declared.clone()),
                            AttrName::from(vattr.as_str()),
                        ),
                    ],
                };
                (ScalarExpr::attr(vattr), Some(proj))
            }
        };
        let mut updated = AlgebraExpr::join_common(
            AlgebraExpr::relvar(real.clone()),
            AlgebraExpr::relvar(br),
            "OID",
        );
        if let Some(vj) = value_join {
            updated = AlgebraExpr::left_join_on(updated, vj, vec![("OID".into(), "OID".into())]);
        }
        let items: Vec<(ScalarExpr, AttrName)> = schema
            .attrs()
            .iter()
            .map(|a| {
                if a.name.as_str() == member {
                    // the declared domain types untyped NULLs and widens
                    // INTEGER into FLOAT
                    let e = ScalarExpr::Cast(Box::new(value_attr_expr.clone()), declared.clone());
                    (e, a.name.clone())
                } else {
                    (ScalarExpr::attr(a.name.as_str()), a.name.clone())
                }
            })
            .collect();
        let updated = AlgebraExpr::Project {
            input: Box::new(updated),
            items,
        };
        out.push(MachineCmd::Assign {
            name: real.clone(),
            rvalue: AlgebraExpr::union(
                AlgebraExpr::join_common(
                    AlgebraExpr::relvar(real.clone()),
                    AlgebraExpr::difference(
                        AlgebraExpr::Project {
                            input: Box::new(AlgebraExpr::relvar(real)),
                            items: vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
                        },
                        AlgebraExpr::relvar(br),
                    ),
                    "OID",
                ),
                updated,
            ),
        });
        Ok(())
    }

    fn assign_local(
        &mut self,
        name: &str,
        value: &OoExpr,
        br: &str,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        let domain = self
            .locals
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.clone())
            .ok_or_else(|| Error::UnknownName(name.to_string()))?;
        let (value_attr, value_join): (ScalarExpr, AlgebraExpr) = match value {
            OoExpr::Subquery(sub) => {
                let extra = self.extras();
                let v = self.tr.translate_impl_select(&self.class, sub, &extra)?;
                if v.cols.len() != 1 {
                    return Err(Error::TypeError(format!(
                        "assignment to `{name}` needs a single-column subquery"
                    )));
                }
                let vattr = format!("q.{name}");
                (
                    ScalarExpr::attr(vattr.clone()),
                    AlgebraExpr::Project {
                        input: Box::new(v.expr),
                        items: vec![
                            (ScalarExpr::attr("OID"), AttrName::from("OID")),
                            (
                                ScalarExpr::attr(v.cols[0].0.as_str()),
                                AttrName::from(vattr.as_str()),
                            ),
                        ],
                    },
                )
            }
            _ => {
                let (env, converted) = self.env_for(br, std::slice::from_ref(value), out)?;
                let vattr = format!("q.{name}");
                (
                    ScalarExpr::attr(vattr.clone()),
                    AlgebraExpr::Project {
                        input: Box::new(env),
                        items: vec![
                            (ScalarExpr::attr("OID"), AttrName::from("OID")),
                            (
                                ScalarExpr::Cast(Box::new(converted[0].clone()), domain.clone()),
                                AttrName::from(vattr.as_str()),
                            ),
                        ],
                    },
                )
            }
        };
        let updated = AlgebraExpr::left_join_on(
            AlgebraExpr::join_common(
                AlgebraExpr::relvar("R_local"),
                AlgebraExpr::relvar(br),
                "OID",
            ),
            value_join,
            vec![("OID".into(), "OID".into())],
        );
        let items: Vec<(ScalarExpr, AttrName)> =
            std::iter::once((ScalarExpr::attr("OID"), AttrName::from("OID")))
                .chain(self.locals.iter().map(|(n, d)| {
                    if n == name {
                        (
                            ScalarExpr::Cast(Box::new(value_attr.clone()), d.clone()),
                            AttrName::from(n.as_str()),
                        )
                    } else {
                        (ScalarExpr::attr(n.as_str()), AttrName::from(n.as_str()))
                    }
                }))
                .collect();
        out.push(MachineCmd::Assign {
            name: "R_local".into(),
            rvalue: AlgebraExpr::union(
                AlgebraExpr::join_common(
                    AlgebraExpr::relvar("R_local"),
                    AlgebraExpr::difference(
                        AlgebraExpr::Project {
                            input: Box::new(AlgebraExpr::relvar("R_local")),
                            items: vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
                        },
                        AlgebraExpr::relvar(br),
                    ),
                    "OID",
                ),
                AlgebraExpr::Project {
                    input: Box::new(updated),
                    items,
                },
            ),
        });
        Ok(())
    }

    /// A bare method call dispatches polymorphically through the binding
    /// transaction of the method's declaring root.
    fn translate_call(
        &mut self,
        method: &str,
        args: &[OoExpr],
        br: &str,
        out: &mut Vec<MachineCmd>,
    ) -> Result<()> {
        let em = self.tr.cat.member(&self.class, method)?;
        let MemberSpec::Method { params } = &em.spec else {
            return Err(Error::UnknownMethod(method.to_string()));
        };
        if args.len() != params.len() {
            return Err(Error::ArgumentMismatch {
                trans: method.to_string(),
                detail: format!("{} arguments, {} parameters", args.len(), params.len()),
            });
        }
        let (env, converted) = self.env_for(br, args, out)?;
        let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for (e, (p, _)) in converted.into_iter().zip(params.iter()) {
            items.push((e, AttrName::from(p.as_str())));
        }
        let par_name = format!("callpar{}", self.branch_count);
        self.branch_count += 1;
        out.push(MachineCmd::DeclareLocal {
            name: par_name.clone(),
            schema: None,
            init: Some(AlgebraExpr::Project {
                input: Box::new(env),
                items,
            }),
        });
        out.push(MachineCmd::ExecTrans {
            name: binding_trans_name(em.root(), method),
            args: vec![
                ExecArg::Rvalue(AlgebraExpr::relvar(br.to_string())),
                ExecArg::Rvalue(AlgebraExpr::relvar(par_name)),
            ],
        });
        Ok(())
    }
}

fn assign_target_member(target: &PathExpr) -> Result<String> {
    if target.has_selection() {
        return Err(Error::Unsupported(
            "assignment targets take no selections".into(),
        ));
    }
    match (&target.head, target.segments.len()) {
        (PathHead::Name(n), 0) => Ok(n.clone()),
        (PathHead::Implicit | PathHead::This, 1) => Ok(target.segments[0].name.clone()),
        _ => Err(Error::Unsupported(format!(
            "`{target}` is not an assignable component"
        ))),
    }
}

fn collect_locals(stmts: &[Stmt], out: &mut Vec<(String, Domain)>) -> Result<()> {
    for s in stmts {
        match s {
            Stmt::Declare { name, ty, .. } => {
                if out.iter().any(|(n, _)| n == name) {
                    return Err(Error::DuplicateName(name.clone()));
                }
                out.push((name.clone(), ty.storage_domain()));
            }
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                collect_locals(then_body, out)?;
                collect_locals(else_body, out)?;
            }
            Stmt::While { body, .. } => collect_locals(body, out)?,
            _ => {}
        }
    }
    Ok(())
}

//! Command-level translations: data access against O-views, object
//! creation, and group method execution.

use super::*;

impl<'a> Translator<'a> {
    /// `EXEC group.M(args)`: compute the group reference, build the
    /// parameter relation, and dispatch through the binding transaction of
    /// the method's declaring root.
    pub fn translate_method_exec(
        &self,
        group: &PathExpr,
        method: &str,
        args: &[OoExpr],
    ) -> Result<Vec<MachineCmd>> {
        let (target, oids) = self.resolve_target(group)?;
        let PathTarget::Objects(class) = target else {
            return Err(Error::UnknownMethod(format!(
                "`{group}` does not denote a set of objects"
            )));
        };
        let em = self.cat.member(&class, method)?;
        let MemberSpec::Method { params } = &em.spec else {
            return Err(Error::UnknownMethod(method.to_string()));
        };
        if self.cat.implementations(em.root(), method)?.is_empty() {
            return Err(Error::UnknownMethod(format!("{method} (not implemented)")));
        }
        if args.len() != params.len() {
            return Err(Error::ArgumentMismatch {
                trans: method.to_string(),
                detail: format!("{} arguments, {} parameters", args.len(), params.len()),
            });
        }
        // arguments are group constants
        let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for (a, (p, t)) in args.iter().zip(params.iter()) {
            let e = oo_const_to_scalar(a)?;
            let e = match t.storage_domain() {
                d @ (Domain::Float | Domain::DateTime) => ScalarExpr::Cast(Box::new(e), d),
                _ => e,
            };
            items.push((e, AttrName::from(p.as_str())));
        }
        let par = project(oids.clone(), items);
        Ok(vec![MachineCmd::ExecTrans {
            name: binding_trans_name(em.root(), method),
            args: vec![ExecArg::Rvalue(oids), ExecArg::Rvalue(par)],
        }])
    }

    /// Every selected object must fall in the scope of a STORED
    /// implementation for the member to be writable. Empty target sets are
    /// never an error.
    pub fn check_member_writable(
        &self,
        class: &str,
        member: &str,
        targets: &AlgebraExpr,
    ) -> Result<()> {
        let total = self.db.get(targets)?.len();
        if total == 0 {
            return Ok(());
        }
        let impls = self.cat.implementations(class, member)?;
        let mut stored_scopes: Option<AlgebraExpr> = None;
        for (k, body) in &impls {
            let scope = self.scope_expr(k, member);
            if matches!(body, ImplBody::Stored) {
                stored_scopes = Some(match stored_scopes {
                    None => scope,
                    Some(s) => AlgebraExpr::union(s, scope),
                });
            } else {
                let hit = self
                    .db
                    .get(&AlgebraExpr::intersect(scope, targets.clone()))?;
                if !hit.is_empty() {
                    return Err(Error::NotUpdatableCalculated {
                        member: member.to_string(),
                    });
                }
            }
        }
        let covered = match stored_scopes {
            None => 0,
            Some(s) => self
                .db
                .get(&AlgebraExpr::intersect(s, targets.clone()))?
                .len(),
        };
        if covered != total {
            return Err(Error::NotUpdatableCalculated {
                member: member.to_string(),
            });
        }
        Ok(())
    }

    /// `INSERT INTO path.C (attrs) VALUES rows`: one tuple per selected
    /// object per row, into the stored relation of the component.
    pub fn translate_insert(
        &self,
        target: &PathExpr,
        attrs: &[String],
        rows: &[Vec<OoExpr>],
    ) -> Result<Vec<MachineCmd>> {
        let (t, oids) = self.resolve_target(target)?;
        let PathTarget::ComplexRows { class, root, comp } = t else {
            return Err(Error::Unsupported(
                "INSERT INTO targets a complex component".into(),
            ));
        };
        let em = self.cat.member(&class, &comp)?;
        let MemberSpec::Complex {
            attrs: comp_attrs, ..
        } = &em.spec
        else {
            unreachable!("resolve_target said complex");
        };
        self.check_member_writable(&class, &comp, &oids)?;
        for a in attrs {
            if !comp_attrs.iter().any(|(n, _)| n == a) {
                return Err(Error::UnknownAttribute(format!("{a} in {class}.{comp}")));
            }
        }
        let real = real_complex_name(&root, &comp);
        let mut cmds = Vec::new();
        for row in rows {
            if row.len() != attrs.len() {
                return Err(Error::SchemaMismatch(format!(
                    "VALUES row has {} items, {} attributes listed",
                    row.len(),
                    attrs.len()
                )));
            }
            // (targets × literal row) reordered to the stored schema
            let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
            for (name, ty) in comp_attrs {
                let item = match attrs.iter().position(|a| a == name) {
                    Some(i) => {
                        let e = oo_const_to_scalar(&row[i])?;
                        match ty.storage_domain() {
                            d @ (Domain::Float | Domain::DateTime) => {
                                ScalarExpr::Cast(Box::new(e), d)
                            }
                            _ => e,
                        }
                    }
                    None => ScalarExpr::Cast(
                        Box::new(ScalarExpr::Lit(Value::Null)),
                        ty.storage_domain(),
                    ),
                };
                items.push((item, AttrName::from(name.as_str())));
            }
            cmds.push(MachineCmd::Insert {
                name: real.clone(),
                rvalue: project(oids.clone(), items),
            });
        }
        Ok(cmds)
    }

    /// `UPDATE path SET (.c := e, …)`: scalar component writes for every
    /// selected object, run through the group assignment machinery.
    pub fn translate_update(
        &self,
        target: &PathExpr,
        sets: &[(String, OoExpr)],
    ) -> Result<Vec<MachineCmd>> {
        let (t, oids) = self.resolve_target(target)?;
        let PathTarget::Objects(class) = t else {
            return Err(Error::Unsupported("UPDATE targets a set of objects".into()));
        };
        for (m, _) in sets {
            let em = self.cat.member(&class, m)?;
            if !em.spec.is_scalar() {
                return Err(Error::KindMismatch {
                    member: m.clone(),
                    detail: "UPDATE assigns scalar components".into(),
                });
            }
            self.check_member_writable(&class, m, &oids)?;
        }
        let mut cmds = vec![
            MachineCmd::DeclareLocal {
                name: "these".into(),
                schema: None,
                init: Some(oids),
            },
            MachineCmd::DeclareLocal {
                name: "R_par".into(),
                schema: None,
                init: Some(project(
                    AlgebraExpr::relvar("these"),
                    vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
                )),
            },
        ];
        let stmts: Vec<Stmt> = sets
            .iter()
            .map(|(m, e)| Stmt::Assign {
                target: PathExpr {
                    head: PathHead::Implicit,
                    head_selection: None,
                    segments: vec![super::super::ast::PathSegment {
                        name: m.clone(),
                        selection: None,
                    }],
                },
                value: e.clone(),
            })
            .collect();
        let builder = ProcBuilder::new(self, &class, &[])?.without_write_checks();
        cmds.extend(builder.build_transaction_body(&stmts)?);
        Ok(vec![MachineCmd::ExecBlock { body: cmds }])
    }

    /// `DELETE FROM path`: component rows of the selected objects, or the
    /// objects themselves with every stored trace.
    pub fn translate_delete(&self, target: &PathExpr) -> Result<Vec<MachineCmd>> {
        let (t, oids) = self.resolve_target(target)?;
        let keep_not_in = |real: String, oids: AlgebraExpr| MachineCmd::Assign {
            name: real.clone(),
            rvalue: AlgebraExpr::join_common(
                AlgebraExpr::relvar(real.clone()),
                AlgebraExpr::difference(
                    project(
                        AlgebraExpr::relvar(real),
                        vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))],
                    ),
                    oids,
                ),
                "OID",
            ),
        };
        match t {
            PathTarget::ComplexRows { class, root, comp } => {
                self.check_member_writable(&class, &comp, &oids)?;
                Ok(vec![keep_not_in(real_complex_name(&root, &comp), oids)])
            }
            PathTarget::Objects(_) => {
                let mut cmds = Vec::new();
                for class in self.cat.classes() {
                    for c in &class.own_components {
                        if matches!(c.kind, ComponentKindDecl::Complex { .. }) {
                            cmds.push(keep_not_in(
                                real_complex_name(&class.name, &c.name),
                                oids.clone(),
                            ));
                        }
                    }
                }
                for class in self.cat.classes() {
                    cmds.push(keep_not_in(real_scalar_name(&class.name), oids.clone()));
                }
                Ok(vec![MachineCmd::ExecBlock { body: cmds }])
            }
            PathTarget::Relvar(_) => Err(Error::Unsupported(
                "DELETE FROM takes an object path; use the machine DELETE for relvars".into(),
            )),
        }
    }

    /// `NEW D WITH SET …`: mint an OID, insert it into the stored scalar
    /// relations of the class and every ancestor, then run the constructor
    /// on the singleton group. Nested NEW expressions are created first and
    /// their references substituted.
    pub fn translate_new(
        &self,
        cmd: &NewCmd,
        alloc: &mut dyn FnMut() -> Oid,
    ) -> Result<(Vec<MachineCmd>, Oid)> {
        if !self.cat.has_class(&cmd.class) {
            return Err(Error::UnknownClass(cmd.class.clone()));
        }
        if let Some(member) = self.cat.missing_implementation(&cmd.class)? {
            return Err(Error::NotFullyImplemented {
                class: cmd.class.clone(),
                member,
            });
        }
        let mut cmds = Vec::new();
        // inner NEW expressions run first; the new references substitute in
        let mut sets = Vec::with_capacity(cmd.sets.len());
        for s in &cmd.sets {
            let Stmt::Assign { target, value } = s else {
                return Err(Error::Unsupported(
                    "constructors are WITH SET assignment lists".into(),
                ));
            };
            let value = self.hoist_new(value, &mut cmds, alloc)?;
            sets.push(Stmt::Assign {
                target: target.clone(),
                value,
            });
        }
        let oid = alloc();
        let mut classes = vec![cmd.class.clone()];
        classes.extend(self.cat.ancestors(&cmd.class));
        for c in &classes {
            cmds.push(MachineCmd::InsertValues {
                name: real_scalar_name(c),
                attrs: Some(vec![AttrName::from("OID")]),
                rows: vec![vec![ScalarExpr::Lit(Value::Oid(oid))]],
            });
        }
        if !sets.is_empty() {
            let singleton = AlgebraExpr::Values {
                schema: Schema::of(&[("OID", Domain::Oid)]),
                rows: vec![vec![ScalarExpr::Lit(Value::Oid(oid))]],
            };
            cmds.push(MachineCmd::DeclareLocal {
                name: "these".into(),
                schema: None,
                init: Some(singleton),
            });
            cmds.push(MachineCmd::DeclareLocal {
                name: "R_par".into(),
                schema: None,
                init: Some(AlgebraExpr::relvar("these")),
            });
            let builder = ProcBuilder::new(self, &cmd.class, &[])?;
            cmds.extend(builder.build_transaction_body(&sets)?);
        }
        Ok((cmds, oid))
    }

    fn hoist_new(
        &self,
        e: &OoExpr,
        cmds: &mut Vec<MachineCmd>,
        alloc: &mut dyn FnMut() -> Oid,
    ) -> Result<OoExpr> {
        Ok(match e {
            OoExpr::New(inner) => {
                let (inner_cmds, oid) = self.translate_new(inner, alloc)?;
                cmds.extend(inner_cmds);
                OoExpr::Lit(Value::Oid(oid))
            }
            OoExpr::Neg(a) => OoExpr::Neg(Box::new(self.hoist_new(a, cmds, alloc)?)),
            OoExpr::Not(a) => OoExpr::Not(Box::new(self.hoist_new(a, cmds, alloc)?)),
            OoExpr::Bin(op, a, b) => OoExpr::Bin(
                *op,
                Box::new(self.hoist_new(a, cmds, alloc)?),
                Box::new(self.hoist_new(b, cmds, alloc)?),
            ),
            OoExpr::Like(a, p) => {
                OoExpr::Like(Box::new(self.hoist_new(a, cmds, alloc)?), p.clone())
            }
            OoExpr::IsNull(a, n) => OoExpr::IsNull(Box::new(self.hoist_new(a, cmds, alloc)?), *n),
            other => other.clone(),
        })
    }
}

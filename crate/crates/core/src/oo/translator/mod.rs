//! Compilation of object commands into machine commands.
//!
//! Everything an object command touches becomes relational algebra over the
//! stored class relations:
//!
//! ```text
//!   CLASS D (…)            →  CREATE real_R_D, real_R_D.C…  (stored)
//!                             CREATE R_D, R_D.C…            (bound, virtual)
//!   ALTER D REALIZE …      →  re-CREATE of every bound relation + binding
//!                             transactions D.M'(these, R_par)
//!   SELECT / INSERT / …    →  O-view expressions over the class relations
//!   NEW D …                →  inserts of a fresh OID + constructor run
//!   EXEC group.M(…)        →  EXEC D.M'(group, R_par)
//! ```
//!
//! Generated definitions reference only the stored `real_R_…` relvars; the
//! bound value of a component is inlined wherever it is read. A calculated
//! implementation that transitively reads its own member is therefore
//! caught during construction and reported as a cyclic binding.

mod command;
mod proc;
mod select;

pub use proc::ProcBuilder;

use std::cell::RefCell;
use std::collections::BTreeSet;

use crate::algebra::{AggFunc, AggSpec, AlgebraExpr};
use crate::error::{Error, Result};
use crate::machine::{
    Database, ExecArg, ForeignKey, MachineCmd, ParamKind, TransParam, TransactionDef,
};
use crate::relation::{AttrName, Attribute, Schema};
use crate::scalar::ScalarExpr;
use crate::value::{Domain, Oid, Value};

use super::ast::{
    ComponentKindDecl, NewCmd, OoAggFunc, OoExpr, PathExpr, PathHead, SelectAst, Selection, Stmt,
    TypeName,
};
use super::catalog::{Catalog, ImplBody, MemberSpec};

pub fn real_scalar_name(class: &str) -> String {
    format!("real_R_{class}")
}

pub fn real_complex_name(class: &str, comp: &str) -> String {
    format!("real_R_{class}.{comp}")
}

pub fn bound_scalar_name(class: &str) -> String {
    format!("R_{class}")
}

pub fn bound_complex_name(class: &str, comp: &str) -> String {
    format!("R_{class}.{comp}")
}

pub fn binding_trans_name(class: &str, method: &str) -> String {
    format!("{class}.{method}'")
}

pub fn impl_trans_name(class: &str, method: &str) -> String {
    format!("{class}.{method}'p")
}

/// Where a resolved path lands.
#[derive(Debug, Clone, PartialEq)]
pub enum PathTarget {
    /// A set of objects of this class (class head, reference chain, or
    /// selection).
    Objects(String),
    /// Rows of one complex component of the selected objects.
    ComplexRows {
        class: String,
        root: String,
        comp: String,
    },
    /// A plain machine relvar (classes and relations co-use).
    Relvar(String),
}

/// A resolved post-path: dotted text (the output attribute name) plus the
/// final scalar domain.
#[derive(Debug, Clone)]
pub(super) struct Post {
    segs: Vec<String>,
    text: String,
    domain: Domain,
}

pub struct Translator<'a> {
    pub cat: &'a Catalog,
    pub db: &'a Database,
    /// (class, member) pairs currently being inlined; reentry is a cycle.
    building: RefCell<Vec<(String, String)>>,
}

/// Extra per-object columns available to an implementation body: procedure
/// parameters and locals. `expr` yields (OID, value) with attribute `attr`.
#[derive(Default, Clone)]
pub struct ExtraCols {
    pub entries: Vec<ExtraCol>,
}

#[derive(Clone)]
pub struct ExtraCol {
    pub source: String,
    pub attr: String,
    pub expr: AlgebraExpr,
    pub domain: Domain,
}

/// An implementation body compiled to algebra: schema is OID plus `cols`.
pub struct ImplValue {
    pub expr: AlgebraExpr,
    pub cols: Vec<(AttrName, Domain)>,
}

pub(super) fn project(input: AlgebraExpr, items: Vec<(ScalarExpr, AttrName)>) -> AlgebraExpr {
    AlgebraExpr::Project {
        input: Box::new(input),
        items,
    }
}

fn attr_items(names: &[&str]) -> Vec<(ScalarExpr, AttrName)> {
    names
        .iter()
        .map(|n| (ScalarExpr::attr(*n), AttrName::from(*n)))
        .collect()
}

impl<'a> Translator<'a> {
    pub fn new(cat: &'a Catalog, db: &'a Database) -> Translator<'a> {
        Translator {
            cat,
            db,
            building: RefCell::new(Vec::new()),
        }
    }

    /// All member OIDs of a class: its stored scalar relation holds one row
    /// per object, including objects of descendant classes.
    pub fn members_expr(&self, class: &str) -> AlgebraExpr {
        project(
            AlgebraExpr::relvar(real_scalar_name(class)),
            attr_items(&["OID"]),
        )
    }

    /// Objects bound to the implementation registered on `class` for
    /// `member`: its members minus the members of every overriding
    /// descendant.
    pub fn scope_expr(&self, class: &str, member: &str) -> AlgebraExpr {
        let mut expr = self.members_expr(class);
        for d in self.cat.overriding_descendants(class, member) {
            expr = AlgebraExpr::difference(expr, self.members_expr(&d));
        }
        expr
    }

    fn storage_domain(&self, t: &TypeName) -> Domain {
        t.storage_domain()
    }

    // -----------------------------------------------------------------
    // class creation
    // -----------------------------------------------------------------

    /// Machine commands realizing a freshly defined class: stored relations
    /// for the class and its complex components, plus initial bound
    /// relations. Binding rebuild follows separately.
    pub fn translate_class_create(&self, class: &str) -> Result<Vec<MachineCmd>> {
        let def = self
            .cat
            .class(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        let mut cmds = Vec::new();

        let mut scalar_attrs = vec![Attribute {
            name: "OID".into(),
            domain: Domain::Oid,
        }];
        let mut scalar_fkeys: Vec<ForeignKey> = Vec::new();
        for c in &def.own_components {
            match &c.kind {
                ComponentKindDecl::Scalar(t) => {
                    scalar_attrs.push(Attribute {
                        name: AttrName::from(c.name.as_str()),
                        domain: self.storage_domain(t),
                    });
                    if let TypeName::Class(target) = t {
                        scalar_fkeys.push(ForeignKey {
                            attrs: vec![c.name.as_str().into()],
                            target: real_scalar_name(target),
                            target_attrs: vec!["OID".into()],
                        });
                    }
                }
                ComponentKindDecl::Complex { .. } => {}
            }
        }
        let mut keys: Vec<Vec<AttrName>> = vec![vec!["OID".into()]];
        for key in &def.keys {
            keys.push(key.iter().map(|k| AttrName::from(k.as_str())).collect());
        }
        // class-level reference constraints on scalar components
        for rc in &def.refconstraints {
            if rc.component.is_none() {
                scalar_fkeys.push(ForeignKey {
                    attrs: rc
                        .attrs
                        .iter()
                        .map(|a| AttrName::from(a.as_str()))
                        .collect(),
                    target: bound_scalar_name(&rc.target_class),
                    target_attrs: rc
                        .target_attrs
                        .iter()
                        .map(|a| AttrName::from(a.as_str()))
                        .collect(),
                });
            }
        }
        let scalar_schema = Schema::new(scalar_attrs)?;
        cmds.push(MachineCmd::CreateReal {
            name: real_scalar_name(class),
            schema: scalar_schema.clone(),
            keys: keys.clone(),
            fkeys: scalar_fkeys.clone(),
        });
        cmds.push(MachineCmd::CreateVirtual {
            name: bound_scalar_name(class),
            declared_schema: Some(scalar_schema.clone()),
            def: crate::machine::VirtualDef::Expr(AlgebraExpr::relvar(real_scalar_name(class))),
            keys,
            fkeys: scalar_fkeys,
        });

        for c in &def.own_components {
            let ComponentKindDecl::Complex { attrs, keys: ckeys } = &c.kind else {
                continue;
            };
            let mut rel_attrs = vec![Attribute {
                name: "OID".into(),
                domain: Domain::Oid,
            }];
            let mut fkeys: Vec<ForeignKey> = Vec::new();
            for (a, t) in attrs {
                rel_attrs.push(Attribute {
                    name: AttrName::from(a.as_str()),
                    domain: self.storage_domain(t),
                });
                if let TypeName::Class(target) = t {
                    fkeys.push(ForeignKey {
                        attrs: vec![a.as_str().into()],
                        target: real_scalar_name(target),
                        target_attrs: vec!["OID".into()],
                    });
                }
            }
            let mut key: Vec<AttrName> = vec!["OID".into()];
            key.extend(ckeys.iter().map(|k| AttrName::from(k.as_str())));
            for rc in &def.refconstraints {
                if rc.component.as_deref() == Some(c.name.as_str()) {
                    fkeys.push(ForeignKey {
                        attrs: rc
                            .attrs
                            .iter()
                            .map(|a| AttrName::from(a.as_str()))
                            .collect(),
                        target: bound_scalar_name(&rc.target_class),
                        target_attrs: rc
                            .target_attrs
                            .iter()
                            .map(|a| AttrName::from(a.as_str()))
                            .collect(),
                    });
                }
            }
            let schema = Schema::new(rel_attrs)?;
            cmds.push(MachineCmd::CreateReal {
                name: real_complex_name(class, &c.name),
                schema: schema.clone(),
                keys: vec![key.clone()],
                fkeys: fkeys.clone(),
            });
            cmds.push(MachineCmd::CreateVirtual {
                name: bound_complex_name(class, &c.name),
                declared_schema: Some(schema),
                def: crate::machine::VirtualDef::Expr(AlgebraExpr::relvar(real_complex_name(
                    class, &c.name,
                ))),
                keys: vec![key],
                fkeys,
            });
        }
        Ok(cmds)
    }

    // -----------------------------------------------------------------
    // bound columns and relations (implementation binding)
    // -----------------------------------------------------------------

    fn enter_member(&self, class: &str, member: &str) -> Result<()> {
        let mut b = self.building.borrow_mut();
        if b.iter().any(|(c, m)| c == class && m == member) {
            return Err(Error::CyclicBinding(format!("{class}.{member}")));
        }
        b.push((class.to_string(), member.to_string()));
        Ok(())
    }

    fn leave_member(&self) {
        self.building.borrow_mut().pop();
    }

    /// `[OID, member]` for every object of the declaring root `class`,
    /// fusing all implementations by scope. Objects covered by no
    /// implementation read NULL.
    pub fn scalar_col_expr(&self, root: &str, member: &str) -> Result<AlgebraExpr> {
        let em = self.cat.member(root, member)?;
        let MemberSpec::Scalar(ty) = &em.spec else {
            return Err(Error::KindMismatch {
                member: member.to_string(),
                detail: "expected a scalar component".into(),
            });
        };
        let declared = self.storage_domain(ty);
        self.enter_member(root, member)?;
        let result = (|| {
            let mut contributions: Vec<AlgebraExpr> = Vec::new();
            for (k, body) in self.cat.implementations(root, member)? {
                let scope = self.scope_expr(&k, member);
                let contrib = match &body {
                    ImplBody::Stored => AlgebraExpr::join_common(
                        project(
                            AlgebraExpr::relvar(real_scalar_name(em.root())),
                            attr_items(&["OID", member]),
                        ),
                        scope,
                        "OID",
                    ),
                    ImplBody::Calculated(sel) => {
                        let value = self.translate_impl_select(&k, sel, &ExtraCols::default())?;
                        self.conform_scalar(value, member, &declared, &k)?
                            .pipe_join_scope(scope)
                    }
                    ImplBody::CalcProc(stmts) => {
                        let value = self.translate_calc_proc(&k, stmts)?;
                        self.conform_scalar(value, member, &declared, &k)?
                            .pipe_join_scope(scope)
                    }
                    ImplBody::Method { .. } => {
                        return Err(Error::KindMismatch {
                            member: member.to_string(),
                            detail: "a method cannot implement a component".into(),
                        })
                    }
                };
                contributions.push(contrib);
            }
            let col = match contributions.into_iter().reduce(AlgebraExpr::union) {
                Some(e) => e,
                None => {
                    // no implementation: an empty column of the right shape
                    let m = self.members_expr(em.root());
                    AlgebraExpr::join_common(
                        project(
                            AlgebraExpr::relvar(real_scalar_name(em.root())),
                            attr_items(&["OID", member]),
                        ),
                        AlgebraExpr::difference(m.clone(), m),
                        "OID",
                    )
                }
            };
            Ok(col)
        })();
        self.leave_member();
        result
    }

    fn conform_scalar(
        &self,
        value: ImplValue,
        member: &str,
        declared: &Domain,
        class: &str,
    ) -> Result<ConformedScalar> {
        if value.cols.len() != 1 {
            return Err(Error::KindMismatch {
                member: member.to_string(),
                detail: format!(
                    "scalar implementation in {class} yields {} columns",
                    value.cols.len()
                ),
            });
        }
        let (name, domain) = &value.cols[0];
        let item = if domain.storage_eq(declared) {
            ScalarExpr::attr(name.as_str())
        } else if *declared == Domain::Float && *domain == Domain::Integer {
            ScalarExpr::Cast(Box::new(ScalarExpr::attr(name.as_str())), Domain::Float)
        } else {
            return Err(Error::KindMismatch {
                member: member.to_string(),
                detail: format!("implementation in {class} yields {domain}, declared {declared}"),
            });
        };
        Ok(ConformedScalar {
            expr: project(
                value.expr,
                vec![
                    (ScalarExpr::attr("OID"), "OID".into()),
                    (item, AttrName::from(member)),
                ],
            ),
        })
    }

    /// The bound relation of a complex component: the union of all
    /// implementations, each restricted to its scope.
    pub fn complex_rel_expr(&self, root: &str, comp: &str) -> Result<AlgebraExpr> {
        let em = self.cat.member(root, comp)?;
        let MemberSpec::Complex { attrs, .. } = &em.spec else {
            return Err(Error::KindMismatch {
                member: comp.to_string(),
                detail: "expected a complex component".into(),
            });
        };
        self.enter_member(root, comp)?;
        let result = (|| {
            let mut contributions: Vec<AlgebraExpr> = Vec::new();
            for (k, body) in self.cat.implementations(root, comp)? {
                let scope = self.scope_expr(&k, comp);
                let contrib = match &body {
                    ImplBody::Stored => AlgebraExpr::join_common(
                        AlgebraExpr::relvar(real_complex_name(em.root(), comp)),
                        scope,
                        "OID",
                    ),
                    ImplBody::Calculated(sel) => {
                        let value = self.translate_impl_select(&k, sel, &ExtraCols::default())?;
                        let conformed = self.conform_complex(value, comp, attrs, &k)?;
                        AlgebraExpr::join_common(conformed, scope, "OID")
                    }
                    _ => {
                        return Err(Error::KindMismatch {
                            member: comp.to_string(),
                            detail: "complex components take STORED or SELECT bodies".into(),
                        })
                    }
                };
                contributions.push(contrib);
            }
            let rel = match contributions.into_iter().reduce(AlgebraExpr::union) {
                Some(e) => e,
                None => {
                    let m = self.members_expr(em.root());
                    AlgebraExpr::join_common(
                        AlgebraExpr::relvar(real_complex_name(em.root(), comp)),
                        AlgebraExpr::difference(m.clone(), m),
                        "OID",
                    )
                }
            };
            Ok(rel)
        })();
        self.leave_member();
        result
    }

    /// Positionally conform an implementation result to the component
    /// schema: same arity, coercible domains, attributes renamed.
    pub(super) fn conform_complex(
        &self,
        value: ImplValue,
        comp: &str,
        attrs: &[(String, TypeName)],
        class: &str,
    ) -> Result<AlgebraExpr> {
        if value.cols.len() != attrs.len() {
            return Err(Error::KindMismatch {
                member: comp.to_string(),
                detail: format!(
                    "implementation in {class} yields {} columns, component has {}",
                    value.cols.len(),
                    attrs.len()
                ),
            });
        }
        let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for ((have_name, have_domain), (want_name, want_ty)) in value.cols.iter().zip(attrs.iter())
        {
            let want = self.storage_domain(want_ty);
            let item = if have_domain.storage_eq(&want) {
                ScalarExpr::attr(have_name.as_str())
            } else if want == Domain::Float && *have_domain == Domain::Integer {
                ScalarExpr::Cast(
                    Box::new(ScalarExpr::attr(have_name.as_str())),
                    Domain::Float,
                )
            } else {
                return Err(Error::KindMismatch {
                    member: comp.to_string(),
                    detail: format!("column {want_name} yields {have_domain}, declared {want}"),
                });
            };
            items.push((item, AttrName::from(want_name.as_str())));
        }
        Ok(project(value.expr, items))
    }

    /// Rebuild every generated definition: bound class relations and method
    /// binding transactions. Run after any class DDL.
    pub fn rebuild_bindings(&self) -> Result<Vec<MachineCmd>> {
        let mut cmds = Vec::new();
        // bound scalar relations
        for class in self.cat.classes() {
            let name = &class.name;
            let mut spine = self.members_expr(name);
            let mut attrs = vec!["OID".to_string()];
            for c in &class.own_components {
                if let ComponentKindDecl::Scalar(_) = &c.kind {
                    let col = self.scalar_col_expr(name, &c.name).map_err(rewrap_cycle)?;
                    spine =
                        AlgebraExpr::left_join_on(spine, col, vec![("OID".into(), "OID".into())]);
                    attrs.push(c.name.clone());
                }
            }
            let expr = project(
                spine,
                attrs
                    .iter()
                    .map(|a| (ScalarExpr::attr(a.as_str()), AttrName::from(a.as_str())))
                    .collect(),
            );
            let old = self
                .db
                .relvar(&bound_scalar_name(name))
                .ok_or_else(|| Error::UnknownRelvar(bound_scalar_name(name)))?;
            cmds.push(MachineCmd::CreateVirtual {
                name: bound_scalar_name(name),
                declared_schema: Some(old.schema.clone()),
                def: crate::machine::VirtualDef::Expr(expr),
                keys: old.keys.clone(),
                fkeys: old.fkeys.clone(),
            });
            for c in &class.own_components {
                if let ComponentKindDecl::Complex { .. } = &c.kind {
                    let expr = self.complex_rel_expr(name, &c.name).map_err(rewrap_cycle)?;
                    let old = self
                        .db
                        .relvar(&bound_complex_name(name, &c.name))
                        .ok_or_else(|| Error::UnknownRelvar(bound_complex_name(name, &c.name)))?;
                    cmds.push(MachineCmd::CreateVirtual {
                        name: bound_complex_name(name, &c.name),
                        declared_schema: Some(old.schema.clone()),
                        def: crate::machine::VirtualDef::Expr(expr),
                        keys: old.keys.clone(),
                        fkeys: old.fkeys.clone(),
                    });
                }
            }
        }
        // method implementations and bindings
        for class in self.cat.classes() {
            for (member, body) in &class.impls {
                if let ImplBody::Method { params, body } = body {
                    let def = self.translate_procedure(&class.name, member, params, body)?;
                    cmds.push(MachineCmd::DefTrans(def));
                }
            }
        }
        let mut bound_methods: BTreeSet<(String, String)> = BTreeSet::new();
        for class in self.cat.classes() {
            for m in self.cat.effective_members(&class.name)? {
                let MemberSpec::Method { params: declared } = &m.spec else {
                    continue;
                };
                let root = m.root().to_string();
                if !bound_methods.insert((root.clone(), m.name.clone())) {
                    continue;
                }
                let impls = self.cat.implementations(&root, &m.name)?;
                if impls.is_empty() {
                    continue;
                }
                cmds.push(MachineCmd::DefTrans(
                    self.method_binding(&root, &m.name, declared, &impls)?,
                ));
            }
        }
        Ok(cmds)
    }

    fn par_schema(&self, params: &[(String, TypeName)]) -> Result<Schema> {
        let mut attrs = vec![Attribute {
            name: "OID".into(),
            domain: Domain::Oid,
        }];
        for (p, t) in params {
            attrs.push(Attribute {
                name: AttrName::from(p.as_str()),
                domain: self.storage_domain(t),
            });
        }
        Schema::new(attrs)
    }

    /// The dispatch transaction `D.M'(these, R_par)`: each implementation
    /// runs on `these INTERSECT scope`.
    fn method_binding(
        &self,
        root: &str,
        method: &str,
        declared: &[(String, TypeName)],
        impls: &[(String, ImplBody)],
    ) -> Result<TransactionDef> {
        let par_schema = self.par_schema(declared)?;
        let mut body = Vec::new();
        for (i, (k, impl_body)) in impls.iter().enumerate() {
            let ImplBody::Method { params, .. } = impl_body else {
                return Err(Error::KindMismatch {
                    member: method.to_string(),
                    detail: "method binding over a non-procedure".into(),
                });
            };
            let these_k = format!("these{i}");
            body.push(MachineCmd::DeclareLocal {
                name: these_k.clone(),
                schema: None,
                init: Some(AlgebraExpr::intersect(
                    AlgebraExpr::relvar("these"),
                    self.scope_expr(k, method),
                )),
            });
            // conform parameter names to the implementation's signature
            let mut par = AlgebraExpr::join_common(
                AlgebraExpr::relvar("R_par"),
                AlgebraExpr::relvar(these_k.clone()),
                "OID",
            );
            let renames: Vec<(AttrName, AttrName)> = declared
                .iter()
                .zip(params.iter())
                .filter(|((a, _), (b, _))| a != b)
                .map(|((a, _), (b, _))| (AttrName::from(a.as_str()), AttrName::from(b.as_str())))
                .collect();
            if !renames.is_empty() {
                par = AlgebraExpr::rename(par, renames);
            }
            let par_k = format!("R_par{i}");
            body.push(MachineCmd::DeclareLocal {
                name: par_k.clone(),
                schema: None,
                init: Some(par),
            });
            body.push(MachineCmd::ExecTrans {
                name: impl_trans_name(k, method),
                args: vec![
                    ExecArg::Rvalue(AlgebraExpr::relvar(these_k)),
                    ExecArg::Rvalue(AlgebraExpr::relvar(par_k)),
                ],
            });
        }
        Ok(TransactionDef {
            name: binding_trans_name(root, method),
            params: vec![
                TransParam {
                    name: "these".into(),
                    kind: ParamKind::Relation(Schema::of(&[("OID", Domain::Oid)])),
                },
                TransParam {
                    name: "R_par".into(),
                    kind: ParamKind::Relation(par_schema),
                },
            ],
            body,
            generated: true,
            seq: 0,
        })
    }

    /// Translation p' of one method implementation.
    pub fn translate_procedure(
        &self,
        class: &str,
        method: &str,
        params: &[(String, TypeName)],
        body: &[Stmt],
    ) -> Result<TransactionDef> {
        let par_schema = self.par_schema(params)?;
        let builder = ProcBuilder::new(self, class, params)?;
        let cmds = builder.build_transaction_body(body)?;
        Ok(TransactionDef {
            name: impl_trans_name(class, method),
            params: vec![
                TransParam {
                    name: "these".into(),
                    kind: ParamKind::Relation(Schema::of(&[("OID", Domain::Oid)])),
                },
                TransParam {
                    name: "R_par".into(),
                    kind: ParamKind::Relation(par_schema),
                },
            ],
            body: cmds,
            generated: true,
            seq: 0,
        })
    }

    // -----------------------------------------------------------------
    // name paths, group references, object selection
    // -----------------------------------------------------------------

    /// Resolve the head of a command path: a class or a machine relvar.
    fn head_class<'p>(&self, path: &'p PathExpr) -> Result<(String, Option<&'p Selection>)> {
        match &path.head {
            PathHead::Name(n) if self.cat.has_class(n) => {
                Ok((n.clone(), path.head_selection.as_ref()))
            }
            PathHead::Name(n) => Err(Error::UnknownName(n.clone())),
            PathHead::This | PathHead::Implicit => Err(Error::UnknownName(
                "path head must name a class here".into(),
            )),
        }
    }

    /// Where a command path lands, plus the expression computing the OID
    /// set of the objects it selects.
    pub fn resolve_target(&self, path: &PathExpr) -> Result<(PathTarget, AlgebraExpr)> {
        if let PathHead::Name(n) = &path.head {
            if !self.cat.has_class(n)
                && self.db.relvar(n).is_some()
                && path.segments.is_empty()
                && path.head_selection.is_none()
            {
                return Ok((
                    PathTarget::Relvar(n.clone()),
                    AlgebraExpr::relvar(n.clone()),
                ));
            }
        }
        let (mut class, head_sel) = self.head_class(path)?;
        let mut oids = self.members_expr(&class);
        if let Some(sel) = head_sel {
            oids = AlgebraExpr::intersect(oids, self.selection_oids(&class, sel)?);
        }
        let mut idx = 0;
        while idx < path.segments.len() {
            let seg = &path.segments[idx];
            let em = self.cat.member(&class, &seg.name)?;
            match &em.spec {
                MemberSpec::Scalar(TypeName::Class(target)) => {
                    // rule 4: project the reference, rename to OID
                    let col = self.scalar_col_expr(em.root(), &seg.name)?;
                    let joined = AlgebraExpr::join_common(oids, col, "OID");
                    let projected = project(
                        AlgebraExpr::select(
                            joined,
                            ScalarExpr::IsNull(Box::new(ScalarExpr::attr(seg.name.as_str())), true),
                        ),
                        vec![(ScalarExpr::attr(seg.name.as_str()), AttrName::from("OID"))],
                    );
                    oids = projected;
                    class = target.clone();
                    if let Some(sel) = &seg.selection {
                        oids = AlgebraExpr::intersect(oids, self.selection_oids(&class, sel)?);
                    }
                    idx += 1;
                }
                MemberSpec::Scalar(_) => return Err(Error::IllegalContinuation(seg.name.clone())),
                MemberSpec::Method { .. } => {
                    return Err(Error::KindMismatch {
                        member: seg.name.clone(),
                        detail: "methods are not data paths".into(),
                    })
                }
                MemberSpec::Complex { attrs, .. } => {
                    if seg.selection.is_some() {
                        return Err(Error::Unsupported(
                            "selections attach to class or reference names".into(),
                        ));
                    }
                    if idx + 1 == path.segments.len() {
                        return Ok((
                            PathTarget::ComplexRows {
                                class: class.clone(),
                                root: em.root().to_string(),
                                comp: seg.name.clone(),
                            },
                            oids,
                        ));
                    }
                    // continue through a reference attribute of the component
                    let next = &path.segments[idx + 1];
                    let Some((_, TypeName::Class(target))) =
                        attrs.iter().find(|(a, _)| a == &next.name)
                    else {
                        return Err(Error::UnknownName(format!("{}.{}", seg.name, next.name)));
                    };
                    let rows = AlgebraExpr::join_common(
                        self.complex_rel_expr(em.root(), &seg.name)?,
                        oids,
                        "OID",
                    );
                    oids = project(
                        AlgebraExpr::select(
                            rows,
                            ScalarExpr::IsNull(
                                Box::new(ScalarExpr::attr(next.name.as_str())),
                                true,
                            ),
                        ),
                        vec![(ScalarExpr::attr(next.name.as_str()), AttrName::from("OID"))],
                    );
                    class = target.clone();
                    if let Some(sel) = &next.selection {
                        oids = AlgebraExpr::intersect(oids, self.selection_oids(&class, sel)?);
                    }
                    idx += 2;
                }
            }
        }
        Ok((PathTarget::Objects(class), oids))
    }

    /// A group reference: the unary OID relation a path denotes.
    pub fn eval_group_reference(&self, path: &PathExpr) -> Result<AlgebraExpr> {
        let (target, oids) = self.resolve_target(path)?;
        match target {
            PathTarget::Objects(_) => Ok(oids),
            PathTarget::ComplexRows { .. } => Err(Error::NonTerminalProjection(
                "a complex component is not a group reference".into(),
            )),
            PathTarget::Relvar(_) => Err(Error::UnknownName(
                "a relvar is not a group reference".into(),
            )),
        }
    }

    /// Rule 5: each comma condition computes an OID set through an implicit
    /// O-view; the comma intersects them.
    pub fn selection_oids(&self, class: &str, sel: &Selection) -> Result<AlgebraExpr> {
        let mut sets: Vec<AlgebraExpr> = Vec::new();
        for cond in &sel.conditions {
            let mut posts: Vec<Vec<String>> = Vec::new();
            collect_condition_posts(cond, &mut posts)?;
            for p in &posts {
                let r = self.resolve_post(class, p)?;
                if r.domain_opt().is_none() {
                    return Err(Error::NonScalarInCondition(p.join(".")));
                }
            }
            let posts: Vec<Post> = posts
                .iter()
                .map(|p| self.resolve_post(class, p).map(|r| r.into_post(p)))
                .collect::<Result<Vec<_>>>()?;
            let view = self.class_view(class, None, &posts)?;
            let pred = oo_to_scalar(cond, &mut |path| {
                let segs = condition_path_segs(path)?;
                Ok(ScalarExpr::attr(segs.join(".")))
            })?;
            sets.push(project(
                AlgebraExpr::select(view, pred),
                attr_items(&["OID"]),
            ));
        }
        sets.into_iter()
            .reduce(AlgebraExpr::intersect)
            .ok_or_else(|| Error::Unsupported("empty selection".into()))
    }

    // -----------------------------------------------------------------
    // post-path resolution and O-view assembly
    // -----------------------------------------------------------------

    pub(super) fn resolve_post(&self, class: &str, segs: &[String]) -> Result<ResolvedPost> {
        if segs.is_empty() {
            return Err(Error::UnknownName("empty post-path".into()));
        }
        let em = self.cat.member(class, &segs[0])?;
        match &em.spec {
            MemberSpec::Scalar(TypeName::Domain(d)) => {
                if segs.len() > 1 {
                    return Err(Error::IllegalContinuation(segs[0].clone()));
                }
                Ok(ResolvedPost::Scalar(d.clone()))
            }
            MemberSpec::Scalar(TypeName::Class(target)) => {
                if segs.len() == 1 {
                    return Ok(ResolvedPost::Scalar(Domain::Ref(target.clone())));
                }
                self.resolve_post(target, &segs[1..])
            }
            MemberSpec::Complex { attrs, .. } => {
                if segs.len() == 1 {
                    return Ok(ResolvedPost::Complex);
                }
                self.resolve_attr_post(attrs, &segs[1..])
            }
            MemberSpec::Method { .. } => Err(Error::KindMismatch {
                member: segs[0].clone(),
                detail: "methods are not data paths".into(),
            }),
        }
    }

    pub(super) fn resolve_attr_post(
        &self,
        attrs: &[(String, TypeName)],
        segs: &[String],
    ) -> Result<ResolvedPost> {
        let Some((_, ty)) = attrs.iter().find(|(a, _)| a == &segs[0]) else {
            return Err(Error::UnknownName(segs[0].clone()));
        };
        match ty {
            TypeName::Domain(d) => {
                if segs.len() > 1 {
                    return Err(Error::IllegalContinuation(segs[0].clone()));
                }
                Ok(ResolvedPost::Scalar(d.clone()))
            }
            TypeName::Class(target) => {
                if segs.len() == 1 {
                    return Ok(ResolvedPost::Scalar(Domain::Ref(target.clone())));
                }
                self.resolve_post(target, &segs[1..])
            }
        }
    }

    /// Relation keyed by OID carrying one attribute per post, named by the
    /// dotted post text. `restrict` narrows the object set.
    pub(super) fn class_view(
        &self,
        class: &str,
        restrict: Option<AlgebraExpr>,
        posts: &[Post],
    ) -> Result<AlgebraExpr> {
        let mut expr = restrict.unwrap_or_else(|| self.members_expr(class));
        // group posts by leading segment
        let mut lead_order: Vec<String> = Vec::new();
        for p in posts {
            if !lead_order.contains(&p.segs[0]) {
                lead_order.push(p.segs[0].clone());
            }
        }
        for lead in lead_order {
            let group: Vec<&Post> = posts.iter().filter(|p| p.segs[0] == lead).collect();
            let em = self.cat.member(class, &lead)?;
            match &em.spec {
                MemberSpec::Scalar(TypeName::Domain(_)) => {
                    let col = self.scalar_col_expr(em.root(), &lead)?;
                    expr = AlgebraExpr::left_join_on(expr, col, vec![("OID".into(), "OID".into())]);
                }
                MemberSpec::Scalar(TypeName::Class(target)) => {
                    // the reference value itself, plus any continuations
                    let col = self.scalar_col_expr(em.root(), &lead)?;
                    expr = AlgebraExpr::left_join_on(expr, col, vec![("OID".into(), "OID".into())]);
                    let continuations: Vec<Post> = group
                        .iter()
                        .filter(|p| p.segs.len() > 1)
                        .map(|p| Post {
                            segs: p.segs[1..].to_vec(),
                            text: p.segs[1..].join("."),
                            domain: p.domain.clone(),
                        })
                        .collect();
                    if !continuations.is_empty() {
                        let sub = self.class_view(target, None, &continuations)?;
                        let renames: Vec<(AttrName, AttrName)> = continuations
                            .iter()
                            .map(|c| {
                                (
                                    AttrName::from(c.text.as_str()),
                                    AttrName::from(format!("{lead}.{}", c.text)),
                                )
                            })
                            .collect();
                        let sub = AlgebraExpr::rename(sub, renames);
                        expr = AlgebraExpr::left_join_on(
                            expr,
                            sub,
                            vec![(AttrName::from(lead.as_str()), "OID".into())],
                        );
                    }
                }
                MemberSpec::Complex { attrs, .. } => {
                    let continuations: Vec<Post> = group
                        .iter()
                        .map(|p| {
                            if p.segs.len() < 2 {
                                Err(Error::NonTerminalProjection(lead.clone()))
                            } else {
                                Ok(Post {
                                    segs: p.segs[1..].to_vec(),
                                    text: p.segs[1..].join("."),
                                    domain: p.domain.clone(),
                                })
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let sub = self.component_view(em.root(), &lead, attrs, None, &continuations)?;
                    let renames: Vec<(AttrName, AttrName)> = continuations
                        .iter()
                        .map(|c| {
                            (
                                AttrName::from(c.text.as_str()),
                                AttrName::from(format!("{lead}.{}", c.text)),
                            )
                        })
                        .collect();
                    let sub = AlgebraExpr::rename(sub, renames);
                    expr = AlgebraExpr::left_join_on(expr, sub, vec![("OID".into(), "OID".into())]);
                }
                MemberSpec::Method { .. } => {
                    return Err(Error::KindMismatch {
                        member: lead.clone(),
                        detail: "methods are not data paths".into(),
                    })
                }
            }
        }
        Ok(expr)
    }

    /// View over one complex component's rows: OID plus per-post attributes
    /// relative to the component.
    pub(super) fn component_view(
        &self,
        root: &str,
        comp: &str,
        attrs: &[(String, TypeName)],
        restrict: Option<AlgebraExpr>,
        posts: &[Post],
    ) -> Result<AlgebraExpr> {
        let mut expr = self.complex_rel_expr(root, comp)?;
        if let Some(r) = restrict {
            expr = AlgebraExpr::join_common(expr, r, "OID");
        }
        // keep OID plus the attributes the posts need
        let mut keep: Vec<String> = vec!["OID".into()];
        for p in posts {
            if !keep.contains(&p.segs[0]) {
                keep.push(p.segs[0].clone());
            }
        }
        expr = project(
            expr,
            keep.iter()
                .map(|a| (ScalarExpr::attr(a.as_str()), AttrName::from(a.as_str())))
                .collect(),
        );
        for p in posts {
            if p.segs.len() == 1 {
                continue;
            }
            let lead = &p.segs[0];
            let Some((_, TypeName::Class(target))) = attrs.iter().find(|(a, _)| a == lead) else {
                return Err(Error::IllegalContinuation(lead.clone()));
            };
            let continuation = Post {
                segs: p.segs[1..].to_vec(),
                text: p.segs[1..].join("."),
                domain: p.domain.clone(),
            };
            let sub = self.class_view(target, None, std::slice::from_ref(&continuation))?;
            let sub = AlgebraExpr::rename(
                project(
                    sub,
                    vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (
                            ScalarExpr::attr(continuation.text.as_str()),
                            AttrName::from(continuation.text.as_str()),
                        ),
                    ],
                ),
                vec![(
                    AttrName::from(continuation.text.as_str()),
                    AttrName::from(p.text.as_str()),
                )],
            );
            expr = AlgebraExpr::left_join_on(
                expr,
                sub,
                vec![(AttrName::from(lead.as_str()), "OID".into())],
            );
        }
        // deduplicate only the needed columns
        let mut items = attr_items(&["OID"]);
        for p in posts {
            if p.segs.len() == 1 {
                items.push((
                    ScalarExpr::attr(p.segs[0].as_str()),
                    AttrName::from(p.text.as_str()),
                ));
            } else {
                items.push((
                    ScalarExpr::attr(p.text.as_str()),
                    AttrName::from(p.text.as_str()),
                ));
            }
        }
        Ok(project_unique(expr, items))
    }

    // exposed for the engine and tests
    pub fn class_oview(
        &self,
        class: &str,
        restrict: Option<AlgebraExpr>,
        post_segs: &[Vec<String>],
    ) -> Result<AlgebraExpr> {
        let posts = post_segs
            .iter()
            .map(|p| self.resolve_post(class, p).map(|r| r.into_post(p)))
            .collect::<Result<Vec<_>>>()?;
        let view = self.class_view(class, restrict, &posts)?;
        let mut items = attr_items(&["OID"]);
        for p in &posts {
            items.push((
                ScalarExpr::attr(p.text.as_str()),
                AttrName::from(p.text.as_str()),
            ));
        }
        Ok(project_unique(view, items))
    }
}

/// Projection that tolerates a duplicate request for the same output name.
fn project_unique(input: AlgebraExpr, items: Vec<(ScalarExpr, AttrName)>) -> AlgebraExpr {
    let mut seen = BTreeSet::new();
    let items: Vec<(ScalarExpr, AttrName)> = items
        .into_iter()
        .filter(|(_, n)| seen.insert(n.clone()))
        .collect();
    project(input, items)
}

pub(super) enum ResolvedPost {
    Scalar(Domain),
    Complex,
}

impl ResolvedPost {
    pub(super) fn domain_opt(&self) -> Option<&Domain> {
        match self {
            ResolvedPost::Scalar(d) => Some(d),
            ResolvedPost::Complex => None,
        }
    }

    pub(super) fn into_post(self, segs: &[String]) -> Post {
        let domain = match self {
            ResolvedPost::Scalar(d) => d,
            ResolvedPost::Complex => Domain::Oid,
        };
        Post {
            segs: segs.to_vec(),
            text: segs.join("."),
            domain,
        }
    }
}

fn rewrap_cycle(e: Error) -> Error {
    match e {
        Error::CyclicDefinition(n) => Error::CyclicBinding(n),
        other => other,
    }
}

/// Relative path inside a selection condition: a leading-dot or bare-name
/// post of the selection subject.
pub(super) fn condition_path_segs(path: &PathExpr) -> Result<Vec<String>> {
    if path.has_selection() {
        return Err(Error::Unsupported(
            "selections inside condition operands are not supported".into(),
        ));
    }
    let mut segs: Vec<String> = Vec::new();
    match &path.head {
        PathHead::Implicit | PathHead::This => {}
        PathHead::Name(n) => segs.push(n.clone()),
    }
    segs.extend(path.segments.iter().map(|s| s.name.clone()));
    if segs.is_empty() {
        return Err(Error::UnknownName("empty path".into()));
    }
    Ok(segs)
}

fn collect_condition_posts(e: &OoExpr, out: &mut Vec<Vec<String>>) -> Result<()> {
    match e {
        OoExpr::Path(p) => {
            out.push(condition_path_segs(p)?);
            Ok(())
        }
        OoExpr::Lit(_) => Ok(()),
        OoExpr::Neg(a) | OoExpr::Not(a) | OoExpr::Like(a, _) | OoExpr::IsNull(a, _) => {
            collect_condition_posts(a, out)
        }
        OoExpr::Bin(_, a, b) => {
            collect_condition_posts(a, out)?;
            collect_condition_posts(b, out)
        }
        OoExpr::Agg(..) | OoExpr::FirstOf(_) | OoExpr::New(_) | OoExpr::Subquery(_) => Err(
            Error::NonScalarInCondition("aggregates, NEW, FIRST OF, and subqueries".into()),
        ),
    }
}

/// Convert an object expression to a machine scalar expression, mapping
/// each path operand through `map_path`.
pub fn oo_to_scalar(
    e: &OoExpr,
    map_path: &mut dyn FnMut(&PathExpr) -> Result<ScalarExpr>,
) -> Result<ScalarExpr> {
    Ok(match e {
        OoExpr::Path(p) => map_path(p)?,
        OoExpr::Lit(v) => ScalarExpr::Lit(v.clone()),
        OoExpr::Neg(a) => ScalarExpr::Neg(Box::new(oo_to_scalar(a, map_path)?)),
        OoExpr::Not(a) => ScalarExpr::Not(Box::new(oo_to_scalar(a, map_path)?)),
        OoExpr::Bin(op, a, b) => ScalarExpr::Bin(
            *op,
            Box::new(oo_to_scalar(a, map_path)?),
            Box::new(oo_to_scalar(b, map_path)?),
        ),
        OoExpr::Like(a, p) => ScalarExpr::Like(Box::new(oo_to_scalar(a, map_path)?), p.clone()),
        OoExpr::IsNull(a, neg) => ScalarExpr::IsNull(Box::new(oo_to_scalar(a, map_path)?), *neg),
        OoExpr::Agg(..) => {
            return Err(Error::Unsupported(
                "aggregates are legal only in select lists".into(),
            ))
        }
        OoExpr::FirstOf(_) | OoExpr::New(_) | OoExpr::Subquery(_) => {
            return Err(Error::Unsupported(
                "FIRST OF, NEW, and subqueries are not plain scalar operands here".into(),
            ))
        }
    })
}

/// A literal-only expression (VALUES rows, method arguments).
pub fn oo_const_to_scalar(e: &OoExpr) -> Result<ScalarExpr> {
    oo_to_scalar(e, &mut |p| {
        Err(Error::Unsupported(format!(
            "`{p}` is not a constant expression"
        )))
    })
}

struct ConformedScalar {
    expr: AlgebraExpr,
}

impl ConformedScalar {
    fn pipe_join_scope(self, scope: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::join_common(self.expr, scope, "OID")
    }
}

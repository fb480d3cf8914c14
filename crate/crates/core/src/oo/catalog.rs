//! The persistent symbol table: class definitions, multiple inheritance as
//! a specification union, per-member implementations, and the scope
//! computation behind polymorphic binding.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

use super::ast::{CommandAst, ComponentKindDecl, RealizeBody, SelectAst, Stmt, TypeName};

/// What a member is, independent of where it is implemented.
#[derive(Debug, Clone, PartialEq)]
pub enum MemberSpec {
    Scalar(TypeName),
    Complex {
        attrs: Vec<(String, TypeName)>,
        keys: Vec<String>,
    },
    Method {
        params: Vec<(String, TypeName)>,
    },
}

impl MemberSpec {
    pub fn is_method(&self) -> bool {
        matches!(self, MemberSpec::Method { .. })
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, MemberSpec::Scalar(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MemberSpec::Scalar(_) => "scalar component",
            MemberSpec::Complex { .. } => "complex component",
            MemberSpec::Method { .. } => "method",
        }
    }
}

/// One member of a class's effective specification. `declarers` lists the
/// root classes that introduced it (more than one only when unrelated
/// parents declare it identically).
#[derive(Debug, Clone)]
pub struct EffectiveMember {
    pub name: String,
    pub spec: MemberSpec,
    pub declarers: Vec<String>,
}

impl EffectiveMember {
    /// The class whose relations store and name this member.
    pub fn root(&self) -> &str {
        &self.declarers[0]
    }
}

/// A registered implementation, owned by the class the ALTER…REALIZE named.
#[derive(Debug, Clone, PartialEq)]
pub enum ImplBody {
    Stored,
    Calculated(SelectAst),
    /// Straight-line procedure implementing a scalar component.
    CalcProc(Vec<Stmt>),
    Method {
        params: Vec<(String, TypeName)>,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefConstraint {
    pub component: Option<String>,
    pub attrs: Vec<String>,
    pub target_class: String,
    pub target_attrs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: ComponentKindDecl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub params: Vec<(String, TypeName)>,
}

#[derive(Debug, Clone)]
pub struct ClassDef {
    pub name: String,
    pub parents: Vec<String>,
    pub own_components: Vec<ComponentSpec>,
    pub own_methods: Vec<MethodSpec>,
    pub keys: Vec<Vec<String>>,
    pub refconstraints: Vec<RefConstraint>,
    /// member name → current implementation registered on this class.
    pub impls: BTreeMap<String, ImplBody>,
}

/// The class catalog plus the DDL log that persists it.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    classes: Vec<ClassDef>,
    index: BTreeMap<String, usize>,
    ddl_log: Vec<String>,
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.index.get(name).map(|i| &self.classes[*i])
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Classes in definition order.
    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.iter()
    }

    pub fn ddl_log(&self) -> &[String] {
        &self.ddl_log
    }

    pub fn record_ddl(&mut self, text: String) {
        self.ddl_log.push(text);
    }

    /// All strict ancestors, parents first, each class once.
    pub fn ancestors(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<String> = match self.class(name) {
            Some(c) => c.parents.clone(),
            None => return out,
        };
        stack.reverse();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(c) = self.class(&n) {
                for p in c.parents.iter().rev() {
                    stack.push(p.clone());
                }
            }
            out.push(n);
        }
        out
    }

    /// All strict descendants, in definition order.
    pub fn descendants(&self, name: &str) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| c.name != name && self.ancestors(&c.name).iter().any(|a| a == name))
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn is_ancestor_or_self(&self, ancestor: &str, class: &str) -> bool {
        ancestor == class || self.ancestors(class).iter().any(|a| a == ancestor)
    }

    /// self + ancestors, topologically ordered so every class follows its
    /// ancestors.
    fn lineage_root_first(&self, name: &str) -> Vec<String> {
        let mut all = self.ancestors(name);
        all.push(name.to_string());
        all.sort_by(|a, b| {
            if self.is_ancestor_or_self(a, b) && a != b {
                std::cmp::Ordering::Less
            } else if self.is_ancestor_or_self(b, a) && a != b {
                std::cmp::Ordering::Greater
            } else {
                // keep unrelated classes in ancestor-walk order
                std::cmp::Ordering::Equal
            }
        });
        all
    }

    /// The effective specification: the union of own and all inherited
    /// members. A member reachable through several paths appears once;
    /// differing declarations under one name are a conflict.
    pub fn effective_members(&self, name: &str) -> Result<Vec<EffectiveMember>> {
        let mut out: Vec<EffectiveMember> = Vec::new();
        for cname in self.lineage_root_first(name) {
            let c = self
                .class(&cname)
                .ok_or_else(|| Error::UnknownClass(cname.clone()))?;
            let mut push = |mname: &str, spec: MemberSpec| -> Result<()> {
                if let Some(existing) = out.iter_mut().find(|m| m.name == mname) {
                    if existing.spec != spec {
                        return Err(Error::MemberConflict {
                            class: name.to_string(),
                            member: mname.to_string(),
                        });
                    }
                    // identical re-declaration: extend declarers only when
                    // this class is unrelated to every existing declarer
                    if !existing
                        .declarers
                        .iter()
                        .any(|d| self.is_ancestor_or_self(d, &cname))
                    {
                        existing.declarers.push(cname.clone());
                    }
                    return Ok(());
                }
                out.push(EffectiveMember {
                    name: mname.to_string(),
                    spec,
                    declarers: vec![cname.clone()],
                });
                Ok(())
            };
            for comp in &c.own_components {
                let spec = match &comp.kind {
                    ComponentKindDecl::Scalar(t) => MemberSpec::Scalar(t.clone()),
                    ComponentKindDecl::Complex { attrs, keys } => MemberSpec::Complex {
                        attrs: attrs.clone(),
                        keys: keys.clone(),
                    },
                };
                push(&comp.name, spec)?;
            }
            for m in &c.own_methods {
                push(
                    &m.name,
                    MemberSpec::Method {
                        params: m.params.clone(),
                    },
                )?;
            }
        }
        Ok(out)
    }

    pub fn member(&self, class: &str, member: &str) -> Result<EffectiveMember> {
        self.effective_members(class)?
            .into_iter()
            .find(|m| m.name == member)
            .ok_or_else(|| Error::UnknownMember {
                class: class.to_string(),
                member: member.to_string(),
            })
    }

    /// Enter a class definition. Emitting the class relations is the
    /// translator's job; this validates and stores the symbol table entry.
    pub fn define_class(&mut self, ast: &CommandAst) -> Result<()> {
        let CommandAst::ClassCreate {
            name,
            parents,
            components,
            methods,
            keys,
            refs,
        } = ast
        else {
            return Err(Error::Unsupported("define_class expects CLASS".into()));
        };
        if self.has_class(name) {
            return Err(Error::DuplicateClass(name.clone()));
        }
        for p in parents {
            if !self.has_class(p) {
                return Err(Error::UnknownParent(p.clone()));
            }
        }
        let class_exists = |c: &str| c == name || self.has_class(c);
        let mut own_names = BTreeSet::new();
        for c in components {
            if !own_names.insert(c.name.clone()) {
                return Err(Error::MemberConflict {
                    class: name.clone(),
                    member: c.name.clone(),
                });
            }
            match &c.kind {
                ComponentKindDecl::Scalar(TypeName::Class(target)) => {
                    if !class_exists(target) {
                        return Err(Error::UnknownClass(target.clone()));
                    }
                }
                ComponentKindDecl::Complex { attrs, keys } => {
                    let mut attr_names = BTreeSet::new();
                    for (a, t) in attrs {
                        if !attr_names.insert(a.clone()) {
                            return Err(Error::DuplicateAttribute(a.clone()));
                        }
                        if let TypeName::Class(target) = t {
                            if !class_exists(target) {
                                return Err(Error::UnknownClass(target.clone()));
                            }
                        }
                    }
                    for k in keys {
                        if !attrs.iter().any(|(a, _)| a == k) {
                            return Err(Error::UnknownAttribute(format!(
                                "{k} in component key of {}.{}",
                                name, c.name
                            )));
                        }
                    }
                }
                ComponentKindDecl::Scalar(_) => {}
            }
        }
        for m in methods {
            if !own_names.insert(m.name.clone()) {
                return Err(Error::MemberConflict {
                    class: name.clone(),
                    member: m.name.clone(),
                });
            }
            for (_, t) in &m.params {
                if let TypeName::Class(target) = t {
                    if !class_exists(target) {
                        return Err(Error::UnknownClass(target.clone()));
                    }
                }
            }
        }
        // class keys consist of own scalar components
        for key in keys {
            for k in key {
                let found = components
                    .iter()
                    .any(|c| c.name == *k && matches!(c.kind, ComponentKindDecl::Scalar(_)));
                if !found {
                    return Err(Error::UnknownAttribute(format!(
                        "{k} in class key of {name} (keys use own scalar components)"
                    )));
                }
            }
        }
        for r in refs {
            if !class_exists(&r.target_class) {
                return Err(Error::UnknownClass(r.target_class.clone()));
            }
            match &r.component {
                Some(cname) => {
                    let comp = components
                        .iter()
                        .find(|c| c.name == *cname)
                        .ok_or_else(|| Error::UnknownMember {
                            class: name.clone(),
                            member: cname.clone(),
                        })?;
                    match &comp.kind {
                        ComponentKindDecl::Complex { attrs, .. } => {
                            for a in &r.attrs {
                                if !attrs.iter().any(|(n, _)| n == a) {
                                    return Err(Error::UnknownAttribute(format!(
                                        "{a} in REFERENCE of {name}"
                                    )));
                                }
                            }
                        }
                        _ => {
                            return Err(Error::KindMismatch {
                                member: cname.clone(),
                                detail: "REFERENCE names a complex component".into(),
                            })
                        }
                    }
                }
                None => {
                    for a in &r.attrs {
                        let found = components.iter().any(|c| {
                            c.name == *a && matches!(c.kind, ComponentKindDecl::Scalar(_))
                        });
                        if !found {
                            return Err(Error::UnknownAttribute(format!(
                                "{a} in REFERENCE of {name}"
                            )));
                        }
                    }
                }
            }
        }
        let def = ClassDef {
            name: name.clone(),
            parents: parents.clone(),
            own_components: components
                .iter()
                .map(|c| ComponentSpec {
                    name: c.name.clone(),
                    kind: c.kind.clone(),
                })
                .collect(),
            own_methods: methods
                .iter()
                .map(|m| MethodSpec {
                    name: m.name.clone(),
                    params: m.params.clone(),
                })
                .collect(),
            keys: keys.clone(),
            refconstraints: refs
                .iter()
                .map(|r| RefConstraint {
                    component: r.component.clone(),
                    attrs: r.attrs.clone(),
                    target_class: r.target_class.clone(),
                    target_attrs: r.target_attrs.clone(),
                })
                .collect(),
            impls: BTreeMap::new(),
        };
        self.index.insert(name.clone(), self.classes.len());
        self.classes.push(def);
        // the union must already be conflict-free
        if let Err(e) = self.effective_members(name) {
            let idx = self.index.remove(name).unwrap();
            self.classes.remove(idx);
            return Err(e);
        }
        Ok(())
    }

    /// Record an implementation, replacing whatever the class held for the
    /// member before. Body type checking happens when the translator
    /// rebuilds bindings, which the engine runs in the same atomic step.
    pub fn register_implementation(
        &mut self,
        class: &str,
        member: &str,
        body: &RealizeBody,
    ) -> Result<()> {
        let spec = self.member(class, member)?.spec;
        let impl_body = match (body, &spec) {
            (RealizeBody::Stored, MemberSpec::Scalar(_) | MemberSpec::Complex { .. }) => {
                ImplBody::Stored
            }
            (RealizeBody::Calculated(s), MemberSpec::Scalar(_) | MemberSpec::Complex { .. }) => {
                ImplBody::Calculated(s.clone())
            }
            (RealizeBody::Procedure { params, body }, MemberSpec::Scalar(_))
                if params.is_empty() =>
            {
                ImplBody::CalcProc(body.clone())
            }
            (RealizeBody::Procedure { params, body }, MemberSpec::Method { params: declared }) => {
                if params.len() != declared.len()
                    || params
                        .iter()
                        .zip(declared.iter())
                        .any(|((_, ta), (_, tb))| ta != tb)
                {
                    return Err(Error::KindMismatch {
                        member: member.to_string(),
                        detail: "implementation signature differs from the declaration".into(),
                    });
                }
                ImplBody::Method {
                    params: params.clone(),
                    body: body.clone(),
                }
            }
            _ => {
                return Err(Error::KindMismatch {
                    member: member.to_string(),
                    detail: format!("body does not fit a {}", spec.kind_name()),
                })
            }
        };
        // reject overrides that would make binding ambiguous: two unrelated
        // implementing classes with a common descendant
        for other in self.implementing_classes(member) {
            if other == class
                || self.is_ancestor_or_self(&other, class)
                || self.is_ancestor_or_self(class, &other)
            {
                continue;
            }
            let shared = self.classes.iter().any(|c| {
                self.is_ancestor_or_self(class, &c.name)
                    && self.is_ancestor_or_self(&other, &c.name)
            });
            if shared {
                return Err(Error::AmbiguousOverride {
                    member: member.to_string(),
                    a: class.to_string(),
                    b: other,
                });
            }
        }
        let idx = self.index[class];
        self.classes[idx]
            .impls
            .insert(member.to_string(), impl_body);
        Ok(())
    }

    /// Classes holding a current implementation of `member`.
    pub fn implementing_classes(&self, member: &str) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| c.impls.contains_key(member))
            .map(|c| c.name.clone())
            .collect()
    }

    /// Implementations visible from `class` for `member`: every class in
    /// the hierarchy of its declarer that implements it, root classes
    /// first, then definition order.
    pub fn implementations(&self, class: &str, member: &str) -> Result<Vec<(String, ImplBody)>> {
        let em = self.member(class, member)?;
        let mut out: Vec<(String, ImplBody)> = Vec::new();
        for c in &self.classes {
            if !em
                .declarers
                .iter()
                .any(|d| self.is_ancestor_or_self(d, &c.name))
            {
                continue;
            }
            if let Some(body) = c.impls.get(member) {
                out.push((c.name.clone(), body.clone()));
            }
        }
        out.sort_by(|(a, _), (b, _)| {
            if self.is_ancestor_or_self(a, b) && a != b {
                std::cmp::Ordering::Less
            } else if self.is_ancestor_or_self(b, a) && a != b {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        Ok(out)
    }

    /// Implementing classes of `member` that are strict descendants of
    /// `class` — the overriding set whose members leave `class`'s scope.
    pub fn overriding_descendants(&self, class: &str, member: &str) -> Vec<String> {
        self.implementing_classes(member)
            .into_iter()
            .filter(|k| k != class && self.is_ancestor_or_self(class, k))
            .collect()
    }

    /// The member that makes the class not fully implemented, if any: a
    /// component or method with no implementation on the class or any
    /// ancestor.
    pub fn missing_implementation(&self, class: &str) -> Result<Option<String>> {
        for m in self.effective_members(class)? {
            let covered = self
                .implementations(class, &m.name)?
                .iter()
                .any(|(k, _)| self.is_ancestor_or_self(k, class));
            if !covered {
                return Ok(Some(m.name));
            }
        }
        Ok(None)
    }
}

//! SELECT translation: top-level queries and implementation bodies.
//!
//! An implementation body `f` over the state of one object becomes an
//! expression `f'` over whole class relations whose result carries the
//! implicit OID, so that restricting `f'` to one OID gives the per-object
//! result. Free references to own scalar components become correlated
//! columns; a global FROM is broadcast to every object by product.

use std::collections::BTreeMap;

use super::*;

/// Resolved FROM clause of a select.
pub(super) enum FromKind {
    Class {
        class: String,
        oids: AlgebraExpr,
    },
    Complex {
        root: String,
        comp: String,
        attrs: Vec<(String, TypeName)>,
        /// Owner OID restriction; `None` means the implementing class's
        /// members (the this-relative case).
        oids: Option<AlgebraExpr>,
        this_relative: bool,
    },
    Relvar {
        name: String,
        schema: Schema,
    },
}

/// How a path inside the select resolved.
enum Operand {
    FromPost(Post),
    Free(Post),
    Extra(String),
}

pub(super) struct SelectEnv<'t, 'c> {
    pub tr: &'t Translator<'c>,
    pub from: FromKind,
    pub alias: Option<String>,
    pub class_ctx: Option<String>,
    pub extra: ExtraCols,
}

impl<'t, 'c> SelectEnv<'t, 'c> {
    fn classify(&self, path: &PathExpr) -> Result<Operand> {
        if path.has_selection() {
            return Err(Error::Unsupported(
                "selections inside select operands are not supported".into(),
            ));
        }
        let mut segs: Vec<String> = Vec::new();
        let mut from_only = false;
        let mut free_only = false;
        match &path.head {
            PathHead::Name(n) => {
                if Some(n.as_str()) == self.alias.as_deref() {
                    from_only = true;
                } else {
                    segs.push(n.clone());
                }
            }
            PathHead::Implicit => from_only = true,
            PathHead::This => free_only = true,
        }
        segs.extend(path.segments.iter().map(|s| s.name.clone()));
        if segs.is_empty() {
            return Err(Error::UnknownName(format!("{path}")));
        }
        if !free_only {
            if let Some(post) = self.resolve_from_post(&segs)? {
                return Ok(Operand::FromPost(post));
            }
            if from_only {
                return Err(Error::UnknownName(format!(
                    "`{path}` is not a post-path of the FROM clause"
                )));
            }
        }
        // locals and parameters shadow components
        if segs.len() == 1 {
            if let Some(e) = self.extra.entries.iter().find(|e| e.source == segs[0]) {
                return Ok(Operand::Extra(e.attr.clone()));
            }
        }
        let Some(class) = &self.class_ctx else {
            return Err(Error::UnknownName(format!("{path}")));
        };
        match self.tr.resolve_post(class, &segs) {
            Ok(r) => match r.domain_opt() {
                Some(_) => Ok(Operand::Free(r.into_post(&segs))),
                None => Err(Error::NonTerminalProjection(segs.join("."))),
            },
            Err(e) => Err(e),
        }
    }

    fn resolve_from_post(&self, segs: &[String]) -> Result<Option<Post>> {
        let resolved = match &self.from {
            FromKind::Class { class, .. } => self.tr.resolve_post(class, segs),
            FromKind::Complex { attrs, .. } => self.tr.resolve_attr_post(attrs, segs),
            FromKind::Relvar { name: _, schema } => {
                let Some(domain) = schema.domain_of(&segs[0]) else {
                    return Ok(None);
                };
                match (segs.len(), domain) {
                    (1, d) => Ok(ResolvedPost::Scalar(d.clone())),
                    (_, Domain::Ref(target)) => self.tr.resolve_post(target, &segs[1..]),
                    _ => Err(Error::IllegalContinuation(segs[0].clone())),
                }
            }
        };
        match resolved {
            Ok(ResolvedPost::Scalar(_)) => Ok(Some(resolved.unwrap().into_post(segs))),
            Ok(ResolvedPost::Complex) => Err(Error::NonTerminalProjection(segs.join("."))),
            Err(Error::UnknownName(_)) | Err(Error::UnknownMember { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// One select compiled into a relational expression plus its output
/// columns. `per_object` results keep the implicit OID.
pub(super) struct BuiltSelect {
    pub expr: AlgebraExpr,
    pub cols: Vec<(AttrName, Domain)>,
}

impl<'a> Translator<'a> {
    /// Resolve a FROM clause, either against a class context
    /// (implementation body) or globally.
    pub(super) fn resolve_from(
        &self,
        class_ctx: Option<&str>,
        path: &PathExpr,
    ) -> Result<FromKind> {
        // a component of the implementing class is read this-relative
        if let Some(ctx) = class_ctx {
            let comp_name = match (&path.head, path.segments.len()) {
                (PathHead::Name(n), 0) if path.head_selection.is_none() => Some(n.clone()),
                (PathHead::This | PathHead::Implicit, 1)
                    if path.segments[0].selection.is_none() =>
                {
                    Some(path.segments[0].name.clone())
                }
                _ => None,
            };
            if let Some(name) = comp_name {
                if let Ok(em) = self.cat.member(ctx, &name) {
                    if let MemberSpec::Complex { attrs, .. } = &em.spec {
                        return Ok(FromKind::Complex {
                            root: em.root().to_string(),
                            comp: name,
                            attrs: attrs.clone(),
                            oids: None,
                            this_relative: true,
                        });
                    }
                }
            }
        }
        let (target, oids) = self.resolve_target(path)?;
        Ok(match target {
            PathTarget::Objects(class) => FromKind::Class { class, oids },
            PathTarget::ComplexRows { class, root, comp } => {
                let em = self.cat.member(&class, &comp)?;
                let MemberSpec::Complex { attrs, .. } = em.spec else {
                    unreachable!("resolve_target said complex");
                };
                FromKind::Complex {
                    root,
                    comp,
                    attrs,
                    oids: Some(oids),
                    this_relative: false,
                }
            }
            PathTarget::Relvar(name) => {
                let schema = self
                    .db
                    .relvar(&name)
                    .map(|d| d.schema.clone())
                    .ok_or_else(|| Error::UnknownRelvar(name.clone()))?;
                FromKind::Relvar { name, schema }
            }
        })
    }

    /// Translate an implementation body select into `f'`: a relation
    /// `(OID, cols…)` whose restriction to one OID is the per-object value.
    pub fn translate_impl_select(
        &self,
        class: &str,
        sel: &SelectAst,
        extra: &ExtraCols,
    ) -> Result<ImplValue> {
        let from = self.resolve_from(Some(class), &sel.from)?;
        if matches!(from, FromKind::Relvar { .. }) {
            return Err(Error::Unsupported(
                "implementation bodies select from classes and components".into(),
            ));
        }
        let env = SelectEnv {
            tr: self,
            from,
            alias: sel.alias.clone(),
            class_ctx: Some(class.to_string()),
            extra: extra.clone(),
        };
        let built = self.build_select(&env, sel, true)?;
        Ok(ImplValue {
            expr: built.expr,
            cols: built.cols,
        })
    }

    /// Translate a top-level query; the implicit OID is projected away.
    pub fn translate_select(&self, sel: &SelectAst) -> Result<(AlgebraExpr, Vec<AttrName>)> {
        let from = self.resolve_from(None, &sel.from)?;
        let env = SelectEnv {
            tr: self,
            from,
            alias: sel.alias.clone(),
            class_ctx: None,
            extra: ExtraCols::default(),
        };
        let built = self.build_select(&env, sel, false)?;
        let names = built.cols.iter().map(|(n, _)| n.clone()).collect();
        Ok((built.expr, names))
    }

    fn build_select(
        &self,
        env: &SelectEnv<'_, 'a>,
        sel: &SelectAst,
        per_object: bool,
    ) -> Result<BuiltSelect> {
        // classify every path operand
        let mut from_posts: Vec<Post> = Vec::new();
        let mut free_posts: Vec<Post> = Vec::new();
        let note_post = |list: &mut Vec<Post>, p: Post| {
            if !list.iter().any(|q| q.text == p.text) {
                list.push(p);
            }
        };
        let classify_into =
            |e: &OoExpr, from_posts: &mut Vec<Post>, free_posts: &mut Vec<Post>| -> Result<()> {
                walk_paths(e, &mut |p| {
                    match env.classify(p)? {
                        Operand::FromPost(post) => note_post(from_posts, post),
                        Operand::Free(post) => note_post(free_posts, post),
                        Operand::Extra(_) => {}
                    }
                    Ok(())
                })
            };
        for (e, _) in &sel.items {
            classify_into(e, &mut from_posts, &mut free_posts)?;
        }
        if let Some(w) = &sel.wher {
            classify_into(w, &mut from_posts, &mut free_posts)?;
        }
        for g in &sel.group_by {
            classify_into(&OoExpr::Path(g.clone()), &mut from_posts, &mut free_posts)?;
        }
        if !per_object && !free_posts.is_empty() {
            return Err(Error::UnknownName(format!(
                "`{}` does not resolve in a global query",
                free_posts[0].text
            )));
        }

        // the FROM view with exactly the needed post attributes
        let (from_view, from_keyed) = match &env.from {
            FromKind::Class { class, oids } => (
                self.class_view(class, Some(oids.clone()), &from_posts)?,
                true,
            ),
            FromKind::Complex {
                root,
                comp,
                attrs,
                oids,
                this_relative,
            } => {
                let restrict = match (oids, this_relative) {
                    (Some(o), _) => Some(o.clone()),
                    (None, true) => env.class_ctx.as_ref().map(|c| self.members_expr(c)),
                    (None, false) => None,
                };
                (
                    self.component_view(root, comp, attrs, restrict, &from_posts)?,
                    true,
                )
            }
            FromKind::Relvar { name, .. } => (self.relvar_view(name, &from_posts)?, false),
        };

        // per-object spine with correlated free columns and extras
        let expr = if per_object {
            let class = env.class_ctx.as_deref().expect("impl select has a class");
            let mut spine = self.members_expr(class);
            for post in &free_posts {
                let col = self.free_col(class, post)?;
                spine = AlgebraExpr::left_join_on(spine, col, vec![("OID".into(), "OID".into())]);
            }
            for e in &env.extra.entries {
                let col = AlgebraExpr::rename(
                    e.expr.clone(),
                    vec![(
                        AttrName::from(e.source.as_str()),
                        AttrName::from(e.attr.as_str()),
                    )],
                );
                spine = AlgebraExpr::left_join_on(spine, col, vec![("OID".into(), "OID".into())]);
            }
            let this_relative = matches!(
                &env.from,
                FromKind::Complex {
                    this_relative: true,
                    ..
                }
            );
            if this_relative {
                AlgebraExpr::join_common(from_view, spine, "OID")
            } else {
                // broadcast a global FROM: drop its own OID first
                let keep: Vec<(ScalarExpr, AttrName)> = from_posts
                    .iter()
                    .map(|p| {
                        (
                            ScalarExpr::attr(p.text.as_str()),
                            AttrName::from(p.text.as_str()),
                        )
                    })
                    .collect();
                let g = if from_keyed {
                    project(from_view, keep)
                } else {
                    from_view
                };
                AlgebraExpr::Product(Box::new(spine), Box::new(g))
            }
        } else {
            from_view
        };

        // pseudo-schema for typing the output items
        let mut domains: BTreeMap<String, Domain> = BTreeMap::new();
        domains.insert("OID".into(), Domain::Oid);
        for p in &from_posts {
            domains.insert(p.text.clone(), p.domain.clone());
        }
        for p in &free_posts {
            domains.insert(format!("this.{}", p.text), p.domain.clone());
        }
        for e in &env.extra.entries {
            domains.insert(e.attr.clone(), e.domain.clone());
        }

        let mut map_path = |p: &PathExpr| -> Result<ScalarExpr> {
            Ok(match env.classify(p)? {
                Operand::FromPost(post) => ScalarExpr::attr(post.text),
                Operand::Free(post) => ScalarExpr::attr(format!("this.{}", post.text)),
                Operand::Extra(attr) => ScalarExpr::attr(attr),
            })
        };

        let expr = match &sel.wher {
            Some(w) => AlgebraExpr::select(expr, oo_to_scalar(w, &mut map_path)?),
            None => expr,
        };

        // split plain items from aggregates
        let mut out_items: Vec<OutItem> = Vec::new();
        for (i, (e, name)) in sel.items.iter().enumerate() {
            let out_name = match name {
                Some(n) => AttrName::from(n.as_str()),
                None => match e {
                    OoExpr::Path(p) => match env.classify(p)? {
                        Operand::FromPost(post) | Operand::Free(post) => {
                            AttrName::from(post.text.as_str())
                        }
                        Operand::Extra(attr) => AttrName::from(attr.as_str()),
                    },
                    _ => AttrName::from(format!("col{}", i + 1)),
                },
            };
            match e {
                OoExpr::Agg(func, args) => {
                    let input = match func {
                        OoAggFunc::Count => None,
                        OoAggFunc::Sum => {
                            let mut converted: Vec<ScalarExpr> = args
                                .iter()
                                .map(|a| oo_to_scalar(a, &mut map_path))
                                .collect::<Result<_>>()?;
                            let first = match converted.len() {
                                0 => {
                                    return Err(Error::TypeError("SUM requires an argument".into()))
                                }
                                _ => {
                                    // SUM(a, b) reads as SUM(a * b)
                                    let mut it = converted.drain(..);
                                    let mut acc = it.next().unwrap();
                                    for next in it {
                                        acc = ScalarExpr::bin(crate::scalar::BinOp::Mul, acc, next);
                                    }
                                    acc
                                }
                            };
                            Some(first)
                        }
                    };
                    out_items.push(OutItem::Agg(AggSpec {
                        func: match func {
                            OoAggFunc::Sum => AggFunc::Sum,
                            OoAggFunc::Count => AggFunc::Count,
                        },
                        input,
                        name: out_name,
                    }));
                }
                _ => out_items.push(OutItem::Plain(oo_to_scalar(e, &mut map_path)?, out_name)),
            }
        }
        let group_attrs: Vec<AttrName> = sel
            .group_by
            .iter()
            .map(|g| {
                Ok(match env.classify(g)? {
                    Operand::FromPost(post) | Operand::Free(post) => {
                        AttrName::from(post.text.as_str())
                    }
                    Operand::Extra(attr) => AttrName::from(attr.as_str()),
                })
            })
            .collect::<Result<_>>()?;

        let has_aggs = out_items.iter().any(|i| matches!(i, OutItem::Agg(_)));
        let pseudo_schema = pseudo_schema(&domains)?;
        let empty_domains = BTreeMap::new();
        let infer = |e: &ScalarExpr| -> Result<Domain> {
            Ok(
                crate::scalar::infer_type(e, &pseudo_schema, &empty_domains)?
                    .unwrap_or(Domain::Integer),
            )
        };

        let mut cols: Vec<(AttrName, Domain)> = Vec::new();
        let final_expr = if has_aggs || !group_attrs.is_empty() {
            // non-aggregate outputs must be grouping attributes
            for item in &out_items {
                if let OutItem::Plain(e, name) = item {
                    match e {
                        ScalarExpr::Attr(a) if group_attrs.contains(a) => {}
                        _ => {
                            return Err(Error::TypeError(format!(
                                "`{name}` must appear in GROUP BY"
                            )))
                        }
                    }
                }
            }
            let mut group = Vec::new();
            if per_object {
                group.push(AttrName::from("OID"));
            }
            group.extend(group_attrs.iter().cloned());
            let aggs: Vec<AggSpec> = out_items
                .iter()
                .filter_map(|i| match i {
                    OutItem::Agg(a) => Some(a.clone()),
                    _ => None,
                })
                .collect();
            let grouped = AlgebraExpr::GroupAgg {
                input: Box::new(expr),
                group,
                aggs: aggs.clone(),
            };
            // objects with no source rows still yield one row for an
            // ungrouped aggregate, as the per-object semantics demands
            let grouped = if per_object && group_attrs.is_empty() {
                let class = env.class_ctx.as_deref().unwrap();
                AlgebraExpr::left_join_on(
                    self.members_expr(class),
                    grouped,
                    vec![("OID".into(), "OID".into())],
                )
            } else {
                grouped
            };
            let mut items: Vec<(ScalarExpr, AttrName)> = Vec::new();
            if per_object {
                items.push((ScalarExpr::attr("OID"), "OID".into()));
            }
            for item in &out_items {
                let (e, name) = match item {
                    OutItem::Plain(e, n) => (e.clone(), n.clone()),
                    OutItem::Agg(a) => (ScalarExpr::attr(a.name.as_str()), a.name.clone()),
                };
                let domain = match item {
                    OutItem::Plain(e, _) => infer(e)?,
                    OutItem::Agg(a) => match a.func {
                        AggFunc::Count => Domain::Integer,
                        AggFunc::Sum => infer(a.input.as_ref().unwrap())?,
                    },
                };
                cols.push((name.clone(), domain));
                items.push((e, name));
            }
            project(grouped, items)
        } else {
            let mut items: Vec<(ScalarExpr, AttrName)> = Vec::new();
            if per_object {
                items.push((ScalarExpr::attr("OID"), "OID".into()));
            }
            for item in &out_items {
                let OutItem::Plain(e, name) = item else {
                    unreachable!()
                };
                cols.push((name.clone(), infer(e)?));
                items.push((e.clone(), name.clone()));
            }
            project(expr, items)
        };
        Ok(BuiltSelect {
            expr: final_expr,
            cols,
        })
    }

    /// Correlated column for a free own-component path: `[OID, this.text]`.
    pub(super) fn free_col(&self, class: &str, post: &Post) -> Result<AlgebraExpr> {
        let view = self.class_view(class, None, std::slice::from_ref(post))?;
        Ok(project(
            view,
            vec![
                (ScalarExpr::attr("OID"), AttrName::from("OID")),
                (
                    ScalarExpr::attr(post.text.as_str()),
                    AttrName::from(format!("this.{}", post.text)),
                ),
            ],
        ))
    }

    /// View over a plain relvar with reference-typed attributes expanded
    /// into class post-paths (classes and relations co-use).
    fn relvar_view(&self, name: &str, posts: &[Post]) -> Result<AlgebraExpr> {
        let schema = self
            .db
            .relvar(name)
            .map(|d| d.schema.clone())
            .ok_or_else(|| Error::UnknownRelvar(name.to_string()))?;
        let mut expr = AlgebraExpr::relvar(name);
        for p in posts {
            if p.segs.len() == 1 {
                continue;
            }
            let lead = &p.segs[0];
            let Some(Domain::Ref(target)) = schema.domain_of(lead) else {
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
        Ok(expr)
    }

    /// Inline a straight-line component procedure (locals, assignments,
    /// IF-THEN assignment, one RETURN) into a single `f'` expression.
    pub fn translate_calc_proc(&self, class: &str, stmts: &[Stmt]) -> Result<ImplValue> {
        let unsupported = || {
            Error::Unsupported(
                "component procedures allow DECLARE, assignments, IF-THEN over locals, and one final RETURN".into(),
            )
        };
        // locals, in declaration order
        let mut locals: Vec<(String, Domain)> = Vec::new();
        for s in stmts {
            if let Stmt::Declare { name, ty, .. } = s {
                locals.push((name.clone(), ty.storage_domain()));
            }
        }
        let loc_attr = |n: &str| format!("loc.{n}");
        // E: one row per member, locals start NULL
        let mut items: Vec<(ScalarExpr, AttrName)> =
            vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
        for (n, d) in &locals {
            items.push((
                ScalarExpr::Cast(Box::new(ScalarExpr::Lit(Value::Null)), d.clone()),
                AttrName::from(loc_attr(n).as_str()),
            ));
        }
        let mut env_expr = project(self.members_expr(class), items);
        let mut subquery_count = 0usize;

        let locals_for = |locals: &[(String, Domain)], env_expr: &AlgebraExpr| -> ExtraCols {
            ExtraCols {
                entries: locals
                    .iter()
                    .map(|(n, d)| ExtraCol {
                        source: n.clone(),
                        attr: loc_attr(n),
                        expr: project(
                            env_expr.clone(),
                            vec![
                                (ScalarExpr::attr("OID"), AttrName::from("OID")),
                                (
                                    ScalarExpr::attr(loc_attr(n).as_str()),
                                    AttrName::from(n.as_str()),
                                ),
                            ],
                        ),
                        domain: d.clone(),
                    })
                    .collect(),
            }
        };

        // scalar expressions over locals and own components
        let convert = |e: &OoExpr,
                       env_expr: &AlgebraExpr,
                       tr: &Translator<'a>|
         -> Result<(ScalarExpr, AlgebraExpr)> {
            let mut new_env = env_expr.clone();
            let mut joined: Vec<String> = Vec::new();
            let converted = oo_to_scalar(e, &mut |p| {
                let segs = condition_path_segs(p)?;
                if segs.len() == 1 {
                    if let Some((n, _)) = locals.iter().find(|(n, _)| *n == segs[0]) {
                        return Ok(ScalarExpr::attr(loc_attr(n)));
                    }
                }
                // own component path, joined on demand
                let resolved = tr.resolve_post(class, &segs)?;
                if resolved.domain_opt().is_none() {
                    return Err(Error::NonTerminalProjection(segs.join(".")));
                }
                let post = resolved.into_post(&segs);
                let attr = format!("this.{}", post.text);
                if !joined.contains(&attr) {
                    let col = tr.free_col(class, &post)?;
                    new_env = AlgebraExpr::left_join_on(
                        new_env.clone(),
                        col,
                        vec![("OID".into(), "OID".into())],
                    );
                    joined.push(attr.clone());
                }
                Ok(ScalarExpr::attr(attr))
            })?;
            Ok((converted, new_env))
        };

        let keep_env = |env_expr: &AlgebraExpr,
                        locals: &[(String, Domain)],
                        replace: Option<(&str, ScalarExpr)>| {
            let mut items = vec![(ScalarExpr::attr("OID"), AttrName::from("OID"))];
            for (n, _) in locals {
                let attr = loc_attr(n);
                let e = match &replace {
                    Some((target, e)) if target == n => e.clone(),
                    _ => ScalarExpr::attr(attr.as_str()),
                };
                items.push((e, AttrName::from(attr.as_str())));
            }
            project(env_expr.clone(), items)
        };

        let mut returned: Option<(AlgebraExpr, Domain)> = None;
        for (i, s) in stmts.iter().enumerate() {
            if returned.is_some() {
                return Err(unsupported());
            }
            match s {
                Stmt::Declare { name, ty, init } => {
                    if let Some(e) = init {
                        let (assign_env, _) = self.calc_assign(
                            class,
                            &mut env_expr,
                            &locals,
                            name,
                            e,
                            &mut subquery_count,
                            &convert,
                            &keep_env,
                            &locals_for,
                        )?;
                        env_expr = assign_env;
                        let _ = ty;
                    }
                }
                Stmt::Assign { target, value } => {
                    let Some(name) = target.bare_name() else {
                        return Err(unsupported());
                    };
                    if !locals.iter().any(|(n, _)| n == name) {
                        return Err(unsupported());
                    }
                    let name = name.to_string();
                    let (assign_env, _) = self.calc_assign(
                        class,
                        &mut env_expr,
                        &locals,
                        &name,
                        value,
                        &mut subquery_count,
                        &convert,
                        &keep_env,
                        &locals_for,
                    )?;
                    env_expr = assign_env;
                }
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    if !else_body.is_empty() || then_body.len() != 1 {
                        return Err(unsupported());
                    }
                    let Stmt::Assign { target, value } = &then_body[0] else {
                        return Err(unsupported());
                    };
                    let Some(name) = target.bare_name() else {
                        return Err(unsupported());
                    };
                    if !locals.iter().any(|(n, _)| n == name) {
                        return Err(unsupported());
                    }
                    let (cond_e, env2) = convert(cond, &env_expr, self)?;
                    let (val_e, env3) = convert(value, &env2, self)?;
                    let attr = loc_attr(name);
                    let replacement = ScalarExpr::Cond(
                        Box::new(cond_e),
                        Box::new(val_e),
                        Box::new(ScalarExpr::attr(attr.as_str())),
                    );
                    env_expr = keep_env(&env3, &locals, Some((name, replacement)));
                }
                Stmt::Return { value: Some(e) } => {
                    if i + 1 != stmts.len() {
                        return Err(unsupported());
                    }
                    let (ret_e, env2) = convert(e, &env_expr, self)?;
                    let mut domains: BTreeMap<String, Domain> = BTreeMap::new();
                    domains.insert("OID".into(), Domain::Oid);
                    for (n, d) in &locals {
                        domains.insert(loc_attr(n), d.clone());
                    }
                    // free columns default their post domains; infer below
                    // only needs locals for the paper's procedures
                    let pseudo = pseudo_schema(&domains)?;
                    let domain = crate::scalar::infer_type(&ret_e, &pseudo, &BTreeMap::new())
                        .unwrap_or(Some(Domain::Integer))
                        .unwrap_or(Domain::Integer);
                    returned = Some((
                        project(
                            env2,
                            vec![
                                (ScalarExpr::attr("OID"), AttrName::from("OID")),
                                (ret_e, AttrName::from("value")),
                            ],
                        ),
                        domain,
                    ));
                }
                _ => return Err(unsupported()),
            }
        }
        let (expr, domain) = returned.ok_or_else(unsupported)?;
        Ok(ImplValue {
            expr,
            cols: vec![(AttrName::from("value"), domain)],
        })
    }

    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn calc_assign(
        &self,
        class: &str,
        env_expr: &mut AlgebraExpr,
        locals: &[(String, Domain)],
        name: &str,
        value: &OoExpr,
        subquery_count: &mut usize,
        convert: &dyn Fn(
            &OoExpr,
            &AlgebraExpr,
            &Translator<'a>,
        ) -> Result<(ScalarExpr, AlgebraExpr)>,
        keep_env: &dyn Fn(
            &AlgebraExpr,
            &[(String, Domain)],
            Option<(&str, ScalarExpr)>,
        ) -> AlgebraExpr,
        locals_for: &dyn Fn(&[(String, Domain)], &AlgebraExpr) -> ExtraCols,
    ) -> Result<(AlgebraExpr, ())> {
        match value {
            OoExpr::Subquery(sub) => {
                let extra = locals_for(locals, env_expr);
                let v = self.translate_impl_select(class, sub, &extra)?;
                if v.cols.len() != 1 {
                    return Err(Error::TypeError(format!(
                        "assignment to `{name}` needs a single-column subquery"
                    )));
                }
                *subquery_count += 1;
                let qattr = format!("q{subquery_count}");
                let v_expr = project(
                    v.expr,
                    vec![
                        (ScalarExpr::attr("OID"), AttrName::from("OID")),
                        (
                            ScalarExpr::attr(v.cols[0].0.as_str()),
                            AttrName::from(qattr.as_str()),
                        ),
                    ],
                );
                let joined = AlgebraExpr::left_join_on(
                    env_expr.clone(),
                    v_expr,
                    vec![("OID".into(), "OID".into())],
                );
                Ok((
                    keep_env(&joined, locals, Some((name, ScalarExpr::attr(qattr)))),
                    (),
                ))
            }
            _ => {
                let (e, env2) = convert(value, env_expr, self)?;
                let domain = locals
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, d)| d.clone())
                    .ok_or_else(|| Error::UnknownName(name.to_string()))?;
                let e = ScalarExpr::Cast(Box::new(e), domain);
                Ok((keep_env(&env2, locals, Some((name, e))), ()))
            }
        }
    }
}

enum OutItem {
    Plain(ScalarExpr, AttrName),
    Agg(AggSpec),
}

fn pseudo_schema(domains: &BTreeMap<String, Domain>) -> Result<Schema> {
    Schema::new(
        domains
            .iter()
            .map(|(n, d)| Attribute {
                name: AttrName::from(n.as_str()),
                domain: d.clone(),
            })
            .collect(),
    )
}

fn walk_paths(e: &OoExpr, f: &mut dyn FnMut(&PathExpr) -> Result<()>) -> Result<()> {
    match e {
        OoExpr::Path(p) => f(p),
        OoExpr::Lit(_) => Ok(()),
        OoExpr::Neg(a) | OoExpr::Not(a) | OoExpr::Like(a, _) | OoExpr::IsNull(a, _) => {
            walk_paths(a, f)
        }
        OoExpr::Bin(_, a, b) => {
            walk_paths(a, f)?;
            walk_paths(b, f)
        }
        OoExpr::Agg(_, args) => {
            for a in args {
                walk_paths(a, f)?;
            }
            Ok(())
        }
        OoExpr::FirstOf(_) | OoExpr::New(_) | OoExpr::Subquery(_) => Err(Error::Unsupported(
            "FIRST OF, NEW, and subqueries do not appear inside select expressions".into(),
        )),
    }
}

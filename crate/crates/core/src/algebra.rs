//! Relational algebra expressions and their set-theoretic evaluation.
//!
//! Operators: product, union, difference, intersect, (left) equi-join,
//! generalized projection (scalar expressions with output names), selection,
//! renaming, and grouped aggregation with SUM and COUNT. Every result is
//! duplicate-free. Join criteria are attribute pairs; a row never matches
//! through NULL. LEFT JOIN pads unmatched right-side attributes with NULL.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::relation::{AttrName, Attribute, Relation, Schema, Tuple};
use crate::scalar::{eval_scalar, infer_type, Params, ScalarExpr};
use crate::value::{Domain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Sum,
    Count,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggSpec {
    pub func: AggFunc,
    /// Ignored for COUNT, which counts tuples.
    pub input: Option<ScalarExpr>,
    pub name: AttrName,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraExpr {
    Relvar(String),
    /// Literal relation; row expressions must not reference attributes.
    Values {
        schema: Schema,
        rows: Vec<Vec<ScalarExpr>>,
    },
    Product(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Union(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Difference(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Intersect(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Join {
        left: Box<AlgebraExpr>,
        right: Box<AlgebraExpr>,
        /// Pairs of (left attribute, right attribute) equated by the join.
        /// The right-side criteria attributes are dropped from the result.
        on: Vec<(AttrName, AttrName)>,
        left_outer: bool,
    },
    Project {
        input: Box<AlgebraExpr>,
        items: Vec<(ScalarExpr, AttrName)>,
    },
    Select {
        input: Box<AlgebraExpr>,
        pred: ScalarExpr,
    },
    Rename {
        input: Box<AlgebraExpr>,
        pairs: Vec<(AttrName, AttrName)>,
    },
    GroupAgg {
        input: Box<AlgebraExpr>,
        group: Vec<AttrName>,
        aggs: Vec<AggSpec>,
    },
}

impl AlgebraExpr {
    pub fn relvar(name: impl Into<String>) -> AlgebraExpr {
        AlgebraExpr::Relvar(name.into())
    }

    pub fn literal(rel: Relation) -> AlgebraExpr {
        let schema = rel.schema().clone();
        let rows = rel
            .iter()
            .map(|t| t.values().iter().cloned().map(ScalarExpr::Lit).collect())
            .collect();
        AlgebraExpr::Values { schema, rows }
    }

    pub fn union(a: AlgebraExpr, b: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn difference(a: AlgebraExpr, b: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Difference(Box::new(a), Box::new(b))
    }

    pub fn intersect(a: AlgebraExpr, b: AlgebraExpr) -> AlgebraExpr {
        AlgebraExpr::Intersect(Box::new(a), Box::new(b))
    }

    pub fn join_on(a: AlgebraExpr, b: AlgebraExpr, on: Vec<(AttrName, AttrName)>) -> AlgebraExpr {
        AlgebraExpr::Join {
            left: Box::new(a),
            right: Box::new(b),
            on,
            left_outer: false,
        }
    }

    pub fn left_join_on(
        a: AlgebraExpr,
        b: AlgebraExpr,
        on: Vec<(AttrName, AttrName)>,
    ) -> AlgebraExpr {
        AlgebraExpr::Join {
            left: Box::new(a),
            right: Box::new(b),
            on,
            left_outer: true,
        }
    }

    /// Equi-join on a same-named attribute on both sides.
    pub fn join_common(a: AlgebraExpr, b: AlgebraExpr, attr: &str) -> AlgebraExpr {
        AlgebraExpr::join_on(a, b, vec![(attr.into(), attr.into())])
    }

    /// Plain projection onto named attributes.
    pub fn project_attrs(input: AlgebraExpr, attrs: &[&str]) -> AlgebraExpr {
        AlgebraExpr::Project {
            input: Box::new(input),
            items: attrs
                .iter()
                .map(|a| (ScalarExpr::attr(*a), AttrName::from(*a)))
                .collect(),
        }
    }

    pub fn select(input: AlgebraExpr, pred: ScalarExpr) -> AlgebraExpr {
        AlgebraExpr::Select {
            input: Box::new(input),
            pred,
        }
    }

    pub fn rename(input: AlgebraExpr, pairs: Vec<(AttrName, AttrName)>) -> AlgebraExpr {
        AlgebraExpr::Rename {
            input: Box::new(input),
            pairs,
        }
    }

    /// Names of every relvar this expression reads.
    pub fn referenced_relvars(&self, out: &mut Vec<String>) {
        match self {
            AlgebraExpr::Relvar(n) => out.push(n.clone()),
            AlgebraExpr::Values { .. } => {}
            AlgebraExpr::Product(a, b)
            | AlgebraExpr::Union(a, b)
            | AlgebraExpr::Difference(a, b)
            | AlgebraExpr::Intersect(a, b) => {
                a.referenced_relvars(out);
                b.referenced_relvars(out);
            }
            AlgebraExpr::Join { left, right, .. } => {
                left.referenced_relvars(out);
                right.referenced_relvars(out);
            }
            AlgebraExpr::Project { input, .. }
            | AlgebraExpr::Select { input, .. }
            | AlgebraExpr::Rename { input, .. }
            | AlgebraExpr::GroupAgg { input, .. } => input.referenced_relvars(out),
        }
    }
}

/// Name resolution and parameter scope for evaluation.
pub trait AlgebraEnv {
    fn relation(&self, name: &str) -> Result<Relation>;
    fn relation_schema(&self, name: &str) -> Result<Schema>;
    fn scalar_params(&self) -> &Params;
    fn param_domains(&self) -> &BTreeMap<String, Domain>;
}

/// Plain map environment for tests and standalone evaluation.
#[derive(Default)]
pub struct MapEnv {
    pub relations: BTreeMap<String, Relation>,
    pub params: Params,
    pub param_domains: BTreeMap<String, Domain>,
}

impl MapEnv {
    pub fn with(relations: &[(&str, Relation)]) -> MapEnv {
        MapEnv {
            relations: relations
                .iter()
                .map(|(n, r)| (n.to_string(), r.clone()))
                .collect(),
            ..Default::default()
        }
    }
}

impl AlgebraEnv for MapEnv {
    fn relation(&self, name: &str) -> Result<Relation> {
        self.relations
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownRelvar(name.into()))
    }

    fn relation_schema(&self, name: &str) -> Result<Schema> {
        self.relations
            .get(name)
            .map(|r| r.schema().clone())
            .ok_or_else(|| Error::UnknownRelvar(name.into()))
    }

    fn scalar_params(&self) -> &Params {
        &self.params
    }

    fn param_domains(&self) -> &BTreeMap<String, Domain> {
        &self.param_domains
    }
}

pub fn eval_algebra(expr: &AlgebraExpr, env: &dyn AlgebraEnv) -> Result<Relation> {
    match expr {
        AlgebraExpr::Relvar(name) => env.relation(name),
        AlgebraExpr::Values { schema, rows } => {
            let empty_schema = Schema::default();
            let empty_tuple = Tuple(vec![]);
            let mut rel = Relation::new(schema.clone());
            for row in rows {
                if row.len() != schema.arity() {
                    return Err(Error::SchemaMismatch(format!(
                        "literal row arity {} vs schema arity {}",
                        row.len(),
                        schema.arity()
                    )));
                }
                let mut vals = Vec::with_capacity(row.len());
                for e in row {
                    vals.push(eval_scalar(
                        e,
                        &empty_schema,
                        &empty_tuple,
                        env.scalar_params(),
                    )?);
                }
                rel.insert(vals)?;
            }
            Ok(rel)
        }
        AlgebraExpr::Product(a, b) => {
            let ra = eval_algebra(a, env)?;
            let rb = eval_algebra(b, env)?;
            let schema = product_schema(ra.schema(), rb.schema())?;
            let mut out = Relation::new(schema);
            for ta in ra.iter() {
                for tb in rb.iter() {
                    let mut vals = ta.values().to_vec();
                    vals.extend(tb.values().iter().cloned());
                    out.insert_unchecked(Tuple(vals));
                }
            }
            Ok(out)
        }
        AlgebraExpr::Union(a, b) | AlgebraExpr::Difference(a, b) | AlgebraExpr::Intersect(a, b) => {
            let ra = eval_algebra(a, env)?;
            let rb = eval_algebra(b, env)?;
            if !ra.schema().setop_compatible(rb.schema()) {
                return Err(Error::SchemaMismatch(format!(
                    "set operands differ: ({}) vs ({})",
                    fmt_schema(ra.schema()),
                    fmt_schema(rb.schema())
                )));
            }
            let mut out = Relation::new(ra.schema().clone());
            match expr {
                AlgebraExpr::Union(..) => {
                    for t in ra.iter().chain(rb.iter()) {
                        out.insert_unchecked(t.clone());
                    }
                }
                AlgebraExpr::Difference(..) => {
                    for t in ra.iter() {
                        if !rb.contains(t) {
                            out.insert_unchecked(t.clone());
                        }
                    }
                }
                AlgebraExpr::Intersect(..) => {
                    for t in ra.iter() {
                        if rb.contains(t) {
                            out.insert_unchecked(t.clone());
                        }
                    }
                }
                _ => unreachable!(),
            }
            Ok(out)
        }
        AlgebraExpr::Join {
            left,
            right,
            on,
            left_outer,
        } => {
            let rl = eval_algebra(left, env)?;
            let rr = eval_algebra(right, env)?;
            eval_join(&rl, &rr, on, *left_outer)
        }
        AlgebraExpr::Project { input, items } => {
            let r = eval_algebra(input, env)?;
            let schema = project_schema(r.schema(), items, env.param_domains())?;
            let mut out = Relation::new(schema);
            for t in r.iter() {
                let mut vals = Vec::with_capacity(items.len());
                for (e, _) in items {
                    vals.push(eval_scalar(e, r.schema(), t, env.scalar_params())?);
                }
                out.insert(vals)?;
            }
            Ok(out)
        }
        AlgebraExpr::Select { input, pred } => {
            let r = eval_algebra(input, env)?;
            let mut out = Relation::new(r.schema().clone());
            for t in r.iter() {
                match eval_scalar(pred, r.schema(), t, env.scalar_params())? {
                    Value::Boolean(true) => out.insert_unchecked(t.clone()),
                    Value::Boolean(false) | Value::Null => {}
                    v => {
                        return Err(Error::TypeError(format!(
                            "WHERE condition evaluated to {}, not boolean",
                            v.render()
                        )))
                    }
                }
            }
            Ok(out)
        }
        AlgebraExpr::Rename { input, pairs } => {
            let r = eval_algebra(input, env)?;
            let schema = rename_schema(r.schema(), pairs)?;
            let mut out = Relation::new(schema);
            for t in r.iter() {
                out.insert_unchecked(t.clone());
            }
            Ok(out)
        }
        AlgebraExpr::GroupAgg { input, group, aggs } => {
            let r = eval_algebra(input, env)?;
            eval_group_aggregate(&r, group, aggs, env)
        }
    }
}

/// Grouped aggregation. One output tuple per distinct combination of group
/// attributes; with an empty group list the whole input is one group and a
/// single tuple always results (NULL SUM / COUNT 0 on empty input).
pub fn eval_group_aggregate(
    rel: &Relation,
    group: &[AttrName],
    aggs: &[AggSpec],
    env: &dyn AlgebraEnv,
) -> Result<Relation> {
    let schema = group_schema(rel.schema(), group, aggs, env.param_domains())?;
    let group_idx: Vec<usize> = group
        .iter()
        .map(|g| {
            rel.schema()
                .index_of(g.as_str())
                .ok_or_else(|| Error::UnknownAttribute(g.to_string()))
        })
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<Vec<Value>, Vec<&Tuple>> = BTreeMap::new();
    if group.is_empty() {
        groups.insert(vec![], rel.iter().collect());
    } else {
        for t in rel.iter() {
            let key: Vec<Value> = group_idx.iter().map(|i| t.values()[*i].clone()).collect();
            groups.entry(key).or_default().push(t);
        }
    }

    let mut out = Relation::new(schema);
    for (key, rows) in groups {
        let mut vals = key;
        for agg in aggs {
            vals.push(eval_one_agg(agg, &rows, rel.schema(), env.scalar_params())?);
        }
        out.insert(vals)?;
    }
    Ok(out)
}

fn eval_one_agg(agg: &AggSpec, rows: &[&Tuple], schema: &Schema, params: &Params) -> Result<Value> {
    match agg.func {
        AggFunc::Count => Ok(Value::Integer(rows.len() as i64)),
        AggFunc::Sum => {
            let expr = agg
                .input
                .as_ref()
                .ok_or_else(|| Error::TypeError("SUM requires an argument".into()))?;
            let mut acc: Option<Value> = None;
            for t in rows {
                let v = eval_scalar(expr, schema, t, params)?;
                acc = match (acc, v) {
                    (a, Value::Null) => a,
                    (None, v) => Some(v),
                    (Some(Value::Integer(x)), Value::Integer(y)) => Some(Value::Integer(
                        x.checked_add(y)
                            .ok_or_else(|| Error::TypeError("SUM overflow".into()))?,
                    )),
                    (Some(a), v) => {
                        let xa = match a {
                            Value::Integer(i) => i as f64,
                            Value::Float(f) => f,
                            v => {
                                return Err(Error::TypeError(format!(
                                    "SUM over non-numeric {}",
                                    v.render()
                                )))
                            }
                        };
                        let xb = match v {
                            Value::Integer(i) => i as f64,
                            Value::Float(f) => f,
                            v => {
                                return Err(Error::TypeError(format!(
                                    "SUM over non-numeric {}",
                                    v.render()
                                )))
                            }
                        };
                        Some(Value::Float(xa + xb))
                    }
                };
            }
            Ok(acc.unwrap_or(Value::Null))
        }
    }
}

fn eval_join(
    rl: &Relation,
    rr: &Relation,
    on: &[(AttrName, AttrName)],
    left_outer: bool,
) -> Result<Relation> {
    let (schema, right_keep) = join_schema(rl.schema(), rr.schema(), on)?;
    let left_idx: Vec<usize> = on
        .iter()
        .map(|(l, _)| rl.schema().index_of(l.as_str()).unwrap())
        .collect();
    let right_idx: Vec<usize> = on
        .iter()
        .map(|(_, r)| rr.schema().index_of(r.as_str()).unwrap())
        .collect();

    let mut out = Relation::new(schema);
    for tl in rl.iter() {
        let mut matched = false;
        for tr in rr.iter() {
            let hit = left_idx.iter().zip(right_idx.iter()).all(|(li, ri)| {
                let a = &tl.values()[*li];
                let b = &tr.values()[*ri];
                !a.is_null() && !b.is_null() && a == b
            });
            if hit {
                matched = true;
                let mut vals = tl.values().to_vec();
                for i in &right_keep {
                    vals.push(tr.values()[*i].clone());
                }
                out.insert_unchecked(Tuple(vals));
            }
        }
        if left_outer && !matched {
            let mut vals = tl.values().to_vec();
            vals.extend(right_keep.iter().map(|_| Value::Null));
            out.insert_unchecked(Tuple(vals));
        }
    }
    Ok(out)
}

/// Static schema of an expression. Checks the same constraints evaluation
/// checks, so a well-typed expression cannot fail on schema grounds later.
pub fn schema_of(expr: &AlgebraExpr, env: &dyn AlgebraEnv) -> Result<Schema> {
    match expr {
        AlgebraExpr::Relvar(name) => env.relation_schema(name),
        AlgebraExpr::Values { schema, .. } => Ok(schema.clone()),
        AlgebraExpr::Product(a, b) => product_schema(&schema_of(a, env)?, &schema_of(b, env)?),
        AlgebraExpr::Union(a, b) | AlgebraExpr::Difference(a, b) | AlgebraExpr::Intersect(a, b) => {
            let sa = schema_of(a, env)?;
            let sb = schema_of(b, env)?;
            if !sa.setop_compatible(&sb) {
                return Err(Error::SchemaMismatch(format!(
                    "set operands differ: ({}) vs ({})",
                    fmt_schema(&sa),
                    fmt_schema(&sb)
                )));
            }
            Ok(sa)
        }
        AlgebraExpr::Join {
            left, right, on, ..
        } => {
            let (schema, _) = join_schema(&schema_of(left, env)?, &schema_of(right, env)?, on)?;
            Ok(schema)
        }
        AlgebraExpr::Project { input, items } => {
            project_schema(&schema_of(input, env)?, items, env.param_domains())
        }
        AlgebraExpr::Select { input, pred } => {
            let s = schema_of(input, env)?;
            match infer_type(pred, &s, env.param_domains())? {
                None | Some(Domain::Boolean) => {}
                Some(d) => {
                    return Err(Error::TypeError(format!(
                        "WHERE condition has type {d}, not BOOLEAN"
                    )))
                }
            }
            Ok(s)
        }
        AlgebraExpr::Rename { input, pairs } => rename_schema(&schema_of(input, env)?, pairs),
        AlgebraExpr::GroupAgg { input, group, aggs } => {
            group_schema(&schema_of(input, env)?, group, aggs, env.param_domains())
        }
    }
}

fn product_schema(a: &Schema, b: &Schema) -> Result<Schema> {
    let mut attrs = a.attrs().to_vec();
    attrs.extend(b.attrs().iter().cloned());
    Schema::new(attrs)
}

fn join_schema(
    left: &Schema,
    right: &Schema,
    on: &[(AttrName, AttrName)],
) -> Result<(Schema, Vec<usize>)> {
    if on.is_empty() {
        return Err(Error::SchemaMismatch(
            "join requires at least one criteria pair".into(),
        ));
    }
    for (l, r) in on {
        let dl = left
            .domain_of(l.as_str())
            .ok_or_else(|| Error::UnknownAttribute(l.to_string()))?;
        let dr = right
            .domain_of(r.as_str())
            .ok_or_else(|| Error::UnknownAttribute(r.to_string()))?;
        if !(dl.storage_eq(dr) || (dl.is_numeric() && dr.is_numeric())) {
            return Err(Error::TypeError(format!(
                "join criteria {l} = {r} compares {dl} with {dr}"
            )));
        }
    }
    let mut attrs = left.attrs().to_vec();
    let mut keep = Vec::new();
    for (i, a) in right.attrs().iter().enumerate() {
        if on.iter().any(|(_, r)| *r == a.name) {
            continue;
        }
        keep.push(i);
        attrs.push(a.clone());
    }
    Ok((Schema::new(attrs)?, keep))
}

fn project_schema(
    input: &Schema,
    items: &[(ScalarExpr, AttrName)],
    param_domains: &BTreeMap<String, Domain>,
) -> Result<Schema> {
    let mut attrs = Vec::with_capacity(items.len());
    for (e, name) in items {
        let domain = infer_type(e, input, param_domains)?.ok_or_else(|| {
            Error::TypeError(format!(
                "projection item `{name}` has no domain; cast the NULL"
            ))
        })?;
        attrs.push(Attribute {
            name: name.clone(),
            domain,
        });
    }
    Schema::new(attrs)
}

fn rename_schema(input: &Schema, pairs: &[(AttrName, AttrName)]) -> Result<Schema> {
    let mut attrs = input.attrs().to_vec();
    for (from, to) in pairs {
        let idx = input
            .index_of(from.as_str())
            .ok_or_else(|| Error::UnknownAttribute(from.to_string()))?;
        attrs[idx].name = to.clone();
    }
    Schema::new(attrs)
}

fn group_schema(
    input: &Schema,
    group: &[AttrName],
    aggs: &[AggSpec],
    param_domains: &BTreeMap<String, Domain>,
) -> Result<Schema> {
    let mut attrs = Vec::new();
    for g in group {
        let idx = input
            .index_of(g.as_str())
            .ok_or_else(|| Error::UnknownAttribute(g.to_string()))?;
        attrs.push(input.attrs()[idx].clone());
    }
    for agg in aggs {
        let domain = match agg.func {
            AggFunc::Count => Domain::Integer,
            AggFunc::Sum => {
                let e = agg
                    .input
                    .as_ref()
                    .ok_or_else(|| Error::TypeError("SUM requires an argument".into()))?;
                match infer_type(e, input, param_domains)? {
                    None | Some(Domain::Integer) => Domain::Integer,
                    Some(Domain::Float) => Domain::Float,
                    Some(d) => return Err(Error::TypeError(format!("SUM over non-numeric {d}"))),
                }
            }
        };
        attrs.push(Attribute {
            name: agg.name.clone(),
            domain,
        });
    }
    Schema::new(attrs)
}

fn fmt_schema(s: &Schema) -> String {
    s.attrs()
        .iter()
        .map(|a| format!("{}:{}", a.name, a.domain))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(&str, Domain)], rows: Vec<Vec<Value>>) -> Relation {
        Relation::from_rows(Schema::of(pairs), rows).unwrap()
    }

    fn ints(rows: &[i64]) -> Relation {
        rel(
            &[("i", Domain::Integer)],
            rows.iter().map(|i| vec![Value::Integer(*i)]).collect(),
        )
    }

    #[test]
    fn union_is_idempotent() {
        let env = MapEnv::with(&[("A", ints(&[1])), ("B", ints(&[1, 2]))]);
        let e = AlgebraExpr::union(AlgebraExpr::relvar("A"), AlgebraExpr::relvar("B"));
        assert_eq!(eval_algebra(&e, &env).unwrap(), ints(&[1, 2]));
    }

    #[test]
    fn left_join_pads_with_null() {
        // a document with no Items rows keeps one output row, Art NULL
        let docs = rel(
            &[("OID", Domain::Oid), ("DocN", Domain::String)],
            vec![
                vec![
                    Value::Oid(crate::value::Oid(1)),
                    Value::String("Ship1".into()),
                ],
                vec![
                    Value::Oid(crate::value::Oid(3)),
                    Value::String("Ship3".into()),
                ],
            ],
        );
        let items = rel(
            &[("OID", Domain::Oid), ("Art", Domain::String)],
            vec![vec![
                Value::Oid(crate::value::Oid(1)),
                Value::String("Axe".into()),
            ]],
        );
        let env = MapEnv::with(&[("D", docs), ("I", items)]);
        let e = AlgebraExpr::left_join_on(
            AlgebraExpr::relvar("D"),
            AlgebraExpr::relvar("I"),
            vec![("OID".into(), "OID".into())],
        );
        let r = eval_algebra(&e, &env).unwrap();
        assert_eq!(r.len(), 2);
        let ship3 = r
            .iter()
            .find(|t| t.values()[1] == Value::String("Ship3".into()))
            .unwrap();
        assert!(ship3.values()[2].is_null());
    }

    #[test]
    fn projection_deduplicates() {
        let items = rel(
            &[("DocN", Domain::String), ("Art", Domain::String)],
            vec![
                vec![Value::String("Ship1".into()), Value::String("Axe".into())],
                vec![Value::String("Ship2".into()), Value::String("Axe".into())],
                vec![Value::String("Ship2".into()), Value::String("Tie".into())],
            ],
        );
        let env = MapEnv::with(&[("I", items)]);
        let e = AlgebraExpr::project_attrs(AlgebraExpr::relvar("I"), &["Art"]);
        let r = eval_algebra(&e, &env).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn group_sum_per_article() {
        // SALES items grouped by Art: Tie 30+20, Axe 50
        let sale_items = rel(
            &[
                ("Art", Domain::String),
                ("Price", Domain::Float),
                ("Pieces", Domain::Integer),
            ],
            vec![
                vec![
                    Value::String("Tie".into()),
                    Value::Float(10.0),
                    Value::Integer(30),
                ],
                vec![
                    Value::String("Tie".into()),
                    Value::Float(11.0),
                    Value::Integer(20),
                ],
                vec![
                    Value::String("Axe".into()),
                    Value::Float(20.0),
                    Value::Integer(50),
                ],
            ],
        );
        let env = MapEnv::default();
        let grouped = eval_group_aggregate(
            &sale_items,
            &["Art".into()],
            &[AggSpec {
                func: AggFunc::Sum,
                input: Some(ScalarExpr::attr("Pieces")),
                name: "Pieces".into(),
            }],
            &env,
        )
        .unwrap();
        let expected = rel(
            &[("Art", Domain::String), ("Pieces", Domain::Integer)],
            vec![
                vec![Value::String("Axe".into()), Value::Integer(50)],
                vec![Value::String("Tie".into()), Value::Integer(50)],
            ],
        );
        assert_eq!(grouped, expected);

        // ungrouped SUM(Pieces * Price) over the same rows is 1520
        let total = eval_group_aggregate(
            &sale_items,
            &[],
            &[AggSpec {
                func: AggFunc::Sum,
                input: Some(ScalarExpr::bin(
                    crate::scalar::BinOp::Mul,
                    ScalarExpr::attr("Pieces"),
                    ScalarExpr::attr("Price"),
                )),
                name: "Amount".into(),
            }],
            &env,
        )
        .unwrap();
        assert_eq!(total.single_value(), Some(&Value::Float(1520.0)));
    }

    #[test]
    fn sum_over_empty_is_null_and_count_zero() {
        let empty = Relation::new(Schema::of(&[("x", Domain::Integer)]));
        let env = MapEnv::default();
        let r = eval_group_aggregate(
            &empty,
            &[],
            &[
                AggSpec {
                    func: AggFunc::Sum,
                    input: Some(ScalarExpr::attr("x")),
                    name: "s".into(),
                },
                AggSpec {
                    func: AggFunc::Count,
                    input: None,
                    name: "c".into(),
                },
            ],
            &env,
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        let t = r.iter().next().unwrap();
        assert!(t.values()[0].is_null());
        assert_eq!(t.values()[1], Value::Integer(0));
    }

    #[test]
    fn setop_schema_mismatch() {
        let env = MapEnv::with(&[
            ("A", ints(&[1])),
            ("B", rel(&[("j", Domain::Integer)], vec![])),
        ]);
        let e = AlgebraExpr::union(AlgebraExpr::relvar("A"), AlgebraExpr::relvar("B"));
        assert!(matches!(
            eval_algebra(&e, &env),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn unknown_relvar_and_attribute() {
        let env = MapEnv::with(&[("A", ints(&[1]))]);
        assert_eq!(
            eval_algebra(&AlgebraExpr::relvar("Z"), &env),
            Err(Error::UnknownRelvar("Z".into()))
        );
        let e = AlgebraExpr::project_attrs(AlgebraExpr::relvar("A"), &["zz"]);
        assert_eq!(
            eval_algebra(&e, &env),
            Err(Error::UnknownAttribute("zz".into()))
        );
    }

    #[test]
    fn null_never_joins() {
        let a = rel(&[("k", Domain::Integer)], vec![vec![Value::Null]]);
        let b = rel(&[("k2", Domain::Integer)], vec![vec![Value::Null]]);
        let env = MapEnv::with(&[("A", a), ("B", b)]);
        let e = AlgebraExpr::join_on(
            AlgebraExpr::relvar("A"),
            AlgebraExpr::relvar("B"),
            vec![("k".into(), "k2".into())],
        );
        assert!(eval_algebra(&e, &env).unwrap().is_empty());
    }
}

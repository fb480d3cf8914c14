//! Scalar expressions embedded in relational operations.
//!
//! NULL handling is two-valued: any comparison, arithmetic, or logical
//! connective with a NULL operand yields NULL, and a NULL condition in a
//! selection drops the row. `IS NULL` and `IFNULL` are the only operators
//! that look through NULL.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::relation::{AttrName, Schema, Tuple};
use crate::value::{Date, Domain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(&self) -> bool {
        use BinOp::*;
        matches!(self, Eq | Ne | Lt | Le | Gt | Ge)
    }

    pub fn symbol(&self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Eq => "=",
            Ne => "<>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            And => "AND",
            Or => "OR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Attr(AttrName),
    Lit(Value),
    /// Named scalar binding supplied by a transaction invocation.
    Param(String),
    Cast(Box<ScalarExpr>, Domain),
    Neg(Box<ScalarExpr>),
    Not(Box<ScalarExpr>),
    Bin(BinOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Like(Box<ScalarExpr>, String),
    IsNull(Box<ScalarExpr>, bool),
    /// `IF(cond, then, else)`: NULL or FALSE condition takes the else arm.
    Cond(Box<ScalarExpr>, Box<ScalarExpr>, Box<ScalarExpr>),
    IfNull(Box<ScalarExpr>, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn attr(name: impl Into<AttrName>) -> ScalarExpr {
        ScalarExpr::Attr(name.into())
    }

    pub fn lit(v: Value) -> ScalarExpr {
        ScalarExpr::Lit(v)
    }

    pub fn bin(op: BinOp, a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
        ScalarExpr::bin(BinOp::Eq, a, b)
    }

    pub fn and(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
        ScalarExpr::bin(BinOp::And, a, b)
    }

    /// Attribute names this expression reads.
    pub fn referenced_attrs(&self, out: &mut Vec<AttrName>) {
        match self {
            ScalarExpr::Attr(a) => out.push(a.clone()),
            ScalarExpr::Lit(_) | ScalarExpr::Param(_) => {}
            ScalarExpr::Cast(e, _)
            | ScalarExpr::Neg(e)
            | ScalarExpr::Not(e)
            | ScalarExpr::Like(e, _)
            | ScalarExpr::IsNull(e, _) => e.referenced_attrs(out),
            ScalarExpr::Bin(_, a, b) | ScalarExpr::IfNull(a, b) => {
                a.referenced_attrs(out);
                b.referenced_attrs(out);
            }
            ScalarExpr::Cond(c, t, e) => {
                c.referenced_attrs(out);
                t.referenced_attrs(out);
                e.referenced_attrs(out);
            }
        }
    }
}

/// Scalar parameter bindings in scope during evaluation.
pub type Params = BTreeMap<String, Value>;

pub fn eval_scalar(
    expr: &ScalarExpr,
    schema: &Schema,
    tuple: &Tuple,
    params: &Params,
) -> Result<Value> {
    match expr {
        ScalarExpr::Attr(a) => match schema.index_of(a.as_str()) {
            Some(idx) => Ok(tuple.0[idx].clone()),
            // names not in the schema may be scalar parameters in scope
            None => params
                .get(a.as_str())
                .cloned()
                .ok_or_else(|| Error::UnknownAttribute(a.to_string())),
        },
        ScalarExpr::Lit(v) => Ok(v.clone()),
        ScalarExpr::Param(p) => params
            .get(p)
            .cloned()
            .ok_or_else(|| Error::UnknownName(p.clone())),
        ScalarExpr::Cast(e, d) => eval_scalar(e, schema, tuple, params)?.coerce_to(d),
        ScalarExpr::Neg(e) => match eval_scalar(e, schema, tuple, params)? {
            Value::Null => Ok(Value::Null),
            Value::Integer(i) => Ok(Value::Integer(-i)),
            Value::Float(x) => Ok(Value::Float(-x)),
            v => Err(Error::TypeError(format!("cannot negate {}", v.render()))),
        },
        ScalarExpr::Not(e) => match eval_scalar(e, schema, tuple, params)? {
            Value::Null => Ok(Value::Null),
            Value::Boolean(b) => Ok(Value::Boolean(!b)),
            v => Err(Error::TypeError(format!("NOT applied to {}", v.render()))),
        },
        ScalarExpr::Bin(op, a, b) => {
            let va = eval_scalar(a, schema, tuple, params)?;
            let vb = eval_scalar(b, schema, tuple, params)?;
            eval_binop(*op, va, vb)
        }
        ScalarExpr::Like(e, pattern) => match eval_scalar(e, schema, tuple, params)? {
            Value::Null => Ok(Value::Null),
            Value::String(s) => Ok(Value::Boolean(like_match(&s, pattern))),
            v => Err(Error::TypeError(format!("LIKE applied to {}", v.render()))),
        },
        ScalarExpr::IsNull(e, negated) => {
            let v = eval_scalar(e, schema, tuple, params)?;
            Ok(Value::Boolean(v.is_null() != *negated))
        }
        ScalarExpr::Cond(c, t, e) => match eval_scalar(c, schema, tuple, params)? {
            Value::Boolean(true) => eval_scalar(t, schema, tuple, params),
            Value::Boolean(false) | Value::Null => eval_scalar(e, schema, tuple, params),
            v => Err(Error::TypeError(format!(
                "IF condition is {}, not boolean",
                v.render()
            ))),
        },
        ScalarExpr::IfNull(a, b) => {
            let va = eval_scalar(a, schema, tuple, params)?;
            if va.is_null() {
                eval_scalar(b, schema, tuple, params)
            } else {
                Ok(va)
            }
        }
    }
}

fn eval_binop(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use BinOp::*;
    match op {
        And | Or => {
            let to_bool = |v: &Value| -> Result<Option<bool>> {
                match v {
                    Value::Null => Ok(None),
                    Value::Boolean(b) => Ok(Some(*b)),
                    v => Err(Error::TypeError(format!(
                        "{} applied to {}",
                        op.symbol(),
                        v.render()
                    ))),
                }
            };
            match (to_bool(&a)?, to_bool(&b)?) {
                (Some(x), Some(y)) => Ok(Value::Boolean(if op == And { x && y } else { x || y })),
                _ => Ok(Value::Null),
            }
        }
        Add | Sub | Mul | Div => {
            if a.is_null() || b.is_null() {
                return Ok(Value::Null);
            }
            arith(op, a, b)
        }
        Eq | Ne | Lt | Le | Gt | Ge => {
            if a.is_null() || b.is_null() {
                return Ok(Value::Null);
            }
            let ord = compare(&a, &b)?;
            let r = match op {
                Eq => ord == std::cmp::Ordering::Equal,
                Ne => ord != std::cmp::Ordering::Equal,
                Lt => ord == std::cmp::Ordering::Less,
                Le => ord != std::cmp::Ordering::Greater,
                Gt => ord == std::cmp::Ordering::Greater,
                Ge => ord != std::cmp::Ordering::Less,
                _ => unreachable!(),
            };
            Ok(Value::Boolean(r))
        }
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use BinOp::*;
    match (&a, &b) {
        (Value::Integer(x), Value::Integer(y)) => {
            let r = match op {
                Add => x.checked_add(*y),
                Sub => x.checked_sub(*y),
                Mul => x.checked_mul(*y),
                Div => {
                    if *y == 0 {
                        return Err(Error::DivisionByZero);
                    }
                    x.checked_div(*y)
                }
                _ => unreachable!(),
            };
            r.map(Value::Integer)
                .ok_or_else(|| Error::TypeError("integer overflow".into()))
        }
        (Value::Integer(_) | Value::Float(_), Value::Integer(_) | Value::Float(_)) => {
            let x = as_f64(&a);
            let y = as_f64(&b);
            let r = match op {
                Add => x + y,
                Sub => x - y,
                Mul => x * y,
                Div => {
                    if y == 0.0 {
                        return Err(Error::DivisionByZero);
                    }
                    x / y
                }
                _ => unreachable!(),
            };
            Ok(Value::Float(r))
        }
        _ => Err(Error::TypeError(format!(
            "{} {} {} is not defined",
            a.render(),
            op.symbol(),
            b.render()
        ))),
    }
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Integer(i) => *i as f64,
        Value::Float(x) => *x,
        _ => unreachable!(),
    }
}

/// Comparison across domains: numerics mix, DATETIME accepts a string on
/// the other side (parsed as a date), OIDs and booleans only support
/// equality, everything else must match domains.
fn compare(a: &Value, b: &Value) -> Result<std::cmp::Ordering> {
    use Value::*;
    match (a, b) {
        (Integer(_) | Float(_), Integer(_) | Float(_)) => Ok(as_f64(a).total_cmp(&as_f64(b))),
        (String(x), String(y)) => Ok(x.cmp(y)),
        (DateTime(x), DateTime(y)) => Ok(x.cmp(y)),
        (DateTime(x), String(s)) => Ok(x.cmp(&Date::parse(s)?)),
        (String(s), DateTime(y)) => Ok(Date::parse(s)?.cmp(y)),
        (Boolean(x), Boolean(y)) => Ok(x.cmp(y)),
        (Oid(x), Oid(y)) => Ok(x.cmp(y)),
        _ => Err(Error::TypeError(format!(
            "cannot compare {} with {}",
            a.render(),
            b.render()
        ))),
    }
}

/// `%` matches any substring; no other wildcard exists.
pub fn like_match(s: &str, pattern: &str) -> bool {
    let parts: Vec<&str> = pattern.split('%').collect();
    if parts.len() == 1 {
        return s == pattern;
    }
    let mut rest = s;
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            continue;
        }
        if i == 0 {
            match rest.strip_prefix(part) {
                Some(r) => rest = r,
                None => return false,
            }
        } else if i == parts.len() - 1 {
            return rest.ends_with(part);
        } else {
            match rest.find(part) {
                Some(pos) => rest = &rest[pos + part.len()..],
                None => return false,
            }
        }
    }
    true
}

/// Static type of an expression against a schema. `None` means the type is
/// undetermined (a bare NULL literal).
pub fn infer_type(
    expr: &ScalarExpr,
    schema: &Schema,
    param_domains: &BTreeMap<String, Domain>,
) -> Result<Option<Domain>> {
    match expr {
        ScalarExpr::Attr(a) => match schema.domain_of(a.as_str()) {
            Some(d) => Ok(Some(d.clone())),
            None => param_domains
                .get(a.as_str())
                .cloned()
                .map(Some)
                .ok_or_else(|| Error::UnknownAttribute(a.to_string())),
        },
        ScalarExpr::Lit(v) => Ok(v.domain()),
        ScalarExpr::Param(p) => param_domains
            .get(p)
            .cloned()
            .map(Some)
            .ok_or_else(|| Error::UnknownName(p.clone())),
        ScalarExpr::Cast(e, d) => {
            infer_type(e, schema, param_domains)?;
            Ok(Some(d.clone()))
        }
        ScalarExpr::Neg(e) => {
            let t = infer_type(e, schema, param_domains)?;
            match t {
                None | Some(Domain::Integer) | Some(Domain::Float) => Ok(t),
                Some(d) => Err(Error::TypeError(format!("cannot negate {d}"))),
            }
        }
        ScalarExpr::Not(e) => {
            match infer_type(e, schema, param_domains)? {
                None | Some(Domain::Boolean) => {}
                Some(d) => return Err(Error::TypeError(format!("NOT applied to {d}"))),
            }
            Ok(Some(Domain::Boolean))
        }
        ScalarExpr::Bin(op, a, b) => {
            let ta = infer_type(a, schema, param_domains)?;
            let tb = infer_type(b, schema, param_domains)?;
            infer_binop(*op, ta, tb)
        }
        ScalarExpr::Like(e, _) => {
            match infer_type(e, schema, param_domains)? {
                None | Some(Domain::String) => {}
                Some(d) => return Err(Error::TypeError(format!("LIKE applied to {d}"))),
            }
            Ok(Some(Domain::Boolean))
        }
        ScalarExpr::IsNull(e, _) => {
            infer_type(e, schema, param_domains)?;
            Ok(Some(Domain::Boolean))
        }
        ScalarExpr::Cond(c, t, e) => {
            match infer_type(c, schema, param_domains)? {
                None | Some(Domain::Boolean) => {}
                Some(d) => return Err(Error::TypeError(format!("IF condition is {d}"))),
            }
            let tt = infer_type(t, schema, param_domains)?;
            let te = infer_type(e, schema, param_domains)?;
            unify(tt, te)
        }
        ScalarExpr::IfNull(a, b) => {
            let ta = infer_type(a, schema, param_domains)?;
            let tb = infer_type(b, schema, param_domains)?;
            unify(ta, tb)
        }
    }
}

fn unify(a: Option<Domain>, b: Option<Domain>) -> Result<Option<Domain>> {
    match (a, b) {
        (None, t) | (t, None) => Ok(t),
        (Some(x), Some(y)) if x.storage_eq(&y) => Ok(Some(x)),
        (Some(Domain::Integer), Some(Domain::Float))
        | (Some(Domain::Float), Some(Domain::Integer)) => Ok(Some(Domain::Float)),
        (Some(x), Some(y)) => Err(Error::TypeError(format!("cannot unify {x} with {y}"))),
    }
}

fn infer_binop(op: BinOp, a: Option<Domain>, b: Option<Domain>) -> Result<Option<Domain>> {
    use BinOp::*;
    let numeric =
        |t: &Option<Domain>| matches!(t, None | Some(Domain::Integer) | Some(Domain::Float));
    match op {
        Add | Sub | Mul | Div => {
            if !numeric(&a) || !numeric(&b) {
                return Err(Error::TypeError(format!(
                    "arithmetic over {} and {}",
                    fmt_t(&a),
                    fmt_t(&b)
                )));
            }
            match (a, b) {
                (Some(Domain::Integer), Some(Domain::Integer)) => Ok(Some(Domain::Integer)),
                (None, t) | (t, None) => Ok(t),
                _ => Ok(Some(Domain::Float)),
            }
        }
        And | Or => {
            for t in [&a, &b] {
                match t {
                    None | Some(Domain::Boolean) => {}
                    Some(d) => {
                        return Err(Error::TypeError(format!("{} applied to {d}", op.symbol())))
                    }
                }
            }
            Ok(Some(Domain::Boolean))
        }
        Eq | Ne | Lt | Le | Gt | Ge => {
            let comparable = match (&a, &b) {
                (None, _) | (_, None) => true,
                (Some(x), Some(y)) if x.storage_eq(y) => true,
                (Some(x), Some(y)) if x.is_numeric() && y.is_numeric() => true,
                (Some(Domain::DateTime), Some(Domain::String))
                | (Some(Domain::String), Some(Domain::DateTime)) => true,
                _ => false,
            };
            if !comparable {
                return Err(Error::TypeError(format!(
                    "cannot compare {} with {}",
                    fmt_t(&a),
                    fmt_t(&b)
                )));
            }
            if op.is_comparison() && !matches!(op, Eq | Ne) {
                if let (Some(x), _) | (_, Some(x)) = (&a, &b) {
                    if matches!(x, Domain::Boolean | Domain::Oid | Domain::Ref(_)) {
                        return Err(Error::TypeError(format!("{x} admits only = and <>")));
                    }
                }
            }
            Ok(Some(Domain::Boolean))
        }
    }
}

fn fmt_t(t: &Option<Domain>) -> String {
    match t {
        None => "NULL".into(),
        Some(d) => d.to_string(),
    }
}

impl fmt::Display for ScalarExpr {
    /// Machine-text form; parseable back by the machine expression parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Attr(a) => write!(f, "{}", crate::lex::quote_ident(a.as_str())),
            ScalarExpr::Lit(v) => match v {
                Value::Null => write!(f, "NULL"),
                Value::String(s) => write!(f, "{}", crate::lex::quote_string(s)),
                Value::Boolean(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
                Value::DateTime(d) => write!(f, "\"{d}\""),
                Value::Float(x) => {
                    if x.fract() == 0.0 && x.is_finite() {
                        write!(f, "{x:.1}")
                    } else {
                        write!(f, "{x}")
                    }
                }
                Value::Integer(i) => write!(f, "{i}"),
                // no OID literal syntax exists; this arm only shows up in
                // debug output, never in persisted text
                Value::Oid(o) => write!(f, "{o}"),
            },
            ScalarExpr::Param(p) => write!(f, "{}", crate::lex::quote_ident(p)),
            ScalarExpr::Cast(e, d) => write!(f, "CAST({e} AS {d})"),
            ScalarExpr::Neg(e) => write!(f, "(- {e})"),
            ScalarExpr::Not(e) => write!(f, "(NOT {e})"),
            ScalarExpr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ScalarExpr::Like(e, p) => write!(f, "({e} LIKE {})", crate::lex::quote_string(p)),
            ScalarExpr::IsNull(e, false) => write!(f, "({e} IS NULL)"),
            ScalarExpr::IsNull(e, true) => write!(f, "({e} IS NOT NULL)"),
            ScalarExpr::Cond(c, t, e) => write!(f, "IF({c}, {t}, {e})"),
            ScalarExpr::IfNull(a, b) => write!(f, "IFNULL({a}, {b})"),
        }
    }
}

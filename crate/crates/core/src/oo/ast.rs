//! Command ASTs of the object language: class creation, implementation,
//! object creation, method execution, and data access with path expressions.
//!
//! Names are recorded verbatim; resolution happens against the class
//! catalog. The `Display` impls print a canonical one-line form that parses
//! back to an identical tree — the persistence layer stores DDL this way.

use std::fmt;

use crate::lex::{quote_ident, quote_string};
use crate::machine::MachineCmd;
use crate::scalar::BinOp;
use crate::value::{Domain, Value};

/// A declared type: a base domain or a class used as a reference domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeName {
    Domain(Domain),
    Class(String),
}

impl TypeName {
    /// The machine domain this type stores as.
    pub fn storage_domain(&self) -> Domain {
        match self {
            TypeName::Domain(d) => d.clone(),
            TypeName::Class(c) => Domain::Ref(c.clone()),
        }
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Domain(d) => write!(f, "{d}"),
            TypeName::Class(c) => write!(f, "{}", quote_ident(c)),
        }
    }
}

/// Head of a path: a named thing (class, alias, component, parameter,
/// local), the implicit subject of a selection or constructor (`.Name`),
/// or the explicit `this`.
#[derive(Debug, Clone, PartialEq)]
pub enum PathHead {
    Name(String),
    Implicit,
    This,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub name: String,
    pub selection: Option<Selection>,
}

/// Dotted path with optional object selections on the head and on
/// reference-typed segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PathExpr {
    pub head: PathHead,
    pub head_selection: Option<Selection>,
    pub segments: Vec<PathSegment>,
}

impl PathExpr {
    pub fn name(head: impl Into<String>) -> PathExpr {
        PathExpr {
            head: PathHead::Name(head.into()),
            head_selection: None,
            segments: Vec::new(),
        }
    }

    /// A head name with no selections and no segments (a bare identifier).
    pub fn bare_name(&self) -> Option<&str> {
        match (&self.head, &self.head_selection, self.segments.is_empty()) {
            (PathHead::Name(n), None, true) => Some(n),
            _ => None,
        }
    }

    /// Segment names, ignoring selections.
    pub fn segment_names(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn has_selection(&self) -> bool {
        self.head_selection.is_some() || self.segments.iter().any(|s| s.selection.is_some())
    }
}

/// Object selection `<c1, c2, …>`: conditions joined by the low-priority
/// comma (each condition computes an OID set; comma intersects them).
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub conditions: Vec<OoExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OoAggFunc {
    Sum,
    Count,
}

/// Expression of the object language.
#[derive(Debug, Clone, PartialEq)]
pub enum OoExpr {
    Path(PathExpr),
    Lit(Value),
    Neg(Box<OoExpr>),
    Not(Box<OoExpr>),
    Bin(BinOp, Box<OoExpr>, Box<OoExpr>),
    Like(Box<OoExpr>, String),
    IsNull(Box<OoExpr>, bool),
    /// `SUM(e)` (or `SUM(a, b)`, read as `SUM(a * b)`) and `COUNT()`;
    /// legal only in select lists.
    Agg(OoAggFunc, Vec<OoExpr>),
    /// Reference to the single object of a group; cardinality checked at
    /// run time.
    FirstOf(Box<PathExpr>),
    /// Object creation as an expression, yielding the new reference.
    New(Box<NewCmd>),
    /// `x := SELECT …` — scalar or relation-valued subquery.
    Subquery(Box<SelectAst>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectAst {
    pub items: Vec<(OoExpr, Option<String>)>,
    pub from: PathExpr,
    pub alias: Option<String>,
    pub wher: Option<OoExpr>,
    pub group_by: Vec<PathExpr>,
}

/// Procedure statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Declare {
        name: String,
        ty: TypeName,
        init: Option<OoExpr>,
    },
    Assign {
        target: PathExpr,
        value: OoExpr,
    },
    If {
        cond: OoExpr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: OoExpr,
        body: Vec<Stmt>,
    },
    Return {
        value: Option<OoExpr>,
    },
    /// Bare `M(args);` resolves against `this`.
    Call {
        method: String,
        args: Vec<OoExpr>,
    },
    New(NewCmd),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewCmd {
    pub class: String,
    /// `WITH SET` assignments, run as a constructor for the new object.
    pub sets: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecl {
    pub name: String,
    pub kind: ComponentKindDecl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKindDecl {
    Scalar(TypeName),
    Complex {
        attrs: Vec<(String, TypeName)>,
        keys: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<(String, TypeName)>,
}

/// `REFERENCE [component] (.a, …) ON class (.b, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefConstraintDecl {
    pub component: Option<String>,
    pub attrs: Vec<String>,
    pub target_class: String,
    pub target_attrs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealizeBody {
    Stored,
    Calculated(SelectAst),
    /// Braced procedure; with parameters for methods, without for
    /// procedure-valued components.
    Procedure {
        params: Vec<(String, TypeName)>,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandAst {
    ClassCreate {
        name: String,
        parents: Vec<String>,
        components: Vec<ComponentDecl>,
        methods: Vec<MethodDecl>,
        keys: Vec<Vec<String>>,
        refs: Vec<RefConstraintDecl>,
    },
    Realize {
        class: String,
        members: Vec<String>,
        body: RealizeBody,
    },
    New(NewCmd),
    MethodExec {
        group: PathExpr,
        method: String,
        args: Vec<OoExpr>,
    },
    Select(SelectAst),
    Insert {
        target: PathExpr,
        attrs: Vec<String>,
        rows: Vec<Vec<OoExpr>>,
    },
    Update {
        target: PathExpr,
        sets: Vec<(String, OoExpr)>,
    },
    Delete {
        target: PathExpr,
    },
    /// Raw machine command, dispatched by its leading keyword.
    Machine(MachineCmd),
}

// ---------------------------------------------------------------------------
// canonical printing
// ---------------------------------------------------------------------------

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.head {
            PathHead::Name(n) => write!(f, "{}", quote_ident(n))?,
            PathHead::This => write!(f, "this")?,
            PathHead::Implicit => {}
        }
        if let Some(sel) = &self.head_selection {
            write!(f, "{sel}")?;
        }
        for seg in &self.segments {
            write!(f, ".{}", quote_ident(&seg.name))?;
            if let Some(sel) = &seg.selection {
                write!(f, "{sel}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Selection {
    /// Canonical form uses the `[…]` bracket synonym: unlike `<…>` it can
    /// never collide with a `>` comparison when read back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for OoExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OoExpr::Path(p) => write!(f, "{p}"),
            OoExpr::Lit(v) => match v {
                Value::Null => write!(f, "NULL"),
                Value::String(s) => write!(f, "{}", quote_string(s)),
                Value::Boolean(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
                Value::DateTime(d) => write!(f, "\"{d}\""),
                Value::Float(x) if x.fract() == 0.0 && x.is_finite() => write!(f, "{x:.1}"),
                other => write!(f, "{}", other.render()),
            },
            OoExpr::Neg(e) => write!(f, "(- {e})"),
            OoExpr::Not(e) => write!(f, "(NOT {e})"),
            OoExpr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            OoExpr::Like(e, p) => write!(f, "({e} LIKE {})", quote_string(p)),
            OoExpr::IsNull(e, false) => write!(f, "({e} IS NULL)"),
            OoExpr::IsNull(e, true) => write!(f, "({e} IS NOT NULL)"),
            OoExpr::Agg(func, args) => {
                let name = match func {
                    OoAggFunc::Sum => "SUM",
                    OoAggFunc::Count => "COUNT",
                };
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            OoExpr::FirstOf(p) => write!(f, "(FIRST OF {p})"),
            OoExpr::New(n) => write!(f, "({})", fmt_new(n)),
            OoExpr::Subquery(s) => write!(f, "{s}"),
        }
    }
}

fn fmt_new(n: &NewCmd) -> String {
    let mut out = format!("NEW {}", quote_ident(&n.class));
    if !n.sets.is_empty() {
        out.push_str(" WITH SET ");
        let parts: Vec<String> = n
            .sets
            .iter()
            .map(|s| match s {
                Stmt::Assign { target, value } => format!("{target} := {value}"),
                // parsers only build assignments here; render anything else
                // as its statement form rather than failing the formatter
                other => other.to_string().trim_end_matches(';').to_string(),
            })
            .collect();
        out.push_str(&parts.join(", "));
    }
    out
}

impl fmt::Display for SelectAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT ")?;
        for (i, (e, name)) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
            if let Some(n) = name {
                write!(f, " AS {}", quote_ident(n))?;
            }
        }
        write!(f, " FROM {}", self.from)?;
        if let Some(a) = &self.alias {
            write!(f, " {a}")?;
        }
        if let Some(w) = &self.wher {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY ")?;
            for (i, g) in self.group_by.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{g}")?;
            }
        }
        Ok(())
    }
}

fn fmt_stmts(stmts: &[Stmt]) -> String {
    stmts
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Declare { name, ty, init } => {
                write!(f, "DECLARE {} {ty}", quote_ident(name))?;
                if let Some(e) = init {
                    write!(f, " := {e}")?;
                }
                write!(f, ";")
            }
            Stmt::Assign { target, value } => write!(f, "{target} := {value};"),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                write!(f, "IF ({cond}) THEN BEGIN {} END", fmt_stmts(then_body))?;
                if !else_body.is_empty() {
                    write!(f, " ELSE BEGIN {} END", fmt_stmts(else_body))?;
                }
                write!(f, ";")
            }
            Stmt::While { cond, body } => {
                write!(f, "WHILE ({cond}) BEGIN {} END;", fmt_stmts(body))
            }
            Stmt::Return { value } => match value {
                Some(e) => write!(f, "RETURN {e};"),
                None => write!(f, "RETURN;"),
            },
            Stmt::Call { method, args } => {
                write!(f, "{}(", quote_ident(method))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ");")
            }
            Stmt::New(n) => write!(f, "{};", fmt_new(n)),
        }
    }
}

impl fmt::Display for CommandAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandAst::ClassCreate {
                name,
                parents,
                components,
                methods,
                keys,
                refs,
            } => {
                write!(f, "CLASS {}", quote_ident(name))?;
                if !parents.is_empty() {
                    write!(
                        f,
                        " EXTEND {}",
                        parents
                            .iter()
                            .map(|p| quote_ident(p))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )?;
                }
                write!(f, " (")?;
                let mut first = true;
                for c in components {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    match &c.kind {
                        ComponentKindDecl::Scalar(t) => write!(f, "{} {t}", quote_ident(&c.name))?,
                        ComponentKindDecl::Complex { attrs, keys } => {
                            write!(f, "{} SET OF (", quote_ident(&c.name))?;
                            for (i, (a, t)) in attrs.iter().enumerate() {
                                if i > 0 {
                                    write!(f, ", ")?;
                                }
                                write!(f, "{} {t}", quote_ident(a))?;
                            }
                            write!(f, ")")?;
                            if !keys.is_empty() {
                                write!(
                                    f,
                                    " KEY ({})",
                                    keys.iter()
                                        .map(|k| quote_ident(k))
                                        .collect::<Vec<_>>()
                                        .join(", ")
                                )?;
                            }
                        }
                    }
                }
                for m in methods {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{}(", quote_ident(&m.name))?;
                    for (i, (p, t)) in m.params.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{} {t}", quote_ident(p))?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ")")?;
                for k in keys {
                    write!(
                        f,
                        " KEY ({})",
                        k.iter()
                            .map(|a| quote_ident(a))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )?;
                }
                for r in refs {
                    write!(f, " REFERENCE ")?;
                    if let Some(c) = &r.component {
                        write!(f, "{} ", quote_ident(c))?;
                    }
                    write!(
                        f,
                        "({}) ON {} ({})",
                        r.attrs
                            .iter()
                            .map(|a| format!(".{}", quote_ident(a)))
                            .collect::<Vec<_>>()
                            .join(", "),
                        quote_ident(&r.target_class),
                        r.target_attrs
                            .iter()
                            .map(|a| format!(".{}", quote_ident(a)))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )?;
                }
                write!(f, ";")
            }
            CommandAst::Realize {
                class,
                members,
                body,
            } => {
                write!(
                    f,
                    "ALTER {} REALIZE {}",
                    quote_ident(class),
                    members
                        .iter()
                        .map(|m| quote_ident(m))
                        .collect::<Vec<_>>()
                        .join(", ")
                )?;
                match body {
                    RealizeBody::Stored => write!(f, " AS STORED;"),
                    RealizeBody::Calculated(s) => write!(f, " AS {s};"),
                    RealizeBody::Procedure { params, body } => {
                        if !params.is_empty() {
                            write!(f, "(")?;
                            for (i, (p, t)) in params.iter().enumerate() {
                                if i > 0 {
                                    write!(f, ", ")?;
                                }
                                write!(f, "{} {t}", quote_ident(p))?;
                            }
                            write!(f, ")")?;
                        }
                        write!(f, " AS {{ {} }};", fmt_stmts(body))
                    }
                }
            }
            CommandAst::New(n) => write!(f, "{};", fmt_new(n)),
            CommandAst::MethodExec {
                group,
                method,
                args,
            } => {
                write!(f, "EXEC {group}.{}(", quote_ident(method))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ");")
            }
            CommandAst::Select(s) => write!(f, "{s};"),
            CommandAst::Insert {
                target,
                attrs,
                rows,
            } => {
                write!(f, "INSERT INTO {target} (")?;
                write!(
                    f,
                    "{}",
                    attrs
                        .iter()
                        .map(|a| quote_ident(a))
                        .collect::<Vec<_>>()
                        .join(", ")
                )?;
                write!(f, ") VALUES ")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(
                        f,
                        "({})",
                        row.iter()
                            .map(|e| e.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    )?;
                }
                write!(f, ";")
            }
            CommandAst::Update { target, sets } => {
                write!(f, "UPDATE {target} SET (")?;
                for (i, (a, e)) in sets.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, ".{} := {e}", quote_ident(a))?;
                }
                write!(f, ");")
            }
            CommandAst::Delete { target } => write!(f, "DELETE FROM {target};"),
            CommandAst::Machine(m) => write!(f, "{m}"),
        }
    }
}

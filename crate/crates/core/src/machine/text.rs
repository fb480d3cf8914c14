//! Text form of machine commands and rvalue expressions.
//!
//! This is the syntax the shell accepts for raw machine commands and the
//! format the catalog file stores definitions in. The printer and the
//! parser are exact inverses on parsed trees.
//!
//! ```text
//! CREATE R (a: INTEGER, b: STRING) KEY(a) FKEY(b) ON S(k);
//! CREATE V AS (R WHERE (a > 1))[a];
//! SET R := R UNION RELATION (a: INTEGER, b: STRING) {(1, "x")};
//! GET (R JOIN S ON (b = k))[a, k];
//! TRANS t (x: INTEGER, g: (OID: dOID)) AS begin ... end;
//! EXEC t (5, R[OID]);
//! ```

use std::fmt;

use crate::algebra::{AggFunc, AggSpec, AlgebraExpr};
use crate::error::{Error, Result};
use crate::lex::{lex, quote_ident, Tok, Token};
use crate::relation::{AttrName, Attribute, Schema};
use crate::scalar::ScalarExpr;
use crate::value::{Domain, Value};

use super::{
    ExecArg, ForeignKey, MachineCmd, ParamKind, ProcDef, RelVarDef, RelVarKind, TransParam,
    TransactionDef, VirtualDef,
};

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Cursor> {
        Ok(Cursor {
            toks: lex(src)?,
            pos: 0,
        })
    }

    pub fn from_tokens(toks: Vec<Token>) -> Cursor {
        Cursor { toks, pos: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    pub fn peek_n(&self, off: usize) -> Option<&Token> {
        self.toks.get(self.pos + off)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.toks.get(self.pos + off)
    }

    pub fn checkpoint(&self) -> usize {
        self.pos
    }

    pub fn restore(&mut self, cp: usize) {
        self.pos = cp;
    }

    pub fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, detail: impl Into<String>) -> Error {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => Error::Syntax {
                line: t.line,
                col: t.col,
                detail: detail.into(),
            },
            None => Error::Syntax {
                line: 1,
                col: 1,
                detail: detail.into(),
            },
        }
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek().map(|t| t.is_sym(s)).unwrap_or(false) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().map(|t| t.is_kw(kw)).unwrap_or(false) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    pub fn peek_kw(&self, kw: &str) -> bool {
        self.peek().map(|t| t.is_kw(kw)).unwrap_or(false)
    }

    fn peek_kw_at(&self, off: usize, kw: &str) -> bool {
        self.peek_at(off).map(|t| t.is_kw(kw)).unwrap_or(false)
    }

    /// A plain (undotted, not dot-led, not reserved) identifier.
    pub fn expect_ident(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Name { text, leading_dot },
                ..
            }) if !leading_dot => {
                if crate::lex::is_reserved(&text) {
                    return Err(self.error(format!("`{text}` is a reserved word")));
                }
                self.pos += 1;
                Ok(text)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    /// A name that may contain dots (relvar and attribute names of the
    /// machine level).
    pub fn expect_name(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Name { text, leading_dot },
                ..
            }) if !leading_dot => {
                if crate::lex::is_reserved(&text) {
                    return Err(self.error(format!("`{text}` is a reserved word")));
                }
                self.pos += 1;
                Ok(text)
            }
            _ => Err(self.error("expected a name")),
        }
    }
}

/// Parse a `;`-separated machine command sequence.
pub fn parse_commands(src: &str) -> Result<Vec<MachineCmd>> {
    let mut cur = Cursor::new(src)?;
    let mut out = Vec::new();
    while !cur.at_end() {
        out.push(parse_command(&mut cur)?);
    }
    Ok(out)
}

/// Parse exactly one machine command (with its trailing `;`).
pub fn parse_one_command(src: &str) -> Result<MachineCmd> {
    let mut cur = Cursor::new(src)?;
    let cmd = parse_command(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after command"));
    }
    Ok(cmd)
}

pub fn parse_rvalue_text(src: &str) -> Result<AlgebraExpr> {
    let mut cur = Cursor::new(src)?;
    let e = parse_rvalue(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after expression"));
    }
    Ok(e)
}

pub fn parse_command(cur: &mut Cursor) -> Result<MachineCmd> {
    let cmd = parse_command_body(cur)?;
    if !cur.eat_sym(";") {
        return Err(Error::UnterminatedCommand);
    }
    Ok(cmd)
}

fn parse_command_body(cur: &mut Cursor) -> Result<MachineCmd> {
    if cur.eat_kw("CREATE") {
        return parse_create(cur);
    }
    if cur.eat_kw("SET") {
        let name = cur.expect_name()?;
        if !cur.eat_sym(":=") {
            cur.expect_sym("=")?;
        }
        let rvalue = parse_rvalue(cur)?;
        return Ok(MachineCmd::Assign { name, rvalue });
    }
    if cur.eat_kw("INSERT") {
        let name = cur.expect_name()?;
        // optional attribute list, then VALUES rows or a general rvalue
        let mut attrs = None;
        let cp = cur.checkpoint();
        if cur.eat_sym("(") {
            match parse_name_list(cur) {
                Ok(list) if cur.eat_sym(")") && cur.peek_kw("VALUES") => {
                    attrs = Some(list.into_iter().map(AttrName::from).collect());
                }
                _ => cur.restore(cp),
            }
        }
        if cur.eat_kw("VALUES") {
            let mut rows = Vec::new();
            loop {
                cur.expect_sym("(")?;
                let mut row = Vec::new();
                if !cur.eat_sym(")") {
                    loop {
                        row.push(parse_scalar(cur)?);
                        if !cur.eat_sym(",") {
                            break;
                        }
                    }
                    cur.expect_sym(")")?;
                }
                rows.push(row);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            return Ok(MachineCmd::InsertValues { name, attrs, rows });
        }
        let rvalue = parse_rvalue(cur)?;
        return Ok(MachineCmd::Insert { name, rvalue });
    }
    if cur.eat_kw("UPDATE") {
        let name = cur.expect_name()?;
        cur.expect_kw("SET")?;
        let mut sets = Vec::new();
        loop {
            let attr = cur.expect_name()?;
            if !cur.eat_sym(":=") {
                cur.expect_sym("=")?;
            }
            sets.push((AttrName::from(attr), parse_scalar(cur)?));
            if !cur.eat_sym(",") {
                break;
            }
        }
        let wher = if cur.eat_kw("WHERE") {
            Some(parse_scalar(cur)?)
        } else {
            None
        };
        return Ok(MachineCmd::Update { name, sets, wher });
    }
    if cur.eat_kw("DELETE") {
        let name = cur.expect_name()?;
        let wher = if cur.eat_kw("WHERE") {
            Some(parse_scalar(cur)?)
        } else {
            None
        };
        return Ok(MachineCmd::Delete { name, wher });
    }
    if cur.eat_kw("GET") {
        let rvalue = parse_rvalue(cur)?;
        return Ok(MachineCmd::Get { rvalue });
    }
    if cur.eat_kw("TRANS") {
        let name = cur.expect_name()?;
        cur.expect_sym("(")?;
        let mut params = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                let pname = cur.expect_ident()?;
                cur.expect_sym(":")?;
                let kind = if cur.eat_sym("(") {
                    let schema = parse_schema_body(cur)?;
                    cur.expect_sym(")")?;
                    ParamKind::Relation(schema)
                } else {
                    ParamKind::Scalar(parse_domain(cur)?)
                };
                params.push(TransParam { name: pname, kind });
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
        cur.expect_kw("AS")?;
        let body = parse_block(cur)?;
        return Ok(MachineCmd::DefTrans(TransactionDef {
            name,
            params,
            body,
            generated: false,
            seq: 0,
        }));
    }
    if cur.eat_kw("EXEC") {
        if cur.peek_kw("BEGIN") {
            let body = parse_block(cur)?;
            return Ok(MachineCmd::ExecBlock { body });
        }
        let name = cur.expect_name()?;
        cur.expect_sym("(")?;
        let mut args = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                args.push(parse_exec_arg(cur)?);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
        return Ok(MachineCmd::ExecTrans { name, args });
    }
    if cur.eat_kw("DECLARE") {
        let name = cur.expect_name()?;
        if cur.eat_sym(":=") {
            let init = parse_rvalue(cur)?;
            return Ok(MachineCmd::DeclareLocal {
                name,
                schema: None,
                init: Some(init),
            });
        }
        cur.expect_sym("(")?;
        let schema = parse_schema_body(cur)?;
        cur.expect_sym(")")?;
        return Ok(MachineCmd::DeclareLocal {
            name,
            schema: Some(schema),
            init: None,
        });
    }
    if cur.eat_kw("IF") {
        cur.expect_kw("COUNT")?;
        cur.expect_sym("(")?;
        let cond = parse_rvalue(cur)?;
        cur.expect_sym(")")?;
        cur.expect_kw("THEN")?;
        let then_body = parse_block(cur)?;
        let else_body = if cur.eat_kw("ELSE") {
            parse_block(cur)?
        } else {
            Vec::new()
        };
        return Ok(MachineCmd::IfCount {
            cond,
            then_body,
            else_body,
        });
    }
    if cur.eat_kw("WHILE") {
        cur.expect_kw("COUNT")?;
        cur.expect_sym("(")?;
        let cond = parse_rvalue(cur)?;
        cur.expect_sym(")")?;
        let body = parse_block(cur)?;
        return Ok(MachineCmd::WhileCount { cond, body });
    }
    if cur.eat_kw("ASSERTONE") {
        let expr = parse_rvalue(cur)?;
        return Ok(MachineCmd::AssertOne { expr });
    }
    if cur.eat_kw("PARTITION") {
        let whole = parse_rvalue(cur)?;
        cur.expect_kw("INTO")?;
        cur.expect_sym("(")?;
        let mut parts = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                parts.push(parse_rvalue(cur)?);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
        return Ok(MachineCmd::Partition { whole, parts });
    }
    Err(cur.error("expected a machine command"))
}

fn parse_block(cur: &mut Cursor) -> Result<Vec<MachineCmd>> {
    cur.expect_kw("BEGIN")?;
    let mut body = Vec::new();
    while !cur.eat_kw("END") {
        if cur.at_end() {
            return Err(Error::UnterminatedCommand);
        }
        body.push(parse_command(cur)?);
    }
    Ok(body)
}

fn parse_create(cur: &mut Cursor) -> Result<MachineCmd> {
    let name = cur.expect_name()?;
    let mut schema = None;
    if cur.eat_sym("(") {
        schema = Some(parse_schema_body(cur)?);
        cur.expect_sym(")")?;
    }
    let mut keys = Vec::new();
    let mut fkeys = Vec::new();
    loop {
        if cur.eat_kw("KEY") {
            cur.expect_sym("(")?;
            let attrs = parse_name_list(cur)?;
            cur.expect_sym(")")?;
            keys.push(attrs.into_iter().map(AttrName::from).collect());
        } else if cur.eat_kw("FKEY") {
            cur.expect_sym("(")?;
            let attrs = parse_name_list(cur)?;
            cur.expect_sym(")")?;
            cur.expect_kw("ON")?;
            let target = cur.expect_name()?;
            cur.expect_sym("(")?;
            let target_attrs = parse_name_list(cur)?;
            cur.expect_sym(")")?;
            fkeys.push(ForeignKey {
                attrs: attrs.into_iter().map(AttrName::from).collect(),
                target,
                target_attrs: target_attrs.into_iter().map(AttrName::from).collect(),
            });
        } else {
            break;
        }
    }
    if cur.eat_kw("AS") {
        let def = if cur.peek_kw("BEGIN") {
            parse_proc_def(cur)?
        } else {
            VirtualDef::Expr(parse_rvalue(cur)?)
        };
        return Ok(MachineCmd::CreateVirtual {
            name,
            declared_schema: schema,
            def,
            keys,
            fkeys,
        });
    }
    let schema = schema.ok_or_else(|| cur.error("CREATE of a real relvar needs a schema"))?;
    Ok(MachineCmd::CreateReal {
        name,
        schema,
        keys,
        fkeys,
    })
}

fn parse_proc_def(cur: &mut Cursor) -> Result<VirtualDef> {
    cur.expect_kw("BEGIN")?;
    let mut locals = Vec::new();
    loop {
        if cur.eat_kw("DECLARE") {
            let name = cur.expect_name()?;
            cur.expect_sym(":=")?;
            let init = parse_rvalue(cur)?;
            cur.expect_sym(";")?;
            locals.push((name, init));
        } else if cur.eat_kw("RETURN") {
            let ret = parse_rvalue(cur)?;
            cur.expect_sym(";")?;
            cur.expect_kw("END")?;
            return Ok(VirtualDef::Proc(ProcDef { locals, ret }));
        } else {
            return Err(cur.error("virtual procedure bodies allow only DECLARE and RETURN"));
        }
    }
}

fn parse_exec_arg(cur: &mut Cursor) -> Result<ExecArg> {
    let cp = cur.checkpoint();
    if let Ok(rv) = parse_rvalue(cur) {
        if cur
            .peek()
            .map(|t| t.is_sym(",") || t.is_sym(")"))
            .unwrap_or(false)
        {
            return Ok(ExecArg::Rvalue(rv));
        }
    }
    cur.restore(cp);
    Ok(ExecArg::Scalar(parse_scalar(cur)?))
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<String>> {
    let mut out = vec![cur.expect_name()?];
    while cur.eat_sym(",") {
        out.push(cur.expect_name()?);
    }
    Ok(out)
}

fn parse_schema_body(cur: &mut Cursor) -> Result<Schema> {
    let mut attrs = Vec::new();
    loop {
        let name = cur.expect_name()?;
        cur.expect_sym(":")?;
        let domain = parse_domain(cur)?;
        attrs.push(Attribute {
            name: AttrName::from(name),
            domain,
        });
        if !cur.eat_sym(",") {
            break;
        }
    }
    Schema::new(attrs)
}

pub fn parse_domain(cur: &mut Cursor) -> Result<Domain> {
    match cur.peek().cloned() {
        Some(Token {
            tok: Tok::Name { text, leading_dot },
            ..
        }) if !leading_dot && !text.contains('.') => {
            cur.bump();
            match Domain::parse(&text) {
                Some(d) => Ok(d),
                // any other name is a reference domain, tagged by class
                None => Ok(Domain::Ref(text)),
            }
        }
        _ => Err(cur.error("expected a domain name")),
    }
}

// --- rvalue expressions -----------------------------------------------------

pub fn parse_rvalue(cur: &mut Cursor) -> Result<AlgebraExpr> {
    let mut left = parse_joined(cur)?;
    loop {
        let op = if cur.eat_kw("UNION") {
            0
        } else if cur.eat_kw("MINUS") {
            1
        } else if cur.eat_kw("INTERSECT") || cur.eat_kw("INTERSEPT") {
            2
        } else if cur.eat_kw("TIMES") {
            3
        } else {
            return Ok(left);
        };
        let right = parse_joined(cur)?;
        left = match op {
            0 => AlgebraExpr::Union(Box::new(left), Box::new(right)),
            1 => AlgebraExpr::Difference(Box::new(left), Box::new(right)),
            2 => AlgebraExpr::Intersect(Box::new(left), Box::new(right)),
            _ => AlgebraExpr::Product(Box::new(left), Box::new(right)),
        };
    }
}

fn parse_joined(cur: &mut Cursor) -> Result<AlgebraExpr> {
    let mut left = parse_postfixed(cur)?;
    loop {
        let left_outer = if cur.peek_kw("LEFT") && cur.peek_kw_at(1, "JOIN") {
            cur.bump();
            cur.bump();
            true
        } else if cur.eat_kw("JOIN") {
            false
        } else {
            return Ok(left);
        };
        let right = parse_postfixed(cur)?;
        cur.expect_kw("ON")?;
        cur.expect_sym("(")?;
        let mut on = Vec::new();
        loop {
            let a = cur.expect_name()?;
            let b = if cur.eat_sym("=") {
                cur.expect_name()?
            } else {
                a.clone()
            };
            on.push((AttrName::from(a), AttrName::from(b)));
            if !cur.eat_sym(",") {
                break;
            }
        }
        cur.expect_sym(")")?;
        left = AlgebraExpr::Join {
            left: Box::new(left),
            right: Box::new(right),
            on,
            left_outer,
        };
    }
}

fn parse_postfixed(cur: &mut Cursor) -> Result<AlgebraExpr> {
    let mut e = parse_atom(cur)?;
    loop {
        if cur.eat_sym("[") {
            let mut items = Vec::new();
            if !cur.eat_sym("]") {
                loop {
                    let expr = parse_scalar(cur)?;
                    let name = if cur.eat_kw("AS") {
                        AttrName::from(cur.expect_name()?)
                    } else {
                        default_item_name(&expr, items.len())
                    };
                    items.push((expr, name));
                    if !cur.eat_sym(",") {
                        break;
                    }
                }
                cur.expect_sym("]")?;
            }
            e = AlgebraExpr::Project {
                input: Box::new(e),
                items,
            };
        } else if cur.eat_kw("WHERE") {
            let pred = parse_scalar(cur)?;
            e = AlgebraExpr::Select {
                input: Box::new(e),
                pred,
            };
        } else if cur.eat_kw("RENAME") {
            let mut pairs = Vec::new();
            loop {
                let from = cur.expect_name()?;
                cur.expect_kw("AS")?;
                let to = cur.expect_name()?;
                pairs.push((AttrName::from(from), AttrName::from(to)));
                if !cur.eat_sym(",") {
                    break;
                }
            }
            e = AlgebraExpr::Rename {
                input: Box::new(e),
                pairs,
            };
        } else if cur.peek_kw("GROUP") && cur.peek_kw_at(1, "BY") {
            cur.bump();
            cur.bump();
            cur.expect_sym("(")?;
            let mut group = Vec::new();
            if !cur.eat_sym(")") {
                for n in parse_name_list(cur)? {
                    group.push(AttrName::from(n));
                }
                cur.expect_sym(")")?;
            }
            cur.expect_kw("AGG")?;
            cur.expect_sym("(")?;
            let mut aggs = Vec::new();
            loop {
                let func = if cur.eat_kw("SUM") {
                    AggFunc::Sum
                } else if cur.eat_kw("COUNT") {
                    AggFunc::Count
                } else {
                    return Err(cur.error("expected SUM or COUNT"));
                };
                cur.expect_sym("(")?;
                let input = if func == AggFunc::Sum {
                    Some(parse_scalar(cur)?)
                } else {
                    None
                };
                cur.expect_sym(")")?;
                cur.expect_kw("AS")?;
                let name = AttrName::from(cur.expect_name()?);
                aggs.push(AggSpec { func, input, name });
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
            e = AlgebraExpr::GroupAgg {
                input: Box::new(e),
                group,
                aggs,
            };
        } else {
            return Ok(e);
        }
    }
}

fn parse_atom(cur: &mut Cursor) -> Result<AlgebraExpr> {
    if cur.eat_sym("(") {
        let e = parse_rvalue(cur)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    if cur.eat_kw("RELATION") {
        cur.expect_sym("(")?;
        let schema = parse_schema_body(cur)?;
        cur.expect_sym(")")?;
        cur.expect_sym("{")?;
        let mut rows = Vec::new();
        if !cur.eat_sym("}") {
            loop {
                cur.expect_sym("(")?;
                let mut row = Vec::new();
                loop {
                    row.push(parse_scalar(cur)?);
                    if !cur.eat_sym(",") {
                        break;
                    }
                }
                cur.expect_sym(")")?;
                rows.push(row);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym("}")?;
        }
        return Ok(AlgebraExpr::Values { schema, rows });
    }
    let name = cur.expect_name()?;
    Ok(AlgebraExpr::Relvar(name))
}

fn default_item_name(expr: &ScalarExpr, idx: usize) -> AttrName {
    match expr {
        ScalarExpr::Attr(a) => a.clone(),
        _ => AttrName::new(format!("col{}", idx + 1)),
    }
}

// --- scalar expressions ------------------------------------------------------

pub fn parse_scalar(cur: &mut Cursor) -> Result<ScalarExpr> {
    parse_or(cur)
}

fn parse_or(cur: &mut Cursor) -> Result<ScalarExpr> {
    let mut left = parse_and(cur)?;
    while cur.eat_kw("OR") {
        let right = parse_and(cur)?;
        left = ScalarExpr::bin(crate::scalar::BinOp::Or, left, right);
    }
    Ok(left)
}

fn parse_and(cur: &mut Cursor) -> Result<ScalarExpr> {
    let mut left = parse_not(cur)?;
    while cur.eat_kw("AND") {
        let right = parse_not(cur)?;
        left = ScalarExpr::bin(crate::scalar::BinOp::And, left, right);
    }
    Ok(left)
}

fn parse_not(cur: &mut Cursor) -> Result<ScalarExpr> {
    if cur.eat_kw("NOT") {
        let e = parse_not(cur)?;
        return Ok(ScalarExpr::Not(Box::new(e)));
    }
    parse_cmp(cur)
}

fn parse_cmp(cur: &mut Cursor) -> Result<ScalarExpr> {
    use crate::scalar::BinOp::*;
    let left = parse_add(cur)?;
    let op = if cur.eat_sym("=") {
        Some(Eq)
    } else if cur.eat_sym("<>") || cur.eat_sym("!=") {
        Some(Ne)
    } else if cur.eat_sym("<=") {
        Some(Le)
    } else if cur.eat_sym(">=") {
        Some(Ge)
    } else if cur.eat_sym("<") {
        Some(Lt)
    } else if cur.eat_sym(">") {
        Some(Gt)
    } else {
        None
    };
    if let Some(op) = op {
        let right = parse_add(cur)?;
        return Ok(ScalarExpr::bin(op, left, right));
    }
    if cur.eat_kw("LIKE") {
        match cur.bump() {
            Some(Token {
                tok: Tok::Str(p), ..
            }) => return Ok(ScalarExpr::Like(Box::new(left), p)),
            _ => return Err(cur.error("LIKE expects a string literal pattern")),
        }
    }
    if cur.eat_kw("IS") {
        let negated = cur.eat_kw("NOT");
        cur.expect_kw("NULL")?;
        return Ok(ScalarExpr::IsNull(Box::new(left), negated));
    }
    Ok(left)
}

fn parse_add(cur: &mut Cursor) -> Result<ScalarExpr> {
    use crate::scalar::BinOp::*;
    let mut left = parse_mul(cur)?;
    loop {
        let op = if cur.eat_sym("+") {
            Add
        } else if cur.eat_sym("-") {
            Sub
        } else {
            return Ok(left);
        };
        let right = parse_mul(cur)?;
        left = ScalarExpr::bin(op, left, right);
    }
}

fn parse_mul(cur: &mut Cursor) -> Result<ScalarExpr> {
    use crate::scalar::BinOp::*;
    let mut left = parse_unary(cur)?;
    loop {
        let op = if cur.eat_sym("*") {
            Mul
        } else if cur.eat_sym("/") {
            Div
        } else {
            return Ok(left);
        };
        let right = parse_unary(cur)?;
        left = ScalarExpr::bin(op, left, right);
    }
}

fn parse_unary(cur: &mut Cursor) -> Result<ScalarExpr> {
    if cur.eat_sym("-") {
        let e = parse_unary(cur)?;
        return Ok(ScalarExpr::Neg(Box::new(e)));
    }
    parse_scalar_primary(cur)
}

fn parse_scalar_primary(cur: &mut Cursor) -> Result<ScalarExpr> {
    if cur.eat_sym("(") {
        let e = parse_or(cur)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    if cur.eat_kw("IF") {
        cur.expect_sym("(")?;
        let c = parse_or(cur)?;
        cur.expect_sym(",")?;
        let t = parse_or(cur)?;
        cur.expect_sym(",")?;
        let e = parse_or(cur)?;
        cur.expect_sym(")")?;
        return Ok(ScalarExpr::Cond(Box::new(c), Box::new(t), Box::new(e)));
    }
    if cur.eat_kw("IFNULL") {
        cur.expect_sym("(")?;
        let a = parse_or(cur)?;
        cur.expect_sym(",")?;
        let b = parse_or(cur)?;
        cur.expect_sym(")")?;
        return Ok(ScalarExpr::IfNull(Box::new(a), Box::new(b)));
    }
    if cur.eat_kw("CAST") {
        cur.expect_sym("(")?;
        let e = parse_or(cur)?;
        cur.expect_kw("AS")?;
        let d = parse_domain(cur)?;
        cur.expect_sym(")")?;
        return Ok(ScalarExpr::Cast(Box::new(e), d));
    }
    if cur.eat_kw("NULL") {
        return Ok(ScalarExpr::Lit(Value::Null));
    }
    if cur.eat_kw("TRUE") {
        return Ok(ScalarExpr::Lit(Value::Boolean(true)));
    }
    if cur.eat_kw("FALSE") {
        return Ok(ScalarExpr::Lit(Value::Boolean(false)));
    }
    match cur.peek().cloned() {
        Some(Token {
            tok: Tok::Int(i), ..
        }) => {
            cur.bump();
            Ok(ScalarExpr::Lit(Value::Integer(i)))
        }
        Some(Token {
            tok: Tok::Float(x), ..
        }) => {
            cur.bump();
            Ok(ScalarExpr::Lit(Value::Float(x)))
        }
        Some(Token {
            tok: Tok::Str(s), ..
        }) => {
            cur.bump();
            Ok(ScalarExpr::Lit(Value::String(s)))
        }
        Some(Token {
            tok: Tok::Name { text, leading_dot },
            ..
        }) if !leading_dot => {
            if crate::lex::is_reserved(&text) {
                return Err(cur.error(format!("`{text}` is a reserved word")));
            }
            cur.bump();
            Ok(ScalarExpr::Attr(AttrName::from(text)))
        }
        _ => Err(cur.error("expected a scalar expression")),
    }
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

fn fmt_operand(e: &AlgebraExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        AlgebraExpr::Relvar(_) | AlgebraExpr::Values { .. } => write!(f, "{e}"),
        _ => write!(f, "({e})"),
    }
}

impl fmt::Display for AlgebraExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraExpr::Relvar(n) => write!(f, "{}", quote_ident(n)),
            AlgebraExpr::Values { schema, rows } => {
                write!(f, "RELATION ({})", fmt_schema(schema))?;
                write!(f, " {{")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "(")?;
                    for (j, v) in row.iter().enumerate() {
                        if j > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    write!(f, ")")?;
                }
                write!(f, "}}")
            }
            AlgebraExpr::Product(a, b) => {
                fmt_operand(a, f)?;
                write!(f, " TIMES ")?;
                fmt_operand(b, f)
            }
            AlgebraExpr::Union(a, b) => {
                fmt_operand(a, f)?;
                write!(f, " UNION ")?;
                fmt_operand(b, f)
            }
            AlgebraExpr::Difference(a, b) => {
                fmt_operand(a, f)?;
                write!(f, " MINUS ")?;
                fmt_operand(b, f)
            }
            AlgebraExpr::Intersect(a, b) => {
                fmt_operand(a, f)?;
                write!(f, " INTERSECT ")?;
                fmt_operand(b, f)
            }
            AlgebraExpr::Join {
                left,
                right,
                on,
                left_outer,
            } => {
                fmt_operand(left, f)?;
                write!(f, " {} ", if *left_outer { "LEFT JOIN" } else { "JOIN" })?;
                fmt_operand(right, f)?;
                write!(f, " ON (")?;
                for (i, (a, b)) in on.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    if a == b {
                        write!(f, "{}", quote_ident(a.as_str()))?;
                    } else {
                        write!(
                            f,
                            "{} = {}",
                            quote_ident(a.as_str()),
                            quote_ident(b.as_str())
                        )?;
                    }
                }
                write!(f, ")")
            }
            AlgebraExpr::Project { input, items } => {
                fmt_operand(input, f)?;
                write!(f, "[")?;
                for (i, (e, name)) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match e {
                        ScalarExpr::Attr(a) if a == name => {
                            write!(f, "{}", quote_ident(a.as_str()))?
                        }
                        _ => write!(f, "{e} AS {}", quote_ident(name.as_str()))?,
                    }
                }
                write!(f, "]")
            }
            AlgebraExpr::Select { input, pred } => {
                fmt_operand(input, f)?;
                write!(f, " WHERE {pred}")
            }
            AlgebraExpr::Rename { input, pairs } => {
                fmt_operand(input, f)?;
                write!(f, " RENAME ")?;
                for (i, (a, b)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(
                        f,
                        "{} AS {}",
                        quote_ident(a.as_str()),
                        quote_ident(b.as_str())
                    )?;
                }
                Ok(())
            }
            AlgebraExpr::GroupAgg { input, group, aggs } => {
                fmt_operand(input, f)?;
                write!(f, " GROUP BY (")?;
                for (i, g) in group.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", quote_ident(g.as_str()))?;
                }
                write!(f, ") AGG (")?;
                for (i, a) in aggs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match a.func {
                        AggFunc::Sum => write!(
                            f,
                            "SUM({}) AS {}",
                            a.input.as_ref().expect("SUM without input"),
                            quote_ident(a.name.as_str())
                        )?,
                        AggFunc::Count => write!(f, "COUNT() AS {}", quote_ident(a.name.as_str()))?,
                    }
                }
                write!(f, ")")
            }
        }
    }
}

pub fn fmt_schema(schema: &Schema) -> String {
    schema
        .attrs()
        .iter()
        .map(|a| format!("{}: {}", quote_ident(a.name.as_str()), a.domain))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_keys_fkeys(keys: &[Vec<AttrName>], fkeys: &[ForeignKey]) -> String {
    let mut out = String::new();
    for key in keys {
        out.push_str(" KEY(");
        out.push_str(
            &key.iter()
                .map(|a| quote_ident(a.as_str()))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push(')');
    }
    for fk in fkeys {
        out.push_str(" FKEY(");
        out.push_str(
            &fk.attrs
                .iter()
                .map(|a| quote_ident(a.as_str()))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str(&format!(") ON {}(", quote_ident(&fk.target)));
        out.push_str(
            &fk.target_attrs
                .iter()
                .map(|a| quote_ident(a.as_str()))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push(')');
    }
    out
}

impl RelVarDef {
    /// CREATE command text that reproduces this definition.
    pub fn to_create_text(&self) -> String {
        let mut out = format!(
            "CREATE {} ({})",
            quote_ident(&self.name),
            fmt_schema(&self.schema)
        );
        out.push_str(&fmt_keys_fkeys(&self.keys, &self.fkeys));
        if let RelVarKind::Virtual(def) = &self.kind {
            out.push_str(" AS ");
            match def {
                VirtualDef::Expr(e) => out.push_str(&e.to_string()),
                VirtualDef::Proc(p) => {
                    out.push_str("begin ");
                    for (n, e) in &p.locals {
                        out.push_str(&format!("DECLARE {} := {e}; ", quote_ident(n)));
                    }
                    out.push_str(&format!("RETURN {}; end", p.ret));
                }
            }
        }
        out.push(';');
        out
    }
}

impl TransactionDef {
    pub fn to_trans_text(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::Scalar(d) => format!("{}: {d}", quote_ident(&p.name)),
                ParamKind::Relation(s) => format!("{}: ({})", quote_ident(&p.name), fmt_schema(s)),
            })
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "TRANS {} ({}) AS begin {} end;",
            quote_ident(&self.name),
            params,
            self.body
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )
    }
}

impl fmt::Display for MachineCmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineCmd::CreateReal {
                name,
                schema,
                keys,
                fkeys,
            } => write!(
                f,
                "CREATE {} ({}){};",
                quote_ident(name),
                fmt_schema(schema),
                fmt_keys_fkeys(keys, fkeys)
            ),
            MachineCmd::CreateVirtual {
                name,
                declared_schema,
                def,
                keys,
                fkeys,
            } => {
                write!(f, "CREATE {}", quote_ident(name))?;
                if let Some(s) = declared_schema {
                    write!(f, " ({})", fmt_schema(s))?;
                }
                write!(f, "{} AS ", fmt_keys_fkeys(keys, fkeys))?;
                match def {
                    VirtualDef::Expr(e) => write!(f, "{e};"),
                    VirtualDef::Proc(p) => {
                        write!(f, "begin ")?;
                        for (n, e) in &p.locals {
                            write!(f, "DECLARE {} := {e}; ", quote_ident(n))?;
                        }
                        write!(f, "RETURN {}; end;", p.ret)
                    }
                }
            }
            MachineCmd::Assign { name, rvalue } => {
                write!(f, "SET {} := {rvalue};", quote_ident(name))
            }
            MachineCmd::Insert { name, rvalue } => {
                write!(f, "INSERT {} {rvalue};", quote_ident(name))
            }
            MachineCmd::InsertValues { name, attrs, rows } => {
                write!(f, "INSERT {}", quote_ident(name))?;
                if let Some(attrs) = attrs {
                    write!(
                        f,
                        " ({})",
                        attrs
                            .iter()
                            .map(|a| quote_ident(a.as_str()))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )?;
                }
                write!(f, " VALUES ")?;
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
            MachineCmd::Update { name, sets, wher } => {
                write!(f, "UPDATE {} SET ", quote_ident(name))?;
                for (i, (a, e)) in sets.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} := {e}", quote_ident(a.as_str()))?;
                }
                if let Some(c) = wher {
                    write!(f, " WHERE {c}")?;
                }
                write!(f, ";")
            }
            MachineCmd::Delete { name, wher } => {
                write!(f, "DELETE {}", quote_ident(name))?;
                if let Some(c) = wher {
                    write!(f, " WHERE {c}")?;
                }
                write!(f, ";")
            }
            MachineCmd::Get { rvalue } => write!(f, "GET {rvalue};"),
            MachineCmd::DefTrans(def) => write!(f, "{}", def.to_trans_text()),
            MachineCmd::ExecTrans { name, args } => {
                write!(f, "EXEC {} (", quote_ident(name))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match a {
                        ExecArg::Rvalue(e) => write!(f, "{e}")?,
                        ExecArg::Scalar(e) => write!(f, "{e}")?,
                    }
                }
                write!(f, ");")
            }
            MachineCmd::ExecBlock { body } => {
                write!(f, "EXEC begin ")?;
                for c in body {
                    write!(f, "{c} ")?;
                }
                write!(f, "end;")
            }
            MachineCmd::DeclareLocal { name, schema, init } => match (schema, init) {
                (_, Some(e)) => write!(f, "DECLARE {} := {e};", quote_ident(name)),
                (Some(s), None) => {
                    write!(f, "DECLARE {} ({});", quote_ident(name), fmt_schema(s))
                }
                (None, None) => write!(f, "DECLARE {};", quote_ident(name)),
            },
            MachineCmd::IfCount {
                cond,
                then_body,
                else_body,
            } => {
                write!(f, "IF COUNT({cond}) THEN begin ")?;
                for c in then_body {
                    write!(f, "{c} ")?;
                }
                write!(f, "end")?;
                if !else_body.is_empty() {
                    write!(f, " ELSE begin ")?;
                    for c in else_body {
                        write!(f, "{c} ")?;
                    }
                    write!(f, "end")?;
                }
                write!(f, ";")
            }
            MachineCmd::WhileCount { cond, body } => {
                write!(f, "WHILE COUNT({cond}) begin ")?;
                for c in body {
                    write!(f, "{c} ")?;
                }
                write!(f, "end;")
            }
            MachineCmd::AssertOne { expr } => write!(f, "ASSERTONE {expr};"),
            MachineCmd::Partition { whole, parts } => {
                write!(f, "PARTITION {whole} INTO (")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ");")
            }
        }
    }
}

//! Recursive-descent parser for the object language.
//!
//! Commands are `;`-terminated; `//` comments are stripped by the lexer.
//! Raw machine commands (CREATE, SET, GET, TRANS, EXEC begin…) are accepted
//! alongside object commands and dispatched on their leading keyword.
//!
//! Object selections accept both bracket forms, `<…>` and `[…]`. Inside a
//! scalar operand only the `[…]` form is recognized, so `a < b` is never
//! mistaken for a selection; paths in command positions (FROM, targets,
//! EXEC groups, FIRST OF) take either form.

use crate::error::{Error, Result};
use crate::lex::{Tok, Token};
use crate::machine::text::{parse_domain, Cursor};
use crate::machine::MachineCmd;
use crate::scalar::BinOp;
use crate::value::{Domain, Value};

use super::ast::*;

pub fn parse_commands(src: &str) -> Result<Vec<CommandAst>> {
    let mut cur = Cursor::new(src)?;
    let mut out = Vec::new();
    while !cur.at_end() {
        out.push(parse_command(&mut cur)?);
    }
    Ok(out)
}

pub fn parse_one(src: &str) -> Result<CommandAst> {
    let mut cur = Cursor::new(src)?;
    let cmd = parse_command(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after command"));
    }
    Ok(cmd)
}

/// Parse a path expression alone (used by tests and the group-reference
/// evaluator).
pub fn parse_path_text(src: &str) -> Result<PathExpr> {
    let mut cur = Cursor::new(src)?;
    let p = parse_path(&mut cur, true)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after path"));
    }
    Ok(p)
}

pub fn parse_command(cur: &mut Cursor) -> Result<CommandAst> {
    // raw machine commands pass through unchanged
    if cur.peek_kw("CREATE") || cur.peek_kw("SET") || cur.peek_kw("GET") || cur.peek_kw("TRANS") {
        let cmd = crate::machine::text::parse_command(cur)?;
        return Ok(CommandAst::Machine(cmd));
    }
    if cur.eat_kw("CLASS") {
        let cmd = parse_class(cur)?;
        return terminated(cur, cmd);
    }
    if cur.eat_kw("ALTER") {
        let cmd = parse_realize(cur)?;
        return terminated(cur, cmd);
    }
    if cur.eat_kw("NEW") {
        let n = parse_new_body(cur)?;
        return terminated(cur, CommandAst::New(n));
    }
    if cur.peek_kw("SELECT") {
        let s = parse_select(cur)?;
        return terminated(cur, CommandAst::Select(s));
    }
    if cur.peek_kw("INSERT") {
        // `INSERT INTO <path>` is the object form; otherwise machine sugar
        if peek_kw_at(cur, 1, "INTO") {
            cur.bump();
            cur.bump();
            let cmd = parse_insert(cur)?;
            return terminated(cur, cmd);
        }
        let cmd = crate::machine::text::parse_command(cur)?;
        return Ok(CommandAst::Machine(cmd));
    }
    if cur.peek_kw("DELETE") {
        if peek_kw_at(cur, 1, "FROM") {
            cur.bump();
            cur.bump();
            let target = parse_path(cur, true)?;
            return terminated(cur, CommandAst::Delete { target });
        }
        let cmd = crate::machine::text::parse_command(cur)?;
        return Ok(CommandAst::Machine(cmd));
    }
    if cur.peek_kw("UPDATE") {
        // object form: UPDATE <path> SET ( .a := e, … )
        let cp = cur.checkpoint();
        cur.bump();
        if let Ok(target) = parse_path(cur, true) {
            if cur.eat_kw("SET") && cur.eat_sym("(") {
                let mut sets = Vec::new();
                loop {
                    let name = parse_member_name(cur)?;
                    if !cur.eat_sym(":=") {
                        cur.expect_sym("=")?;
                    }
                    sets.push((name, parse_rhs(cur)?));
                    if !cur.eat_sym(",") {
                        break;
                    }
                }
                cur.expect_sym(")")?;
                return terminated(cur, CommandAst::Update { target, sets });
            }
        }
        cur.restore(cp);
        let cmd = crate::machine::text::parse_command(cur)?;
        return Ok(CommandAst::Machine(cmd));
    }
    if cur.peek_kw("EXEC") {
        if peek_kw_at(cur, 1, "BEGIN") {
            let cmd = crate::machine::text::parse_command(cur)?;
            return Ok(CommandAst::Machine(cmd));
        }
        cur.bump();
        let mut path = parse_path(cur, true)?;
        if path.segments.is_empty() {
            // EXEC tr(args): a stored machine transaction
            let name = match path.head {
                PathHead::Name(n) => n,
                _ => return Err(cur.error("EXEC needs a transaction or method")),
            };
            let args = parse_machine_exec_args(cur)?;
            return terminated(
                cur,
                CommandAst::Machine(MachineCmd::ExecTrans { name, args }),
            );
        }
        let last = path.segments.pop().unwrap();
        if last.selection.is_some() {
            return Err(cur.error("method name cannot carry a selection"));
        }
        cur.expect_sym("(")?;
        let mut args = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                args.push(parse_rhs(cur)?);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
        return terminated(
            cur,
            CommandAst::MethodExec {
                group: path,
                method: last.name,
                args,
            },
        );
    }
    Err(cur.error("expected a command"))
}

fn parse_machine_exec_args(cur: &mut Cursor) -> Result<Vec<crate::machine::ExecArg>> {
    use crate::machine::text::{parse_rvalue, parse_scalar};
    use crate::machine::ExecArg;
    cur.expect_sym("(")?;
    let mut args = Vec::new();
    if !cur.eat_sym(")") {
        loop {
            let cp = cur.checkpoint();
            let arg = match parse_rvalue(cur) {
                Ok(rv)
                    if cur
                        .peek()
                        .map(|t| t.is_sym(",") || t.is_sym(")"))
                        .unwrap_or(false) =>
                {
                    ExecArg::Rvalue(rv)
                }
                _ => {
                    cur.restore(cp);
                    ExecArg::Scalar(parse_scalar(cur)?)
                }
            };
            args.push(arg);
            if !cur.eat_sym(",") {
                break;
            }
        }
        cur.expect_sym(")")?;
    }
    Ok(args)
}

fn terminated(cur: &mut Cursor, cmd: CommandAst) -> Result<CommandAst> {
    if !cur.eat_sym(";") {
        return Err(Error::UnterminatedCommand);
    }
    Ok(cmd)
}

fn peek_kw_at(cur: &Cursor, off: usize, kw: &str) -> bool {
    cur.peek_n(off).map(|t| t.is_kw(kw)).unwrap_or(false)
}

// --- class creation ----------------------------------------------------------

fn parse_class(cur: &mut Cursor) -> Result<CommandAst> {
    let name = cur.expect_ident()?;
    let mut parents = Vec::new();
    if cur.eat_kw("EXTEND") {
        parents.push(cur.expect_ident()?);
        while cur.eat_sym(",") {
            parents.push(cur.expect_ident()?);
        }
    }
    cur.expect_sym("(")?;
    let mut components = Vec::new();
    let mut methods = Vec::new();
    if !cur.eat_sym(")") {
        loop {
            let member = cur.expect_ident()?;
            if cur.eat_sym("(") {
                // method declaration
                let mut params = Vec::new();
                if !cur.eat_sym(")") {
                    loop {
                        let p = cur.expect_ident()?;
                        let t = parse_type(cur)?;
                        params.push((p, t));
                        if !cur.eat_sym(",") {
                            break;
                        }
                    }
                    cur.expect_sym(")")?;
                }
                methods.push(MethodDecl {
                    name: member,
                    params,
                });
            } else if cur.peek_kw("SET") && peek_kw_at(cur, 1, "OF") {
                cur.bump();
                cur.bump();
                cur.expect_sym("(")?;
                let mut attrs = Vec::new();
                loop {
                    let a = cur.expect_ident()?;
                    let t = parse_type(cur)?;
                    attrs.push((a, t));
                    if !cur.eat_sym(",") {
                        break;
                    }
                }
                cur.expect_sym(")")?;
                let mut keys = Vec::new();
                if cur.eat_kw("KEY") {
                    cur.expect_sym("(")?;
                    keys.push(cur.expect_ident()?);
                    while cur.eat_sym(",") {
                        keys.push(cur.expect_ident()?);
                    }
                    cur.expect_sym(")")?;
                }
                components.push(ComponentDecl {
                    name: member,
                    kind: ComponentKindDecl::Complex { attrs, keys },
                });
            } else {
                let t = parse_type(cur)?;
                components.push(ComponentDecl {
                    name: member,
                    kind: ComponentKindDecl::Scalar(t),
                });
            }
            if !cur.eat_sym(",") {
                break;
            }
        }
        cur.expect_sym(")")?;
    }
    let mut keys = Vec::new();
    let mut refs = Vec::new();
    loop {
        if cur.eat_kw("KEY") {
            cur.expect_sym("(")?;
            let mut key = vec![cur.expect_ident()?];
            while cur.eat_sym(",") {
                key.push(cur.expect_ident()?);
            }
            cur.expect_sym(")")?;
            keys.push(key);
        } else if cur.eat_kw("REFERENCE") {
            let component = if cur
                .peek()
                .map(|t| {
                    matches!(
                        &t.tok,
                        Tok::Name {
                            leading_dot: false,
                            ..
                        }
                    )
                })
                .unwrap_or(false)
                && !cur.peek_kw("ON")
            {
                Some(cur.expect_ident()?)
            } else {
                None
            };
            cur.expect_sym("(")?;
            let mut attrs = vec![parse_member_name(cur)?];
            while cur.eat_sym(",") {
                attrs.push(parse_member_name(cur)?);
            }
            cur.expect_sym(")")?;
            cur.expect_kw("ON")?;
            let target_class = cur.expect_ident()?;
            cur.expect_sym("(")?;
            let mut target_attrs = vec![parse_member_name(cur)?];
            while cur.eat_sym(",") {
                target_attrs.push(parse_member_name(cur)?);
            }
            cur.expect_sym(")")?;
            refs.push(RefConstraintDecl {
                component,
                attrs,
                target_class,
                target_attrs,
            });
        } else {
            break;
        }
    }
    Ok(CommandAst::ClassCreate {
        name,
        parents,
        components,
        methods,
        keys,
        refs,
    })
}

fn parse_type(cur: &mut Cursor) -> Result<TypeName> {
    Ok(match parse_domain(cur)? {
        Domain::Ref(c) => TypeName::Class(c),
        d => TypeName::Domain(d),
    })
}

/// A member name written with or without a leading dot.
fn parse_member_name(cur: &mut Cursor) -> Result<String> {
    match cur.peek().cloned() {
        Some(Token {
            tok: Tok::Name { text, .. },
            ..
        }) if !crate::lex::is_reserved(&text) => {
            cur.bump();
            Ok(text)
        }
        _ => Err(cur.error("expected a member name")),
    }
}

// --- implementation command ---------------------------------------------------

fn parse_realize(cur: &mut Cursor) -> Result<CommandAst> {
    let class = cur.expect_ident()?;
    cur.expect_kw("REALIZE")?;
    let mut members = vec![cur.expect_ident()?];
    let mut params = Vec::new();
    let mut has_sig = false;
    if cur.eat_sym("(") {
        has_sig = true;
        if !cur.eat_sym(")") {
            loop {
                let p = cur.expect_ident()?;
                let t = parse_type(cur)?;
                params.push((p, t));
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
    } else {
        while cur.eat_sym(",") {
            members.push(cur.expect_ident()?);
        }
    }
    cur.expect_kw("AS")?;
    let body = if cur.eat_kw("STORED") {
        RealizeBody::Stored
    } else if cur.peek_kw("SELECT") {
        RealizeBody::Calculated(parse_select(cur)?)
    } else if cur.eat_sym("{") {
        let body = parse_stmts_until(cur, "}")?;
        RealizeBody::Procedure { params, body }
    } else if cur.eat_kw("BEGIN") {
        let body = parse_stmts_until_kw(cur, "END")?;
        RealizeBody::Procedure { params, body }
    } else {
        return Err(cur.error("expected STORED, SELECT, or a procedure body"));
    };
    if has_sig && matches!(body, RealizeBody::Stored | RealizeBody::Calculated(_)) {
        return Err(cur.error("a method signature requires a procedure body"));
    }
    Ok(CommandAst::Realize {
        class,
        members,
        body,
    })
}

// --- procedures ----------------------------------------------------------------

fn parse_stmts_until(cur: &mut Cursor, close: &str) -> Result<Vec<Stmt>> {
    let mut out = Vec::new();
    while !cur.eat_sym(close) {
        if cur.at_end() {
            return Err(Error::UnterminatedCommand);
        }
        out.push(parse_stmt(cur)?);
    }
    Ok(out)
}

fn parse_stmts_until_kw(cur: &mut Cursor, close: &str) -> Result<Vec<Stmt>> {
    let mut out = Vec::new();
    while !cur.eat_kw(close) {
        if cur.at_end() {
            return Err(Error::UnterminatedCommand);
        }
        out.push(parse_stmt(cur)?);
    }
    Ok(out)
}

fn parse_block_or_single(cur: &mut Cursor) -> Result<Vec<Stmt>> {
    if cur.eat_kw("BEGIN") {
        let body = parse_stmts_until_kw(cur, "END")?;
        cur.eat_sym(";");
        Ok(body)
    } else {
        Ok(vec![parse_stmt(cur)?])
    }
}

fn parse_stmt(cur: &mut Cursor) -> Result<Stmt> {
    if cur.eat_kw("DECLARE") {
        let name = cur.expect_ident()?;
        let ty = parse_type(cur)?;
        let init = if cur.eat_sym(":=") {
            Some(parse_rhs(cur)?)
        } else {
            None
        };
        cur.expect_sym(";")?;
        return Ok(Stmt::Declare { name, ty, init });
    }
    if cur.eat_kw("IF") {
        cur.expect_sym("(")?;
        let cond = parse_oo_expr(cur)?;
        cur.expect_sym(")")?;
        cur.expect_kw("THEN")?;
        let then_body = parse_block_or_single(cur)?;
        let else_body = if cur.eat_kw("ELSE") {
            parse_block_or_single(cur)?
        } else {
            Vec::new()
        };
        cur.eat_sym(";");
        return Ok(Stmt::If {
            cond,
            then_body,
            else_body,
        });
    }
    if cur.eat_kw("WHILE") {
        cur.expect_sym("(")?;
        let cond = parse_oo_expr(cur)?;
        cur.expect_sym(")")?;
        let body = parse_block_or_single(cur)?;
        cur.eat_sym(";");
        return Ok(Stmt::While { cond, body });
    }
    if cur.eat_kw("RETURN") {
        if cur.eat_sym(";") {
            return Ok(Stmt::Return { value: None });
        }
        let value = parse_rhs(cur)?;
        cur.expect_sym(";")?;
        return Ok(Stmt::Return { value: Some(value) });
    }
    if cur.eat_kw("NEW") {
        let n = parse_new_body(cur)?;
        cur.expect_sym(";")?;
        return Ok(Stmt::New(n));
    }
    // bare method call `M(args);` or assignment `target := rhs;`
    let target = parse_path(cur, true)?;
    if let Some(name) = target.bare_name() {
        if cur.peek().map(|t| t.is_sym("(")).unwrap_or(false) {
            let name = name.to_string();
            cur.bump();
            let mut args = Vec::new();
            if !cur.eat_sym(")") {
                loop {
                    args.push(parse_rhs(cur)?);
                    if !cur.eat_sym(",") {
                        break;
                    }
                }
                cur.expect_sym(")")?;
            }
            cur.expect_sym(";")?;
            return Ok(Stmt::Call { method: name, args });
        }
    }
    if !cur.eat_sym(":=") {
        cur.expect_sym("=")?;
    }
    let value = parse_rhs(cur)?;
    cur.expect_sym(";")?;
    Ok(Stmt::Assign { target, value })
}

fn parse_new_body(cur: &mut Cursor) -> Result<NewCmd> {
    let class = cur.expect_ident()?;
    let mut sets = Vec::new();
    if cur.eat_kw("WITH") {
        cur.expect_kw("SET")?;
        loop {
            let target = parse_path(cur, true)?;
            if !cur.eat_sym(":=") {
                cur.expect_sym("=")?;
            }
            let value = parse_rhs(cur)?;
            sets.push(Stmt::Assign { target, value });
            if !cur.eat_sym(",") {
                break;
            }
        }
    }
    Ok(NewCmd { class, sets })
}

// --- data access ---------------------------------------------------------------

fn parse_select(cur: &mut Cursor) -> Result<SelectAst> {
    cur.expect_kw("SELECT")?;
    let mut items = Vec::new();
    loop {
        let e = parse_oo_expr(cur)?;
        let name = if cur.eat_kw("AS") {
            Some(cur.expect_ident()?)
        } else {
            None
        };
        items.push((e, name));
        if !cur.eat_sym(",") {
            break;
        }
    }
    cur.expect_kw("FROM")?;
    let from = parse_path(cur, true)?;
    let alias = match cur.peek() {
        Some(Token {
            tok: Tok::Name { text, leading_dot },
            ..
        }) if !leading_dot && text.starts_with('#') => {
            let a = text.clone();
            cur.bump();
            Some(a)
        }
        _ => None,
    };
    let wher = if cur.eat_kw("WHERE") {
        Some(parse_oo_expr(cur)?)
    } else {
        None
    };
    let mut group_by = Vec::new();
    if cur.peek_kw("GROUP") && peek_kw_at(cur, 1, "BY") {
        cur.bump();
        cur.bump();
        group_by.push(parse_path(cur, false)?);
        while cur.eat_sym(",") {
            group_by.push(parse_path(cur, false)?);
        }
    }
    Ok(SelectAst {
        items,
        from,
        alias,
        wher,
        group_by,
    })
}

fn parse_insert(cur: &mut Cursor) -> Result<CommandAst> {
    let target = parse_path(cur, true)?;
    cur.expect_sym("(")?;
    let mut attrs = vec![parse_member_name(cur)?];
    while cur.eat_sym(",") {
        attrs.push(parse_member_name(cur)?);
    }
    cur.expect_sym(")")?;
    cur.expect_kw("VALUES")?;
    let mut rows = Vec::new();
    loop {
        cur.expect_sym("(")?;
        let mut row = Vec::new();
        loop {
            row.push(parse_oo_expr(cur)?);
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
    Ok(CommandAst::Insert {
        target,
        attrs,
        rows,
    })
}

// --- paths and expressions -------------------------------------------------------

/// Parse a path. `allow_angle` enables `<…>` selections; the `[…]` form is
/// always recognized.
pub fn parse_path(cur: &mut Cursor, allow_angle: bool) -> Result<PathExpr> {
    let (head, segments) = match cur.peek().cloned() {
        Some(Token {
            tok: Tok::Name { text, leading_dot },
            ..
        }) => {
            if crate::lex::is_reserved(&text) && !text.eq_ignore_ascii_case("this") {
                return Err(cur.error(format!("`{text}` is a reserved word")));
            }
            cur.bump();
            let mut parts = text.split('.');
            let (head, rest_start): (PathHead, Vec<&str>) = if leading_dot {
                (PathHead::Implicit, parts.collect())
            } else {
                let first = parts.next().unwrap();
                if first.eq_ignore_ascii_case("this") {
                    (PathHead::This, parts.collect())
                } else {
                    (PathHead::Name(first.to_string()), parts.collect())
                }
            };
            let segments: Vec<PathSegment> = rest_start
                .into_iter()
                .map(|s| PathSegment {
                    name: s.to_string(),
                    selection: None,
                })
                .collect();
            (head, segments)
        }
        _ => return Err(cur.error("expected a path")),
    };
    let mut path = PathExpr {
        head,
        head_selection: None,
        segments,
    };
    // selection attaches to the most recent name
    if let Some(sel) = try_parse_selection(cur, allow_angle)? {
        match path.segments.last_mut() {
            Some(seg) => seg.selection = Some(sel),
            None => path.head_selection = Some(sel),
        }
    }
    loop {
        match cur.peek().cloned() {
            Some(Token {
                tok:
                    Tok::Name {
                        text,
                        leading_dot: true,
                    },
                ..
            }) => {
                cur.bump();
                for part in text.split('.') {
                    path.segments.push(PathSegment {
                        name: part.to_string(),
                        selection: None,
                    });
                }
                if let Some(sel) = try_parse_selection(cur, allow_angle)? {
                    path.segments.last_mut().unwrap().selection = Some(sel);
                }
            }
            _ => return Ok(path),
        }
    }
}

fn try_parse_selection(cur: &mut Cursor, allow_angle: bool) -> Result<Option<Selection>> {
    let close = if allow_angle && cur.peek().map(|t| t.is_sym("<")).unwrap_or(false) {
        ">"
    } else if cur.peek().map(|t| t.is_sym("[")).unwrap_or(false) {
        "]"
    } else {
        return Ok(None);
    };
    cur.bump();
    let mut conditions = vec![parse_oo_expr(cur)?];
    while cur.eat_sym(",") {
        conditions.push(parse_oo_expr(cur)?);
    }
    cur.expect_sym(close)?;
    Ok(Some(Selection { conditions }))
}

/// Assignment and argument right-hand sides admit subqueries.
fn parse_rhs(cur: &mut Cursor) -> Result<OoExpr> {
    if cur.peek_kw("SELECT") {
        return Ok(OoExpr::Subquery(Box::new(parse_select(cur)?)));
    }
    parse_oo_expr(cur)
}

pub fn parse_oo_expr(cur: &mut Cursor) -> Result<OoExpr> {
    parse_or(cur)
}

fn parse_or(cur: &mut Cursor) -> Result<OoExpr> {
    let mut left = parse_and(cur)?;
    while cur.eat_kw("OR") {
        let right = parse_and(cur)?;
        left = OoExpr::Bin(BinOp::Or, Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn parse_and(cur: &mut Cursor) -> Result<OoExpr> {
    let mut left = parse_not(cur)?;
    while cur.eat_kw("AND") {
        let right = parse_not(cur)?;
        left = OoExpr::Bin(BinOp::And, Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn parse_not(cur: &mut Cursor) -> Result<OoExpr> {
    if cur.eat_kw("NOT") {
        let e = parse_not(cur)?;
        return Ok(OoExpr::Not(Box::new(e)));
    }
    parse_cmp(cur)
}

fn parse_cmp(cur: &mut Cursor) -> Result<OoExpr> {
    use BinOp::*;
    let left = parse_add(cur)?;
    let cp = cur.checkpoint();
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
        // `<` and `>` double as selection brackets; when no operand follows,
        // the symbol belongs to the enclosing selection
        match parse_add(cur) {
            Ok(right) => return Ok(OoExpr::Bin(op, Box::new(left), Box::new(right))),
            Err(e) if matches!(op, Lt | Gt) => {
                cur.restore(cp);
                let _ = e;
                return Ok(left);
            }
            Err(e) => return Err(e),
        }
    }
    if cur.eat_kw("LIKE") {
        match cur.bump() {
            Some(Token {
                tok: Tok::Str(p), ..
            }) => return Ok(OoExpr::Like(Box::new(left), p)),
            _ => return Err(cur.error("LIKE expects a string literal pattern")),
        }
    }
    if cur.eat_kw("IS") {
        let negated = cur.eat_kw("NOT");
        cur.expect_kw("NULL")?;
        return Ok(OoExpr::IsNull(Box::new(left), negated));
    }
    Ok(left)
}

fn parse_add(cur: &mut Cursor) -> Result<OoExpr> {
    use BinOp::*;
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
        left = OoExpr::Bin(op, Box::new(left), Box::new(right));
    }
}

fn parse_mul(cur: &mut Cursor) -> Result<OoExpr> {
    use BinOp::*;
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
        left = OoExpr::Bin(op, Box::new(left), Box::new(right));
    }
}

fn parse_unary(cur: &mut Cursor) -> Result<OoExpr> {
    if cur.eat_sym("-") {
        let e = parse_unary(cur)?;
        return Ok(OoExpr::Neg(Box::new(e)));
    }
    parse_primary(cur)
}

fn parse_primary(cur: &mut Cursor) -> Result<OoExpr> {
    if cur.eat_sym("(") {
        let e = if cur.peek_kw("NEW") || cur.peek_kw("FIRST") || cur.peek_kw("SELECT") {
            parse_special(cur)?
        } else {
            parse_or(cur)?
        };
        cur.expect_sym(")")?;
        return Ok(e);
    }
    if cur.peek_kw("NEW") || cur.peek_kw("FIRST") {
        return parse_special(cur);
    }
    if cur.peek_kw("SUM") || cur.peek_kw("COUNT") {
        let func = if cur.eat_kw("SUM") {
            OoAggFunc::Sum
        } else {
            cur.bump();
            OoAggFunc::Count
        };
        cur.expect_sym("(")?;
        let mut args = Vec::new();
        if !cur.eat_sym(")") {
            loop {
                args.push(parse_or(cur)?);
                if !cur.eat_sym(",") {
                    break;
                }
            }
            cur.expect_sym(")")?;
        }
        return Ok(OoExpr::Agg(func, args));
    }
    if cur.eat_kw("NULL") {
        return Ok(OoExpr::Lit(Value::Null));
    }
    if cur.eat_kw("TRUE") {
        return Ok(OoExpr::Lit(Value::Boolean(true)));
    }
    if cur.eat_kw("FALSE") {
        return Ok(OoExpr::Lit(Value::Boolean(false)));
    }
    match cur.peek().cloned() {
        Some(Token {
            tok: Tok::Int(i), ..
        }) => {
            cur.bump();
            Ok(OoExpr::Lit(Value::Integer(i)))
        }
        Some(Token {
            tok: Tok::Float(x), ..
        }) => {
            cur.bump();
            Ok(OoExpr::Lit(Value::Float(x)))
        }
        Some(Token {
            tok: Tok::Str(s), ..
        }) => {
            cur.bump();
            Ok(OoExpr::Lit(Value::String(s)))
        }
        Some(Token {
            tok: Tok::Name { .. },
            ..
        }) => {
            // operand position: `[…]` selections only
            let p = parse_path(cur, false)?;
            Ok(OoExpr::Path(p))
        }
        _ => Err(cur.error("expected an expression")),
    }
}

fn parse_special(cur: &mut Cursor) -> Result<OoExpr> {
    if cur.eat_kw("NEW") {
        let n = parse_new_body(cur)?;
        return Ok(OoExpr::New(Box::new(n)));
    }
    if cur.eat_kw("FIRST") {
        cur.expect_kw("OF")?;
        let p = parse_path(cur, true)?;
        return Ok(OoExpr::FirstOf(Box::new(p)));
    }
    if cur.peek_kw("SELECT") {
        return Ok(OoExpr::Subquery(Box::new(parse_select(cur)?)));
    }
    Err(cur.error("expected NEW, FIRST OF, or SELECT"))
}

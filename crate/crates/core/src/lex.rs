//! Shared lexer for the object language and the machine command language.
//!
//! Identifiers are case-sensitive; keywords are matched case-insensitively.
//! A name token may be a dotted chain (`R_DOCS.Items`, `Items.Art`) — the
//! machine treats the whole chain as one opaque name, the object parser
//! splits it into path segments. A leading dot (`.Items.Art`) marks a
//! post-path and is kept as a token flag. Backtick quoting (`` `x y` ``)
//! admits names outside the plain identifier syntax.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name { text: String, leading_dot: bool },
    Int(i64),
    Float(f64),
    Str(String),
    Sym(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is_sym(&self, s: &str) -> bool {
        matches!(&self.tok, Tok::Sym(x) if *x == s)
    }

    /// Case-insensitive keyword test. Dotted and dot-led names never match.
    pub fn is_kw(&self, kw: &str) -> bool {
        match &self.tok {
            Tok::Name { text, leading_dot } => {
                !leading_dot && !text.contains('.') && text.eq_ignore_ascii_case(kw)
            }
            _ => false,
        }
    }
}

/// Words that cannot be used as identifiers.
pub const RESERVED: &[&str] = &[
    "CLASS",
    "EXTEND",
    "REALIZE",
    "ALTER",
    "STORED",
    "NEW",
    "WITH",
    "FIRST",
    "OF",
    "SELECT",
    "FROM",
    "WHERE",
    "GROUP",
    "BY",
    "AS",
    "ON",
    "KEY",
    "FKEY",
    "REFERENCE",
    "INSERT",
    "INTO",
    "VALUES",
    "UPDATE",
    "DELETE",
    "SET",
    "GET",
    "CREATE",
    "TRANS",
    "EXEC",
    "DECLARE",
    "IF",
    "THEN",
    "ELSE",
    "WHILE",
    "RETURN",
    "BEGIN",
    "END",
    "AND",
    "OR",
    "NOT",
    "LIKE",
    "IS",
    "NULL",
    "TRUE",
    "FALSE",
    "UNION",
    "MINUS",
    "INTERSECT",
    "INTERSEPT",
    "TIMES",
    "JOIN",
    "LEFT",
    "RENAME",
    "AGG",
    "SUM",
    "COUNT",
    "IFNULL",
    "CAST",
    "THIS",
    "RELATION",
    "PARTITION",
    "ASSERTONE",
    "INTEGER",
    "FLOAT",
    "STRING",
    "DATETIME",
    "BOOLEAN",
];

pub fn is_reserved(text: &str) -> bool {
    !text.contains('.') && RESERVED.iter().any(|k| text.eq_ignore_ascii_case(k))
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '#'
}

fn is_name_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Print an identifier so the lexer reads it back unchanged.
pub fn quote_ident(s: &str) -> String {
    let plain = !s.is_empty()
        && !is_reserved(s)
        && s.split('.').all(|seg| {
            let mut cs = seg.chars();
            match cs.next() {
                Some(c) if is_name_start(c) => cs.all(is_name_continue),
                _ => false,
            }
        });
    if plain {
        s.to_string()
    } else {
        format!("`{s}`")
    }
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    src: &'a str,
}

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        src,
    };
    let _ = lx.src;
    let mut out = Vec::new();
    while let Some(t) = lx.next_token()? {
        out.push(t);
    }
    Ok(out)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, detail: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            col: self.col,
            detail: detail.into(),
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = if is_name_start(c) {
            self.lex_name(false)?
        } else if c == '.' && self.peek_at(1).map(is_name_start).unwrap_or(false) {
            self.bump();
            self.lex_name(true)?
        } else if c.is_ascii_digit() {
            self.lex_number()?
        } else if c == '"' || c == '\'' {
            self.lex_string()?
        } else if c == '`' {
            self.lex_quoted_name()?
        } else {
            self.lex_symbol()?
        };
        Ok(Some(Token { tok, line, col }))
    }

    fn lex_name(&mut self, leading_dot: bool) -> Result<Tok> {
        let mut text = String::new();
        loop {
            while let Some(c) = self.peek() {
                if is_name_continue(c) || (text.is_empty() && is_name_start(c)) {
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            // dotted continuation: `a.b` is one name token
            if self.peek() == Some('.') && self.peek_at(1).map(is_name_start).unwrap_or(false) {
                text.push('.');
                self.bump();
            } else {
                break;
            }
        }
        Ok(Tok::Name { text, leading_dot })
    }

    fn lex_quoted_name(&mut self) -> Result<Tok> {
        self.bump(); // opening backtick
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('`') => break,
                Some(c) => text.push(c),
                None => return Err(self.err("unterminated quoted name")),
            }
        }
        Ok(Tok::Name {
            text,
            leading_dot: false,
        })
    }

    fn lex_number(&mut self) -> Result<Tok> {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let mut is_float = false;
        if self.peek() == Some('.') && self.peek_at(1).map(|c| c.is_ascii_digit()).unwrap_or(false)
        {
            is_float = true;
            text.push('.');
            self.bump();
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let mut off = 1;
            if matches!(self.peek_at(1), Some('+') | Some('-')) {
                off = 2;
            }
            if self
                .peek_at(off)
                .map(|c| c.is_ascii_digit())
                .unwrap_or(false)
            {
                is_float = true;
                for _ in 0..off {
                    text.push(self.bump().unwrap());
                }
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.err(format!("bad float literal `{text}`")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.err(format!("integer literal `{text}` out of range")))
        }
    }

    fn lex_string(&mut self) -> Result<Tok> {
        let quote = self.bump().unwrap();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string literal")),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('\\') => s.push('\\'),
                    Some('"') => s.push('"'),
                    Some('\'') => s.push('\''),
                    _ => return Err(self.err("bad escape in string literal")),
                },
                Some('\n') => return Err(self.err("newline in string literal")),
                Some(c) if c == quote => break,
                Some(c) => s.push(c),
            }
        }
        Ok(Tok::Str(s))
    }

    fn lex_symbol(&mut self) -> Result<Tok> {
        const TWO: &[&str] = &[":=", "<=", ">=", "<>", "!="];
        const ONE: &str = "=<>+-*/()[]{},;:.";
        if let Some(next) = self.peek_at(1) {
            let pair: String = [self.peek().unwrap(), next].iter().collect();
            if let Some(s) = TWO.iter().find(|t| **t == pair) {
                self.bump();
                self.bump();
                return Ok(Tok::Sym(s));
            }
        }
        let c = self.peek().unwrap();
        if let Some(idx) = ONE.find(c) {
            self.bump();
            return Ok(Tok::Sym(&ONE[idx..idx + c.len_utf8()]));
        }
        Err(self.err(format!("unexpected character `{c}`")))
    }
}

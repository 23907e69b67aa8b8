//! Lexer and recursive-descent parser.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("duplicate function `{0}`")]
    DuplicateFunction(String),
    #[error("program has no `main` function")]
    MissingMain,
    #[error("call to undefined function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} argument(s) but is called with {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Char(u8),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "!", "&", "=", "(",
    ")", "{", "}", "[", "]", ",", ";",
];

/// Largest accepted `array[N]` size.
pub const MAX_ARRAY_LEN: u32 = 1 << 16;

const KEYWORDS: &[&str] = &[
    "global", "fn", "int", "ptr", "array", "if", "else", "while", "return", "free", "assert",
    "null", "input",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError::SyntaxError { line, col, msg };

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= bytes.len() {
                    return Err(err(sl, sc, "unterminated comment".into()));
                }
                if src[i..].starts_with("*/") {
                    i += 2;
                    col += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let v: i64 = text
                .parse()
                .map_err(|_| err(tl, tc, format!("integer literal `{text}` out of range")))?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == b'\'' {
            let (v, used) = match (bytes.get(i + 1), bytes.get(i + 2), bytes.get(i + 3)) {
                (Some(b'\\'), Some(e), Some(b'\'')) => {
                    let v = match e {
                        b'n' => b'\n',
                        b't' => b'\t',
                        b'0' => 0,
                        b'\\' => b'\\',
                        b'\'' => b'\'',
                        _ => return Err(err(tl, tc, "unknown escape in char literal".into())),
                    };
                    (v, 4)
                }
                (Some(&ch), Some(b'\''), _) if ch != b'\\' && ch != b'\'' && ch.is_ascii() => {
                    (ch, 3)
                }
                _ => return Err(err(tl, tc, "malformed char literal".into())),
            };
            i += used;
            col += used;
            out.push(Token {
                tok: Tok::Char(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    col: tc,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(tl, tc, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_node: NodeId,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError::SyntaxError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn int_literal(&mut self) -> Result<i64, ParseError> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { v.wrapping_neg() } else { v })
            }
            t => self.error(format!("expected integer, found {}", describe(&t))),
        }
    }

    fn node(&mut self) -> NodeId {
        let n = self.next_node;
        self.next_node += 1;
        n
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut globals = Vec::new();
        let mut functions: Vec<FunctionDef> = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                break;
            }
            if self.is_kw("global") {
                self.bump();
                let name = self.ident()?;
                let init = if self.is_sym("=") {
                    self.bump();
                    Some(self.int_literal()?)
                } else {
                    None
                };
                self.expect_sym(";")?;
                globals.push(GlobalDecl { name, init });
            } else if self.is_kw("fn") {
                self.bump();
                let name = self.ident()?;
                self.expect_sym("(")?;
                let mut params = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        params.push(self.ident()?);
                        if self.is_sym(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                let body = self.block()?;
                if functions.iter().any(|f| f.name == name) {
                    return Err(ParseError::DuplicateFunction(name));
                }
                functions.push(FunctionDef { name, params, body });
            } else {
                return self.error(format!(
                    "expected `global` or `fn`, found {}",
                    describe(self.peek())
                ));
            }
        }
        Ok(Program::new(globals, functions))
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error("unexpected end of input, expected `}`");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let node = self.node();
        let kind = match self.peek().clone() {
            Tok::Ident(k) if k == "int" || k == "ptr" || k == "array" => {
                self.bump();
                let ty = match k.as_str() {
                    "int" => DeclType::Int,
                    "ptr" => DeclType::Ptr,
                    _ => {
                        self.expect_sym("[")?;
                        let n = self.int_literal()?;
                        if !(0..=MAX_ARRAY_LEN as i64).contains(&n) {
                            return self.error("array size out of range");
                        }
                        self.expect_sym("]")?;
                        DeclType::Array(n as u32)
                    }
                };
                let name = self.ident()?;
                let init = if self.is_sym("=") {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_sym(";")?;
                StmtKind::Decl { ty, name, init }
            }
            Tok::Ident(k) if k == "if" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then_body = self.block()?;
                let else_body = if self.is_kw("else") {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                }
            }
            Tok::Ident(k) if k == "while" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Ident(k) if k == "return" => {
                self.bump();
                let e = if self.is_sym(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_sym(";")?;
                StmtKind::Return(e)
            }
            Tok::Ident(k) if k == "free" => {
                self.bump();
                self.expect_sym("(")?;
                let n = self.ident()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                StmtKind::Free(n)
            }
            Tok::Ident(k) if k == "assert" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                StmtKind::Assert(e)
            }
            Tok::Sym("*") => {
                self.bump();
                let n = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign {
                    target: LValue::Deref(n),
                    value,
                }
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    let args = self.args()?;
                    self.expect_sym(";")?;
                    StmtKind::Call { name, args }
                } else {
                    let target = if self.is_sym("[") {
                        self.bump();
                        let i = self.expr()?;
                        self.expect_sym("]")?;
                        LValue::Index(name, i)
                    } else {
                        LValue::Var(name)
                    };
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    StmtKind::Assign { target, value }
                }
            }
            t => return self.error(format!("expected statement, found {}", describe(&t))),
        };
        Ok(Stmt::new(node, kind))
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else {
            return None;
        };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Sym("-") => {
                self.bump();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Sym("!") => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            Tok::Sym("*") => {
                self.bump();
                Ok(Expr::Deref(self.ident()?))
            }
            Tok::Sym("&") => {
                self.bump();
                Ok(Expr::AddrOf(self.ident()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Char(c) => {
                self.bump();
                Ok(Expr::Char(c))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(k) if k == "null" => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Ident(k) if k == "input" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Input(Box::new(e)))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("(") {
                    Ok(Expr::Call(name, self.args()?))
                } else if self.is_sym("[") {
                    self.bump();
                    let i = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Index(name, Box::new(i)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            t => self.error(format!("expected expression, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Char(c) => format!("char literal {:?}", *c as char),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parse source text into a [`Program`]. Library fragments without `main` are
/// accepted; use [`parse_executable`] when the program is going to be run.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        next_node: 0,
    };
    p.program()
}

/// Parse and check that the program can be executed: `main` exists and every
/// call targets a defined function with the right arity.
pub fn parse_executable(source: &str) -> Result<Program, ParseError> {
    let p = parse(source)?;
    check_executable(&p)?;
    Ok(p)
}

pub fn check_executable(p: &Program) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for f in &p.functions {
        if !seen.insert(f.name.as_str()) {
            return Err(ParseError::DuplicateFunction(f.name.clone()));
        }
    }
    if !p.has_main() {
        return Err(ParseError::MissingMain);
    }
    for f in &p.functions {
        for s in f.walk() {
            let mut calls: Vec<(String, usize)> = Vec::new();
            if let StmtKind::Call { name, args } = &s.kind {
                calls.push((name.clone(), args.len()));
            }
            for e in s.own_exprs() {
                collect_calls(e, &mut calls);
            }
            for (name, found) in calls {
                let Some(callee) = p.function(&name) else {
                    return Err(ParseError::UnknownFunction(name));
                };
                if callee.params.len() != found {
                    return Err(ParseError::ArityMismatch {
                        name,
                        expected: callee.params.len(),
                        found,
                    });
                }
            }
        }
    }
    Ok(())
}

fn collect_calls(e: &Expr, out: &mut Vec<(String, usize)>) {
    match e {
        Expr::Call(n, args) => {
            out.push((n.clone(), args.len()));
            args.iter().for_each(|a| collect_calls(a, out));
        }
        Expr::Index(_, i) | Expr::Input(i) | Expr::Unary(_, i) => collect_calls(i, out),
        Expr::Binary(_, l, r) => {
            collect_calls(l, out);
            collect_calls(r, out);
        }
        _ => {}
    }
}

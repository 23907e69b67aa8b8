//! Syntax tree for the mini-language.
//!
//! Every statement carries two identities: a `node` id that is stable across
//! slicing and reduction (it is how fingerprints are re-mapped between
//! program versions), and a `line` that is derived from the canonical
//! rendering and changes whenever statements are added or removed.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable statement identity, preserved by every transformation that keeps
/// the statement.
pub type NodeId = u32;

/// `(function, line)` where `line` is the 1-based line of the statement in the
/// canonical rendering of the function body.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatementId {
    pub function: String,
    pub line: u32,
}

impl StatementId {
    pub fn new(function: impl Into<String>, line: u32) -> Self {
        Self {
            function: function.into(),
            line,
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.function, self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
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
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Char(u8),
    Null,
    Var(String),
    /// `*name`
    Deref(String),
    /// `&name`
    AddrOf(String),
    /// `name[index]`
    Index(String, Box<Expr>),
    /// `input(index)`
    Input(Box<Expr>),
    Call(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Visit every variable name this expression reads or takes the address of.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Int(_) | Expr::Char(_) | Expr::Null => {}
            Expr::Var(n) | Expr::Deref(n) | Expr::AddrOf(n) => f(n),
            Expr::Index(n, i) => {
                f(n);
                i.for_each_var(f);
            }
            Expr::Input(e) | Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Call(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    /// Visit every integer and character literal.
    pub fn for_each_literal(&self, f: &mut impl FnMut(i64)) {
        match self {
            Expr::Int(v) => f(*v),
            Expr::Char(c) => f(i64::from(*c)),
            Expr::Null | Expr::Var(_) | Expr::Deref(_) | Expr::AddrOf(_) => {}
            Expr::Index(_, e) | Expr::Input(e) | Expr::Unary(_, e) => e.for_each_literal(f),
            Expr::Call(_, args) => args.iter().for_each(|a| a.for_each_literal(f)),
            Expr::Binary(_, l, r) => {
                l.for_each_literal(f);
                r.for_each_literal(f);
            }
        }
    }

    pub fn for_each_call(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Int(_)
            | Expr::Char(_)
            | Expr::Null
            | Expr::Var(_)
            | Expr::Deref(_)
            | Expr::AddrOf(_) => {}
            Expr::Index(_, i) => i.for_each_call(f),
            Expr::Input(e) | Expr::Unary(_, e) => e.for_each_call(f),
            Expr::Call(name, args) => {
                f(name);
                args.iter().for_each(|a| a.for_each_call(f));
            }
            Expr::Binary(_, l, r) => {
                l.for_each_call(f);
                r.for_each_call(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DeclType {
    Int,
    Ptr,
    Array(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Deref(String),
    Index(String, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Deref(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Decl {
        ty: DeclType,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
    Free(String),
    Assert(Expr),
}

#[derive(Debug, Clone, Eq)]
pub struct Stmt {
    pub node: NodeId,
    pub line: u32,
    pub kind: StmtKind,
}

// Structural equality: node ids and derived lines do not participate.
impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl std::hash::Hash for Stmt {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
    }
}

impl Stmt {
    pub fn new(node: NodeId, kind: StmtKind) -> Self {
        Self {
            node,
            line: 0,
            kind,
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }

    /// Expressions evaluated by the statement itself, excluding nested blocks.
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value } => {
                let mut v = vec![value];
                if let LValue::Index(_, i) = target {
                    v.push(i);
                }
                v
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Free(_) => vec![],
            StmtKind::Assert(e) => vec![e],
        }
    }

    /// Variables referenced by the statement itself (reads, writes, address-of),
    /// excluding nested blocks. A declaration does not reference its own name.
    pub fn own_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.own_exprs() {
            e.for_each_var(&mut |n| {
                out.insert(n.to_string());
            });
        }
        match &self.kind {
            StmtKind::Assign { target, .. } => {
                out.insert(target.name().to_string());
            }
            StmtKind::Free(n) => {
                out.insert(n.clone());
            }
            _ => {}
        }
        out
    }

    /// Functions called by the statement itself, excluding nested blocks.
    pub fn own_calls(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let StmtKind::Call { name, .. } = &self.kind {
            out.insert(name.clone());
        }
        for e in self.own_exprs() {
            e.for_each_call(&mut |n| {
                out.insert(n.to_string());
            });
        }
        out
    }

    pub fn children(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                let mut v = vec![then_body];
                if let Some(e) = else_body {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } => vec![body],
            _ => vec![],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                let mut v = vec![then_body];
                if let Some(e) = else_body {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } => vec![body],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalDecl {
    pub name: String,
    pub init: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

impl FunctionDef {
    /// Number of canonical lines the body occupies (statements, `} else {`
    /// separators and closing braces).
    pub fn body_len(&self) -> u32 {
        fn block_len(body: &[Stmt]) -> u32 {
            body.iter()
                .map(|s| match &s.kind {
                    StmtKind::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        2 + block_len(then_body)
                            + else_body.as_ref().map(|e| 1 + block_len(e)).unwrap_or(0)
                    }
                    StmtKind::While { body, .. } => 2 + block_len(body),
                    _ => 1,
                })
                .sum()
        }
        block_len(&self.body)
    }

    /// Pre-order walk over every statement of the function.
    pub fn walk(&self) -> Vec<&Stmt> {
        fn go<'a>(body: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in body {
                out.push(s);
                for c in s.children() {
                    go(c, out);
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }

    /// Names declared anywhere in the function, including parameters.
    pub fn declared_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.params.iter().cloned().collect();
        for s in self.walk() {
            if let StmtKind::Decl { name, .. } = &s.kind {
                out.insert(name.clone());
            }
        }
        out
    }
}

/// A parsed mini-language program.
#[derive(Debug, Clone)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionDef>,
    next_node: NodeId,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.globals == other.globals && self.functions == other.functions
    }
}

impl Eq for Program {}

impl Program {
    /// Build a program and lay out canonical line numbers.
    pub fn new(globals: Vec<GlobalDecl>, functions: Vec<FunctionDef>) -> Self {
        let mut p = Program {
            globals,
            functions,
            next_node: 0,
        };
        let max = p
            .functions
            .iter()
            .flat_map(|f| f.walk())
            .map(|s| s.node)
            .max();
        p.next_node = max.map(|m| m + 1).unwrap_or(0);
        p.relayout();
        p
    }

    /// Recompute every statement's canonical line.
    pub fn relayout(&mut self) {
        fn layout(body: &mut [Stmt], next: &mut u32) {
            for s in body {
                s.line = *next;
                *next += 1;
                // Each nested block is followed by either `} else {` or `}`.
                for c in s.children_mut() {
                    layout(c, next);
                    *next += 1;
                }
            }
        }
        for f in &mut self.functions {
            let mut next = 1;
            layout(&mut f.body, &mut next);
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn has_main(&self) -> bool {
        self.function("main").is_some()
    }

    /// Total number of statements across all functions.
    pub fn statement_count(&self) -> usize {
        self.functions.iter().map(|f| f.walk().len()).sum()
    }

    /// Every statement paired with its owning function, in pre-order.
    pub fn statements(&self) -> Vec<(&str, &Stmt)> {
        self.functions
            .iter()
            .flat_map(|f| f.walk().into_iter().map(move |s| (f.name.as_str(), s)))
            .collect()
    }

    pub fn statement_at(&self, id: &StatementId) -> Option<&Stmt> {
        self.function(&id.function)?
            .walk()
            .into_iter()
            .find(|s| s.line == id.line)
    }

    pub fn find_node(&self, node: NodeId) -> Option<(&str, &Stmt)> {
        self.statements().into_iter().find(|(_, s)| s.node == node)
    }

    /// Allocate a fresh node id for a statement added after parsing.
    pub fn fresh_node(&mut self) -> NodeId {
        let n = self.next_node;
        self.next_node += 1;
        n
    }

    /// Names of functions reachable from `main` through call statements and
    /// call expressions.
    pub fn reachable_functions(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec!["main".to_string()];
        while let Some(name) = stack.pop() {
            if !seen.insert(name.clone()) {
                continue;
            }
            if let Some(f) = self.function(&name) {
                for s in f.walk() {
                    for c in s.own_calls() {
                        if !seen.contains(&c) {
                            stack.push(c);
                        }
                    }
                }
            }
        }
        seen.retain(|n| self.function(n).is_some());
        seen
    }
}

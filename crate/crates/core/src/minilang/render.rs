//! Canonical text form: one statement per line, four-space indentation, no
//! comments or blank lines. Statement lines in this text define
//! [`StatementId`](super::StatementId) lines.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn render(program: &Program) -> String {
    render_lines(program).join("\n") + if program_is_empty(program) { "" } else { "\n" }
}

fn program_is_empty(p: &Program) -> bool {
    p.globals.is_empty() && p.functions.is_empty()
}

/// The canonical rendering split into lines (no trailing newline entries).
pub fn render_lines(program: &Program) -> Vec<String> {
    let mut out = Vec::new();
    for g in &program.globals {
        match g.init {
            Some(v) => out.push(format!("global {} = {};", g.name, v)),
            None => out.push(format!("global {};", g.name)),
        }
    }
    for f in &program.functions {
        out.push(format!("fn {}({}) {{", f.name, f.params.join(", ")));
        block(&f.body, 1, &mut out);
        out.push("}".to_string());
    }
    out
}

fn block(body: &[Stmt], depth: usize, out: &mut Vec<String>) {
    let pad = INDENT.repeat(depth);
    for s in body {
        match &s.kind {
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                out.push(format!("{pad}if ({}) {{", expr(cond)));
                block(then_body, depth + 1, out);
                if let Some(e) = else_body {
                    out.push(format!("{pad}}} else {{"));
                    block(e, depth + 1, out);
                }
                out.push(format!("{pad}}}"));
            }
            StmtKind::While { cond, body } => {
                out.push(format!("{pad}while ({}) {{", expr(cond)));
                block(body, depth + 1, out);
                out.push(format!("{pad}}}"));
            }
            _ => out.push(format!("{pad}{}", simple_stmt(s))),
        }
    }
}

/// Single-line rendering of a non-compound statement, or the header of a
/// compound one.
pub fn stmt_header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::If { cond, .. } => format!("if ({}) {{", expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({}) {{", expr(cond)),
        _ => simple_stmt(s),
    }
}

fn simple_stmt(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl { ty, name, init } => {
            let mut t = match ty {
                DeclType::Int => format!("int {name}"),
                DeclType::Ptr => format!("ptr {name}"),
                DeclType::Array(n) => format!("array[{n}] {name}"),
            };
            if let Some(e) = init {
                let _ = write!(t, " = {}", expr(e));
            }
            t.push(';');
            t
        }
        StmtKind::Assign { target, value } => {
            let lhs = match target {
                LValue::Var(n) => n.clone(),
                LValue::Deref(n) => format!("*{n}"),
                LValue::Index(n, i) => format!("{n}[{}]", expr(i)),
            };
            format!("{lhs} = {};", expr(value))
        }
        StmtKind::Call { name, args } => format!("{name}({});", args_list(args)),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Return(Some(e)) => format!("return {};", expr(e)),
        StmtKind::Free(n) => format!("free({n});"),
        StmtKind::Assert(e) => format!("assert({});", expr(e)),
        StmtKind::If { .. } | StmtKind::While { .. } => unreachable!("compound statement"),
    }
}

fn args_list(args: &[Expr]) -> String {
    args.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) if *v < 0 => format!("({v})"),
        Expr::Int(v) => v.to_string(),
        Expr::Char(c) => match c {
            b'\n' => "'\\n'".into(),
            b'\t' => "'\\t'".into(),
            0 => "'\\0'".into(),
            b'\\' => "'\\\\'".into(),
            b'\'' => "'\\''".into(),
            c => format!("'{}'", *c as char),
        },
        Expr::Null => "null".into(),
        Expr::Var(n) => n.clone(),
        Expr::Deref(n) => format!("*{n}"),
        Expr::AddrOf(n) => format!("&{n}"),
        Expr::Index(n, i) => format!("{n}[{}]", expr(i)),
        Expr::Input(i) => format!("input({})", expr(i)),
        Expr::Call(n, args) => format!("{n}({})", args_list(args)),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match **inner {
                Expr::Binary(..) | Expr::Unary(..) => format!("{sym}({})", expr(inner)),
                Expr::Int(v) if v < 0 => format!("{sym}({})", v),
                _ => format!("{sym}{}", expr(inner)),
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let lhs = match &**l {
                Expr::Binary(lop, ..) if lop.precedence() < p => format!("({})", expr(l)),
                _ => expr(l),
            };
            let rhs = match &**r {
                Expr::Binary(rop, ..) if rop.precedence() <= p => format!("({})", expr(r)),
                _ => expr(r),
            };
            format!("{lhs} {} {rhs}", op.symbol())
        }
    }
}

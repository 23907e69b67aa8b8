use std::collections::BTreeSet;

use crate::minilang::{FunctionDef, Program, StatementId, Stmt, StmtKind};

/// Keep every function that owns a traced statement (plus `main` and every
/// global). Untraced statements that call a dropped function are removed so
/// the slice stays executable; they never ran, so the traced execution is
/// unchanged.
pub fn slice_program(original: &Program, trace: &[StatementId]) -> Program {
    let traced: BTreeSet<&StatementId> = trace.iter().collect();
    let mut kept: BTreeSet<String> = trace.iter().map(|s| s.function.clone()).collect();
    kept.insert("main".to_string());
    // A traced call into a function with an empty body leaves no trace entry
    // inside the callee, but the callee is still needed.
    for id in &traced {
        if let Some(s) = original.statement_at(id) {
            kept.extend(s.own_calls());
        }
    }

    let functions = original
        .functions
        .iter()
        .filter(|f| kept.contains(&f.name))
        .map(|f| FunctionDef {
            name: f.name.clone(),
            params: f.params.clone(),
            body: filter_block(&f.name, &f.body, &traced, &kept),
        })
        .collect();
    Program::new(original.globals.clone(), functions)
}

fn filter_block(
    func: &str,
    body: &[Stmt],
    traced: &BTreeSet<&StatementId>,
    kept: &BTreeSet<String>,
) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        let was_traced = traced.contains(&StatementId::new(func, s.line));
        if !was_traced && calls_outside(s, kept) {
            continue;
        }
        let mut s = s.clone();
        match &mut s.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                *then_body = filter_block(func, then_body, traced, kept);
                if let Some(e) = else_body {
                    *e = filter_block(func, e, traced, kept);
                }
            }
            StmtKind::While { body, .. } => *body = filter_block(func, body, traced, kept),
            _ => {}
        }
        out.push(s);
    }
    out
}

fn calls_outside(s: &Stmt, kept: &BTreeSet<String>) -> bool {
    if s.own_calls().iter().any(|c| !kept.contains(c)) {
        return true;
    }
    s.children()
        .into_iter()
        .flatten()
        .any(|c| calls_outside(c, kept))
}

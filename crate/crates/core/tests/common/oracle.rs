//! Reference implementations used to cross-check the reducer: statement
//! projection, reproduction by statement node, brute-force minimum and a
//! single-step minimality scan. Shared with the acceptance target.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fuzzeraid_core::minilang::{
    execute, FailureFingerprint, FunctionDef, NodeId, Program, Stmt, StmtKind,
};

pub const BRUTE_FORCE_LIMIT: usize = 12;
// Independent reproduction oracle: a candidate reproduces the target when it
// fails with the same kind at the same statement node, through the same
// sequence of (function, call-site node) frames.

pub fn line_nodes(p: &Program) -> BTreeMap<(String, u32), NodeId> {
    p.statements()
        .into_iter()
        .map(|(f, st)| ((f.to_string(), st.line), st.node))
        .collect()
}

#[derive(PartialEq, Eq, Debug)]
pub struct NodeFingerprint {
    pub kind: String,
    pub location: Option<NodeId>,
    pub frames: Vec<(String, Option<NodeId>)>,
}

pub fn by_node(fp: &FailureFingerprint, p: &Program) -> NodeFingerprint {
    let nodes = line_nodes(p);
    let at = |f: &str, l: u32| nodes.get(&(f.to_string(), l)).copied();
    NodeFingerprint {
        kind: fp.kind.to_string(),
        location: at(&fp.location.function, fp.location.line),
        frames: fp.stack.frames.iter().map(|fr| (fr.function.clone(), at(&fr.function, fr.line))).collect(),
    }
}

/// False when `cand` uses a local of `base` without keeping any of its
/// declarations.
pub fn well_formed(base: &Program, cand: &Program) -> bool {
    fn decls(body: &[Stmt], out: &mut BTreeSet<String>) {
        for st in body {
            if let StmtKind::Decl { name, .. } = &st.kind {
                out.insert(name.clone());
            }
            for c in st.children() {
                decls(c, out);
            }
        }
    }
    fn uses(body: &[Stmt], out: &mut BTreeSet<String>) {
        for st in body {
            out.extend(st.own_vars());
            for c in st.children() {
                uses(c, out);
            }
        }
    }
    for f in &cand.functions {
        let Some(orig) = base.function(&f.name) else { continue };
        let mut locals = BTreeSet::new();
        decls(&orig.body, &mut locals);
        let mut declared = BTreeSet::new();
        decls(&f.body, &mut declared);
        let mut used = BTreeSet::new();
        uses(&f.body, &mut used);
        if used.iter().any(|v| locals.contains(v) && !declared.contains(v)) {
            return false;
        }
    }
    true
}

pub fn reproduces(
    base: &Program,
    target: &NodeFingerprint,
    cand: &Program,
    input: &[u8],
    step_budget: u64,
) -> bool {
    if !well_formed(base, cand) {
        return false;
    }
    match execute(cand, input, step_budget).fingerprint() {
        Some(fp) => by_node(fp, cand) == *target,
        None => false,
    }
}

/// Keep the statements in `keep`; a dropped `if`/`while` with surviving
/// nested statements is replaced by them, unless both branches of an `if`
/// survive.
pub fn keep_only(p: &Program, keep: &BTreeSet<NodeId>) -> Option<Program> {
    fn block(body: &[Stmt], keep: &BTreeSet<NodeId>) -> Option<Vec<Stmt>> {
        let mut out = Vec::new();
        for st in body {
            let kept_kind = match &st.kind {
                StmtKind::If { cond, then_body, else_body } => {
                    let t = block(then_body, keep)?;
                    let e = match else_body {
                        Some(e) => Some(block(e, keep)?),
                        None => None,
                    };
                    if !keep.contains(&st.node) {
                        let e = e.unwrap_or_default();
                        match (t.is_empty(), e.is_empty()) {
                            (_, true) => out.extend(t),
                            (true, false) => out.extend(e),
                            (false, false) => return None,
                        }
                        continue;
                    }
                    StmtKind::If {
                        cond: cond.clone(),
                        then_body: t,
                        else_body: e,
                    }
                }
                StmtKind::While { cond, body } => {
                    let b = block(body, keep)?;
                    if !keep.contains(&st.node) {
                        out.extend(b);
                        continue;
                    }
                    StmtKind::While {
                        cond: cond.clone(),
                        body: b,
                    }
                }
                k if keep.contains(&st.node) => k.clone(),
                _ => continue,
            };
            out.push(Stmt::new(st.node, kept_kind));
        }
        Some(out)
    }
    let mut q = p.clone();
    for f in &mut q.functions {
        f.body = block(&f.body, keep)?;
    }
    q.relayout();
    Some(q)
}

pub fn all_nodes(p: &Program) -> Vec<NodeId> {
    p.statements().into_iter().map(|(_, st)| st.node).collect()
}

/// Smallest number of statements of `p` that still reproduce, by trying
/// every subset in order of size.
pub fn brute_force_minimum(
    p: &Program,
    target: &NodeFingerprint,
    input: &[u8],
    step_budget: u64,
) -> Option<usize> {
    let nodes = all_nodes(p);
    let n = nodes.len();
    assert!(n <= BRUTE_FORCE_LIMIT);
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| m.count_ones());
    masks.into_iter().find_map(|m| {
        let keep: BTreeSet<NodeId> = (0..n).filter(|i| m >> i & 1 == 1).map(|i| nodes[i]).collect();
        let cand = keep_only(p, &keep)?;
        reproduces(p, target, &cand, input, step_budget).then_some(keep.len())
    })
}

/// Statements whose single removal, or whose replacement by one of its
/// branches, still reproduces.
pub fn one_minimality_violations(
    p: &Program,
    target: &NodeFingerprint,
    input: &[u8],
    step_budget: u64,
) -> Vec<String> {
    let nodes = all_nodes(p);
    let mut bad = Vec::new();
    for (i, &node) in nodes.iter().enumerate() {
        // Removing the node together with everything nested in it.
        let mut dropped: BTreeSet<NodeId> = BTreeSet::from([node]);
        if let Some((_, st)) = p.find_node(node) {
            let inner = Program::new(Vec::new(), vec![FunctionDef {
                name: "x".into(),
                params: Vec::new(),
                body: vec![st.clone()],
            }]);
            dropped.extend(all_nodes(&inner));
        }
        let keep: BTreeSet<NodeId> = nodes.iter().copied().filter(|n| !dropped.contains(n)).collect();
        if let Some(cand) = keep_only(p, &keep) {
            if reproduces(p, target, &cand, input, step_budget) {
                bad.push(format!("statement #{i} removable"));
            }
        }
        // Dropping just the header keeps a sole non-empty branch.
        let keep: BTreeSet<NodeId> = nodes.iter().copied().filter(|&n| n != node).collect();
        if let Some(cand) = keep_only(p, &keep) {
            let is_compound = p.find_node(node).is_some_and(|(_, st)| st.is_compound());
            if is_compound && reproduces(p, target, &cand, input, step_budget) {
                bad.push(format!("statement #{i} spliceable"));
            }
        }
        let Some((_, st)) = p.find_node(node) else { continue };
        if let StmtKind::If { then_body, else_body: Some(e), .. } = &st.kind {
            for (branch, other) in [(then_body, e), (e, then_body)] {
                if branch.is_empty() {
                    continue;
                }
                let mut other_nodes = BTreeSet::from([node]);
                for o in other {
                    let inner = Program::new(Vec::new(), vec![FunctionDef {
                        name: "x".into(),
                        params: Vec::new(),
                        body: vec![o.clone()],
                    }]);
                    other_nodes.extend(all_nodes(&inner));
                }
                let keep: BTreeSet<NodeId> =
                    nodes.iter().copied().filter(|n| !other_nodes.contains(n)).collect();
                if let Some(cand) = keep_only(p, &keep) {
                    if reproduces(p, target, &cand, input, step_budget) {
                        bad.push(format!("statement #{i} reducible to one branch"));
                    }
                }
            }
        }
    }
    bad
}

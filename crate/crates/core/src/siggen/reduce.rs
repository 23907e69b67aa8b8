use std::collections::{BTreeSet, HashMap};

use crate::minilang::{
    execute, render, FailureFingerprint, FunctionDef, NodeId, Program, Stmt, StmtKind,
};

use super::remap::fingerprint_remap;
use super::SiggenError;

/// Programs with at most this many statements are also searched exhaustively
/// for a minimum-cardinality reproducing subset.
pub const EXHAUSTIVE_LIMIT: usize = 12;

pub const DEFAULT_MAX_ORACLE_RUNS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReduceConfig {
    pub step_budget: u64,
    pub max_oracle_runs: u64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        Self {
            step_budget: crate::minilang::DEFAULT_STEP_BUDGET,
            max_oracle_runs: DEFAULT_MAX_ORACLE_RUNS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub program: Program,
    /// The target re-expressed in `program`'s canonical lines.
    pub fingerprint: FailureFingerprint,
    /// False when the oracle budget ran out before a fixpoint was reached.
    pub minimal: bool,
    pub oracle_runs: u64,
}

/// Which part of a compound statement survives when its header is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Splice {
    Then,
    Else,
    Body,
}

/// Shrink `candidate` while it keeps failing with `target` on `input`.
/// `target` must already be expressed in `candidate`'s lines.
pub fn reduce(
    candidate: &Program,
    input: &[u8],
    target: &FailureFingerprint,
    config: &ReduceConfig,
) -> Result<Reduction, SiggenError> {
    let mut oracle = Oracle::new(candidate, input, target, config);
    let out = execute(candidate, input, config.step_budget);
    oracle.runs += 1;
    if out.fingerprint() != Some(target) {
        return Err(SiggenError::NotReproducing);
    }
    oracle.cache.insert(cache_key(candidate), true);

    let mut cur = candidate.clone();
    if cur.statement_count() <= EXHAUSTIVE_LIMIT {
        exhaustive(&mut cur, &mut oracle);
    }
    loop {
        let mut changed = ddmin(&mut cur, &mut oracle);
        changed |= splice_pass(&mut cur, &mut oracle);
        changed |= prune(&mut cur, &mut oracle);
        if !changed && !oracle.exhausted && cur.statement_count() <= EXHAUSTIVE_LIMIT {
            changed = exhaustive(&mut cur, &mut oracle);
        }
        if !changed || oracle.exhausted {
            break;
        }
    }
    let fingerprint = fingerprint_remap(target, candidate, &cur)?;
    Ok(Reduction {
        program: cur,
        fingerprint,
        minimal: !oracle.exhausted,
        oracle_runs: oracle.runs,
    })
}

struct Oracle<'a> {
    base: &'a Program,
    input: &'a [u8],
    target: &'a FailureFingerprint,
    step_budget: u64,
    max_runs: u64,
    runs: u64,
    exhausted: bool,
    /// Verdicts by text and statement identity: equal texts can still place
    /// the target on different statements.
    cache: HashMap<(String, Vec<NodeId>), bool>,
}

impl<'a> Oracle<'a> {
    fn new(
        base: &'a Program,
        input: &'a [u8],
        target: &'a FailureFingerprint,
        config: &ReduceConfig,
    ) -> Self {
        Self {
            base,
            input,
            target,
            step_budget: config.step_budget,
            max_runs: config.max_oracle_runs,
            runs: 0,
            exhausted: false,
            cache: HashMap::new(),
        }
    }

    fn test(&mut self, cand: &Program) -> bool {
        if !admissible(self.base, cand) {
            return false;
        }
        let key = cache_key(cand);
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        if self.runs >= self.max_runs {
            self.exhausted = true;
            return false;
        }
        self.runs += 1;
        let verdict = match fingerprint_remap(self.target, self.base, cand) {
            Ok(t) => execute(cand, self.input, self.step_budget).fingerprint() == Some(&t),
            Err(_) => false,
        };
        self.cache.insert(key, verdict);
        verdict
    }
}

fn cache_key(p: &Program) -> (String, Vec<NodeId>) {
    (render(p), preorder_nodes(p))
}

/// A candidate may not drop every declaration of a local it still uses.
pub fn admissible(base: &Program, cand: &Program) -> bool {
    for f in &cand.functions {
        let Some(orig) = base.function(&f.name) else {
            continue;
        };
        let locals: BTreeSet<&str> = orig
            .walk()
            .into_iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Decl { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        if locals.is_empty() {
            continue;
        }
        let declared = f.declared_names();
        for s in f.walk() {
            for v in s.own_vars() {
                if locals.contains(v.as_str()) && !declared.contains(&v) {
                    return false;
                }
            }
        }
    }
    true
}

fn preorder_nodes(p: &Program) -> Vec<NodeId> {
    p.statements().into_iter().map(|(_, s)| s.node).collect()
}

/// Remove the statements (with their nested blocks) whose node is in `nodes`.
pub fn delete_nodes(p: &Program, nodes: &BTreeSet<NodeId>) -> Program {
    fn block(body: &[Stmt], nodes: &BTreeSet<NodeId>) -> Vec<Stmt> {
        body.iter()
            .filter(|s| !nodes.contains(&s.node))
            .map(|s| map_children(s, |c| block(c, nodes)))
            .collect()
    }
    with_bodies(p, |f| block(&f.body, nodes))
}

/// Replace the compound statement `node` by one of its blocks.
pub fn splice(p: &Program, node: NodeId, which: Splice) -> Option<Program> {
    fn block(body: &[Stmt], node: NodeId, which: Splice, hit: &mut bool) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in body {
            if s.node == node {
                let inner = match (&s.kind, which) {
                    (StmtKind::If { then_body, .. }, Splice::Then) => Some(then_body),
                    (
                        StmtKind::If {
                            else_body: Some(e), ..
                        },
                        Splice::Else,
                    ) => Some(e),
                    (StmtKind::While { body, .. }, Splice::Body) => Some(body),
                    _ => None,
                };
                if let Some(inner) = inner {
                    *hit = true;
                    out.extend(inner.iter().cloned());
                    continue;
                }
            }
            out.push(map_children(s, |c| block(c, node, which, hit)));
        }
        out
    }
    let mut hit = false;
    let q = with_bodies(p, |f| block(&f.body, node, which, &mut hit));
    hit.then_some(q)
}

/// Splice variants applicable to `s`.
pub fn splice_options(s: &Stmt) -> Vec<Splice> {
    match &s.kind {
        StmtKind::If { else_body, .. } => {
            if else_body.is_some() {
                vec![Splice::Then, Splice::Else]
            } else {
                vec![Splice::Then]
            }
        }
        StmtKind::While { .. } => vec![Splice::Body],
        _ => vec![],
    }
}

/// Keep exactly the statements in `keep`. A dropped compound statement whose
/// nested blocks still hold kept statements is spliced; `None` when that would
/// need both branches of an `if`.
pub fn project(p: &Program, keep: &BTreeSet<NodeId>) -> Option<Program> {
    fn block(body: &[Stmt], keep: &BTreeSet<NodeId>) -> Option<Vec<Stmt>> {
        let mut out = Vec::new();
        for s in body {
            if keep.contains(&s.node) {
                let mut ok = true;
                let c = map_children(s, |c| {
                    block(c, keep).unwrap_or_else(|| {
                        ok = false;
                        Vec::new()
                    })
                });
                if !ok {
                    return None;
                }
                out.push(c);
                continue;
            }
            let mut parts = Vec::new();
            for c in s.children() {
                let b = block(c, keep)?;
                if !b.is_empty() {
                    parts.push(b);
                }
            }
            match parts.len() {
                0 => {}
                1 => out.extend(parts.pop().unwrap()),
                _ => return None,
            }
        }
        Some(out)
    }
    let mut failed = false;
    let q = with_bodies(p, |f| {
        block(&f.body, keep).unwrap_or_else(|| {
            failed = true;
            Vec::new()
        })
    });
    (!failed).then_some(q)
}

fn map_children(s: &Stmt, mut f: impl FnMut(&[Stmt]) -> Vec<Stmt>) -> Stmt {
    let kind = match &s.kind {
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => StmtKind::If {
            cond: cond.clone(),
            then_body: f(then_body),
            else_body: else_body.as_ref().map(|e| f(e)),
        },
        StmtKind::While { cond, body } => StmtKind::While {
            cond: cond.clone(),
            body: f(body),
        },
        k => k.clone(),
    };
    Stmt::new(s.node, kind)
}

fn with_bodies(p: &Program, mut f: impl FnMut(&FunctionDef) -> Vec<Stmt>) -> Program {
    let functions = p
        .functions
        .iter()
        .map(|fd| FunctionDef {
            name: fd.name.clone(),
            params: fd.params.clone(),
            body: f(fd),
        })
        .collect();
    Program::new(p.globals.clone(), functions)
}

fn ddmin(cur: &mut Program, oracle: &mut Oracle) -> bool {
    let mut changed = false;
    let mut units = preorder_nodes(cur);
    let mut n = 2usize;
    while !units.is_empty() && !oracle.exhausted {
        let parts = n.min(units.len());
        let mut progressed = false;
        for chunk in chunks(&units, parts) {
            let cand = delete_nodes(cur, &chunk.iter().copied().collect());
            if oracle.test(&cand) {
                *cur = cand;
                units = preorder_nodes(cur);
                n = parts.saturating_sub(1).max(2);
                progressed = true;
                changed = true;
                break;
            }
        }
        if !progressed {
            if parts >= units.len() {
                break;
            }
            n = (parts * 2).min(units.len());
        }
    }
    changed
}

fn chunks(units: &[NodeId], parts: usize) -> Vec<&[NodeId]> {
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let end = units.len() * (i + 1) / parts;
        out.push(&units[start..end]);
        start = end;
    }
    out
}

fn splice_pass(cur: &mut Program, oracle: &mut Oracle) -> bool {
    let mut changed = false;
    'outer: while !oracle.exhausted {
        let options: Vec<(NodeId, Splice)> = cur
            .statements()
            .into_iter()
            .flat_map(|(_, s)| splice_options(s).into_iter().map(move |w| (s.node, w)))
            .collect();
        for (node, which) in options {
            if let Some(cand) = splice(cur, node, which) {
                if oracle.test(&cand) {
                    *cur = cand;
                    changed = true;
                    continue 'outer;
                }
            }
        }
        break;
    }
    changed
}

fn prune(cur: &mut Program, oracle: &mut Oracle) -> bool {
    let mut changed = drop_unreachable(cur);
    let mut tried = BTreeSet::new();
    while let Some(name) = cur
        .functions
        .iter()
        .find(|f| f.name != "main" && f.body.is_empty() && !tried.contains(&f.name))
        .map(|f| f.name.clone())
    {
        tried.insert(name.clone());
        let callers: BTreeSet<NodeId> = cur
            .statements()
            .into_iter()
            .filter(|(_, s)| s.own_calls().contains(&name))
            .map(|(_, s)| s.node)
            .collect();
        let mut cand = delete_nodes(cur, &callers);
        cand.functions.retain(|f| f.name != name);
        drop_unreachable(&mut cand);
        if oracle.test(&cand) {
            *cur = cand;
            changed = true;
        }
    }
    let used: BTreeSet<String> = cur
        .statements()
        .into_iter()
        .flat_map(|(_, s)| s.own_vars())
        .collect();
    let before = cur.globals.len();
    cur.globals.retain(|g| used.contains(&g.name));
    changed | (cur.globals.len() != before)
}

fn drop_unreachable(p: &mut Program) -> bool {
    let reach = p.reachable_functions();
    let before = p.functions.len();
    p.functions.retain(|f| reach.contains(&f.name));
    before != p.functions.len()
}

/// Try every statement subset smaller than the current program, smallest
/// first; adopt the first that reproduces.
fn exhaustive(cur: &mut Program, oracle: &mut Oracle) -> bool {
    let nodes = preorder_nodes(cur);
    let n = nodes.len();
    if n > EXHAUSTIVE_LIMIT {
        return false;
    }
    for k in 0..n as u32 {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() != k {
                continue;
            }
            let keep: BTreeSet<NodeId> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| nodes[i])
                .collect();
            if let Some(cand) = project(cur, &keep) {
                if oracle.test(&cand) {
                    *cur = cand;
                    return true;
                }
            }
            if oracle.exhausted {
                return false;
            }
        }
    }
    false
}

/// A single-step reduction that still reproduces, found by
/// [`check_one_minimal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimalityViolation {
    Removable { function: String, line: u32 },
    Spliceable { function: String, line: u32 },
    EmptyFunction(String),
    UnreachableFunction(String),
}

/// Check that no single statement removal or header splice of `program`
/// still fails with `fingerprint` (expressed in `program`'s lines), and that
/// no function is empty or unreachable.
pub fn check_one_minimal(
    program: &Program,
    input: &[u8],
    fingerprint: &FailureFingerprint,
    step_budget: u64,
) -> Vec<MinimalityViolation> {
    let config = ReduceConfig {
        step_budget,
        max_oracle_runs: u64::MAX,
    };
    let mut oracle = Oracle::new(program, input, fingerprint, &config);
    let mut out = Vec::new();
    for (func, s) in program.statements() {
        let cand = delete_nodes(program, &BTreeSet::from([s.node]));
        if oracle.test(&cand) {
            out.push(MinimalityViolation::Removable {
                function: func.to_string(),
                line: s.line,
            });
        }
        for which in splice_options(s) {
            if let Some(cand) = splice(program, s.node, which) {
                if oracle.test(&cand) {
                    out.push(MinimalityViolation::Spliceable {
                        function: func.to_string(),
                        line: s.line,
                    });
                }
            }
        }
    }
    let reach = program.reachable_functions();
    for f in &program.functions {
        if f.name != "main" && f.body.is_empty() {
            out.push(MinimalityViolation::EmptyFunction(f.name.clone()));
        }
        if !reach.contains(&f.name) {
            out.push(MinimalityViolation::UnreachableFunction(f.name.clone()));
        }
    }
    out
}

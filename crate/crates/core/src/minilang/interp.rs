//! Deterministic tracing interpreter.
//!
//! Every executed statement costs one step and appends one trace entry. When
//! a call made from inside a statement returns, the caller's statement is
//! traced again (one more step) so the trace always ends on the statement that
//! is executing in the innermost frame.

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::outcome::*;

/// Default step budget, the deterministic stand-in for a wall-clock timeout.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

type CellId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Int(i64),
    /// `None` is the null pointer.
    Ptr(Option<CellId>),
}

impl Value {
    fn as_int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            Value::Ptr(None) => 0,
            Value::Ptr(Some(c)) => c as i64 + 1,
        }
    }

    fn truthy(self) -> bool {
        self.as_int() != 0
    }
}

#[derive(Debug)]
enum CellData {
    Scalar(Value),
    Array(Vec<Value>),
}

#[derive(Debug)]
struct Cell {
    data: CellData,
    freed: bool,
}

enum Halt {
    Crash(FailureKind),
    Budget,
}

enum Flow {
    Normal,
    Return(Value),
}

struct FrameState<'p> {
    func: usize,
    line: u32,
    locals: HashMap<&'p str, CellId>,
}

struct Machine<'p> {
    program: &'p Program,
    funcs: HashMap<&'p str, usize>,
    input: &'p [u8],
    budget: u64,
    steps: u64,
    trace: Vec<(usize, u32)>,
    edges: HashMap<((usize, u32), (usize, u32)), u64>,
    heap: Vec<Cell>,
    globals: HashMap<&'p str, CellId>,
    frames: Vec<FrameState<'p>>,
}

/// Run `program` on `input` for at most `step_budget` steps.
///
/// Runtime failures are data ([`Status::Crashed`]), never errors. A program
/// without `main` completes in zero steps and calls to undefined functions
/// evaluate to 0; check with [`check_executable`](super::check_executable)
/// before running untrusted programs.
pub fn execute(program: &Program, input: &[u8], step_budget: u64) -> ExecutionOutcome {
    let funcs: HashMap<&str, usize> = program
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();
    let mut m = Machine {
        program,
        funcs,
        input,
        budget: step_budget.max(1),
        steps: 0,
        trace: Vec::new(),
        edges: HashMap::new(),
        heap: Vec::new(),
        globals: HashMap::new(),
        frames: Vec::new(),
    };
    for g in &program.globals {
        let c = m.alloc(CellData::Scalar(Value::Int(g.init.unwrap_or(0))));
        m.globals.insert(g.name.as_str(), c);
    }
    let result = match m.funcs.get("main").copied() {
        Some(main) => m.call(main, Vec::new()).map(|_| ()),
        None => Ok(()),
    };
    let status = match result {
        Ok(()) => Status::Completed { steps: m.steps },
        Err(Halt::Budget) => Status::BudgetExhausted,
        Err(Halt::Crash(kind)) => Status::Crashed(m.fingerprint(kind)),
    };
    let name = |i: usize| program.functions[i].name.clone();
    let trace = m
        .trace
        .iter()
        .map(|&(f, l)| StatementId::new(name(f), l))
        .collect();
    let edges = m
        .edges
        .iter()
        .map(|(&((fa, la), (fb, lb)), &n)| {
            (
                (StatementId::new(name(fa), la), StatementId::new(name(fb), lb)),
                n,
            )
        })
        .collect::<BTreeMap<_, _>>();
    ExecutionOutcome {
        status,
        trace,
        edges,
    }
}

impl<'p> Machine<'p> {
    fn alloc(&mut self, data: CellData) -> CellId {
        self.heap.push(Cell { data, freed: false });
        self.heap.len() - 1
    }

    fn fingerprint(&self, kind: FailureKind) -> FailureFingerprint {
        let frames: Vec<Frame> = self
            .frames
            .iter()
            .map(|f| Frame {
                function: self.program.functions[f.func].name.clone(),
                line: f.line,
            })
            .collect();
        let inner = frames.last().expect("crash outside any frame");
        FailureFingerprint {
            kind,
            location: StatementId::new(inner.function.clone(), inner.line),
            stack: CallStack { frames },
        }
    }

    fn step(&mut self, line: u32) -> Result<(), Halt> {
        if self.steps >= self.budget {
            return Err(Halt::Budget);
        }
        self.steps += 1;
        let frame = self.frames.last_mut().expect("step outside any frame");
        frame.line = line;
        let here = (frame.func, line);
        if let Some(&prev) = self.trace.last() {
            *self.edges.entry((prev, here)).or_insert(0) += 1;
        }
        self.trace.push(here);
        Ok(())
    }

    fn call(&mut self, func: usize, args: Vec<Value>) -> Result<Value, Halt> {
        let program = self.program;
        let def = &program.functions[func];
        let mut locals = HashMap::new();
        for (p, v) in def.params.iter().zip(args) {
            let c = self.alloc(CellData::Scalar(v));
            locals.insert(p.as_str(), c);
        }
        self.frames.push(FrameState {
            func,
            line: 0,
            locals,
        });
        let flow = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.exec_block(&def.body))?;
        self.frames.pop();
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Normal => Value::Int(0),
        })
    }

    fn exec_block(&mut self, body: &'p [Stmt]) -> Result<Flow, Halt> {
        for s in body {
            if let Flow::Return(v) = self.exec(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &'p Stmt) -> Result<Flow, Halt> {
        self.step(s.line)?;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let data = match ty {
                    DeclType::Int => CellData::Scalar(Value::Int(0)),
                    DeclType::Ptr => CellData::Scalar(Value::Ptr(None)),
                    DeclType::Array(n) => CellData::Array(vec![Value::Int(0); *n as usize]),
                };
                let init = match init {
                    Some(e) => Some(self.eval(e, s.line)?),
                    None => None,
                };
                let data = match (data, init) {
                    (CellData::Array(mut a), Some(v)) => {
                        a.iter_mut().for_each(|x| *x = v);
                        CellData::Array(a)
                    }
                    (CellData::Scalar(_), Some(v)) => CellData::Scalar(v),
                    (d, None) => d,
                };
                let c = self.alloc(data);
                self.frame().locals.insert(name.as_str(), c);
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, s.line)?;
                match target {
                    LValue::Var(n) => {
                        let c = self.cell_of(n);
                        match &mut self.heap[c].data {
                            CellData::Scalar(x) => *x = v,
                            CellData::Array(a) => {
                                // Assigning to an array name writes its first slot.
                                match a.first_mut() {
                                    Some(x) => *x = v,
                                    None => return Err(Halt::Crash(FailureKind::OutOfBounds)),
                                }
                            }
                        }
                    }
                    LValue::Deref(n) => {
                        let c = self.pointee(n)?;
                        self.store(c, 0, v)?;
                    }
                    LValue::Index(n, i) => {
                        let idx = self.eval(i, s.line)?.as_int();
                        let c = self.indexable(n)?;
                        self.store(c, idx, v)?;
                    }
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval(cond, s.line)?.truthy() {
                    return self.exec_block(then_body);
                } else if let Some(e) = else_body {
                    return self.exec_block(e);
                }
            }
            StmtKind::While { cond, body } => loop {
                if !self.eval(cond, s.line)?.truthy() {
                    break;
                }
                if let Flow::Return(v) = self.exec_block(body)? {
                    return Ok(Flow::Return(v));
                }
                self.step(s.line)?;
            },
            StmtKind::Call { name, args } => {
                self.eval_call(name, args, s.line)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, s.line)?,
                    None => Value::Int(0),
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Free(n) => {
                if let Value::Ptr(Some(c)) = self.read_var(n) {
                    if self.heap[c].freed {
                        return Err(Halt::Crash(FailureKind::UseAfterFree));
                    }
                    self.heap[c].freed = true;
                }
            }
            StmtKind::Assert(e) => {
                if !self.eval(e, s.line)?.truthy() {
                    return Err(Halt::Crash(FailureKind::AssertFail));
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn frame(&mut self) -> &mut FrameState<'p> {
        self.frames.last_mut().expect("no active frame")
    }

    fn lookup(&self, name: &str) -> Option<CellId> {
        self.frames
            .last()
            .and_then(|f| f.locals.get(name).copied())
            .or_else(|| self.globals.get(name).copied())
    }

    /// Cell bound to `name`, binding a fresh zeroed local if it is unknown.
    fn cell_of(&mut self, name: &'p str) -> CellId {
        match self.lookup(name) {
            Some(c) => c,
            None => {
                let c = self.alloc(CellData::Scalar(Value::Int(0)));
                self.frame().locals.insert(name, c);
                c
            }
        }
    }

    fn read_var(&self, name: &str) -> Value {
        match self.lookup(name) {
            None => Value::Int(0),
            Some(c) => match &self.heap[c].data {
                CellData::Scalar(v) => *v,
                CellData::Array(_) => Value::Ptr(Some(c)),
            },
        }
    }

    /// Cell that `*name` refers to.
    fn pointee(&self, name: &str) -> Result<CellId, Halt> {
        match self.read_var(name) {
            Value::Ptr(Some(c)) if self.heap[c].freed => {
                Err(Halt::Crash(FailureKind::UseAfterFree))
            }
            Value::Ptr(Some(c)) => Ok(c),
            _ => Err(Halt::Crash(FailureKind::NullDeref)),
        }
    }

    /// Cell that `name[i]` indexes: an array variable or a pointer to a cell.
    fn indexable(&self, name: &str) -> Result<CellId, Halt> {
        if let Some(c) = self.lookup(name) {
            if matches!(self.heap[c].data, CellData::Array(_)) {
                return Ok(c);
            }
        }
        self.pointee(name)
    }

    fn load(&self, c: CellId, idx: i64) -> Result<Value, Halt> {
        match &self.heap[c].data {
            CellData::Scalar(v) if idx == 0 => Ok(*v),
            CellData::Array(a) if idx >= 0 && (idx as usize) < a.len() => Ok(a[idx as usize]),
            _ => Err(Halt::Crash(FailureKind::OutOfBounds)),
        }
    }

    fn store(&mut self, c: CellId, idx: i64, v: Value) -> Result<(), Halt> {
        match &mut self.heap[c].data {
            CellData::Scalar(x) if idx == 0 => *x = v,
            CellData::Array(a) if idx >= 0 && (idx as usize) < a.len() => a[idx as usize] = v,
            _ => return Err(Halt::Crash(FailureKind::OutOfBounds)),
        }
        Ok(())
    }

    fn eval_call(&mut self, name: &str, args: &'p [Expr], line: u32) -> Result<Value, Halt> {
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, line)?);
        }
        let Some(&func) = self.funcs.get(name) else {
            // Unresolved calls are rejected before execution; treat as no-op.
            return Ok(Value::Int(0));
        };
        let v = self.call(func, vals)?;
        self.step(line)?;
        Ok(v)
    }

    fn eval(&mut self, e: &'p Expr, line: u32) -> Result<Value, Halt> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Char(c) => Value::Int(*c as i64),
            Expr::Null => Value::Ptr(None),
            Expr::Var(n) => self.read_var(n),
            Expr::Deref(n) => {
                let c = self.pointee(n)?;
                self.load(c, 0)?
            }
            Expr::AddrOf(n) => Value::Ptr(Some(self.cell_of(n))),
            Expr::Index(n, i) => {
                let idx = self.eval(i, line)?.as_int();
                let c = self.indexable(n)?;
                self.load(c, idx)?
            }
            Expr::Input(i) => {
                let idx = self.eval(i, line)?.as_int();
                let byte = usize::try_from(idx).ok().and_then(|i| self.input.get(i));
                Value::Int(byte.map(|b| *b as i64).unwrap_or(-1))
            }
            Expr::Call(name, args) => self.eval_call(name, args, line)?,
            Expr::Unary(UnOp::Neg, x) => Value::Int(self.eval(x, line)?.as_int().wrapping_neg()),
            Expr::Unary(UnOp::Not, x) => Value::Int(!self.eval(x, line)?.truthy() as i64),
            Expr::Binary(BinOp::And, l, r) => {
                let v = self.eval(l, line)?.truthy() && self.eval(r, line)?.truthy();
                Value::Int(v as i64)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let v = self.eval(l, line)?.truthy() || self.eval(r, line)?.truthy();
                Value::Int(v as i64)
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval(l, line)?.as_int();
                let b = self.eval(r, line)?.as_int();
                Value::Int(match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Div | BinOp::Rem if b == 0 => {
                        return Err(Halt::Crash(FailureKind::DivByZero))
                    }
                    BinOp::Div => a.wrapping_div(b),
                    BinOp::Rem => a.wrapping_rem(b),
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Ne => (a != b) as i64,
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Le => (a <= b) as i64,
                    BinOp::Gt => (a > b) as i64,
                    BinOp::Ge => (a >= b) as i64,
                    BinOp::And | BinOp::Or => unreachable!(),
                })
            }
        })
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ast::StatementId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureKind {
    NullDeref,
    UseAfterFree,
    DivByZero,
    OutOfBounds,
    AssertFail,
}

impl FailureKind {
    pub const ALL: [FailureKind; 5] = [
        FailureKind::NullDeref,
        FailureKind::UseAfterFree,
        FailureKind::DivByZero,
        FailureKind::OutOfBounds,
        FailureKind::AssertFail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::NullDeref => "NullDeref",
            FailureKind::UseAfterFree => "UseAfterFree",
            FailureKind::DivByZero => "DivByZero",
            FailureKind::OutOfBounds => "OutOfBounds",
            FailureKind::AssertFail => "AssertFail",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FailureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown failure kind `{s}`"))
    }
}

pub type SourceLocation = StatementId;

/// One call-stack frame: the function and the line it is currently executing
/// (the call site for every frame except the innermost).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Frame {
    pub function: String,
    pub line: u32,
}

/// Frames ordered outermost (`main`) first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CallStack {
    pub frames: Vec<Frame>,
}

impl CallStack {
    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.frames.iter().map(|f| f.function.as_str())
    }

    /// Function names of the innermost `n` frames, innermost first.
    pub fn innermost(&self, n: usize) -> Vec<&str> {
        self.frames
            .iter()
            .rev()
            .take(n)
            .map(|f| f.function.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

impl fmt::Display for CallStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .frames
            .iter()
            .map(|fr| format!("{}:{}", fr.function, fr.line))
            .collect();
        f.write_str(&parts.join(" > "))
    }
}

/// What makes two failures "the same": kind, location and call stack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureFingerprint {
    pub kind: FailureKind,
    pub location: SourceLocation,
    pub stack: CallStack,
}

impl fmt::Display for FailureFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} [{}]", self.kind, self.location, self.stack)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Completed { steps: u64 },
    Crashed(FailureFingerprint),
    BudgetExhausted,
}

pub type Edge = (StatementId, StatementId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: Status,
    pub trace: Vec<StatementId>,
    #[serde(serialize_with = "edges_ser", deserialize_with = "edges_de")]
    pub edges: BTreeMap<Edge, u64>,
}

impl ExecutionOutcome {
    pub fn fingerprint(&self) -> Option<&FailureFingerprint> {
        match &self.status {
            Status::Crashed(fp) => Some(fp),
            _ => None,
        }
    }

    pub fn is_crash(&self) -> bool {
        matches!(self.status, Status::Crashed(_))
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    from: StatementId,
    to: StatementId,
    count: u64,
}

fn edges_ser<S: Serializer>(edges: &BTreeMap<Edge, u64>, s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<EdgeEntry> = edges
        .iter()
        .map(|((from, to), count)| EdgeEntry {
            from: from.clone(),
            to: to.clone(),
            count: *count,
        })
        .collect();
    v.serialize(s)
}

fn edges_de<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Edge, u64>, D::Error> {
    let v = Vec::<EdgeEntry>::deserialize(d)?;
    Ok(v.into_iter().map(|e| ((e.from, e.to), e.count)).collect())
}

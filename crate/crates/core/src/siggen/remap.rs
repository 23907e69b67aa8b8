use crate::minilang::{FailureFingerprint, Frame, Program, StatementId};

use super::SiggenError;

/// Re-express `fp`, recorded against `from`, in the canonical lines of `to`.
/// Statements are matched by their node identity, which slicing and reduction
/// preserve.
pub fn fingerprint_remap(
    fp: &FailureFingerprint,
    from: &Program,
    to: &Program,
) -> Result<FailureFingerprint, SiggenError> {
    let map = |id: &StatementId| -> Result<StatementId, SiggenError> {
        let unmappable = || SiggenError::UnmappableFrame {
            function: id.function.clone(),
            line: id.line,
        };
        let node = from.statement_at(id).ok_or_else(unmappable)?.node;
        let target = to.function(&id.function).ok_or_else(unmappable)?;
        let s = target
            .walk()
            .into_iter()
            .find(|s| s.node == node)
            .ok_or_else(unmappable)?;
        Ok(StatementId::new(id.function.clone(), s.line))
    };
    let location = map(&fp.location)?;
    let mut frames = Vec::with_capacity(fp.stack.frames.len());
    for f in &fp.stack.frames {
        let id = map(&StatementId::new(f.function.clone(), f.line))?;
        frames.push(Frame {
            function: id.function,
            line: id.line,
        });
    }
    Ok(FailureFingerprint {
        kind: fp.kind,
        location,
        stack: crate::minilang::CallStack { frames },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{execute, parse_executable, StmtKind};

    #[test]
    fn identity_remap_is_unchanged() {
        let p = parse_executable("fn main() { int x = 0; assert(x); }").unwrap();
        let fp = execute(&p, b"", 10).fingerprint().cloned().unwrap();
        assert_eq!(fingerprint_remap(&fp, &p, &p).unwrap(), fp);
    }

    #[test]
    fn deleting_two_statements_above_shifts_by_two() {
        let p = parse_executable(
            "fn f() { int a = 1; int b = 2; int c = 3; assert(0); } fn main() { int z = 0; f(); }",
        )
        .unwrap();
        let fp = execute(&p, b"", 100).fingerprint().cloned().unwrap();
        assert_eq!(fp.location.line, 4);

        let mut q = p.clone();
        q.functions[0].body.retain(|s| {
            !matches!(&s.kind, StmtKind::Decl { name, .. } if name == "a" || name == "b")
        });
        q.relayout();
        let moved = fingerprint_remap(&fp, &p, &q).unwrap();
        assert_eq!(moved.location.line, fp.location.line - 2);
        assert_eq!(moved.stack.frames[0], fp.stack.frames[0]);
        assert_eq!(execute(&q, b"", 100).fingerprint(), Some(&moved));
    }

    #[test]
    fn pruned_frame_is_unmappable() {
        let p = parse_executable("fn f() { assert(0); } fn main() { f(); }").unwrap();
        let fp = execute(&p, b"", 100).fingerprint().cloned().unwrap();
        let mut q = p.clone();
        q.functions.remove(0);
        assert!(matches!(
            fingerprint_remap(&fp, &p, &q),
            Err(SiggenError::UnmappableFrame { .. })
        ));
    }
}

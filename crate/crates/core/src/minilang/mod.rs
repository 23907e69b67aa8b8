//! The mini-language: parser, canonical renderer and tracing interpreter.

mod ast;
mod coverage;
mod interp;
mod outcome;
mod parser;
mod render;

pub use ast::*;
pub use coverage::{bucket_edges, bucket_of, BUCKET_LOWER_BOUNDS};
pub use interp::{execute, DEFAULT_STEP_BUDGET};
pub use outcome::*;
pub use parser::{check_executable, parse, parse_executable, ParseError};
pub use render::{expr as render_expr, render, render_lines, stmt_header};

/// Source file extension for mini-language programs.
pub const SOURCE_EXTENSION: &str = "ml-src";

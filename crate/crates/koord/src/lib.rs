//! Koord: an event-driven language for coordinating robot fleets.
//!
//! Source goes through [`tokenize`], [`parse`], [`check`] and [`lower`] to
//! an [`ExecutableEventTable`] which the runtime drives round by round
//! through the [`Env`] trait.

pub mod ast;
pub mod builtins;
pub mod check;
pub mod eval;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod pretty;
pub mod span;
pub mod value;

pub use builtins::{Builtin, EffectClass, StdlibBinding, STDLIB};
pub use check::{check, CheckedProgram, Diagnostic, Severity};
pub use eval::{Env, Fault};
pub use lexer::{tokenize, LexError};
pub use lower::{eval_constant, lower, Actuator, ExecutableEventTable, Port, VarId};
pub use parser::{parse, parse_expr, ParseError};
pub use pretty::pretty;
pub use span::Span;
pub use value::{BaseType, Entry, Value, Vec3};

/// Everything that can go wrong between source text and an event table,
/// flattened to diagnostics.
#[derive(Debug, Clone)]
pub struct CompileError {
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileError {
    pub fn render(&self, file: &str) -> String {
        self.diagnostics.iter().map(|d| d.render(file) + "\n").collect()
    }
}

impl std::fmt::Display for CompileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl std::error::Error for CompileError {}

fn single(span: Span, message: String) -> CompileError {
    CompileError { diagnostics: vec![Diagnostic { severity: Severity::Error, message, span }] }
}

/// Run the front end for a fleet of `num_agents`. Warnings are returned
/// alongside the table.
pub fn compile(src: &str, num_agents: usize) -> Result<(ExecutableEventTable, Vec<Diagnostic>), CompileError> {
    let tokens = tokenize(src).map_err(|e| single(e.span(), e.to_string()))?;
    let program = parse(&tokens).map_err(|e| single(e.span(), e.to_string()))?;
    let checked = check(&program, num_agents).map_err(|diagnostics| CompileError { diagnostics })?;
    let table = lower(&checked).map_err(|diagnostics| CompileError { diagnostics })?;
    Ok((table, checked.warnings))
}

/// Parse and evaluate a constant expression such as `pos(1.0, 2.0, 0.0)`.
pub fn constant(src: &str) -> Result<Value, String> {
    let tokens = tokenize(src).map_err(|e| e.to_string())?;
    let e = parse_expr(&tokens).map_err(|e| e.to_string())?;
    eval_constant(&e).map_err(|e| e.to_string())
}

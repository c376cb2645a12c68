//! Canonical source rendering. `parse(pretty(p))` is structurally equal to `p`.

use std::fmt::Write;

use crate::ast::*;
use crate::value::BaseType;

pub fn pretty(program: &Program) -> String {
    let mut out = String::new();
    if program.uses_motion {
        out.push_str("using Motion\n\n");
    }
    let mut scope: Option<Scope> = None;
    for d in &program.decls {
        if scope != Some(d.scope) {
            if scope.is_some() {
                out.push('\n');
            }
            let _ = writeln!(out, "{}:", d.scope.keyword());
            scope = Some(d.scope);
        }
        let _ = write!(out, "  {} {}", type_name(d.ty), d.name);
        if d.indexed_by_pid {
            out.push_str("[pid]");
        }
        if let Some(init) = &d.init {
            let _ = write!(out, " = {}", expr(init));
        }
        out.push('\n');
    }
    for e in &program.events {
        out.push('\n');
        if e.atomic {
            out.push_str("atomic ");
        }
        let _ = writeln!(out, "event {} {{", e.name);
        let _ = writeln!(out, "  pre: {}", expr(&e.pre));
        out.push_str("  eff: ");
        block(&mut out, &e.eff, 2);
        out.push_str("\n}\n");
    }
    out
}

fn type_name(ty: BaseType) -> &'static str {
    match ty {
        BaseType::Int => "int",
        BaseType::Float => "float",
        BaseType::Bool => "bool",
        BaseType::Pos => "pos",
        BaseType::PosList => "list<pos>",
    }
}

fn indent(out: &mut String, n: usize) {
    out.extend(std::iter::repeat_n(' ', n));
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        indent(out, depth + 2);
        stmt(out, s, depth + 2);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Assign { target, value, .. } => {
            match target {
                LValue::Var { name, .. } => out.push_str(name),
                LValue::Cell { name, index, .. } => {
                    let _ = write!(out, "{name}[{}]", expr(index));
                }
                LValue::Port { name, .. } => {
                    let _ = write!(out, "Motion.{name}");
                }
            }
            let _ = write!(out, " = {}", expr(value));
        }
        Stmt::If { cond, then, els, .. } => {
            let _ = write!(out, "if ({}) ", expr(cond));
            block(out, then, depth);
            match els.as_slice() {
                [] => {}
                [nested @ Stmt::If { .. }] => {
                    out.push_str(" else ");
                    stmt(out, nested, depth);
                }
                _ => {
                    out.push_str(" else ");
                    block(out, els, depth);
                }
            }
        }
        Stmt::Call { name, args, .. } => {
            let _ = write!(out, "{name}({})", list(args));
        }
    }
}

fn list(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

/// Render an expression with the minimal parentheses needed to reproduce
/// the same tree under left-associative precedence climbing.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Float(v) => format!("{v:?}"),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Port(name) => format!("Motion.{name}"),
        ExprKind::Index(base, ix) => format!("{}[{}]", operand(base), expr(ix)),
        ExprKind::Field(base, f) => format!("{}.{f}", operand(base)),
        ExprKind::Call(name, args) => format!("{name}({})", list(args)),
        ExprKind::List(items) => format!("[{}]", list(items)),
        ExprKind::Unary(op, inner) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            match &inner.kind {
                ExprKind::Binary(..) => format!("{sym}({})", expr(inner)),
                _ => format!("{sym}{}", expr(inner)),
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let left = match &l.kind {
                ExprKind::Binary(lop, _, _) if lop.precedence() < p => format!("({})", expr(l)),
                _ => expr(l),
            };
            let right = match &r.kind {
                ExprKind::Binary(rop, _, _) if rop.precedence() <= p => format!("({})", expr(r)),
                _ => expr(r),
            };
            format!("{left} {} {right}", op.symbol())
        }
    }
}

/// Bases of indexing and field access.
fn operand(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary(..) => format!("({})", expr(e)),
        // `-1.0.x` would not re-lex; `(-x)[i]` keeps its grouping
        ExprKind::Unary(..) | ExprKind::Int(_) | ExprKind::Float(_) => format!("({})", expr(e)),
        _ => expr(e),
    }
}

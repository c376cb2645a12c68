//! Tree-walking interpreter over the lowered event table.

use thiserror::Error;

use crate::ast::{BinOp, UnOp};
use crate::builtins::{self, Builtin};
use crate::lower::{Actuator, ExecutableEventTable, LExpr, LStmt, Port, VarId};
use crate::value::{BaseType, Value};

/// A runtime error inside an event. The runtime marks the agent faulted.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Fault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of range for list of length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("{0}")]
    External(String),
}

/// What an event can see and touch. `cell` is `None` for a variable that is
/// not pid-indexed and the owning pid otherwise.
pub trait Env {
    fn pid(&self) -> usize;
    fn num_agents(&self) -> usize;
    fn local(&self, slot: usize) -> Value;
    fn set_local(&mut self, slot: usize, v: Value);
    fn shared(&self, var: VarId, cell: Option<usize>) -> Value;
    fn set_shared(&mut self, var: VarId, cell: Option<usize>, v: Value);
    fn port(&self, port: Port) -> Value;
    fn actuate(&mut self, act: Actuator, v: Value);
    /// Host-provided builtins (`findPath`, `pathIsClear`).
    fn external(&mut self, b: Builtin, args: &[Value]) -> Result<Value, Fault>;
    /// Called after `assign` has stamped `owner` onto entry `index`.
    fn on_assign(&mut self, _var: VarId, _index: usize, _owner: u16) {}
}

fn type_err(what: &str, v: &Value) -> Fault {
    Fault::Type(format!("{what}, found {}", v.type_name()))
}

fn cell(i: &Value, n: usize) -> Result<usize, Fault> {
    let i = i.as_int().ok_or_else(|| type_err("index must be int", i))?;
    Ok(i.rem_euclid(n.max(1) as i64) as usize)
}

fn coerce(ty: BaseType, v: Value) -> Result<Value, Fault> {
    let name = v.type_name();
    v.coerce(ty).ok_or_else(|| Fault::Type(format!("cannot store {name} in {ty}")))
}

pub(crate) fn expr(e: &LExpr, env: &mut dyn Env) -> Result<Value, Fault> {
    Ok(match e {
        LExpr::Const(v) => v.clone(),
        LExpr::Pid => Value::Int(env.pid() as i64),
        LExpr::NumAgents => Value::Int(env.num_agents() as i64),
        LExpr::Local(slot) => env.local(*slot),
        LExpr::Shared(var) => env.shared(*var, None),
        LExpr::Cell(var, ix) => {
            let i = cell(&expr(ix, env)?, env.num_agents())?;
            env.shared(*var, Some(i))
        }
        LExpr::Array(var) => Value::Array((0..env.num_agents()).map(|i| env.shared(*var, Some(i))).collect()),
        LExpr::Port(p) => env.port(*p),
        LExpr::Item(base, ix) => {
            let list = expr(base, env)?;
            let i = expr(ix, env)?;
            let list = list.as_list().ok_or_else(|| type_err("cannot index", &list))?;
            let i = i.as_int().ok_or_else(|| type_err("index must be int", &i))?;
            Value::Pos(list[builtins::entry_index(list, i)?].at)
        }
        LExpr::Axis(base, axis) => {
            let v = expr(base, env)?;
            let p = v.as_pos().ok_or_else(|| type_err("field access needs a pos", &v))?;
            Value::Float([p.x, p.y, p.z][*axis])
        }
        LExpr::Unary(op, inner) => {
            let v = expr(inner, env)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
                (UnOp::Neg, Value::Float(x)) => Value::Float(-x),
                (UnOp::Neg, Value::Pos(p)) => Value::Pos(-p),
                (_, v) => return Err(type_err("bad unary operand", &v)),
            }
        }
        LExpr::Binary(BinOp::And, l, r) => {
            let l = expr(l, env)?;
            if l.as_bool() == Some(false) {
                Value::Bool(false)
            } else {
                logical(l, expr(r, env)?)?
            }
        }
        LExpr::Binary(BinOp::Or, l, r) => {
            let l = expr(l, env)?;
            if l.as_bool() == Some(true) {
                Value::Bool(true)
            } else {
                logical(l, expr(r, env)?)?
            }
        }
        LExpr::Binary(op, l, r) => {
            let l = expr(l, env)?;
            let r = expr(r, env)?;
            binary(*op, l, r)?
        }
        LExpr::Call(b, args) => {
            let args = args.iter().map(|a| expr(a, env)).collect::<Result<Vec<_>, _>>()?;
            if b.is_external() {
                env.external(*b, &args)?
            } else {
                builtins::call_pure(*b, &args)?
            }
        }
        LExpr::List(items) => {
            let mut pts = Vec::with_capacity(items.len());
            for it in items {
                let v = expr(it, env)?;
                pts.push(v.as_pos().ok_or_else(|| type_err("list elements must be pos", &v))?);
            }
            Value::path(pts)
        }
    })
}

fn logical(l: Value, r: Value) -> Result<Value, Fault> {
    match (&l, &r) {
        (Value::Bool(_), Value::Bool(b)) => Ok(Value::Bool(*b)),
        _ => Err(type_err("logical operands must be bool", if l.as_bool().is_some() { &r } else { &l })),
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, Fault> {
    use BinOp::*;
    use Value::*;
    Ok(match (op, l, r) {
        (Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
        (Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
        (Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
        (Div, Int(_), Int(0)) | (Rem, Int(_), Int(0)) => return Err(Fault::DivisionByZero),
        (Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
        (Rem, Int(a), Int(b)) => Int(a.wrapping_rem(b)),
        (Eq, Int(a), Int(b)) => Bool(a == b),
        (Ne, Int(a), Int(b)) => Bool(a != b),
        (Lt, Int(a), Int(b)) => Bool(a < b),
        (Le, Int(a), Int(b)) => Bool(a <= b),
        (Gt, Int(a), Int(b)) => Bool(a > b),
        (Ge, Int(a), Int(b)) => Bool(a >= b),
        (Eq, Bool(a), Bool(b)) => Bool(a == b),
        (Ne, Bool(a), Bool(b)) => Bool(a != b),
        (Eq, Pos(a), Pos(b)) => Bool(a == b),
        (Ne, Pos(a), Pos(b)) => Bool(a != b),
        (Add, Pos(a), Pos(b)) => Pos(a + b),
        (Sub, Pos(a), Pos(b)) => Pos(a - b),
        (Mul, Pos(a), s) | (Mul, s, Pos(a)) if s.as_f64().is_some() => Pos(a * s.as_f64().unwrap_or_default()),
        (Div, Pos(a), s) if s.as_f64().is_some() => {
            let s = s.as_f64().unwrap_or_default();
            if s == 0.0 {
                return Err(Fault::DivisionByZero);
            }
            Pos(a / s)
        }
        (op, l, r) => match (l.as_f64(), r.as_f64()) {
            (Some(a), Some(b)) => float_op(op, a, b)?,
            _ => {
                return Err(Fault::Type(format!(
                    "operator `{}` on {} and {}",
                    op.symbol(),
                    l.type_name(),
                    r.type_name()
                )))
            }
        },
    })
}

fn float_op(op: BinOp, a: f64, b: f64) -> Result<Value, Fault> {
    use BinOp::*;
    Ok(match op {
        Add => Value::Float(a + b),
        Sub => Value::Float(a - b),
        Mul => Value::Float(a * b),
        Div | Rem if b == 0.0 => return Err(Fault::DivisionByZero),
        Div => Value::Float(a / b),
        Rem => Value::Float(a % b),
        Eq => Value::Bool(a == b),
        Ne => Value::Bool(a != b),
        Lt => Value::Bool(a < b),
        Le => Value::Bool(a <= b),
        Gt => Value::Bool(a > b),
        Ge => Value::Bool(a >= b),
        And | Or => return Err(Fault::Type("logical operands must be bool".into())),
    })
}

pub(crate) fn block(table: &ExecutableEventTable, stmts: &[LStmt], env: &mut dyn Env) -> Result<(), Fault> {
    for s in stmts {
        stmt(table, s, env)?;
    }
    Ok(())
}

fn stmt(table: &ExecutableEventTable, s: &LStmt, env: &mut dyn Env) -> Result<(), Fault> {
    match s {
        LStmt::SetLocal(slot, e) => {
            let v = coerce(table.locals[*slot].ty, expr(e, env)?)?;
            env.set_local(*slot, v);
        }
        LStmt::SetShared(var, e) => {
            let v = coerce(table.shared[*var as usize].ty, expr(e, env)?)?;
            env.set_shared(*var, None, v);
        }
        LStmt::SetCell(var, ix, e) => {
            let i = cell(&expr(ix, env)?, env.num_agents())?;
            let v = coerce(table.shared[*var as usize].ty, expr(e, env)?)?;
            env.set_shared(*var, Some(i), v);
        }
        LStmt::Actuate(act, e) => {
            let v = expr(e, env)?;
            env.actuate(*act, v);
        }
        LStmt::If(c, then, els) => {
            let c = expr(c, env)?;
            let c = c.as_bool().ok_or_else(|| type_err("condition must be bool", &c))?;
            block(table, if c { then } else { els }, env)?;
        }
        LStmt::Assign { var, index, owner } => {
            let index = expr(index, env)?;
            let owner = expr(owner, env)?;
            let (Some(index), Some(owner)) = (index.as_int(), owner.as_int()) else {
                return Err(Fault::Type("assign takes int index and owner".into()));
            };
            let Value::List(mut list) = env.shared(*var, None) else {
                return Err(Fault::Type("assign needs a list".into()));
            };
            builtins::assign_entry(&mut list, index, owner)?;
            let i = index as usize;
            let o = list[i].owner.unwrap_or_default();
            env.set_shared(*var, None, Value::List(list));
            env.on_assign(*var, i, o);
        }
    }
    Ok(())
}

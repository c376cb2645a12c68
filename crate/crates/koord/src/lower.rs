//! Lowering of a checked program to a slot-resolved event table.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::builtins::Builtin;
use crate::check::{CheckedProgram, Diagnostic, Severity, Symbol};
use crate::eval::{self, Env, Fault};
use crate::value::{BaseType, Value};

/// Wire identifier of a shared variable: its position among shared
/// declarations.
pub type VarId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    Psn,
    Reached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actuator {
    Route,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LExpr {
    Const(Value),
    Pid,
    NumAgents,
    Local(usize),
    Shared(VarId),
    /// Cell of a pid-indexed variable; the index is reduced modulo the
    /// number of agents.
    Cell(VarId, Box<LExpr>),
    /// Every cell of a pid-indexed variable.
    Array(VarId),
    Port(Port),
    /// Element of a list.
    Item(Box<LExpr>, Box<LExpr>),
    Axis(Box<LExpr>, usize),
    Unary(UnOp, Box<LExpr>),
    Binary(BinOp, Box<LExpr>, Box<LExpr>),
    Call(Builtin, Vec<LExpr>),
    List(Vec<LExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LStmt {
    SetLocal(usize, LExpr),
    SetShared(VarId, LExpr),
    SetCell(VarId, LExpr, LExpr),
    Actuate(Actuator, LExpr),
    If(LExpr, Vec<LStmt>, Vec<LStmt>),
    Assign { var: VarId, index: LExpr, owner: LExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedVar {
    pub name: String,
    pub ty: BaseType,
    pub indexed: bool,
    pub scope: Scope,
    pub init: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVar {
    pub name: String,
    pub ty: BaseType,
    pub init: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredEvent {
    pub name: String,
    pub atomic: bool,
    pub pre: LExpr,
    pub eff: Vec<LStmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutableEventTable {
    pub uses_motion: bool,
    pub shared: Vec<SharedVar>,
    pub locals: Vec<LocalVar>,
    pub events: Vec<LoweredEvent>,
}

impl ExecutableEventTable {
    pub fn shared_id(&self, name: &str) -> Option<VarId> {
        self.shared.iter().position(|v| v.name == name).map(|i| i as VarId)
    }

    pub fn local_slot(&self, name: &str) -> Option<usize> {
        self.locals.iter().position(|v| v.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn eval_pre(&self, event: usize, env: &mut dyn Env) -> Result<bool, Fault> {
        let v = eval::expr(&self.events[event].pre, env)?;
        v.as_bool().ok_or_else(|| Fault::Type("precondition is not bool".into()))
    }

    pub fn exec_eff(&self, event: usize, env: &mut dyn Env) -> Result<(), Fault> {
        eval::block(self, &self.events[event].eff, env)
    }
}

struct Lowerer<'a> {
    symbols: &'a BTreeMap<String, Symbol>,
}

impl Lowerer<'_> {
    fn sym(&self, name: &str) -> Symbol {
        self.symbols[name]
    }

    fn expr(&self, e: &Expr) -> LExpr {
        match &e.kind {
            ExprKind::Int(v) => LExpr::Const(Value::Int(*v)),
            ExprKind::Float(v) => LExpr::Const(Value::Float(*v)),
            ExprKind::Bool(v) => LExpr::Const(Value::Bool(*v)),
            ExprKind::Var(name) => match name.as_str() {
                "pid" => LExpr::Pid,
                "numAgents" => LExpr::NumAgents,
                _ => {
                    let s = self.sym(name);
                    match (s.scope, s.indexed) {
                        (Scope::Local, _) => LExpr::Local(s.slot),
                        (_, true) => LExpr::Array(s.slot as VarId),
                        (_, false) => LExpr::Shared(s.slot as VarId),
                    }
                }
            },
            ExprKind::Port(name) => LExpr::Port(if name == "psn" { Port::Psn } else { Port::Reached }),
            ExprKind::Index(base, ix) => {
                let ix = Box::new(self.expr(ix));
                if let ExprKind::Var(name) = &base.kind {
                    if let Some(s) = self.symbols.get(name).filter(|s| s.indexed) {
                        return LExpr::Cell(s.slot as VarId, ix);
                    }
                }
                LExpr::Item(Box::new(self.expr(base)), ix)
            }
            ExprKind::Field(base, f) => {
                let axis = match f.as_str() {
                    "x" => 0,
                    "y" => 1,
                    _ => 2,
                };
                LExpr::Axis(Box::new(self.expr(base)), axis)
            }
            ExprKind::Call(name, args) => {
                let b = Builtin::lookup(name).expect("checked");
                LExpr::Call(b, args.iter().map(|a| self.expr(a)).collect())
            }
            ExprKind::List(items) => LExpr::List(items.iter().map(|a| self.expr(a)).collect()),
            ExprKind::Unary(op, inner) => LExpr::Unary(*op, Box::new(self.expr(inner))),
            ExprKind::Binary(op, l, r) => LExpr::Binary(*op, Box::new(self.expr(l)), Box::new(self.expr(r))),
        }
    }

    fn stmt(&self, s: &Stmt) -> LStmt {
        match s {
            Stmt::Assign { target, value, .. } => {
                let v = self.expr(value);
                match target {
                    LValue::Var { name, .. } => {
                        let s = self.sym(name);
                        if s.scope == Scope::Local {
                            LStmt::SetLocal(s.slot, v)
                        } else {
                            LStmt::SetShared(s.slot as VarId, v)
                        }
                    }
                    LValue::Cell { name, index, .. } => LStmt::SetCell(self.sym(name).slot as VarId, self.expr(index), v),
                    LValue::Port { .. } => LStmt::Actuate(Actuator::Route, v),
                }
            }
            Stmt::If { cond, then, els, .. } => LStmt::If(self.expr(cond), self.block(then), self.block(els)),
            Stmt::Call { args, .. } => {
                let ExprKind::Var(name) = &args[0].kind else { unreachable!("checked") };
                LStmt::Assign {
                    var: self.sym(name).slot as VarId,
                    index: self.expr(&args[1]),
                    owner: self.expr(&args[2]),
                }
            }
        }
    }

    fn block(&self, stmts: &[Stmt]) -> Vec<LStmt> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }
}

/// Initializers are constant, so they evaluate without any agent state.
struct ConstEnv;

impl Env for ConstEnv {
    fn pid(&self) -> usize {
        0
    }
    fn num_agents(&self) -> usize {
        1
    }
    fn local(&self, _: usize) -> Value {
        unreachable!("constant initializer")
    }
    fn set_local(&mut self, _: usize, _: Value) {}
    fn shared(&self, _: VarId, _: Option<usize>) -> Value {
        unreachable!("constant initializer")
    }
    fn set_shared(&mut self, _: VarId, _: Option<usize>, _: Value) {}
    fn port(&self, _: Port) -> Value {
        unreachable!("constant initializer")
    }
    fn actuate(&mut self, _: Actuator, _: Value) {}
    fn external(&mut self, b: Builtin, _: &[Value]) -> Result<Value, Fault> {
        Err(Fault::Type(format!("`{}` in initializer", b.name())))
    }
}

pub fn lower(checked: &CheckedProgram) -> Result<ExecutableEventTable, Vec<Diagnostic>> {
    let l = Lowerer { symbols: &checked.symbols };
    let mut table = ExecutableEventTable {
        uses_motion: checked.program.uses_motion,
        shared: Vec::new(),
        locals: Vec::new(),
        events: Vec::new(),
    };
    let mut errors = Vec::new();
    for d in &checked.program.decls {
        let init = match &d.init {
            None => d.ty.default_value(),
            Some(e) => match eval::expr(&l.expr(e), &mut ConstEnv) {
                Ok(v) => v.coerce(d.ty).expect("checked"),
                Err(f) => {
                    errors.push(Diagnostic { severity: Severity::Error, message: f.to_string(), span: e.span });
                    continue;
                }
            },
        };
        if d.scope.is_shared() {
            table.shared.push(SharedVar { name: d.name.clone(), ty: d.ty, indexed: d.indexed_by_pid, scope: d.scope, init });
        } else {
            table.locals.push(LocalVar { name: d.name.clone(), ty: d.ty, init });
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    table.events = checked
        .program
        .events
        .iter()
        .map(|e| LoweredEvent { name: e.name.clone(), atomic: e.atomic, pre: l.expr(&e.pre), eff: l.block(&e.eff) })
        .collect();
    Ok(table)
}

fn is_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) => true,
        ExprKind::Var(_) | ExprKind::Port(_) => false,
        ExprKind::Call(name, args) => name == "pos" && args.len() == 3 && args.iter().all(is_constant),
        ExprKind::List(items) => items.iter().all(is_constant),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => is_constant(a) && is_constant(b),
        ExprKind::Field(a, _) | ExprKind::Unary(_, a) => is_constant(a),
    }
}

/// Evaluate a variable-free expression.
pub fn eval_constant(e: &Expr) -> Result<Value, Fault> {
    if !is_constant(e) {
        return Err(Fault::Type("not a constant expression".into()));
    }
    let symbols = BTreeMap::new();
    eval::expr(&Lowerer { symbols: &symbols }.expr(e), &mut ConstEnv)
}

//! Name resolution, typing, and write-permission checks.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::*;
use crate::builtins::Builtin;
use crate::span::Span;
use crate::value::BaseType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    fn error(span: Span, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into(), span }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: {}: {}", self.span, self.severity, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

/// A resolved declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbol {
    pub scope: Scope,
    pub ty: BaseType,
    pub indexed: bool,
    /// Index among shared variables (the wire `var_id`) or among locals.
    pub slot: usize,
}

#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    pub symbols: BTreeMap<String, Symbol>,
    pub warnings: Vec<Diagnostic>,
}

/// Static type of an expression. `Array` is the whole of a pid-indexed
/// variable, legal only as a builtin argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Base(BaseType),
    Array(BaseType),
}

const INT: Ty = Ty::Base(BaseType::Int);
const FLOAT: Ty = Ty::Base(BaseType::Float);
const BOOL: Ty = Ty::Base(BaseType::Bool);
const POS: Ty = Ty::Base(BaseType::Pos);
const LIST: Ty = Ty::Base(BaseType::PosList);

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Base(b) => write!(f, "{b}"),
            Ty::Array(b) => write!(f, "{b}[pid]"),
        }
    }
}

fn numeric(t: Ty) -> bool {
    t == INT || t == FLOAT
}

fn assignable(target: BaseType, value: Ty) -> bool {
    value == Ty::Base(target) || (target == BaseType::Float && value == INT)
}

const RESERVED: &[&str] = &["pid", "numAgents", "Motion"];
const PORTS_READ: &[(&str, Ty)] = &[("psn", POS), ("reached", BOOL)];

struct Checker<'a> {
    program: &'a Program,
    symbols: BTreeMap<String, Symbol>,
    diags: Vec<Diagnostic>,
}

#[derive(Clone, Copy)]
struct Ctx {
    atomic: bool,
    /// Initializers may only use literals.
    constant: bool,
}

/// Check `program` for a fleet of `num_agents`. Errors are returned as
/// `Err`; warnings ride along on success.
pub fn check(program: &Program, num_agents: usize) -> Result<CheckedProgram, Vec<Diagnostic>> {
    let mut c = Checker { program, symbols: BTreeMap::new(), diags: Vec::new() };
    if num_agents == 0 || num_agents > usize::from(u16::MAX) {
        c.err(Span::new(1, 1), format!("numAgents must be in 1..={}, got {num_agents}", u16::MAX));
    }
    c.declarations();
    c.events();
    let (errors, warnings): (Vec<_>, Vec<_>) = c.diags.into_iter().partition(|d| d.severity == Severity::Error);
    if errors.is_empty() {
        Ok(CheckedProgram { program: program.clone(), symbols: c.symbols, warnings })
    } else {
        let mut all = errors;
        all.extend(warnings);
        all.sort_by_key(|d| (d.span.line, d.span.col, d.severity));
        Err(all)
    }
}

impl Checker<'_> {
    fn err(&mut self, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, msg));
    }

    fn declarations(&mut self) {
        let (mut shared, mut local) = (0, 0);
        for d in &self.program.decls {
            if RESERVED.contains(&d.name.as_str()) || Builtin::lookup(&d.name).is_some() {
                self.err(d.span, format!("`{}` is reserved", d.name));
                continue;
            }
            if self.symbols.contains_key(&d.name) {
                self.err(d.span, format!("duplicate declaration of `{}`", d.name));
                continue;
            }
            if d.scope == Scope::Local && d.indexed_by_pid {
                self.err(d.span, format!("local `{}` cannot be indexed by pid", d.name));
                continue;
            }
            if let Some(init) = &d.init {
                let ctx = Ctx { atomic: false, constant: true };
                if let Some(t) = self.expr(init, ctx) {
                    if !assignable(d.ty, t) {
                        self.err(init.span, format!("cannot initialize {} `{}` with {t}", d.ty, d.name));
                    }
                }
            }
            let counter = if d.scope.is_shared() { &mut shared } else { &mut local };
            let slot = *counter;
            *counter += 1;
            self.symbols.insert(d.name.clone(), Symbol { scope: d.scope, ty: d.ty, indexed: d.indexed_by_pid, slot });
        }
        if shared > usize::from(u16::MAX) {
            self.err(Span::default(), "too many shared variables");
        }
    }

    fn events(&mut self) {
        let program = self.program;
        if program.events.is_empty() {
            self.diags.push(Diagnostic { severity: Severity::Warning, message: "no events".into(), span: Span::new(1, 1) });
        }
        let mut seen = BTreeMap::new();
        for e in &program.events {
            if seen.insert(e.name.as_str(), ()).is_some() {
                self.err(e.span, format!("duplicate event `{}`", e.name));
            }
            let ctx = Ctx { atomic: e.atomic, constant: false };
            if let Some(t) = self.expr(&e.pre, ctx) {
                if t != BOOL {
                    self.err(e.pre.span, format!("precondition must be bool, found {t}"));
                }
            }
            self.block(&e.eff, ctx);
        }
    }

    fn block(&mut self, stmts: &[Stmt], ctx: Ctx) {
        for s in stmts {
            self.stmt(s, ctx);
        }
    }

    fn stmt(&mut self, s: &Stmt, ctx: Ctx) {
        match s {
            Stmt::Assign { target, value, .. } => {
                let vt = self.expr(value, ctx);
                let Some(tt) = self.target(target, ctx) else { return };
                if let Some(vt) = vt {
                    if !assignable(tt, vt) {
                        self.err(value.span, format!("cannot assign {vt} to {tt}"));
                    }
                }
            }
            Stmt::If { cond, then, els, .. } => {
                if let Some(t) = self.expr(cond, ctx) {
                    if t != BOOL {
                        self.err(cond.span, format!("condition must be bool, found {t}"));
                    }
                }
                self.block(then, ctx);
                self.block(els, ctx);
            }
            Stmt::Call { name, args, span } => match Builtin::lookup(name) {
                Some(Builtin::Assign) => self.assign_call(args, *span, ctx),
                Some(_) => {
                    for a in args {
                        self.expr(a, ctx);
                    }
                    self.err(*span, format!("result of `{name}` is unused"));
                }
                None => self.err(*span, format!("unknown function `{name}`")),
            },
        }
    }

    fn assign_call(&mut self, args: &[Expr], span: Span, ctx: Ctx) {
        if args.len() != 3 {
            self.err(span, format!("`assign` takes 3 arguments, found {}", args.len()));
            return;
        }
        match &args[0].kind {
            ExprKind::Var(name) => match self.symbols.get(name).copied() {
                Some(sym) if sym.ty == BaseType::PosList && !sym.indexed => {
                    self.check_shared_write(name, sym, false, args[0].span, ctx)
                }
                Some(_) => self.err(args[0].span, format!("`assign` needs a list<pos> variable, `{name}` is not one")),
                None => self.err(args[0].span, format!("undeclared identifier `{name}`")),
            },
            _ => self.err(args[0].span, "`assign` needs a list<pos> variable"),
        }
        for a in &args[1..] {
            if let Some(t) = self.expr(a, ctx) {
                if t != INT {
                    self.err(a.span, format!("expected int, found {t}"));
                }
            }
        }
    }

    /// Permission rules for writing a declared variable.
    fn check_shared_write(&mut self, name: &str, sym: Symbol, own_cell: bool, span: Span, ctx: Ctx) {
        match sym.scope {
            Scope::Local => {}
            Scope::AllWrite => {
                if !own_cell && !ctx.atomic {
                    self.err(span, format!("shared write requires atomic: `{name}`"));
                }
            }
            Scope::AllRead => {
                if !own_cell {
                    if sym.indexed {
                        self.err(span, format!("only the owner may write allread `{name}`, use `{name}[pid]`"));
                    } else {
                        self.err(span, format!("allread `{name}` is not writable"));
                    }
                }
            }
        }
    }

    fn target(&mut self, t: &LValue, ctx: Ctx) -> Option<BaseType> {
        match t {
            LValue::Var { name, span } => {
                let sym = self.lookup_decl(name, *span)?;
                if sym.indexed {
                    self.err(*span, format!("array `{name}` must be indexed"));
                    return None;
                }
                self.check_shared_write(name, sym, false, *span, ctx);
                Some(sym.ty)
            }
            LValue::Cell { name, index, span } => {
                let it = self.expr(index, ctx);
                let sym = self.lookup_decl(name, *span)?;
                if !sym.indexed {
                    self.err(*span, format!("`{name}` is not indexed by pid"));
                    return None;
                }
                if it.is_some_and(|t| t != INT) {
                    self.err(index.span, "index must be int");
                }
                let own = matches!(&index.kind, ExprKind::Var(v) if v == "pid");
                self.check_shared_write(name, sym, own, *span, ctx);
                Some(sym.ty)
            }
            LValue::Port { name, span } => {
                if !self.program.uses_motion {
                    self.err(*span, "`Motion` used without `using Motion`");
                    return None;
                }
                match name.as_str() {
                    "route" => Some(BaseType::PosList),
                    _ if PORTS_READ.iter().any(|(p, _)| p == name) => {
                        self.err(*span, format!("`Motion.{name}` is a sensor port"));
                        None
                    }
                    _ => {
                        self.err(*span, format!("unknown port `Motion.{name}`"));
                        None
                    }
                }
            }
        }
    }

    fn lookup_decl(&mut self, name: &str, span: Span) -> Option<Symbol> {
        let sym = self.symbols.get(name).copied();
        if sym.is_none() {
            let msg = if RESERVED.contains(&name) {
                format!("`{name}` is not writable")
            } else {
                format!("undeclared identifier `{name}`")
            };
            self.err(span, msg);
        }
        sym
    }

    fn expr(&mut self, e: &Expr, ctx: Ctx) -> Option<Ty> {
        let t = self.expr_or_array(e, ctx)?;
        if let Ty::Array(_) = t {
            self.err(e.span, format!("array `{}` must be indexed", pretty_name(e)));
            return None;
        }
        Some(t)
    }

    fn expr_or_array(&mut self, e: &Expr, ctx: Ctx) -> Option<Ty> {
        if ctx.constant {
            match &e.kind {
                ExprKind::Var(_) | ExprKind::Port(_) => {
                    self.err(e.span, "initializer must be a constant");
                    return None;
                }
                ExprKind::Call(name, _) if name != "pos" => {
                    self.err(e.span, "initializer must be a constant");
                    return None;
                }
                _ => {}
            }
        }
        match &e.kind {
            ExprKind::Int(_) => Some(INT),
            ExprKind::Float(_) => Some(FLOAT),
            ExprKind::Bool(_) => Some(BOOL),
            ExprKind::Var(name) => match name.as_str() {
                "pid" | "numAgents" => Some(INT),
                _ => match self.symbols.get(name) {
                    Some(sym) if sym.indexed => Some(Ty::Array(sym.ty)),
                    Some(sym) => Some(Ty::Base(sym.ty)),
                    None => {
                        self.err(e.span, format!("undeclared identifier `{name}`"));
                        None
                    }
                },
            },
            ExprKind::Port(name) => {
                if !self.program.uses_motion {
                    self.err(e.span, "`Motion` used without `using Motion`");
                    return None;
                }
                match PORTS_READ.iter().find(|(p, _)| p == name) {
                    Some((_, t)) => Some(*t),
                    None if name == "route" => {
                        self.err(e.span, "`Motion.route` is write-only");
                        None
                    }
                    None => {
                        self.err(e.span, format!("unknown port `Motion.{name}`"));
                        None
                    }
                }
            }
            ExprKind::Index(base, ix) => {
                let bt = self.expr_or_array(base, ctx);
                let it = self.expr(ix, ctx);
                if it.is_some_and(|t| t != INT) {
                    self.err(ix.span, "index must be int");
                }
                match bt? {
                    Ty::Array(elem) => Some(Ty::Base(elem)),
                    t if t == LIST => Some(POS),
                    t => {
                        self.err(e.span, format!("cannot index {t}"));
                        None
                    }
                }
            }
            ExprKind::Field(base, f) => {
                let bt = self.expr(base, ctx)?;
                if bt != POS {
                    self.err(e.span, format!("field `.{f}` needs a pos, found {bt}"));
                    return None;
                }
                if !matches!(f.as_str(), "x" | "y" | "z") {
                    self.err(e.span, format!("pos has no field `{f}`"));
                    return None;
                }
                Some(FLOAT)
            }
            ExprKind::Call(name, args) => self.call(name, args, e.span, ctx),
            ExprKind::List(items) => {
                let mut ok = true;
                for it in items {
                    match self.expr(it, ctx) {
                        Some(t) if t == POS => {}
                        Some(t) => {
                            self.err(it.span, format!("list element must be pos, found {t}"));
                            ok = false;
                        }
                        None => ok = false,
                    }
                }
                ok.then_some(LIST)
            }
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner, ctx)?;
                match op {
                    UnOp::Not if t == BOOL => Some(BOOL),
                    UnOp::Neg if numeric(t) || t == POS => Some(t),
                    _ => {
                        let sym = if *op == UnOp::Not { "!" } else { "-" };
                        self.err(e.span, format!("operator `{sym}` cannot be applied to {t}"));
                        None
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.expr(l, ctx);
                let rt = self.expr(r, ctx);
                let (lt, rt) = (lt?, rt?);
                let out = binary_type(*op, lt, rt);
                if out.is_none() {
                    self.err(e.span, format!("operator `{}` cannot be applied to {lt} and {rt}", op.symbol()));
                }
                out
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span, ctx: Ctx) -> Option<Ty> {
        let Some(b) = Builtin::lookup(name) else {
            self.err(span, format!("unknown function `{name}`"));
            return None;
        };
        let (params, ret): (&[Ty], Ty) = match b {
            Builtin::Assign => {
                self.err(span, "`assign` is a statement");
                return None;
            }
            Builtin::AllAssigned => (&[LIST], BOOL),
            Builtin::IsAssigned => (&[LIST, INT], BOOL),
            Builtin::Len => (&[LIST], INT),
            Builtin::Pos => (&[FLOAT, FLOAT, FLOAT], POS),
            Builtin::FindPath => (&[POS, Ty::Array(BaseType::PosList)], LIST),
            Builtin::PathIsClear => (&[LIST, Ty::Array(BaseType::PosList)], BOOL),
        };
        if args.len() != params.len() {
            self.err(span, format!("`{name}` takes {} arguments, found {}", params.len(), args.len()));
            return None;
        }
        let mut ok = true;
        for (a, p) in args.iter().zip(params) {
            let t = if matches!(p, Ty::Array(_)) {
                if !matches!(a.kind, ExprKind::Var(_)) {
                    self.err(a.span, format!("expected a {p} variable"));
                    ok = false;
                    continue;
                }
                self.expr_or_array(a, ctx)
            } else {
                self.expr(a, ctx)
            };
            match t {
                Some(t) if t == *p || (*p == FLOAT && t == INT) => {}
                Some(t) => {
                    self.err(a.span, format!("expected {p}, found {t}"));
                    ok = false;
                }
                None => ok = false,
            }
        }
        ok.then_some(ret)
    }
}

fn pretty_name(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(n) => n.clone(),
        _ => crate::pretty::expr(e),
    }
}

fn binary_type(op: BinOp, l: Ty, r: Ty) -> Option<Ty> {
    use BinOp::*;
    let num = numeric(l) && numeric(r);
    let widen = if l == FLOAT || r == FLOAT { FLOAT } else { INT };
    match op {
        Or | And => (l == BOOL && r == BOOL).then_some(BOOL),
        Eq | Ne => (num || (l == r && (l == BOOL || l == POS))).then_some(BOOL),
        Lt | Le | Gt | Ge => num.then_some(BOOL),
        Add | Sub => {
            if num {
                Some(widen)
            } else {
                (l == POS && r == POS).then_some(POS)
            }
        }
        Mul => {
            if num {
                Some(widen)
            } else if (l == POS && numeric(r)) || (numeric(l) && r == POS) {
                Some(POS)
            } else {
                None
            }
        }
        Div => {
            if num {
                Some(widen)
            } else {
                (l == POS && numeric(r)).then_some(POS)
            }
        }
        Rem => (l == INT && r == INT).then_some(INT),
    }
}

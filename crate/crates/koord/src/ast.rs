//! Syntax tree produced by the parser.

use crate::span::Span;
use crate::value::BaseType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// Shared; each agent writes its own cell, atomic events may write any.
    AllWrite,
    /// Shared and replicated; only the owner cell of a pid-indexed variable
    /// is writable, and only by its owner.
    AllRead,
    /// Private to the agent, never serialized.
    Local,
}

impl Scope {
    pub fn keyword(self) -> &'static str {
        match self {
            Scope::AllWrite => "allwrite",
            Scope::AllRead => "allread",
            Scope::Local => "local",
        }
    }

    pub fn is_shared(self) -> bool {
        self != Scope::Local
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub uses_motion: bool,
    pub decls: Vec<VarDecl>,
    pub events: Vec<EventDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub scope: Scope,
    pub ty: BaseType,
    pub indexed_by_pid: bool,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDecl {
    pub name: String,
    pub atomic: bool,
    pub pre: Expr,
    pub eff: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    /// A variable, `pid`, or `numAgents`.
    Var(String),
    /// `Motion.<port>`
    Port(String),
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    Call(String, Vec<Expr>),
    List(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var { name: String, span: Span },
    Cell { name: String, index: Expr, span: Span },
    Port { name: String, span: Span },
}

impl LValue {
    pub fn span(&self) -> Span {
        match self {
            LValue::Var { span, .. } | LValue::Cell { span, .. } | LValue::Port { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { target: LValue, value: Expr, span: Span },
    If { cond: Expr, then: Vec<Stmt>, els: Vec<Stmt>, span: Span },
    Call { name: String, args: Vec<Expr>, span: Span },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Assign { span, .. } | Stmt::If { span, .. } | Stmt::Call { span, .. } => *span,
        }
    }
}

//! Recursive-descent parser with precedence climbing for expressions.
//!
//! ```text
//! program := [ "using" "Motion" NL ] { section | event }
//! section := ("allwrite" | "allread" | "local") ":" NL { decl }
//! decl    := type IDENT [ "[" "pid" "]" ] [ "=" expr ] NL
//! type    := "int" | "float" | "bool" | "pos" | "list" "<" "pos" ">"
//! event   := [ "atomic" ] "event" IDENT "{" "pre" ":" expr NL "eff" ":" block "}"
//! block   := "{" stmt { stmt } "}"
//! stmt    := "if" expr block [ "else" ( block | if ) ] NL
//!          | IDENT "(" args ")" NL
//!          | lvalue "=" expr NL
//! lvalue  := IDENT [ "[" expr "]" ] | "Motion" "." IDENT
//! ```

use thiserror::Error;

use crate::ast::*;
use crate::lexer::{Token, TokenKind};
use crate::span::Span;
use crate::value::BaseType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("expected {}, found {found}", expected.join(" or "))]
    Unexpected { found: String, expected: Vec<String>, span: Span },
    #[error("event `{event}` has an empty effect")]
    EmptyEffect { event: String, span: Span },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Unexpected { span, .. } | ParseError::EmptyEffect { span, .. } => *span,
        }
    }
}

/// Parse a token stream (as produced by [`crate::tokenize`]) into a program.
pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    Parser::new(tokens).program()
}

/// Parse a standalone expression, as used for configuration values.
pub fn parse_expr(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut p = Parser::new(tokens);
    p.skip_newlines();
    let e = p.expr()?;
    p.skip_newlines();
    p.expect(TokenKind::Eof)?;
    Ok(e)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

const EOF_TOKEN: Token = Token { kind: TokenKind::Eof, span: Span { line: 0, col: 0 } };

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Self { tokens, pos: 0 }
    }

    fn current(&self) -> &'t Token {
        self.tokens.get(self.pos).or(self.tokens.last()).unwrap_or(&EOF_TOKEN)
    }

    fn kind(&self) -> &'t TokenKind {
        &self.current().kind
    }

    fn span(&self) -> Span {
        self.current().span
    }

    fn bump(&mut self) -> &'t Token {
        let tok = self.current();
        if self.pos < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.kind() == kind
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::Unexpected {
            found: self.kind().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            span: self.span(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<&'t Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            self.unexpected(&[&kind.to_string()])
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.kind() {
            TokenKind::Ident(name) => {
                let span = self.bump().span;
                Ok((name.clone(), span))
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    /// A statement or declaration ends at a newline, or right before a
    /// closing brace / end of input.
    fn end_of_line(&mut self) -> PResult<()> {
        match self.kind() {
            TokenKind::Newline => {
                self.skip_newlines();
                Ok(())
            }
            TokenKind::RBrace | TokenKind::Eof => Ok(()),
            _ => self.unexpected(&["newline"]),
        }
    }

    fn skip_newlines(&mut self) {
        while self.eat(&TokenKind::Newline) {}
    }

    fn program(&mut self) -> PResult<Program> {
        self.skip_newlines();
        let mut uses_motion = false;
        if self.eat(&TokenKind::Using) {
            let (name, span) = self.expect_ident()?;
            if name != "Motion" {
                return Err(ParseError::Unexpected {
                    found: format!("identifier `{name}`"),
                    expected: vec!["`Motion`".into()],
                    span,
                });
            }
            uses_motion = true;
            self.end_of_line()?;
        }
        let mut decls = Vec::new();
        let mut events = Vec::new();
        loop {
            self.skip_newlines();
            match self.kind() {
                TokenKind::Eof => break,
                TokenKind::AllWrite | TokenKind::AllRead | TokenKind::Local => {
                    let scope = match self.bump().kind {
                        TokenKind::AllWrite => Scope::AllWrite,
                        TokenKind::AllRead => Scope::AllRead,
                        _ => Scope::Local,
                    };
                    self.expect(TokenKind::Colon)?;
                    self.end_of_line()?;
                    while self.at_type() {
                        decls.push(self.decl(scope)?);
                    }
                }
                TokenKind::Event | TokenKind::Atomic => events.push(self.event()?),
                _ => return self.unexpected(&["`allwrite`", "`allread`", "`local`", "`event`", "`atomic`"]),
            }
        }
        Ok(Program { uses_motion, decls, events })
    }

    fn at_type(&self) -> bool {
        matches!(
            self.kind(),
            TokenKind::TyInt | TokenKind::TyFloat | TokenKind::TyBool | TokenKind::TyPos | TokenKind::TyList
        )
    }

    fn ty(&mut self) -> PResult<BaseType> {
        let ty = match self.kind() {
            TokenKind::TyInt => BaseType::Int,
            TokenKind::TyFloat => BaseType::Float,
            TokenKind::TyBool => BaseType::Bool,
            TokenKind::TyPos => BaseType::Pos,
            TokenKind::TyList => {
                self.bump();
                self.expect(TokenKind::Lt)?;
                self.expect(TokenKind::TyPos)?;
                self.expect(TokenKind::Gt)?;
                return Ok(BaseType::PosList);
            }
            _ => return self.unexpected(&["type"]),
        };
        self.bump();
        Ok(ty)
    }

    fn decl(&mut self, scope: Scope) -> PResult<VarDecl> {
        let span = self.span();
        let ty = self.ty()?;
        let (name, _) = self.expect_ident()?;
        let mut indexed_by_pid = false;
        if self.eat(&TokenKind::LBracket) {
            let (ix, ix_span) = self.expect_ident()?;
            if ix != "pid" {
                return Err(ParseError::Unexpected {
                    found: format!("identifier `{ix}`"),
                    expected: vec!["`pid`".into()],
                    span: ix_span,
                });
            }
            self.expect(TokenKind::RBracket)?;
            indexed_by_pid = true;
        }
        let init = if self.eat(&TokenKind::Assign) { Some(self.expr()?) } else { None };
        self.end_of_line()?;
        Ok(VarDecl { name, scope, ty, indexed_by_pid, init, span })
    }

    fn event(&mut self) -> PResult<EventDecl> {
        let span = self.span();
        let atomic = self.eat(&TokenKind::Atomic);
        self.expect(TokenKind::Event)?;
        let (name, _) = self.expect_ident()?;
        self.expect(TokenKind::LBrace)?;
        self.skip_newlines();
        self.expect(TokenKind::Pre)?;
        self.expect(TokenKind::Colon)?;
        let pre = self.expr()?;
        self.expect(TokenKind::Newline)?;
        self.skip_newlines();
        let eff_span = self.expect(TokenKind::Eff)?.span;
        self.expect(TokenKind::Colon)?;
        let eff = self.block()?;
        if eff.is_empty() {
            return Err(ParseError::EmptyEffect { event: name, span: eff_span });
        }
        self.skip_newlines();
        self.expect(TokenKind::RBrace)?;
        self.end_of_line()?;
        Ok(EventDecl { name, atomic, pre, eff, span })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(TokenKind::LBrace)?;
        self.skip_newlines();
        let mut stmts = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if self.at(&TokenKind::If) {
            let stmt = self.if_stmt()?;
            self.end_of_line()?;
            return Ok(stmt);
        }
        let (name, name_span) = match self.kind() {
            TokenKind::Ident(_) => self.expect_ident()?,
            _ => return self.unexpected(&["statement"]),
        };
        let stmt = match self.kind() {
            TokenKind::LParen => {
                let args = self.args()?;
                Stmt::Call { name, args, span }
            }
            TokenKind::Dot if name == "Motion" => {
                self.bump();
                let (port, _) = self.expect_ident()?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                Stmt::Assign { target: LValue::Port { name: port, span: name_span }, value, span }
            }
            TokenKind::LBracket => {
                self.bump();
                let index = self.expr()?;
                self.expect(TokenKind::RBracket)?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                Stmt::Assign { target: LValue::Cell { name, index, span: name_span }, value, span }
            }
            TokenKind::Assign => {
                self.bump();
                let value = self.expr()?;
                Stmt::Assign { target: LValue::Var { name, span: name_span }, value, span }
            }
            _ => return self.unexpected(&["`=`", "`[`", "`(`"]),
        };
        self.end_of_line()?;
        Ok(stmt)
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect(TokenKind::If)?.span;
        let cond = self.expr()?;
        let then = self.block()?;
        let els = if self.eat(&TokenKind::Else) {
            if self.at(&TokenKind::If) {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If { cond, then, els, span })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                if !self.eat(&TokenKind::Comma) {
                    return self.unexpected(&["`,`", "`)`"]);
                }
            }
        }
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.kind() {
            TokenKind::OrOr => BinOp::Or,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().span;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.kind() {
            TokenKind::Bang => UnOp::Not,
            TokenKind::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let inner = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat(&TokenKind::LBracket) {
                let ix = self.expr()?;
                self.expect(TokenKind::RBracket)?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(ix)), span);
            } else if self.eat(&TokenKind::Dot) {
                let (field, _) = self.expect_ident()?;
                e = Expr::new(ExprKind::Field(Box::new(e), field), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.kind() {
            TokenKind::Int(v) => {
                self.bump();
                ExprKind::Int(*v)
            }
            TokenKind::Float(v) => {
                self.bump();
                ExprKind::Float(*v)
            }
            TokenKind::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            TokenKind::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(e);
            }
            TokenKind::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&TokenKind::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(&TokenKind::RBracket) {
                            break;
                        }
                        if !self.eat(&TokenKind::Comma) {
                            return self.unexpected(&["`,`", "`]`"]);
                        }
                    }
                }
                ExprKind::List(items)
            }
            // `pos(x, y, z)` constructs a position
            TokenKind::TyPos => {
                self.bump();
                ExprKind::Call("pos".into(), self.args()?)
            }
            TokenKind::Ident(name) => {
                self.bump();
                if name == "Motion" && self.at(&TokenKind::Dot) {
                    self.bump();
                    let (port, _) = self.expect_ident()?;
                    ExprKind::Port(port)
                } else if self.at(&TokenKind::LParen) {
                    ExprKind::Call(name.clone(), self.args()?)
                } else {
                    ExprKind::Var(name.clone())
                }
            }
            _ => return self.unexpected(&["expression"]),
        };
        Ok(Expr::new(kind, span))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;

    fn parse_src(src: &str) -> Result<Program, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn empty_effect_is_rejected() {
        let err = parse_src("event E {\n pre: true\n eff: {\n }\n}\n").unwrap_err();
        assert!(matches!(err, ParseError::EmptyEffect { .. }), "{err:?}");
    }

    #[test]
    fn events_keep_source_order() {
        let p = parse_src(
            "event B {\n pre: true\n eff: { x = 1 }\n}\natomic event A {\n pre: false\n eff: { x = 2 }\n}\n",
        )
        .unwrap();
        let names: Vec<_> = p.events.iter().map(|e| (e.name.as_str(), e.atomic)).collect();
        assert_eq!(names, vec![("B", false), ("A", true)]);
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse_src("local:\n int x = 1 - 2 - 3 * 4\n").unwrap();
        let init = p.decls[0].init.as_ref().unwrap();
        // (1 - 2) - (3 * 4)
        let ExprKind::Binary(BinOp::Sub, lhs, rhs) = &init.kind else { panic!("{init:?}") };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Sub, _, _)));
        assert!(matches!(rhs.kind, ExprKind::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn syntax_error_lists_expected_tokens() {
        let err = parse_src("event E {\n pre true\n}").unwrap_err();
        match err {
            ParseError::Unexpected { expected, span, .. } => {
                assert_eq!(expected, vec!["`:`".to_string()]);
                assert_eq!((span.line, span.col), (2, 6));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn else_if_chains() {
        let p = parse_src(
            "event E {\n pre: true\n eff: {\n if a { x = 1 } else if b { x = 2 } else { x = 3 }\n }\n}\n",
        )
        .unwrap();
        let Stmt::If { els, .. } = &p.events[0].eff[0] else { panic!() };
        assert!(matches!(els[0], Stmt::If { .. }));
    }
}

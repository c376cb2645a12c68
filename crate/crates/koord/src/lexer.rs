//! Tokenizer. Newlines are significant (they terminate statements) except
//! inside parentheses and brackets; `//` comments run to end of line.

use std::fmt;

use thiserror::Error;

use crate::span::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    // keywords
    Using,
    AllWrite,
    AllRead,
    Local,
    Event,
    Atomic,
    Pre,
    Eff,
    If,
    Else,
    True,
    False,
    TyInt,
    TyFloat,
    TyBool,
    TyPos,
    TyList,

    Ident(String),
    Int(i64),
    Float(f64),

    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Assign,
    Comma,
    Dot,
    Colon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,

    Newline,
    Eof,
}

impl TokenKind {
    fn keyword(word: &str) -> Option<TokenKind> {
        Some(match word {
            "using" => TokenKind::Using,
            "allwrite" => TokenKind::AllWrite,
            "allread" => TokenKind::AllRead,
            "local" => TokenKind::Local,
            "event" => TokenKind::Event,
            "atomic" => TokenKind::Atomic,
            "pre" => TokenKind::Pre,
            "eff" => TokenKind::Eff,
            "if" => TokenKind::If,
            "else" => TokenKind::Else,
            "true" => TokenKind::True,
            "false" => TokenKind::False,
            "int" => TokenKind::TyInt,
            "float" => TokenKind::TyFloat,
            "bool" => TokenKind::TyBool,
            "pos" => TokenKind::TyPos,
            "list" => TokenKind::TyList,
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Using => "`using`",
            TokenKind::AllWrite => "`allwrite`",
            TokenKind::AllRead => "`allread`",
            TokenKind::Local => "`local`",
            TokenKind::Event => "`event`",
            TokenKind::Atomic => "`atomic`",
            TokenKind::Pre => "`pre`",
            TokenKind::Eff => "`eff`",
            TokenKind::If => "`if`",
            TokenKind::Else => "`else`",
            TokenKind::True => "`true`",
            TokenKind::False => "`false`",
            TokenKind::TyInt => "`int`",
            TokenKind::TyFloat => "`float`",
            TokenKind::TyBool => "`bool`",
            TokenKind::TyPos => "`pos`",
            TokenKind::TyList => "`list`",
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => return write!(f, "integer `{v}`"),
            TokenKind::Float(v) => return write!(f, "number `{v:?}`"),
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Percent => "`%`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::OrOr => "`||`",
            TokenKind::Bang => "`!`",
            TokenKind::Assign => "`=`",
            TokenKind::Comma => "`,`",
            TokenKind::Dot => "`.`",
            TokenKind::Colon => "`:`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBracket => "`[`",
            TokenKind::RBracket => "`]`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Newline => "newline",
            TokenKind::Eof => "end of file",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexError {
    #[error("unexpected character `{ch}`")]
    UnexpectedChar { ch: char, span: Span },
    #[error("malformed number `{text}`")]
    BadNumber { text: String, span: Span },
    #[error("unbalanced `{ch}`")]
    Unbalanced { ch: char, span: Span },
}

impl LexError {
    pub fn span(&self) -> Span {
        match self {
            LexError::UnexpectedChar { span, .. }
            | LexError::BadNumber { span, .. }
            | LexError::Unbalanced { span, .. } => *span,
        }
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }
}

/// Split `source` into tokens. The stream always ends with [`TokenKind::Eof`].
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { chars: source.chars().peekable(), line: 1, col: 1 };
    let mut out: Vec<Token> = Vec::new();
    // (opening char, span) for ( and [ ; newlines are suppressed while non-empty
    let mut nesting: Vec<(char, Span)> = Vec::new();

    while let Some(c) = cur.peek() {
        let span = cur.span();
        match c {
            ' ' | '\t' | '\r' => {
                cur.bump();
            }
            '\n' => {
                cur.bump();
                if nesting.is_empty() && !matches!(out.last().map(|t| &t.kind), Some(TokenKind::Newline) | None) {
                    out.push(Token { kind: TokenKind::Newline, span });
                }
            }
            '/' => {
                cur.bump();
                if cur.peek() == Some('/') {
                    while !matches!(cur.peek(), Some('\n') | None) {
                        cur.bump();
                    }
                } else {
                    out.push(Token { kind: TokenKind::Slash, span });
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(d) = cur.peek() {
                    let exponent_sign = (d == '+' || d == '-') && text.ends_with(['e', 'E']);
                    if d.is_ascii_alphanumeric() || d == '.' || d == '_' || exponent_sign {
                        text.push(d);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let kind = if text.contains('.') || text.contains('e') || text.contains('E') {
                    text.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(TokenKind::Float)
                } else {
                    text.parse::<i64>().ok().map(TokenKind::Int)
                };
                match kind {
                    Some(kind) => out.push(Token { kind, span }),
                    None => return Err(LexError::BadNumber { text, span }),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(d) = cur.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        word.push(d);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let kind = TokenKind::keyword(&word).unwrap_or(TokenKind::Ident(word));
                out.push(Token { kind, span });
            }
            _ => {
                cur.bump();
                let two = |cur: &mut Cursor, next: char, yes: TokenKind, no: Option<TokenKind>| {
                    if cur.peek() == Some(next) {
                        cur.bump();
                        Some(yes)
                    } else {
                        no
                    }
                };
                let kind = match c {
                    '+' => Some(TokenKind::Plus),
                    '-' => Some(TokenKind::Minus),
                    '*' => Some(TokenKind::Star),
                    '%' => Some(TokenKind::Percent),
                    ',' => Some(TokenKind::Comma),
                    '.' => Some(TokenKind::Dot),
                    ':' => Some(TokenKind::Colon),
                    '{' => Some(TokenKind::LBrace),
                    '}' => Some(TokenKind::RBrace),
                    '(' | '[' => {
                        nesting.push((c, span));
                        Some(if c == '(' { TokenKind::LParen } else { TokenKind::LBracket })
                    }
                    ')' | ']' => {
                        let want = if c == ')' { '(' } else { '[' };
                        match nesting.pop() {
                            Some((open, _)) if open == want => {}
                            _ => return Err(LexError::Unbalanced { ch: c, span }),
                        }
                        Some(if c == ')' { TokenKind::RParen } else { TokenKind::RBracket })
                    }
                    '=' => two(&mut cur, '=', TokenKind::EqEq, Some(TokenKind::Assign)),
                    '!' => two(&mut cur, '=', TokenKind::NotEq, Some(TokenKind::Bang)),
                    '<' => two(&mut cur, '=', TokenKind::Le, Some(TokenKind::Lt)),
                    '>' => two(&mut cur, '=', TokenKind::Ge, Some(TokenKind::Gt)),
                    '&' => two(&mut cur, '&', TokenKind::AndAnd, None),
                    '|' => two(&mut cur, '|', TokenKind::OrOr, None),
                    _ => None,
                };
                match kind {
                    Some(kind) => out.push(Token { kind, span }),
                    None => return Err(LexError::UnexpectedChar { ch: c, span }),
                }
            }
        }
    }
    if let Some(&(ch, span)) = nesting.last() {
        return Err(LexError::Unbalanced { ch, span });
    }
    let end = cur.span();
    if !matches!(out.last().map(|t| &t.kind), Some(TokenKind::Newline) | None) {
        out.push(Token { kind: TokenKind::Newline, span: end });
    }
    out.push(Token { kind: TokenKind::Eof, span: end });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn keywords_and_punctuation() {
        let k = kinds("pre: true");
        assert_eq!(&k[..3], &[TokenKind::Pre, TokenKind::Colon, TokenKind::True]);
        assert_eq!(k.last(), Some(&TokenKind::Eof));
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("x @ y").unwrap_err();
        assert_eq!(err, LexError::UnexpectedChar { ch: '@', span: Span::new(1, 3) });
        assert_eq!(err.span().col, 3);
    }

    #[test]
    fn comments_and_blank_lines_collapse() {
        let k = kinds("// header\n\n\nx = 1 // trailing\n\n");
        assert_eq!(
            k,
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Assign,
                TokenKind::Int(1),
                TokenKind::Newline,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn newlines_inside_parens_are_ignored() {
        let k = kinds("f(a,\n  b)\n");
        assert!(!k[..k.len() - 2].contains(&TokenKind::Newline));
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("2.5")[0], TokenKind::Float(2.5));
        assert_eq!(kinds("42")[0], TokenKind::Int(42));
        assert_eq!(kinds("1e3")[0], TokenKind::Float(1000.0));
        assert_eq!(kinds("1e-3")[0], TokenKind::Float(0.001));
        assert!(matches!(tokenize("1.2.3"), Err(LexError::BadNumber { .. })));
        assert!(matches!(tokenize("99999999999999999999"), Err(LexError::BadNumber { .. })));
    }

    #[test]
    fn unbalanced_brackets() {
        assert!(matches!(tokenize("f(a"), Err(LexError::Unbalanced { ch: '(', .. })));
        assert!(matches!(tokenize("a]"), Err(LexError::Unbalanced { ch: ']', .. })));
    }

    #[test]
    fn positions_track_lines_and_columns() {
        let toks = tokenize("a\n  bb").unwrap();
        assert_eq!((toks[2].span.line, toks[2].span.col), (2, 3));
    }
}

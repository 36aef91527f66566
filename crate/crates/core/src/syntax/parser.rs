//! Recursive-descent parser with desugaring of sequencing, patterns and `fun`.

use std::rc::Rc;

use thiserror::Error;

use crate::term::{Channel, ChoiceLabel};

use super::ast::{Const, Expr, ExprKind, Name, Prim, Span, E};
use super::lexer::{tokenize, LexError, Tok, Token};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("lexical error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex(e) => e.span(),
            SyntaxError::Parse(e) => e.span,
        }
    }
}

/// Lex and parse a whole program.
pub fn parse_program(src: &str) -> Result<E, SyntaxError> {
    let toks = tokenize(src)?;
    Ok(parse(&toks)?)
}

pub fn parse(tokens: &[Token]) -> Result<E, ParseError> {
    let end = tokens.last().map(|t| Span { start: t.span.end, ..t.span }).unwrap_or(Span { line: 1, col: 1, ..Span::default() });
    let mut p = Parser { toks: tokens, pos: 0, fresh: 0, end };
    let e = p.seq()?;
    if let Some(t) = p.peek_token() {
        return Err(p.error_at(t.span, &["end of input", ";"], &t.tok.spelling()));
    }
    Ok(e)
}

enum Pat {
    Bind(Option<Name>),
    Pair(Box<Pat>, Box<Pat>),
}

enum Decl {
    Val(Pat, E),
    Fun(Name, Option<Name>, E, Span),
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    fresh: u32,
    end: Span,
}

fn starts_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::Int(_)
            | Tok::True
            | Tok::False
            | Tok::LParen
            | Tok::Send
            | Tok::Recv
            | Tok::Deleg
            | Tok::Resume
            | Tok::Not
            | Tok::Fst
            | Tok::Snd
    )
}

fn starts_expr(t: &Tok) -> bool {
    starts_atom(t)
        || matches!(
            t,
            Tok::Let | Tok::Fn | Tok::Fix | Tok::If | Tok::Case | Tok::Spawn | Tok::Request | Tok::Accept | Tok::Select
        )
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn peek_token(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.end
        } else {
            self.toks[self.pos - 1].span
        }
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn error_at(&self, span: Span, expected: &[&str], found: &str) -> ParseError {
        ParseError { span, expected: expected.iter().map(|s| s.to_string()).collect(), found: found.to_string() }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().map(|t| t.spelling()).unwrap_or_else(|| "end of input".into());
        self.error_at(self.span(), expected, &found)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        if self.peek() == Some(&t) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[&t.spelling()]))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn fresh_name(&mut self) -> Name {
        self.fresh += 1;
        Rc::from(format!("_t{}", self.fresh))
    }

    fn seq(&mut self) -> Result<E, ParseError> {
        let mut items = vec![self.expr()?];
        while self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            match self.peek() {
                Some(t) if starts_expr(t) => items.push(self.expr()?),
                _ => break,
            }
        }
        let mut acc = items.pop().expect("non-empty");
        while let Some(e) = items.pop() {
            let span = e.span.to(acc.span);
            acc = Expr::new(ExprKind::Let(None, e, acc), span);
        }
        Ok(acc)
    }

    fn expr(&mut self) -> Result<E, ParseError> {
        let start = self.span();
        match self.peek() {
            Some(Tok::Let) => self.let_expr(),
            Some(Tok::Fn) => {
                self.pos += 1;
                let x = self.binder()?;
                self.expect(Tok::Arrow)?;
                let body = self.seq()?;
                let span = start.to(body.span);
                Ok(Expr::new(ExprKind::Lam(x, body), span))
            }
            Some(Tok::Fix) => {
                self.pos += 1;
                let f = self.ident()?;
                let x = self.binder()?;
                self.expect(Tok::Arrow)?;
                let body = self.seq()?;
                let span = start.to(body.span);
                Ok(Expr::new(ExprKind::Fix(f, x, body), span))
            }
            Some(Tok::If) => {
                self.pos += 1;
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let a = self.expr()?;
                self.expect(Tok::Else)?;
                let b = self.expr()?;
                let span = start.to(b.span);
                Ok(Expr::new(ExprKind::If(c, a, b), span))
            }
            Some(Tok::Case) => {
                self.pos += 1;
                let scrut = self.cmp()?;
                self.expect(Tok::LBrace)?;
                let mut branches: Vec<(ChoiceLabel, E)> = Vec::new();
                loop {
                    let lspan = self.span();
                    let lab = match self.peek() {
                        Some(Tok::Label(l)) => ChoiceLabel::new(l),
                        _ => return Err(self.error(&["choice label"])),
                    };
                    self.pos += 1;
                    if branches.iter().any(|(l, _)| *l == lab) {
                        return Err(self.error_at(lspan, &["distinct choice label"], lab.as_str()));
                    }
                    self.expect(Tok::Colon)?;
                    branches.push((lab, self.seq()?));
                    if self.eat(&Tok::Comma) {
                        if self.peek() == Some(&Tok::RBrace) {
                            break;
                        }
                        continue;
                    }
                    break;
                }
                let close = self.expect(Tok::RBrace)?;
                Ok(Expr::new(ExprKind::Match(scrut, branches), start.to(close)))
            }
            Some(t) if starts_expr(t) => self.cmp(),
            _ => Err(self.error(&["expression"])),
        }
    }

    fn let_expr(&mut self) -> Result<E, ParseError> {
        let start = self.expect(Tok::Let)?;
        let mut decls = Vec::new();
        if matches!(self.peek(), Some(Tok::Val | Tok::Fun)) {
            while matches!(self.peek(), Some(Tok::Val | Tok::Fun)) {
                decls.push(self.decl()?);
            }
        } else {
            let p = self.pattern()?;
            self.expect(Tok::Eq)?;
            decls.push(Decl::Val(p, self.seq()?));
        }
        self.expect(Tok::In)?;
        let mut body = self.seq()?;
        let whole = start.to(body.span);
        while let Some(d) = decls.pop() {
            body = match d {
                Decl::Val(p, rhs) => self.bind_pattern(p, rhs, body, whole),
                Decl::Fun(f, x, e, span) => {
                    let fix = Expr::new(ExprKind::Fix(f.clone(), x, e), span);
                    Expr::new(ExprKind::Let(Some(f), fix, body), whole)
                }
            };
        }
        Ok(body)
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let start = self.span();
        if self.eat(&Tok::Val) {
            let p = self.pattern()?;
            self.expect(Tok::Eq)?;
            return Ok(Decl::Val(p, self.seq()?));
        }
        self.expect(Tok::Fun)?;
        let f = self.ident()?;
        if self.eat(&Tok::Eq) {
            // `fun f = e` binds a non-recursive value.
            return Ok(Decl::Val(Pat::Bind(Some(f)), self.seq()?));
        }
        let x = if self.eat(&Tok::LParen) {
            if self.eat(&Tok::RParen) {
                None
            } else {
                let x = self.binder()?;
                self.expect(Tok::RParen)?;
                x
            }
        } else {
            self.binder()?
        };
        self.expect(Tok::Eq)?;
        let body = self.seq()?;
        let span = start.to(body.span);
        Ok(Decl::Fun(f, x, body, span))
    }

    fn binder(&mut self) -> Result<Option<Name>, ParseError> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(Some(x))
            }
            Some(Tok::Underscore) => {
                self.pos += 1;
                Ok(None)
            }
            Some(Tok::LParen) if self.peek_at(1) == Some(&Tok::RParen) => {
                self.pos += 2;
                Ok(None)
            }
            _ => Err(self.error(&["identifier", "_", "()"])),
        }
    }

    fn pattern(&mut self) -> Result<Pat, ParseError> {
        if self.peek() == Some(&Tok::LParen) && self.peek_at(1) != Some(&Tok::RParen) {
            self.pos += 1;
            let a = self.pattern()?;
            self.expect(Tok::Comma)?;
            let b = self.pattern()?;
            self.expect(Tok::RParen)?;
            return Ok(Pat::Pair(Box::new(a), Box::new(b)));
        }
        Ok(Pat::Bind(self.binder()?))
    }

    fn bind_pattern(&mut self, p: Pat, rhs: E, body: E, span: Span) -> E {
        match p {
            Pat::Bind(x) => Expr::new(ExprKind::Let(x, rhs, body), span),
            Pat::Pair(a, b) => {
                let t = self.fresh_name();
                let var = Expr::new(ExprKind::Var(t.clone()), rhs.span);
                let proj = |p: Prim| {
                    Expr::new(ExprKind::App(Expr::new(ExprKind::Const(Const::Prim(p)), rhs.span), var.clone()), rhs.span)
                };
                let (fst, snd) = (proj(Prim::Fst), proj(Prim::Snd));
                let inner = self.bind_pattern(*b, snd, body, span);
                let inner = self.bind_pattern(*a, fst, inner, span);
                Expr::new(ExprKind::Let(Some(t), rhs, inner), span)
            }
        }
    }

    fn binop(&mut self, op: Prim, a: E, b: E) -> E {
        let span = a.span.to(b.span);
        let pair = Expr::new(ExprKind::Pair(a, b), span);
        Expr::new(ExprKind::App(Expr::new(ExprKind::Const(Const::Prim(op)), span), pair), span)
    }

    fn cmp(&mut self) -> Result<E, ParseError> {
        let a = self.add()?;
        let op = match self.peek() {
            Some(Tok::Lt) => Prim::Lt,
            Some(Tok::Le) => Prim::Le,
            Some(Tok::Gt) => Prim::Gt,
            Some(Tok::Ge) => Prim::Ge,
            Some(Tok::EqEq) => Prim::Eq,
            _ => return Ok(a),
        };
        self.pos += 1;
        let b = self.add()?;
        Ok(self.binop(op, a, b))
    }

    fn add(&mut self) -> Result<E, ParseError> {
        let mut a = self.mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => Prim::Add,
                Some(Tok::Minus) => Prim::Sub,
                _ => return Ok(a),
            };
            self.pos += 1;
            let b = self.mul()?;
            a = self.binop(op, a, b);
        }
    }

    fn mul(&mut self) -> Result<E, ParseError> {
        let mut a = self.app()?;
        while self.eat(&Tok::Star) {
            let b = self.app()?;
            a = self.binop(Prim::Mul, a, b);
        }
        Ok(a)
    }

    fn app(&mut self) -> Result<E, ParseError> {
        let start = self.span();
        let head = match self.peek() {
            Some(Tok::Spawn) => {
                self.pos += 1;
                let arg = if self.peek() == Some(&Tok::Fn) { self.expr()? } else { self.atom()? };
                let span = start.to(arg.span);
                return Ok(Expr::new(ExprKind::Spawn(arg), span));
            }
            Some(Tok::Request) | Some(Tok::Accept) => {
                let is_req = self.peek() == Some(&Tok::Request);
                self.pos += 1;
                let chan = Channel::new(&self.ident().map_err(|_| self.error(&["channel name"]))?);
                let c = if is_req { Const::Request { chan, label: None } } else { Const::Accept { chan, label: None } };
                Expr::new(ExprKind::Const(c), start.to(self.prev_span()))
            }
            Some(Tok::Select) => {
                self.pos += 1;
                let lab = match self.peek() {
                    Some(Tok::Label(l)) => ChoiceLabel::new(l),
                    _ => return Err(self.error(&["choice label"])),
                };
                self.pos += 1;
                Expr::new(ExprKind::Const(Const::Select(lab)), start.to(self.prev_span()))
            }
            Some(t) if starts_atom(t) => self.atom()?,
            _ => return Err(self.error(&["expression"])),
        };
        let mut args = Vec::new();
        while self.peek().is_some_and(starts_atom) {
            args.push(self.atom()?);
        }
        let pairs_args = matches!(head.kind, ExprKind::Const(Const::Send | Const::Deleg));
        let mut args = args.into_iter();
        let mut acc = head;
        if pairs_args && args.len() >= 2 {
            let a = args.next().expect("two args");
            let b = args.next().expect("two args");
            let pspan = a.span.to(b.span);
            let pair = Expr::new(ExprKind::Pair(a, b), pspan);
            let span = acc.span.to(pspan);
            acc = Expr::new(ExprKind::App(acc, pair), span);
        }
        for a in args {
            let span = acc.span.to(a.span);
            acc = Expr::new(ExprKind::App(acc, a), span);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<E, ParseError> {
        let start = self.span();
        let konst = |c: Const| ExprKind::Const(c);
        let kind = match self.peek() {
            Some(Tok::Ident(x)) => ExprKind::Var(x.clone()),
            Some(Tok::Int(n)) => konst(Const::Int(*n)),
            Some(Tok::True) => konst(Const::Bool(true)),
            Some(Tok::False) => konst(Const::Bool(false)),
            Some(Tok::Send) => konst(Const::Send),
            Some(Tok::Recv) => konst(Const::Recv),
            Some(Tok::Deleg) => konst(Const::Deleg),
            Some(Tok::Resume) => konst(Const::Resume(None)),
            Some(Tok::Not) => konst(Const::Prim(Prim::Not)),
            Some(Tok::Fst) => konst(Const::Prim(Prim::Fst)),
            Some(Tok::Snd) => konst(Const::Prim(Prim::Snd)),
            Some(Tok::LParen) => return self.paren(),
            _ => return Err(self.error(&["atom"])),
        };
        self.pos += 1;
        Ok(Expr::new(kind, start))
    }

    fn paren(&mut self) -> Result<E, ParseError> {
        let start = self.expect(Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok(Expr::new(ExprKind::Const(Const::Unit), start.to(self.prev_span())));
        }
        let section = match self.peek() {
            Some(Tok::Plus) => Some(Prim::Add),
            Some(Tok::Minus) => Some(Prim::Sub),
            Some(Tok::Star) => Some(Prim::Mul),
            Some(Tok::Lt) => Some(Prim::Lt),
            Some(Tok::Le) => Some(Prim::Le),
            Some(Tok::Gt) => Some(Prim::Gt),
            Some(Tok::Ge) => Some(Prim::Ge),
            Some(Tok::EqEq) => Some(Prim::Eq),
            _ => None,
        };
        if let Some(op) = section {
            if self.peek_at(1) == Some(&Tok::RParen) {
                self.pos += 2;
                return Ok(Expr::new(ExprKind::Const(Const::Prim(op)), start.to(self.prev_span())));
            }
        }
        let mut items = vec![self.seq()?];
        while self.eat(&Tok::Comma) {
            items.push(self.seq()?);
        }
        let close = self.expect(Tok::RParen)?;
        let mut acc = items.pop().expect("non-empty");
        while let Some(e) = items.pop() {
            let span = e.span.to(acc.span);
            acc = Expr::new(ExprKind::Pair(e, acc), span);
        }
        if let ExprKind::Pair(..) = acc.kind {
            acc = Expr::new(acc.kind.clone(), start.to(close));
        }
        Ok(acc)
    }
}

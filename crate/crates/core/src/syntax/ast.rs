//! Abstract syntax of the source language.

use std::fmt;
use std::rc::Rc;

use crate::term::{Channel, ChoiceLabel, Label};

/// Byte range plus 1-based line/column of the start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub type Name = Rc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Not,
    Fst,
    Snd,
}

impl Prim {
    pub fn binop_symbol(self) -> Option<&'static str> {
        Some(match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Lt => "<",
            Prim::Le => "<=",
            Prim::Gt => ">",
            Prim::Ge => ">=",
            Prim::Eq => "==",
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Const {
    Unit,
    Bool(bool),
    Int(i64),
    Prim(Prim),
    Request { chan: Channel, label: Option<Label> },
    Accept { chan: Channel, label: Option<Label> },
    Send,
    Recv,
    Select(ChoiceLabel),
    Deleg,
    Resume(Option<Label>),
}

impl Const {
    pub fn label(&self) -> Option<Label> {
        match self {
            Const::Request { label, .. } | Const::Accept { label, .. } | Const::Resume(label) => *label,
            _ => None,
        }
    }
}

/// Runtime endpoint value; `dual` marks the accept-side end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointRef {
    pub session: u32,
    pub dual: bool,
    pub label: Label,
}

impl EndpointRef {
    pub fn co(self) -> (u32, bool) {
        (self.session, !self.dual)
    }
    pub fn key(self) -> (u32, bool) {
        (self.session, self.dual)
    }
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dual {
            write!(f, "~p{}", self.session)
        } else {
            write!(f, "p{}", self.session)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

pub type E = Rc<Expr>;

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(Name),
    Const(Const),
    Pair(E, E),
    App(E, E),
    /// `None` binder is a wildcard.
    Lam(Option<Name>, E),
    Fix(Name, Option<Name>, E),
    Let(Option<Name>, E, E),
    If(E, E, E),
    Spawn(E),
    Match(E, Vec<(ChoiceLabel, E)>),
    Endpoint(EndpointRef),
}

/// Structural equality; spans are ignored.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> E {
        Rc::new(Expr { kind, span })
    }

    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Lam(..) | ExprKind::Fix(..) | ExprKind::Endpoint(_) => true,
            ExprKind::Pair(a, b) => a.is_value() && b.is_value(),
            _ => false,
        }
    }

    /// Pre-order visit.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Pair(a, b) | ExprKind::App(a, b) | ExprKind::Let(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Lam(_, a) | ExprKind::Fix(_, _, a) | ExprKind::Spawn(a) => a.walk(f),
            ExprKind::If(a, b, c) => {
                a.walk(f);
                b.walk(f);
                c.walk(f);
            }
            ExprKind::Match(a, bs) => {
                a.walk(f);
                for (_, b) in bs {
                    b.walk(f);
                }
            }
            _ => {}
        }
    }

    /// Rebuild with `f` applied to every constant.
    pub fn map_consts(self: &E, f: &mut impl FnMut(&Const) -> Const) -> E {
        let kind = match &self.kind {
            ExprKind::Const(c) => ExprKind::Const(f(c)),
            ExprKind::Pair(a, b) => ExprKind::Pair(a.map_consts(f), b.map_consts(f)),
            ExprKind::App(a, b) => ExprKind::App(a.map_consts(f), b.map_consts(f)),
            ExprKind::Lam(x, a) => ExprKind::Lam(x.clone(), a.map_consts(f)),
            ExprKind::Fix(g, x, a) => ExprKind::Fix(g.clone(), x.clone(), a.map_consts(f)),
            ExprKind::Let(x, a, b) => {
                let a = a.map_consts(f);
                ExprKind::Let(x.clone(), a, b.map_consts(f))
            }
            ExprKind::If(a, b, c) => {
                let a = a.map_consts(f);
                let b = b.map_consts(f);
                ExprKind::If(a, b, c.map_consts(f))
            }
            ExprKind::Spawn(a) => ExprKind::Spawn(a.map_consts(f)),
            ExprKind::Match(a, bs) => {
                let a = a.map_consts(f);
                ExprKind::Match(a, bs.iter().map(|(l, b)| (l.clone(), b.map_consts(f))).collect())
            }
            other => other.clone(),
        };
        Expr::new(kind, self.span)
    }
}

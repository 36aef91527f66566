//! Call-by-value substitution semantics for a single process.
//!
//! A process expression is split into an evaluation context and the redex
//! at its focus. Local redexes reduce in place; communication redexes are
//! reported as [`Action`]s for the scheduler to pair up.

use sessionml_core::syntax::{Const, EndpointRef, Expr, ExprKind, Prim, E};
use sessionml_core::term::{Channel, ChoiceLabel, Label, Type};

/// Child positions from the root to the focus.
pub type Path = Vec<u8>;

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Request(Channel, Label),
    Accept(Channel, Label),
    Send(EndpointRef, E),
    Recv(EndpointRef),
    Select(EndpointRef, ChoiceLabel),
    /// `case` on an endpoint with the offered labels.
    Case(EndpointRef, Vec<ChoiceLabel>),
    /// Carrier, then delegated endpoint.
    Deleg(EndpointRef, EndpointRef),
    Resume(EndpointRef, Label),
    Spawn(E),
}

impl Action {
    /// Endpoint whose top frame the action uses.
    pub fn subject(&self) -> Option<EndpointRef> {
        match self {
            Action::Send(p, _)
            | Action::Recv(p)
            | Action::Select(p, _)
            | Action::Case(p, _)
            | Action::Deleg(p, _)
            | Action::Resume(p, _) => Some(*p),
            _ => None,
        }
    }

    pub fn is_init(&self) -> bool {
        matches!(self, Action::Request(..) | Action::Accept(..))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Redex {
    /// A local reduction; the rule name and the contractum.
    Local(&'static str, E),
    Action(Action),
    /// No rule applies; only possible for ill-typed terms.
    Stuck(String),
}

/// The focus of `e` and what it does, or `None` for a value.
#[derive(Clone, Debug, PartialEq)]
pub struct Focus {
    pub path: Path,
    pub redex: Redex,
}

pub fn is_value(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::Lam(..) | ExprKind::Fix(..) | ExprKind::Endpoint(_) => true,
        ExprKind::Pair(a, b) => is_value(a) && is_value(b),
        _ => false,
    }
}

pub fn focus(e: &E) -> Option<Focus> {
    let mut path = Vec::new();
    let mut cur = e;
    loop {
        let next = match &cur.kind {
            ExprKind::Const(_) | ExprKind::Lam(..) | ExprKind::Fix(..) | ExprKind::Endpoint(_) => {
                return if path.is_empty() { None } else { unreachable!("values are never focused") };
            }
            ExprKind::Var(x) => {
                return Some(Focus { path, redex: Redex::Stuck(format!("free variable `{x}`")) });
            }
            ExprKind::Pair(a, b) => {
                if !is_value(a) {
                    Some((0, a))
                } else if !is_value(b) {
                    Some((1, b))
                } else {
                    return if path.is_empty() { None } else { unreachable!("values are never focused") };
                }
            }
            ExprKind::App(f, a) => {
                if !is_value(f) {
                    Some((0, f))
                } else if !is_value(a) {
                    Some((1, a))
                } else {
                    None
                }
            }
            ExprKind::Let(_, a, _) | ExprKind::If(a, _, _) | ExprKind::Spawn(a) | ExprKind::Match(a, _) => {
                if !is_value(a) {
                    Some((0, a))
                } else {
                    None
                }
            }
        };
        match next {
            Some((i, child)) => {
                path.push(i);
                cur = child;
            }
            None => return Some(Focus { path, redex: contract(cur) }),
        }
    }
}

/// The subterm at `path`.
pub fn at<'a>(e: &'a E, path: &[u8]) -> &'a E {
    path.iter().fold(e, |cur, i| child(cur, *i))
}

fn child(e: &E, i: u8) -> &E {
    match (&e.kind, i) {
        (ExprKind::Pair(a, _) | ExprKind::App(a, _), 0) => a,
        (ExprKind::Pair(_, b) | ExprKind::App(_, b), 1) => b,
        (ExprKind::Let(_, a, _) | ExprKind::If(a, _, _) | ExprKind::Spawn(a) | ExprKind::Match(a, _), 0) => a,
        _ => unreachable!("bad focus path"),
    }
}

/// Replace the subterm at `path` by `new`.
pub fn plug(e: &E, path: &[u8], new: E) -> E {
    let Some((&i, rest)) = path.split_first() else { return new };
    let inner = plug(child(e, i), rest, new);
    let kind = match (&e.kind, i) {
        (ExprKind::Pair(_, b), 0) => ExprKind::Pair(inner, b.clone()),
        (ExprKind::Pair(a, _), 1) => ExprKind::Pair(a.clone(), inner),
        (ExprKind::App(_, b), 0) => ExprKind::App(inner, b.clone()),
        (ExprKind::App(a, _), 1) => ExprKind::App(a.clone(), inner),
        (ExprKind::Let(x, _, b), _) => ExprKind::Let(x.clone(), inner, b.clone()),
        (ExprKind::If(_, b, c), _) => ExprKind::If(inner, b.clone(), c.clone()),
        (ExprKind::Spawn(_), _) => ExprKind::Spawn(inner),
        (ExprKind::Match(_, arms), _) => ExprKind::Match(inner, arms.clone()),
        _ => unreachable!("bad focus path"),
    };
    Expr::new(kind, e.span)
}

fn konst(c: Const, like: &E) -> E {
    Expr::new(ExprKind::Const(c), like.span)
}

fn endpoint(e: &E) -> Option<EndpointRef> {
    match &e.kind {
        ExprKind::Endpoint(p) => Some(*p),
        _ => None,
    }
}

fn int(e: &E) -> Option<i64> {
    match &e.kind {
        ExprKind::Const(Const::Int(n)) => Some(*n),
        _ => None,
    }
}

/// Contract a redex whose immediate subterms are values.
fn contract(e: &E) -> Redex {
    let stuck = || Redex::Stuck(format!("no rule for `{}`", sessionml_core::syntax::pretty(e)));
    match &e.kind {
        ExprKind::Let(x, v, body) => Redex::Local("RLet", subst_opt(body, x.as_deref(), v)),
        ExprKind::If(c, t, f) => match &c.kind {
            ExprKind::Const(Const::Bool(b)) => Redex::Local("RIf", if *b { t.clone() } else { f.clone() }),
            _ => stuck(),
        },
        ExprKind::Spawn(v) => Redex::Action(Action::Spawn(v.clone())),
        ExprKind::Match(v, arms) => match endpoint(v) {
            Some(p) => Redex::Action(Action::Case(p, arms.iter().map(|(l, _)| l.clone()).collect())),
            None => stuck(),
        },
        ExprKind::App(f, a) => match &f.kind {
            ExprKind::Lam(x, body) => Redex::Local("RBeta", subst_opt(body, x.as_deref(), a)),
            ExprKind::Fix(g, x, body) => {
                let unrolled = subst(body, g, f);
                Redex::Local("RFix", subst_opt(&unrolled, x.as_deref(), a))
            }
            ExprKind::Const(c) => apply_const(c, a, e).unwrap_or_else(stuck),
            _ => stuck(),
        },
        _ => stuck(),
    }
}

fn apply_const(c: &Const, a: &E, at: &E) -> Option<Redex> {
    let pair = || match &a.kind {
        ExprKind::Pair(x, y) => Some((x.clone(), y.clone())),
        _ => None,
    };
    Some(match c {
        Const::Prim(p) => Redex::Local("RPrim", prim(*p, a, at)?),
        Const::Request { chan, label } => Redex::Action(Action::Request(chan.clone(), (*label)?)),
        Const::Accept { chan, label } => Redex::Action(Action::Accept(chan.clone(), (*label)?)),
        Const::Send => {
            let (p, v) = pair()?;
            Redex::Action(Action::Send(endpoint(&p)?, v))
        }
        Const::Recv => Redex::Action(Action::Recv(endpoint(a)?)),
        Const::Select(l) => Redex::Action(Action::Select(endpoint(a)?, l.clone())),
        Const::Deleg => {
            let (p, q) = pair()?;
            Redex::Action(Action::Deleg(endpoint(&p)?, endpoint(&q)?))
        }
        Const::Resume(l) => Redex::Action(Action::Resume(endpoint(a)?, (*l)?)),
        Const::Unit | Const::Bool(_) | Const::Int(_) => return None,
    })
}

fn prim(p: Prim, a: &E, at: &E) -> Option<E> {
    if let ExprKind::Pair(x, y) = &a.kind {
        match p {
            Prim::Fst => return Some(x.clone()),
            Prim::Snd => return Some(y.clone()),
            _ => {}
        }
        let (m, n) = (int(x)?, int(y)?);
        let c = match p {
            Prim::Add => Const::Int(m.wrapping_add(n)),
            Prim::Sub => Const::Int(m.wrapping_sub(n)),
            Prim::Mul => Const::Int(m.wrapping_mul(n)),
            Prim::Lt => Const::Bool(m < n),
            Prim::Le => Const::Bool(m <= n),
            Prim::Gt => Const::Bool(m > n),
            Prim::Ge => Const::Bool(m >= n),
            Prim::Eq => Const::Bool(m == n),
            Prim::Not | Prim::Fst | Prim::Snd => return None,
        };
        return Some(konst(c, at));
    }
    match (p, &a.kind) {
        (Prim::Not, ExprKind::Const(Const::Bool(b))) => Some(konst(Const::Bool(!b), at)),
        _ => None,
    }
}

fn subst_opt(e: &E, x: Option<&str>, v: &E) -> E {
    match x {
        Some(x) => subst(e, x, v),
        None => e.clone(),
    }
}

/// `e[v/x]`; `v` is closed, so no capture can occur.
pub fn subst(e: &E, x: &str, v: &E) -> E {
    let kind = match &e.kind {
        ExprKind::Var(y) if &**y == x => return v.clone(),
        ExprKind::Var(_) | ExprKind::Const(_) | ExprKind::Endpoint(_) => return e.clone(),
        ExprKind::Pair(a, b) => ExprKind::Pair(subst(a, x, v), subst(b, x, v)),
        ExprKind::App(a, b) => ExprKind::App(subst(a, x, v), subst(b, x, v)),
        ExprKind::Lam(y, body) => {
            if y.as_deref() == Some(x) {
                return e.clone();
            }
            ExprKind::Lam(y.clone(), subst(body, x, v))
        }
        ExprKind::Fix(f, y, body) => {
            if &**f == x || y.as_deref() == Some(x) {
                return e.clone();
            }
            ExprKind::Fix(f.clone(), y.clone(), subst(body, x, v))
        }
        ExprKind::Let(y, a, b) => {
            let a = subst(a, x, v);
            let b = if y.as_deref() == Some(x) { b.clone() } else { subst(b, x, v) };
            ExprKind::Let(y.clone(), a, b)
        }
        ExprKind::If(a, b, c) => ExprKind::If(subst(a, x, v), subst(b, x, v), subst(c, x, v)),
        ExprKind::Spawn(a) => ExprKind::Spawn(subst(a, x, v)),
        ExprKind::Match(a, arms) => {
            ExprKind::Match(subst(a, x, v), arms.iter().map(|(l, b)| (l.clone(), subst(b, x, v))).collect())
        }
    };
    Expr::new(kind, e.span)
}

/// Continue a `case` with the arm for `label`.
pub fn select_arm(e: &E, label: &ChoiceLabel) -> Option<E> {
    match &e.kind {
        ExprKind::Match(_, arms) => arms.iter().find(|(l, _)| l == label).map(|(_, b)| b.clone()),
        _ => None,
    }
}

/// Whether a runtime value fits a payload type. Type variables fit anything.
pub fn conforms(v: &Expr, t: &Type) -> bool {
    match (t, &v.kind) {
        (Type::Var(_), _) => true,
        (Type::Unit, ExprKind::Const(Const::Unit)) => true,
        (Type::Bool, ExprKind::Const(Const::Bool(_))) => true,
        (Type::Int, ExprKind::Const(Const::Int(_))) => true,
        (Type::Pair(a, b), ExprKind::Pair(x, y)) => conforms(x, a) && conforms(y, b),
        (Type::Fun(..), ExprKind::Lam(..) | ExprKind::Fix(..)) => true,
        (Type::Fun(..), ExprKind::Const(c)) => !matches!(c, Const::Unit | Const::Bool(_) | Const::Int(_)),
        (Type::Ses(_), ExprKind::Endpoint(_)) => true,
        _ => false,
    }
}

pub fn endpoint_expr(p: EndpointRef, like: &E) -> E {
    Expr::new(ExprKind::Endpoint(p), like.span)
}

pub fn unit(like: &E) -> E {
    konst(Const::Unit, like)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sessionml_core::syntax::{annotate, parse_program};

    fn run_local(src: &str) -> E {
        let (mut e, _) = annotate(&parse_program(src).unwrap());
        while let Some(f) = focus(&e) {
            match f.redex {
                Redex::Local(_, next) => e = plug(&e, &f.path, next),
                other => panic!("unexpected {other:?}"),
            }
        }
        e
    }

    #[test]
    fn arithmetic_and_recursion() {
        let e = run_local("let fun fact(n) = if n <= 1 then 1 else n * fact (n - 1) in fact 5");
        assert_eq!(int(&e), Some(120));
    }

    #[test]
    fn shadowing_respects_binders() {
        let e = run_local("let val x = 1 in let val f = fn x => x + 10 in f 2 + x");
        assert_eq!(int(&e), Some(13));
    }

    #[test]
    fn communication_is_an_action() {
        let (e, _) = annotate(&parse_program("request c ()").unwrap());
        let f = focus(&e).unwrap();
        assert!(matches!(f.redex, Redex::Action(Action::Request(..))));
    }

    #[test]
    fn pairs_project() {
        let e = run_local("let val (a, b) = (3, 4) in a * b");
        assert_eq!(int(&e), Some(12));
    }
}

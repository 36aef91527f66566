//! Behaviours: the communication effects of expressions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use super::session::Session;
use super::types::Type;
use super::vars::{BehVar, ChoiceLabel, Label, RegVar};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Beh {
    Var(BehVar),
    Tau,
    Seq(Rc<Beh>, Rc<Beh>),
    Plus(Rc<Beh>, Rc<Beh>),
    Rec(BehVar, Rc<Beh>),
    Spawn(Rc<Beh>),
    Push(Label, Session),
    Out(RegVar, Type),
    In(RegVar, Type),
    /// Carrier region, delegated region.
    Deleg(RegVar, RegVar),
    /// Carrier region, label given to the resumed endpoint.
    Resume(RegVar, Label),
    Select(RegVar, ChoiceLabel),
    Offer(RegVar, Rc<BTreeMap<ChoiceLabel, Beh>>),
}

impl Beh {
    pub fn seq(a: Beh, b: Beh) -> Beh {
        Beh::Seq(Rc::new(a), Rc::new(b))
    }
    pub fn plus(a: Beh, b: Beh) -> Beh {
        Beh::Plus(Rc::new(a), Rc::new(b))
    }
    pub fn rec(v: BehVar, b: Beh) -> Beh {
        Beh::Rec(v, Rc::new(b))
    }
    pub fn spawn(b: Beh) -> Beh {
        Beh::Spawn(Rc::new(b))
    }
    pub fn offer(r: RegVar, m: BTreeMap<ChoiceLabel, Beh>) -> Beh {
        Beh::Offer(r, Rc::new(m))
    }

    /// Right-nested plus over a non-empty list.
    pub fn plus_all(mut bs: Vec<Beh>) -> Option<Beh> {
        let last = bs.pop()?;
        Some(bs.into_iter().rev().fold(last, |acc, b| Beh::plus(b, acc)))
    }

    pub fn is_pop(&self) -> bool {
        matches!(
            self,
            Beh::Out(..) | Beh::In(..) | Beh::Deleg(..) | Beh::Resume(..) | Beh::Select(..) | Beh::Offer(..)
        )
    }

    /// Region of a pop or offer.
    pub fn region(&self) -> Option<RegVar> {
        match self {
            Beh::Out(r, _)
            | Beh::In(r, _)
            | Beh::Deleg(r, _)
            | Beh::Resume(r, _)
            | Beh::Select(r, _)
            | Beh::Offer(r, _) => Some(*r),
            _ => None,
        }
    }

    /// Free behaviour variables; rec binds its variable.
    pub fn free_beh_vars(&self, out: &mut BTreeSet<BehVar>) {
        fn go(b: &Beh, bound: &mut Vec<BehVar>, out: &mut BTreeSet<BehVar>) {
            match b {
                Beh::Var(v) => {
                    if !bound.contains(v) {
                        out.insert(*v);
                    }
                }
                Beh::Seq(a, c) | Beh::Plus(a, c) => {
                    go(a, bound, out);
                    go(c, bound, out);
                }
                Beh::Rec(v, body) => {
                    bound.push(*v);
                    go(body, bound, out);
                    bound.pop();
                }
                Beh::Spawn(a) => go(a, bound, out),
                Beh::Offer(_, m) => m.values().for_each(|x| go(x, bound, out)),
                _ => {}
            }
        }
        go(self, &mut Vec::new(), out)
    }

    /// Every behaviour variable, bound or free.
    pub fn all_beh_vars(&self, out: &mut BTreeSet<BehVar>) {
        self.walk(&mut |b| match b {
            Beh::Var(v) | Beh::Rec(v, _) => {
                out.insert(*v);
            }
            _ => {}
        });
    }

    pub fn walk(&self, f: &mut impl FnMut(&Beh)) {
        f(self);
        match self {
            Beh::Seq(a, b) | Beh::Plus(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Beh::Rec(_, a) | Beh::Spawn(a) => a.walk(f),
            Beh::Offer(_, m) => m.values().for_each(|x| x.walk(f)),
            _ => {}
        }
    }

    /// Bottom-up rebuild; `f` sees children already rewritten.
    pub fn rewrite(&self, f: &mut impl FnMut(Beh) -> Beh) -> Beh {
        let node = match self {
            Beh::Seq(a, b) => Beh::seq(a.rewrite(f), b.rewrite(f)),
            Beh::Plus(a, b) => Beh::plus(a.rewrite(f), b.rewrite(f)),
            Beh::Rec(v, a) => Beh::rec(*v, a.rewrite(f)),
            Beh::Spawn(a) => Beh::spawn(a.rewrite(f)),
            Beh::Offer(r, m) => Beh::offer(*r, m.iter().map(|(k, x)| (k.clone(), x.rewrite(f))).collect()),
            other => other.clone(),
        };
        f(node)
    }

    pub fn map_sessions(&self, g: &mut impl FnMut(&Session) -> Session) -> Beh {
        if !self.has_push() {
            return self.clone();
        }
        self.rewrite(&mut |b| match b {
            Beh::Push(l, s) => Beh::Push(l, g(&s)),
            other => other,
        })
    }

    pub fn has_push(&self) -> bool {
        let mut found = false;
        self.walk(&mut |b| {
            if matches!(b, Beh::Push(..)) {
                found = true
            }
        });
        found
    }

    pub fn sessions(&self, out: &mut Vec<Session>) {
        self.walk(&mut |b| {
            if let Beh::Push(_, s) = b {
                out.push(s.clone());
            }
        });
    }

    /// Substitute `with` for free occurrences of `v`.
    pub fn subst_var(&self, v: BehVar, with: &Beh) -> Beh {
        match self {
            Beh::Var(x) if *x == v => with.clone(),
            Beh::Seq(a, b) => Beh::seq(a.subst_var(v, with), b.subst_var(v, with)),
            Beh::Plus(a, b) => Beh::plus(a.subst_var(v, with), b.subst_var(v, with)),
            Beh::Rec(x, _) if *x == v => self.clone(),
            Beh::Rec(x, a) => Beh::rec(*x, a.subst_var(v, with)),
            Beh::Spawn(a) => Beh::spawn(a.subst_var(v, with)),
            Beh::Offer(r, m) => Beh::offer(*r, m.iter().map(|(k, x)| (k.clone(), x.subst_var(v, with))).collect()),
            other => other.clone(),
        }
    }

    /// Drop `tau` units from sequences and collapse `tau + tau`.
    pub fn simplified(&self) -> Beh {
        self.rewrite(&mut |b| match b {
            Beh::Seq(a, c) if *a == Beh::Tau => (*c).clone(),
            Beh::Seq(a, c) if *c == Beh::Tau => (*a).clone(),
            Beh::Plus(a, c) if a == c => (*a).clone(),
            other => other,
        })
    }
}

impl fmt::Display for Beh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beh::Var(v) => write!(f, "{v}"),
            Beh::Tau => f.write_str("tau"),
            Beh::Seq(a, b) => {
                match &**a {
                    Beh::Plus(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                f.write_str("; ")?;
                match &**b {
                    Beh::Plus(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
            Beh::Plus(a, b) => {
                let wrap = |x: &Beh| matches!(x, Beh::Seq(..));
                if wrap(a) {
                    write!(f, "({a})")?
                } else {
                    write!(f, "{a}")?
                }
                f.write_str(" + ")?;
                if wrap(b) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Beh::Rec(v, b) => write!(f, "rec {v}.({b})"),
            Beh::Spawn(b) => write!(f, "spawn({b})"),
            Beh::Push(l, s) => write!(f, "push({l}, {s})"),
            Beh::Out(r, t) => write!(f, "{r}!{t}"),
            Beh::In(r, t) => write!(f, "{r}?{t}"),
            Beh::Deleg(r, d) => write!(f, "{r}!<{d}>"),
            Beh::Resume(r, l) => write!(f, "{r}?<{l}>"),
            Beh::Select(r, lab) => write!(f, "{r}!{lab}"),
            Beh::Offer(r, m) => {
                write!(f, "{r}&{{")?;
                for (i, (k, b)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {b}")?;
                }
                f.write_str("}")
            }
        }
    }
}

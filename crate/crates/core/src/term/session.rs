//! Session types, including the inference-time variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use super::types::Type;
use super::vars::{ChoiceLabel, ChoiceVar, SesVar, TyVar};

/// External choice body: `active` must be offered, the rest may be.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtChoice {
    pub active: BTreeSet<ChoiceLabel>,
    pub branches: BTreeMap<ChoiceLabel, Session>,
}

impl ExtChoice {
    pub fn inactive(&self) -> BTreeSet<ChoiceLabel> {
        self.branches.keys().filter(|k| !self.active.contains(*k)).cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Session {
    End,
    Out(Type, Rc<Session>),
    In(Type, Rc<Session>),
    /// Delegate an endpoint of the first session, continue as the second.
    Deleg(Rc<Session>, Rc<Session>),
    /// Resume an endpoint of the first session, continue as the second.
    Resume(Rc<Session>, Rc<Session>),
    Internal(Rc<BTreeMap<ChoiceLabel, Session>>),
    External(Rc<ExtChoice>),
    Var(SesVar),
    IVar(ChoiceVar),
    EVar(ChoiceVar),
}

impl Session {
    pub fn out(t: Type, k: Session) -> Session {
        Session::Out(t, Rc::new(k))
    }
    pub fn inp(t: Type, k: Session) -> Session {
        Session::In(t, Rc::new(k))
    }
    pub fn deleg(d: Session, k: Session) -> Session {
        Session::Deleg(Rc::new(d), Rc::new(k))
    }
    pub fn resume(d: Session, k: Session) -> Session {
        Session::Resume(Rc::new(d), Rc::new(k))
    }
    pub fn internal(m: BTreeMap<ChoiceLabel, Session>) -> Session {
        Session::Internal(Rc::new(m))
    }
    pub fn external(active: BTreeSet<ChoiceLabel>, branches: BTreeMap<ChoiceLabel, Session>) -> Session {
        Session::External(Rc::new(ExtChoice { active, branches }))
    }

    pub fn is_var_like(&self) -> bool {
        matches!(self, Session::Var(_) | Session::IVar(_) | Session::EVar(_))
    }

    /// No session or choice variables anywhere.
    pub fn is_resolved(&self) -> bool {
        match self {
            Session::End => true,
            Session::Out(_, k) | Session::In(_, k) => k.is_resolved(),
            Session::Deleg(a, b) | Session::Resume(a, b) => a.is_resolved() && b.is_resolved(),
            Session::Internal(m) => m.values().all(Session::is_resolved),
            Session::External(e) => e.branches.values().all(Session::is_resolved),
            _ => false,
        }
    }

    pub fn ses_vars(&self, out: &mut BTreeSet<SesVar>) {
        self.walk(&mut |s| {
            if let Session::Var(v) = s {
                out.insert(*v);
            }
        });
    }

    pub fn choice_vars(&self, out: &mut BTreeSet<ChoiceVar>) {
        self.walk(&mut |s| {
            if let Session::IVar(v) | Session::EVar(v) = s {
                out.insert(*v);
            }
        });
    }

    pub fn mentions_ses_var(&self, v: SesVar) -> bool {
        let mut found = false;
        self.walk(&mut |s| {
            if *s == Session::Var(v) {
                found = true;
            }
        });
        found
    }

    pub fn payload_types(&self, out: &mut Vec<Type>) {
        self.walk(&mut |s| {
            if let Session::Out(t, _) | Session::In(t, _) = s {
                out.push(t.clone());
            }
        });
    }

    pub fn ty_vars(&self, out: &mut BTreeSet<TyVar>) {
        let mut ts = Vec::new();
        self.payload_types(&mut ts);
        for t in ts {
            t.ty_vars(out);
        }
    }

    /// Pre-order visit of every session node.
    pub fn walk(&self, f: &mut impl FnMut(&Session)) {
        f(self);
        match self {
            Session::Out(_, k) | Session::In(_, k) => k.walk(f),
            Session::Deleg(a, b) | Session::Resume(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Session::Internal(m) => m.values().for_each(|s| s.walk(f)),
            Session::External(e) => e.branches.values().for_each(|s| s.walk(f)),
            _ => {}
        }
    }

    /// Bottom-up rebuild; `f` sees children already rewritten.
    pub fn rewrite(&self, f: &mut impl FnMut(Session) -> Session) -> Session {
        let node = match self {
            Session::Out(t, k) => Session::out(t.clone(), k.rewrite(f)),
            Session::In(t, k) => Session::inp(t.clone(), k.rewrite(f)),
            Session::Deleg(a, b) => Session::deleg(a.rewrite(f), b.rewrite(f)),
            Session::Resume(a, b) => Session::resume(a.rewrite(f), b.rewrite(f)),
            Session::Internal(m) => Session::internal(m.iter().map(|(k, s)| (k.clone(), s.rewrite(f))).collect()),
            Session::External(e) => Session::external(
                e.active.clone(),
                e.branches.iter().map(|(k, s)| (k.clone(), s.rewrite(f))).collect(),
            ),
            other => other.clone(),
        };
        f(node)
    }

    pub fn map_types(&self, g: &mut impl FnMut(&Type) -> Type) -> Session {
        self.rewrite(&mut |s| match s {
            Session::Out(t, k) => Session::Out(g(&t), k),
            Session::In(t, k) => Session::In(g(&t), k),
            other => other,
        })
    }

    /// Mirror image: swap polarities; internal becomes external with every label active.
    pub fn mirror(&self) -> Session {
        match self {
            Session::End => Session::End,
            Session::Out(t, k) => Session::inp(t.clone(), k.mirror()),
            Session::In(t, k) => Session::out(t.clone(), k.mirror()),
            Session::Deleg(d, k) => Session::resume((**d).clone(), k.mirror()),
            Session::Resume(d, k) => Session::deleg((**d).clone(), k.mirror()),
            Session::Internal(m) => {
                let branches: BTreeMap<_, _> = m.iter().map(|(l, s)| (l.clone(), s.mirror())).collect();
                Session::external(branches.keys().cloned().collect(), branches)
            }
            Session::External(e) => Session::internal(
                e.branches
                    .iter()
                    .filter(|(l, _)| e.active.contains(*l))
                    .map(|(l, s)| (l.clone(), s.mirror()))
                    .collect(),
            ),
            v => v.clone(),
        }
    }

    /// Number of constructor nodes; variables count zero.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if !s.is_var_like() {
                n += 1
            }
        });
        n
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Session::End => f.write_str("end"),
            Session::Out(t, k) => write!(f, "!{t}.{k}"),
            Session::In(t, k) => write!(f, "?{t}.{k}"),
            Session::Deleg(d, k) => write!(f, "!<{d}>.{k}"),
            Session::Resume(d, k) => write!(f, "?<{d}>.{k}"),
            Session::Internal(m) => {
                f.write_str("+{")?;
                for (i, (l, s)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {s}")?;
                }
                f.write_str("}")
            }
            Session::External(e) => {
                f.write_str("&{")?;
                for (i, (l, s)) in e.branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    let mark = if e.active.contains(l) { '!' } else { '?' };
                    write!(f, "{l}{mark}: {s}")?;
                }
                f.write_str("}")
            }
            Session::Var(v) => write!(f, "{v}"),
            Session::IVar(v) => write!(f, "si{}", v.0),
            Session::EVar(v) => write!(f, "se{}", v.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> ChoiceLabel {
        ChoiceLabel::new(s)
    }

    #[test]
    fn canonical_syntax() {
        let s = Session::out(Type::Int, Session::inp(Type::Int, Session::End));
        assert_eq!(s.to_string(), "!int.?int.end");
        let d = Session::deleg(Session::Var(SesVar(3)), Session::End);
        assert_eq!(d.to_string(), "!<s3>.end");
        let i = Session::internal([(l("B"), Session::End), (l("A"), Session::End)].into_iter().collect());
        assert_eq!(i.to_string(), "+{A: end, B: end}");
        let e = Session::external(
            [l("A")].into_iter().collect(),
            [(l("A"), Session::End), (l("B"), Session::End)].into_iter().collect(),
        );
        assert_eq!(e.to_string(), "&{A!: end, B?: end}");
        assert_eq!(Session::IVar(ChoiceVar(4)).to_string(), "si4");
    }

    #[test]
    fn mirror_is_involutive_on_internal_choice() {
        let i = Session::internal([(l("A"), Session::out(Type::Int, Session::End))].into_iter().collect());
        assert_eq!(i.mirror().mirror(), i);
    }
}

//! Type schemas, constant schemas, instantiation and solvability.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Const, Prim};
use crate::term::{Beh, BehVar, ChannelEnd, Label, RegVar, SesVar, Session, Supply, TyVar, Type};

use super::relations::derives;
use super::set::{Constraint, ConstraintSet, RegTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeVar {
    Ty(TyVar),
    Beh(BehVar),
    Reg(RegVar),
    Ses(SesVar),
}

impl fmt::Display for SchemeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeVar::Ty(v) => write!(f, "{v}"),
            SchemeVar::Beh(v) => write!(f, "{v}"),
            SchemeVar::Reg(v) => write!(f, "{v}"),
            SchemeVar::Ses(v) => write!(f, "{v}"),
        }
    }
}

/// `forall vars. (constraints) => ty`.
///
/// Invariant: every free variable of `constraints` is in `vars`, except
/// session variables pinned to a channel by a `Chan` constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSchema {
    pub vars: Vec<SchemeVar>,
    pub constraints: Vec<Constraint>,
    pub ty: Type,
}

impl TypeSchema {
    pub fn mono(ty: Type) -> Self {
        TypeSchema { vars: Vec::new(), constraints: Vec::new(), ty }
    }
}

impl fmt::Display for TypeSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            f.write_str("forall")?;
            for v in &self.vars {
                write!(f, " {v}")?;
            }
            f.write_str(". ")?;
        }
        if !self.constraints.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.constraints.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(") => ")?;
        }
        write!(f, "{}", self.ty.annotated())
    }
}

/// Substitution over quantified variables of every kind.
#[derive(Clone, Debug, Default)]
pub struct VarMap {
    pub ty: BTreeMap<TyVar, Type>,
    pub beh: BTreeMap<BehVar, BehVar>,
    pub reg: BTreeMap<RegVar, RegVar>,
    pub ses: BTreeMap<SesVar, Session>,
}

impl VarMap {
    pub fn ty(&self, t: &Type) -> Type {
        t.map_vars(
            &mut |a| self.ty.get(&a).cloned().unwrap_or(Type::Var(a)),
            &mut |b| self.beh.get(&b).copied().unwrap_or(b),
            &mut |r| self.reg.get(&r).copied().unwrap_or(r),
        )
    }

    pub fn reg(&self, r: RegVar) -> RegVar {
        self.reg.get(&r).copied().unwrap_or(r)
    }

    pub fn session(&self, s: &Session) -> Session {
        s.rewrite(&mut |n| match n {
            Session::Var(v) => self.ses.get(&v).cloned().unwrap_or(n),
            Session::Out(t, k) => Session::Out(self.ty(&t), k),
            Session::In(t, k) => Session::In(self.ty(&t), k),
            other => other,
        })
    }

    pub fn beh(&self, b: &Beh) -> Beh {
        b.rewrite(&mut |n| match n {
            Beh::Var(v) => Beh::Var(self.beh.get(&v).copied().unwrap_or(v)),
            Beh::Rec(v, body) => Beh::Rec(self.beh.get(&v).copied().unwrap_or(v), body),
            Beh::Push(l, s) => Beh::Push(l, self.session(&s)),
            Beh::Out(r, t) => Beh::Out(self.reg(r), self.ty(&t)),
            Beh::In(r, t) => Beh::In(self.reg(r), self.ty(&t)),
            Beh::Deleg(r, d) => Beh::Deleg(self.reg(r), self.reg(d)),
            Beh::Resume(r, l) => Beh::Resume(self.reg(r), l),
            Beh::Select(r, l) => Beh::Select(self.reg(r), l),
            Beh::Offer(r, m) => Beh::Offer(self.reg(r), m),
            other => other,
        })
    }

    pub fn constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::TySub(a, b) => Constraint::TySub(self.ty(a), self.ty(b)),
            Constraint::TyCf(t) => Constraint::TyCf(self.ty(t)),
            Constraint::BehCf(b) => Constraint::BehCf(self.beh(b)),
            Constraint::BehSub(b, v) => Constraint::BehSub(self.beh(b), self.beh.get(v).copied().unwrap_or(*v)),
            Constraint::Region(r, t) => Constraint::Region(
                self.reg(*r),
                match t {
                    RegTerm::Var(x) => RegTerm::Var(self.reg(*x)),
                    l => *l,
                },
            ),
            Constraint::Chan(ch, s) => Constraint::Chan(ch.clone(), self.session(s)),
            Constraint::Choice(v, s) => Constraint::Choice(*v, self.session(s)),
            Constraint::Dual(a, b) => Constraint::Dual(self.session(a), self.session(b)),
        }
    }
}

/// Every variable of a type, recorded as a scheme variable.
pub fn type_vars(t: &Type, out: &mut BTreeSet<SchemeVar>) {
    let (mut a, mut b, mut r) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    t.ty_vars(&mut a);
    t.beh_vars(&mut b);
    t.reg_vars(&mut r);
    out.extend(a.into_iter().map(SchemeVar::Ty));
    out.extend(b.into_iter().map(SchemeVar::Beh));
    out.extend(r.into_iter().map(SchemeVar::Reg));
}

pub fn session_vars(s: &Session, out: &mut BTreeSet<SchemeVar>) {
    s.walk(&mut |n| match n {
        Session::Var(v) => {
            out.insert(SchemeVar::Ses(*v));
        }
        Session::Out(t, _) | Session::In(t, _) => type_vars(t, out),
        _ => {}
    });
}

/// Free variables of a behaviour; variables bound by `rec` are included
/// because they name a constraint-bound variable as well.
pub fn beh_vars(b: &Beh, out: &mut BTreeSet<SchemeVar>) {
    b.walk(&mut |n| match n {
        Beh::Var(v) | Beh::Rec(v, _) => {
            out.insert(SchemeVar::Beh(*v));
        }
        Beh::Push(_, s) => session_vars(s, out),
        Beh::Out(r, t) | Beh::In(r, t) => {
            out.insert(SchemeVar::Reg(*r));
            type_vars(t, out);
        }
        Beh::Deleg(r, d) => {
            out.insert(SchemeVar::Reg(*r));
            out.insert(SchemeVar::Reg(*d));
        }
        Beh::Resume(r, _) | Beh::Select(r, _) | Beh::Offer(r, _) => {
            out.insert(SchemeVar::Reg(*r));
        }
        _ => {}
    });
}

pub fn constraint_vars(c: &Constraint, out: &mut BTreeSet<SchemeVar>) {
    match c {
        Constraint::TySub(a, b) => {
            type_vars(a, out);
            type_vars(b, out);
        }
        Constraint::TyCf(t) => type_vars(t, out),
        Constraint::BehCf(b) => beh_vars(b, out),
        Constraint::BehSub(b, v) => {
            beh_vars(b, out);
            out.insert(SchemeVar::Beh(*v));
        }
        Constraint::Region(r, t) => {
            out.insert(SchemeVar::Reg(*r));
            if let RegTerm::Var(x) = t {
                out.insert(SchemeVar::Reg(*x));
            }
        }
        Constraint::Chan(_, s) | Constraint::Choice(_, s) => session_vars(s, out),
        Constraint::Dual(a, b) => {
            session_vars(a, out);
            session_vars(b, out);
        }
    }
}

/// Fresh copies of the quantified variables.
pub fn instantiate(ts: &TypeSchema, supply: &mut Supply) -> (Type, Vec<Constraint>) {
    let mut m = VarMap::default();
    for v in &ts.vars {
        match v {
            SchemeVar::Ty(a) => {
                m.ty.insert(*a, Type::Var(supply.ty()));
            }
            SchemeVar::Beh(b) => {
                m.beh.insert(*b, supply.beh());
            }
            SchemeVar::Reg(r) => {
                m.reg.insert(*r, supply.reg());
            }
            SchemeVar::Ses(s) => {
                m.ses.insert(*s, Session::Var(supply.ses()));
            }
        }
    }
    (m.ty(&ts.ty), ts.constraints.iter().map(|c| m.constraint(c)).collect())
}

/// `C` derives every bound constraint under `sigma`.
pub fn solvable(ts: &TypeSchema, c: &ConstraintSet, sigma: &VarMap) -> bool {
    ts.constraints.iter().all(|k| derives(c, &sigma.constraint(k)))
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("constant {0} has no label; run annotation first")]
    Unlabelled(&'static str),
}

/// Session variable cached per channel end.
pub trait ChannelVars {
    fn channel_var(&mut self, end: &ChannelEnd, supply: &mut Supply) -> SesVar;
}

impl ChannelVars for BTreeMap<ChannelEnd, SesVar> {
    fn channel_var(&mut self, end: &ChannelEnd, supply: &mut Supply) -> SesVar {
        *self.entry(end.clone()).or_insert_with(|| supply.ses())
    }
}

pub fn constant_schema(
    k: &Const,
    supply: &mut Supply,
    channels: &mut impl ChannelVars,
) -> Result<TypeSchema, SchemaError> {
    use SchemeVar as V;
    let pure = |supply: &mut Supply, arg: Type, res: Type, mut vars: Vec<SchemeVar>| {
        let b = supply.beh();
        vars.push(V::Beh(b));
        TypeSchema { vars, constraints: vec![Constraint::BehSub(Beh::Tau, b)], ty: Type::fun(arg, res, b) }
    };
    let int2 = Type::pair(Type::Int, Type::Int);
    Ok(match k {
        Const::Unit => TypeSchema::mono(Type::Unit),
        Const::Bool(_) => TypeSchema::mono(Type::Bool),
        Const::Int(_) => TypeSchema::mono(Type::Int),
        Const::Prim(p) => match p {
            Prim::Add | Prim::Sub | Prim::Mul => pure(supply, int2, Type::Int, vec![]),
            Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge | Prim::Eq => pure(supply, int2, Type::Bool, vec![]),
            Prim::Not => pure(supply, Type::Bool, Type::Bool, vec![]),
            Prim::Fst | Prim::Snd => {
                let (a1, a2) = (supply.ty(), supply.ty());
                let res = if *p == Prim::Fst { a1 } else { a2 };
                pure(
                    supply,
                    Type::pair(Type::Var(a1), Type::Var(a2)),
                    Type::Var(res),
                    vec![V::Ty(a1), V::Ty(a2)],
                )
            }
        },
        Const::Request { chan, label } | Const::Accept { chan, label } => {
            let is_req = matches!(k, Const::Request { .. });
            let l: Label = label.ok_or(SchemaError::Unlabelled(if is_req { "request" } else { "accept" }))?;
            let end = if is_req { ChannelEnd::request(chan.clone()) } else { ChannelEnd::accept(chan.clone()) };
            let psi = channels.channel_var(&end, supply);
            let (b, r) = (supply.beh(), supply.reg());
            TypeSchema {
                vars: vec![V::Beh(b), V::Reg(r)],
                constraints: vec![
                    Constraint::BehSub(Beh::Push(l, Session::Var(psi)), b),
                    Constraint::Region(r, RegTerm::Label(l)),
                    Constraint::Chan(end, Session::Var(psi)),
                ],
                ty: Type::fun(Type::Unit, Type::Ses(r), b),
            }
        }
        Const::Send | Const::Recv => {
            let (a, b, r) = (supply.ty(), supply.beh(), supply.reg());
            let (act, ty) = if *k == Const::Send {
                (Beh::Out(r, Type::Var(a)), Type::fun(Type::pair(Type::Ses(r), Type::Var(a)), Type::Unit, b))
            } else {
                (Beh::In(r, Type::Var(a)), Type::fun(Type::Ses(r), Type::Var(a), b))
            };
            TypeSchema {
                vars: vec![V::Ty(a), V::Beh(b), V::Reg(r)],
                constraints: vec![Constraint::BehSub(act, b), Constraint::TyCf(Type::Var(a))],
                ty,
            }
        }
        Const::Select(lab) => {
            let (b, r) = (supply.beh(), supply.reg());
            TypeSchema {
                vars: vec![V::Beh(b), V::Reg(r)],
                constraints: vec![Constraint::BehSub(Beh::Select(r, lab.clone()), b)],
                ty: Type::fun(Type::Ses(r), Type::Unit, b),
            }
        }
        Const::Deleg => {
            let (b, r, d) = (supply.beh(), supply.reg(), supply.reg());
            TypeSchema {
                vars: vec![V::Beh(b), V::Reg(r), V::Reg(d)],
                constraints: vec![Constraint::BehSub(Beh::Deleg(r, d), b)],
                ty: Type::fun(Type::pair(Type::Ses(r), Type::Ses(d)), Type::Unit, b),
            }
        }
        Const::Resume(label) => {
            let l = label.ok_or(SchemaError::Unlabelled("resume"))?;
            let (b, r, d) = (supply.beh(), supply.reg(), supply.reg());
            TypeSchema {
                vars: vec![V::Beh(b), V::Reg(r), V::Reg(d)],
                constraints: vec![
                    Constraint::BehSub(Beh::Resume(r, l), b),
                    Constraint::Region(d, RegTerm::Label(l)),
                ],
                ty: Type::fun(Type::Ses(r), Type::Ses(d), b),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Channel;

    fn vars_of(ty: &Type, cs: &[Constraint]) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        out.insert(crate::term::max_var_in_types(ty));
        for c in cs {
            out.insert(ConstraintSet::from_constraints([c.clone()]).max_var_id());
        }
        out
    }

    #[test]
    fn recv_schema_shape() {
        let mut s = Supply::new();
        let ts = constant_schema(&Const::Recv, &mut s, &mut BTreeMap::new()).unwrap();
        assert_eq!(ts.to_string(), "forall a1 b2 r3. (cf a1, r3?a1 <= b2) => (ses r3 -b2-> a1)".replace("(cf a1, r3?a1 <= b2)", "(r3?a1 <= b2, cf a1)"));
        let (t, cs) = instantiate(&ts, &mut s);
        assert_eq!(t.annotated().to_string(), "(ses r6 -b5-> a4)");
        assert_eq!(cs[0].to_string(), "r6?a4 <= b5");
    }

    #[test]
    fn request_schema_pins_the_channel() {
        let mut s = Supply::new();
        let mut chans = BTreeMap::new();
        let k = Const::Request { chan: Channel::new("c"), label: Some(Label(1)) };
        let ts = constant_schema(&k, &mut s, &mut chans).unwrap();
        assert!(ts.constraints.iter().any(|c| matches!(c, Constraint::Chan(e, Session::Var(_)) if e.to_string() == "c")));
        let again = constant_schema(&k, &mut s, &mut chans).unwrap();
        assert_eq!(ts.constraints[2], again.constraints[2]);
        assert!(constant_schema(&Const::Request { chan: Channel::new("c"), label: None }, &mut s, &mut chans).is_err());
    }

    #[test]
    fn literal_schemas_are_monomorphic() {
        let mut s = Supply::new();
        let ts = constant_schema(&Const::Bool(true), &mut s, &mut BTreeMap::new()).unwrap();
        assert!(ts.vars.is_empty() && ts.constraints.is_empty());
        assert_eq!(ts.ty, Type::Bool);
        assert_eq!(instantiate(&TypeSchema::mono(Type::Int), &mut s), (Type::Int, vec![]));
    }

    #[test]
    fn instances_are_disjoint() {
        let mut s = Supply::new();
        let ts = constant_schema(&Const::Send, &mut s, &mut BTreeMap::new()).unwrap();
        let (t1, c1) = instantiate(&ts, &mut s);
        let (t2, c2) = instantiate(&ts, &mut s);
        assert!(vars_of(&t1, &c1).iter().max() < vars_of(&t2, &c2).iter().min().filter(|m| **m > 0).or(Some(&u32::MAX)));
        assert_ne!(t1, t2);
    }

    #[test]
    fn solvability() {
        let c = ConstraintSet::new();
        assert!(solvable(&TypeSchema::mono(Type::Int), &c, &VarMap::default()));
        let ts = TypeSchema {
            vars: vec![SchemeVar::Ty(TyVar(1))],
            constraints: vec![Constraint::TySub(Type::Var(TyVar(1)), Type::Int)],
            ty: Type::Var(TyVar(1)),
        };
        let mut m = VarMap::default();
        m.ty.insert(TyVar(1), Type::Int);
        assert!(solvable(&ts, &c, &m));
    }

    #[test]
    fn request_instance_is_solvable_against_its_own_constraints() {
        let mut s = Supply::new();
        let mut chans = BTreeMap::new();
        let k = Const::Request { chan: Channel::new("c"), label: Some(Label(1)) };
        let ts = constant_schema(&k, &mut s, &mut chans).unwrap();
        let mut m = VarMap::default();
        for v in &ts.vars {
            match v {
                SchemeVar::Beh(b) => {
                    m.beh.insert(*b, s.beh());
                }
                SchemeVar::Reg(r) => {
                    m.reg.insert(*r, s.reg());
                }
                _ => {}
            }
        }
        let c = ConstraintSet::from_constraints(ts.constraints.iter().map(|k| m.constraint(k)));
        assert!(solvable(&ts, &c, &m));
        assert!(!solvable(&ts, &ConstraintSet::new(), &m));
    }
}

//! The global constraint environment.

use std::cell::{Cell, RefCell};
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::term::{Beh, BehVar, ChannelEnd, ChoiceVar, Label, RegVar, Session, SessionSubst, Type};

use super::closure::Closure;

/// Right-hand side of a region constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegTerm {
    Var(RegVar),
    Label(Label),
}

impl fmt::Display for RegTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegTerm::Var(r) => write!(f, "{r}"),
            RegTerm::Label(l) => write!(f, "{l}"),
        }
    }
}

/// A single constraint, used for schemas, queries and printing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    TySub(Type, Type),
    TyCf(Type),
    BehCf(Beh),
    BehSub(Beh, BehVar),
    Region(RegVar, RegTerm),
    Chan(ChannelEnd, Session),
    Choice(ChoiceVar, Session),
    Dual(Session, Session),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::TySub(a, b) => write!(f, "{} <= {}", a.annotated(), b.annotated()),
            Constraint::TyCf(t) => write!(f, "cf {}", t.annotated()),
            Constraint::BehCf(b) => write!(f, "cf {b}"),
            Constraint::BehSub(b, v) => write!(f, "{b} <= {v}"),
            Constraint::Region(r, t) => write!(f, "{r} ~ {t}"),
            Constraint::Chan(c, s) => write!(f, "{c} ~ {s}"),
            Constraint::Choice(v, s) => write!(f, "k{} = {s}", v.0),
            Constraint::Dual(a, b) => write!(f, "{a} >< {b}"),
        }
    }
}

/// Finite constraint set, indexed by right-hand variable.
///
/// Invariant: the memoised closure and fingerprint are cleared by every mutation.
#[derive(Clone, Default)]
pub struct ConstraintSet {
    ty_sub: BTreeSet<(Type, Type)>,
    ty_cf: BTreeSet<Type>,
    beh_cf: BTreeSet<Beh>,
    beh_sub: BTreeMap<BehVar, Vec<Beh>>,
    regions: BTreeSet<(RegVar, RegTerm)>,
    channels: BTreeMap<ChannelEnd, Session>,
    choices: BTreeMap<ChoiceVar, Session>,
    duals: Vec<(Session, Session)>,
    closure: RefCell<Option<Rc<Closure>>>,
    fingerprint: Cell<Option<u64>>,
}

impl PartialEq for ConstraintSet {
    fn eq(&self, o: &Self) -> bool {
        self.ty_sub == o.ty_sub
            && self.ty_cf == o.ty_cf
            && self.beh_cf == o.beh_cf
            && self.beh_sub == o.beh_sub
            && self.regions == o.regions
            && self.channels == o.channels
            && self.choices == o.choices
            && self.duals == o.duals
    }
}

impl Eq for ConstraintSet {}

impl fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter().map(|c| c.to_string())).finish()
    }
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints(cs: impl IntoIterator<Item = Constraint>) -> Self {
        let mut s = Self::new();
        for c in cs {
            s.add(c);
        }
        s
    }

    fn touch(&mut self) {
        *self.closure.get_mut() = None;
        self.fingerprint.set(None);
    }

    pub fn add(&mut self, c: Constraint) {
        match c {
            Constraint::TySub(a, b) => self.add_ty_sub(a, b),
            Constraint::TyCf(t) => self.add_ty_cf(t),
            Constraint::BehCf(b) => self.add_beh_cf(b),
            Constraint::BehSub(b, v) => self.add_beh_sub(b, v),
            Constraint::Region(r, t) => self.add_region(r, t),
            Constraint::Chan(c, s) => self.set_channel(c, s),
            Constraint::Choice(v, s) => self.set_choice(v, s),
            Constraint::Dual(a, b) => self.add_dual(a, b),
        }
    }

    pub fn add_ty_sub(&mut self, a: Type, b: Type) {
        if a != b && self.ty_sub.insert((a, b)) {
            self.touch();
        }
    }

    pub fn add_ty_cf(&mut self, t: Type) {
        if self.ty_cf.insert(t) {
            self.touch();
        }
    }

    pub fn add_beh_cf(&mut self, b: Beh) {
        if self.beh_cf.insert(b) {
            self.touch();
        }
    }

    pub fn add_beh_sub(&mut self, b: Beh, v: BehVar) {
        let slot = self.beh_sub.entry(v).or_default();
        if !slot.contains(&b) {
            slot.push(b);
            self.touch();
        }
    }

    pub fn add_region(&mut self, r: RegVar, t: RegTerm) {
        if t != RegTerm::Var(r) && self.regions.insert((r, t)) {
            self.touch();
        }
    }

    pub fn set_channel(&mut self, c: ChannelEnd, s: Session) {
        self.channels.insert(c, s);
        self.touch();
    }

    /// Single-slot register per choice variable.
    pub fn set_choice(&mut self, v: ChoiceVar, s: Session) {
        self.choices.insert(v, s);
        self.touch();
    }

    pub fn remove_choice(&mut self, v: ChoiceVar) -> Option<Session> {
        let r = self.choices.remove(&v);
        self.touch();
        r
    }

    pub fn add_dual(&mut self, a: Session, b: Session) {
        self.duals.push((a, b));
        self.touch();
    }

    pub fn take_duals(&mut self) -> Vec<(Session, Session)> {
        self.touch();
        std::mem::take(&mut self.duals)
    }

    /// Replace every binding of `v`, returning the old ones.
    pub fn replace_bindings(&mut self, v: BehVar, bs: Vec<Beh>) -> Vec<Beh> {
        self.touch();
        let old = self.beh_sub.remove(&v).unwrap_or_default();
        if !bs.is_empty() {
            self.beh_sub.insert(v, bs);
        }
        old
    }

    pub fn bindings(&self, v: BehVar) -> &[Beh] {
        self.beh_sub.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn beh_sub_entries(&self) -> impl Iterator<Item = (BehVar, &Beh)> {
        self.beh_sub.iter().flat_map(|(v, bs)| bs.iter().map(move |b| (*v, b)))
    }

    pub fn ty_sub_entries(&self) -> impl Iterator<Item = &(Type, Type)> {
        self.ty_sub.iter()
    }

    pub fn ty_cf_entries(&self) -> impl Iterator<Item = &Type> {
        self.ty_cf.iter()
    }

    pub fn beh_cf_entries(&self) -> impl Iterator<Item = &Beh> {
        self.beh_cf.iter()
    }

    pub fn region_entries(&self) -> impl Iterator<Item = &(RegVar, RegTerm)> {
        self.regions.iter()
    }

    pub fn channel(&self, c: &ChannelEnd) -> Option<&Session> {
        self.channels.get(c)
    }

    pub fn channels(&self) -> &BTreeMap<ChannelEnd, Session> {
        &self.channels
    }

    pub fn choice(&self, v: ChoiceVar) -> Option<&Session> {
        self.choices.get(&v)
    }

    pub fn choices(&self) -> &BTreeMap<ChoiceVar, Session> {
        &self.choices
    }

    pub fn duals(&self) -> &[(Session, Session)] {
        &self.duals
    }

    /// All constraints in a canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Constraint> + '_ {
        let a = self.ty_sub.iter().map(|(x, y)| Constraint::TySub(x.clone(), y.clone()));
        let b = self.ty_cf.iter().map(|t| Constraint::TyCf(t.clone()));
        let c = self.beh_cf.iter().map(|t| Constraint::BehCf(t.clone()));
        let d = self.beh_sub_entries().map(|(v, b)| Constraint::BehSub(b.clone(), v));
        let e = self.regions.iter().map(|(r, t)| Constraint::Region(*r, *t));
        let f = self.channels.iter().map(|(c, s)| Constraint::Chan(c.clone(), s.clone()));
        let g = self.choices.iter().map(|(v, s)| Constraint::Choice(*v, s.clone()));
        let h = self.duals.iter().map(|(x, y)| Constraint::Dual(x.clone(), y.clone()));
        a.chain(b).chain(c).chain(d).chain(e).chain(f).chain(g).chain(h)
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union(&mut self, other: &ConstraintSet) {
        for c in other.iter() {
            self.add(c);
        }
    }

    /// Apply a session substitution to every session in the set.
    pub fn apply_sessions(&mut self, sigma: &SessionSubst) {
        if sigma.is_id() {
            return;
        }
        self.touch();
        self.beh_cf = self.beh_cf.iter().map(|b| sigma.apply_beh(b)).collect();
        for bs in self.beh_sub.values_mut() {
            for b in bs.iter_mut() {
                if b.has_push() {
                    *b = sigma.apply_beh(b);
                }
            }
        }
        for s in self.channels.values_mut() {
            *s = sigma.apply(s);
        }
        for s in self.choices.values_mut() {
            *s = sigma.apply(s);
        }
        for (a, b) in self.duals.iter_mut() {
            *a = sigma.apply(a);
            *b = sigma.apply(b);
        }
    }

    /// Rewrite every type, behaviour and session wholesale.
    pub fn map_all(
        &self,
        ft: &mut impl FnMut(&Type) -> Type,
        fb: &mut impl FnMut(&Beh) -> Beh,
        fbv: &mut impl FnMut(BehVar) -> BehVar,
        fr: &mut impl FnMut(RegVar) -> RegVar,
        fs: &mut impl FnMut(&Session) -> Session,
    ) -> ConstraintSet {
        let mut out = ConstraintSet::new();
        for c in self.iter() {
            out.add(match c {
                Constraint::TySub(a, b) => Constraint::TySub(ft(&a), ft(&b)),
                Constraint::TyCf(t) => Constraint::TyCf(ft(&t)),
                Constraint::BehCf(b) => Constraint::BehCf(fb(&b)),
                Constraint::BehSub(b, v) => Constraint::BehSub(fb(&b), fbv(v)),
                Constraint::Region(r, t) => Constraint::Region(
                    fr(r),
                    match t {
                        RegTerm::Var(x) => RegTerm::Var(fr(x)),
                        l => l,
                    },
                ),
                Constraint::Chan(c, s) => Constraint::Chan(c, fs(&s)),
                Constraint::Choice(v, s) => Constraint::Choice(v, fs(&s)),
                Constraint::Dual(a, b) => Constraint::Dual(fs(&a), fs(&b)),
            });
        }
        out
    }

    /// Memoised closure; rebuilt lazily after mutation.
    pub fn closure(&self) -> Rc<Closure> {
        if let Some(c) = self.closure.borrow().as_ref() {
            return c.clone();
        }
        let c = Rc::new(Closure::compute(self));
        *self.closure.borrow_mut() = Some(c.clone());
        c
    }

    /// Structural hash of the contents.
    pub fn fingerprint(&self) -> u64 {
        if let Some(f) = self.fingerprint.get() {
            return f;
        }
        let mut h = DefaultHasher::new();
        self.ty_sub.hash(&mut h);
        self.ty_cf.hash(&mut h);
        self.beh_cf.hash(&mut h);
        self.beh_sub.hash(&mut h);
        self.regions.hash(&mut h);
        self.channels.hash(&mut h);
        self.choices.hash(&mut h);
        self.duals.hash(&mut h);
        let f = h.finish();
        self.fingerprint.set(Some(f));
        f
    }

    /// Largest variable id mentioned anywhere, for seeding a fresh supply.
    pub fn max_var_id(&self) -> u32 {
        let mut m = 0;
        let ty = |t: &Type, m: &mut u32| {
            let mut a = BTreeSet::new();
            t.ty_vars(&mut a);
            let mut b = BTreeSet::new();
            t.beh_vars(&mut b);
            let mut r = BTreeSet::new();
            t.reg_vars(&mut r);
            for x in a {
                *m = (*m).max(x.0)
            }
            for x in b {
                *m = (*m).max(x.0)
            }
            for x in r {
                *m = (*m).max(x.0)
            }
        };
        for c in self.iter() {
            match &c {
                Constraint::TySub(a, b) => {
                    ty(a, &mut m);
                    ty(b, &mut m)
                }
                Constraint::TyCf(t) => ty(t, &mut m),
                Constraint::BehCf(b) | Constraint::BehSub(b, _) => {
                    m = m.max(crate::term::max_var_in_beh(b));
                    if let Constraint::BehSub(_, v) = &c {
                        m = m.max(v.0)
                    }
                }
                Constraint::Region(r, t) => {
                    m = m.max(r.0);
                    if let RegTerm::Var(x) = t {
                        m = m.max(x.0)
                    }
                }
                Constraint::Chan(_, s) => m = m.max(crate::term::max_var_in_session(s)),
                Constraint::Choice(v, s) => m = m.max(v.0).max(crate::term::max_var_in_session(s)),
                Constraint::Dual(a, b) => {
                    m = m.max(crate::term::max_var_in_session(a)).max(crate::term::max_var_in_session(b))
                }
            }
        }
        m
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.iter() {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

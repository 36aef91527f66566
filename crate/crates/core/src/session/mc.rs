//! The symbolic checker behind session inference.
//!
//! Walks a behaviour with an explicit continuation stack. Branching
//! constructs explore every branch in sequence, threading one global
//! substitution and constraint set through all of them.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::constraint::{ConstraintSet, RegTerm};
use crate::term::{Beh, ChoiceLabel, ExtChoice, Label, RegVar, Session, SessionSubst, Supply, Type};

use super::{Frame, SessionError, SessionErrorKind as K, Stack, TraceSink};

pub(super) fn check(
    b: &Beh,
    c: &ConstraintSet,
    supply: &mut Supply,
    trace: Option<TraceSink<'_>>,
    budget: usize,
) -> Result<(SessionSubst, ConstraintSet), SessionError> {
    let regions = ConstraintSet::from_constraints(
        c.region_entries().map(|(r, t)| crate::constraint::Constraint::Region(*r, *t)),
    );
    let mut m = Mc {
        c: c.clone(),
        regions,
        sigma: SessionSubst::id(),
        supply,
        trace,
        closed: BTreeMap::new(),
        steps: 0,
        budget,
    };
    m.run(Stack::new(), b.clone(), Vec::new())?;
    Ok((m.sigma, m.c))
}

struct Mc<'a, 't> {
    c: ConstraintSet,
    /// Region facts only; they never change, so the closure stays cached.
    regions: ConstraintSet,
    sigma: SessionSubst,
    supply: &'a mut Supply,
    trace: Option<TraceSink<'t>>,
    /// Labels forced closed, with the region whose pop forced them.
    closed: BTreeMap<Label, RegVar>,
    steps: usize,
    budget: usize,
}

/// Pops and their descriptions for diagnostics.
fn describe(b: &Beh) -> &'static str {
    match b {
        Beh::Out(..) => "send",
        Beh::In(..) => "receive",
        Beh::Deleg(..) => "delegation",
        Beh::Resume(..) => "resume",
        Beh::Select(..) => "selection",
        Beh::Offer(..) => "branching",
        _ => "action",
    }
}

impl Mc<'_, '_> {
    fn err(&self, kind: K, message: String, region: Option<RegVar>, label: Option<Label>, st: &Stack, focus: &Beh) -> SessionError {
        SessionError { kind, message, region, label, stack: st.to_string(), focus: focus.simplified().to_string() }
    }

    fn matches(&self, r: RegVar, l: Label) -> bool {
        self.regions.closure().region_eq(RegTerm::Var(r), RegTerm::Label(l))
    }

    fn labels_of(&self, r: RegVar) -> BTreeSet<Label> {
        self.regions.closure().labels_of(RegTerm::Var(r))
    }

    fn emit(&mut self, rule: &str, st: &Stack, b: &Beh) {
        if let Some(t) = self.trace.as_mut() {
            t(rule, st, b);
        }
    }

    /// Record `delta`, applying it to the constraints and the local state.
    fn subst(&mut self, delta: SessionSubst, st: &mut Stack, k: &mut [Beh]) {
        self.c.apply_sessions(&delta);
        st.apply(&delta);
        for x in k.iter_mut() {
            *x = delta.apply_beh(x);
        }
        self.sigma = self.sigma.then(&delta);
    }

    /// Bring saved state up to date with the global substitution.
    fn resync(&self, st: &mut Stack, b: &mut Beh, k: &mut [Beh]) {
        st.apply(&self.sigma);
        *b = self.sigma.apply_beh(b);
        for x in k.iter_mut() {
            *x = self.sigma.apply_beh(x);
        }
    }

    fn fresh(&mut self) -> Session {
        Session::Var(self.supply.ses())
    }

    fn run(&mut self, mut st: Stack, mut focus: Beh, mut k: Vec<Beh>) -> Result<(), SessionError> {
        loop {
            st.drop_ended();
            self.steps += 1;
            if self.steps > self.budget {
                return Err(self.err(K::Budget, format!("step budget of {} exhausted", self.budget), None, None, &st, &focus));
            }
            match focus.clone() {
                Beh::Seq(a, b) => {
                    k.push((*b).clone());
                    focus = (*a).clone();
                }
                Beh::Tau => match k.pop() {
                    Some(n) => focus = n,
                    None => return self.finalize(st, &focus),
                },
                Beh::Var(v) => {
                    self.emit("beta", &st, &focus);
                    match Beh::plus_all(self.c.bindings(v).to_vec()) {
                        Some(b) => focus = b,
                        None => {
                            return Err(self.err(K::Stuck, format!("behaviour variable {v} has no binding"), None, None, &st, &focus));
                        }
                    }
                }
                Beh::Plus(a, b) => {
                    self.emit("plus", &st, &focus);
                    self.run(st.clone(), (*a).clone(), k.clone())?;
                    let mut b = (*b).clone();
                    self.resync(&mut st, &mut b, &mut k);
                    return self.run(st, b, k);
                }
                Beh::Rec(v, body) => {
                    self.emit("rec", &st, &focus);
                    let saved = self.c.replace_bindings(v, vec![Beh::Tau]);
                    let r = self.run(Stack::new(), (*body).clone(), Vec::new());
                    let restored = saved.iter().map(|x| self.sigma.apply_beh(x)).collect();
                    self.c.replace_bindings(v, restored);
                    r?;
                    let mut t = Beh::Tau;
                    self.resync(&mut st, &mut t, &mut k);
                    focus = t;
                }
                Beh::Spawn(body) => {
                    self.emit("spawn", &st, &focus);
                    self.run(Stack::new(), (*body).clone(), Vec::new())?;
                    let mut t = Beh::Tau;
                    self.resync(&mut st, &mut t, &mut k);
                    focus = t;
                }
                Beh::Push(l, s) => {
                    self.emit("push", &st, &focus);
                    if !st.push(l, s) {
                        return Err(self.err(
                            K::Linearity,
                            format!("endpoint {l} is opened twice on the same stack"),
                            None,
                            Some(l),
                            &st,
                            &focus,
                        ));
                    }
                    focus = Beh::Tau;
                }
                Beh::Offer(r, arms) => {
                    self.reach_top(r, &mut st, &mut k, &focus)?;
                    self.emit("offer", &st, &focus);
                    return self.offer(r, &arms, st, k, &focus);
                }
                pop => {
                    let r = pop.region().expect("remaining behaviours are pops");
                    self.reach_top(r, &mut st, &mut k, &focus)?;
                    self.emit(describe(&pop), &st, &focus);
                    self.pop(&pop, &mut st, &mut k)?;
                    focus = Beh::Tau;
                }
            }
        }
    }

    /// Close open top frames until the top matches `r`.
    fn reach_top(&mut self, r: RegVar, st: &mut Stack, k: &mut [Beh], focus: &Beh) -> Result<(), SessionError> {
        loop {
            st.drop_ended();
            let Some(top) = st.top().cloned() else {
                let wanted = self.labels_of(r);
                let closed: Vec<String> = self
                    .closed
                    .iter()
                    .filter(|(_, by)| wanted.iter().any(|w| self.matches(**by, *w)))
                    .map(|(l, _)| l.to_string())
                    .collect();
                let on: Vec<String> = wanted.iter().map(|l| l.to_string()).collect();
                let mut msg = format!("{} on endpoint {} has no open frame", describe(focus), on.join("/"));
                if !closed.is_empty() {
                    msg.push_str(&format!(
                        "; it runs before the more recent endpoint {} is finished, so that session was forced closed",
                        closed.join(", ")
                    ));
                }
                return Err(self.err(K::Stuck, msg, Some(r), wanted.iter().next().copied(), st, focus));
            };
            if self.matches(r, top.label) {
                return Ok(());
            }
            match top.session {
                Session::Var(v) => {
                    self.emit("close", st, focus);
                    self.closed.insert(top.label, r);
                    self.subst(SessionSubst::single(v, Session::End), st, k);
                }
                other => {
                    let on: Vec<String> = self.labels_of(r).iter().map(|l| l.to_string()).collect();
                    return Err(self.err(
                        K::Stuck,
                        format!(
                            "{} on endpoint {} while the more recent endpoint {} still expects {}",
                            describe(focus),
                            on.join("/"),
                            top.label,
                            other
                        ),
                        Some(r),
                        Some(top.label),
                        st,
                        focus,
                    ));
                }
            }
        }
    }

    fn mismatch(&self, pop: &Beh, s: &Session, st: &Stack) -> SessionError {
        let r = pop.region();
        self.err(K::Stuck, format!("{} does not fit the session {}", describe(pop), s), r, st.top().map(|f| f.label), st, pop)
    }

    fn pop(&mut self, pop: &Beh, st: &mut Stack, k: &mut [Beh]) -> Result<(), SessionError> {
        if let Beh::Deleg(_, d) = pop {
            self.delegated_frame(*d, st, k, pop)?;
        }
        let top = st.top().cloned().expect("reach_top leaves a frame");
        let mut s = top.session.clone();
        // Expand an open session to the shape the action needs, then consume it.
        if let Session::Var(v) = s {
            let shape = match pop {
                Beh::Out(..) => Some(Session::out(Type::Var(self.supply.ty()), self.fresh())),
                Beh::In(..) => Some(Session::inp(Type::Var(self.supply.ty()), self.fresh())),
                Beh::Deleg(..) => {
                    let d = st.below().expect("checked above").session.clone();
                    Some(Session::deleg(d, self.fresh()))
                }
                Beh::Resume(..) => {
                    let d = self.fresh();
                    Some(Session::resume(d, self.fresh()))
                }
                _ => None,
            };
            if let Some(shape) = shape {
                if shape.mentions_ses_var(v) {
                    return Err(self.err(K::Occurs, format!("delegating an endpoint over itself ({v})"), pop.region(), Some(top.label), st, pop));
                }
                self.subst(SessionSubst::single(v, shape), st, k);
                s = st.top().expect("frame kept").session.clone();
            }
        }
        match (pop, &s) {
            (Beh::Out(_, t), Session::Out(t2, rest)) => {
                self.c.add_ty_sub(t.clone(), t2.clone());
                st.top_mut().expect("frame").session = (**rest).clone();
            }
            (Beh::In(_, t), Session::In(t2, rest)) => {
                self.c.add_ty_sub(t2.clone(), t.clone());
                st.top_mut().expect("frame").session = (**rest).clone();
            }
            (Beh::Deleg(..), Session::Deleg(carried, rest)) => {
                let rest = (**rest).clone();
                let f2 = st.below().cloned().expect("checked by delegated_frame");
                self.sub(&f2.session, carried, st, k, pop)?;
                let n = st.frames.len();
                st.frames.remove(n - 2);
                st.top_mut().expect("frame").session = self.sigma.apply(&rest);
            }
            (Beh::Resume(_, lr), Session::Resume(d, rest)) => {
                if st.history.contains(lr) {
                    return Err(self.err(
                        K::Linearity,
                        format!("resumed endpoint {lr} is already on this stack's history"),
                        pop.region(),
                        Some(*lr),
                        st,
                        pop,
                    ));
                }
                let (d, rest) = ((**d).clone(), (**rest).clone());
                // Everything below the top must be finished.
                let n = st.frames.len();
                for i in 0..n - 1 {
                    match st.frames[i].session.clone() {
                        Session::End => {}
                        Session::Var(v) => {
                            self.closed.insert(st.frames[i].label, pop.region().expect("resume has a region"));
                            self.subst(SessionSubst::single(v, Session::End), st, k);
                        }
                        other => {
                            let l = st.frames[i].label;
                            return Err(self.err(
                                K::Stuck,
                                format!("resume needs a single open endpoint, but {l} still expects {other}"),
                                pop.region(),
                                Some(l),
                                st,
                                pop,
                            ));
                        }
                    }
                }
                st.drop_ended();
                let d = self.sigma.apply(&d);
                let rest = self.sigma.apply(&rest);
                let top_label = st.top().expect("frame").label;
                st.frames.clear();
                st.history.insert(*lr);
                st.frames.push(Frame { label: *lr, session: d });
                st.frames.push(Frame { label: top_label, session: rest });
            }
            (Beh::Select(_, lab), _) => self.select(lab, &s, st, k, pop)?,
            _ => return Err(self.mismatch(pop, &s, st)),
        }
        Ok(())
    }

    /// The delegated endpoint must sit directly below the carrier.
    fn delegated_frame(&mut self, d: RegVar, st: &mut Stack, k: &mut [Beh], pop: &Beh) -> Result<(), SessionError> {
        loop {
            let Some(f2) = st.below().cloned() else {
                return Err(self.err(K::Stuck, "delegated endpoint is not open below the carrier".into(), Some(d), None, st, pop));
            };
            if self.matches(d, f2.label) {
                return Ok(());
            }
            match f2.session {
                Session::Var(v) => {
                    self.closed.insert(f2.label, d);
                    self.subst(SessionSubst::single(v, Session::End), st, k);
                    st.drop_ended();
                }
                Session::End => st.drop_ended(),
                other => {
                    return Err(self.err(
                        K::Stuck,
                        format!("delegation expects the delegated endpoint below the carrier, found {} with {}", f2.label, other),
                        Some(d),
                        Some(f2.label),
                        st,
                        pop,
                    ));
                }
            }
        }
    }

    fn select(&mut self, lab: &ChoiceLabel, s: &Session, st: &mut Stack, k: &mut [Beh], pop: &Beh) -> Result<(), SessionError> {
        let next = match s {
            Session::Var(v) => {
                let cv = self.supply.choice();
                let cont = self.fresh();
                self.c.set_choice(cv, Session::internal([(lab.clone(), cont.clone())].into_iter().collect()));
                self.subst(SessionSubst::single(*v, Session::IVar(cv)), st, k);
                cont
            }
            Session::IVar(cv) => {
                let Some(Session::Internal(m)) = self.c.choice(*cv).cloned() else {
                    return Err(self.mismatch(pop, s, st));
                };
                match m.get(lab) {
                    Some(x) => x.clone(),
                    None => {
                        let cont = self.fresh();
                        let mut m = (*m).clone();
                        m.insert(lab.clone(), cont.clone());
                        self.c.set_choice(*cv, Session::internal(m));
                        cont
                    }
                }
            }
            Session::Internal(m) => match m.get(lab) {
                Some(x) => x.clone(),
                None => {
                    return Err(self.err(
                        K::Choice,
                        format!("label {lab} is not among the selectable labels of {s}"),
                        pop.region(),
                        None,
                        st,
                        pop,
                    ))
                }
            },
            _ => return Err(self.mismatch(pop, s, st)),
        };
        st.top_mut().expect("frame").session = next;
        Ok(())
    }

    fn offer(
        &mut self,
        r: RegVar,
        arms: &Rc<BTreeMap<ChoiceLabel, Beh>>,
        mut st: Stack,
        mut k: Vec<Beh>,
        focus: &Beh,
    ) -> Result<(), SessionError> {
        let offered: BTreeSet<ChoiceLabel> = arms.keys().cloned().collect();
        let mut s = st.top().expect("frame").session.clone();
        if let Session::Var(v) = s {
            let cv = self.supply.choice();
            let branches = offered.iter().map(|l| (l.clone(), Session::Var(self.supply.ses()))).collect();
            self.c.set_choice(cv, Session::external(offered.clone(), branches));
            self.subst(SessionSubst::single(v, Session::EVar(cv)), &mut st, &mut k);
            s = Session::EVar(cv);
        }
        match &s {
            Session::EVar(cv) => {
                let Some(Session::External(e)) = self.c.choice(*cv).cloned() else {
                    return Err(self.mismatch(focus, &s, &st));
                };
                let mut e = (*e).clone();
                for l in &offered {
                    if !e.branches.contains_key(l) {
                        let v = self.fresh();
                        e.branches.insert(l.clone(), v);
                    }
                }
                e.active.retain(|l| offered.contains(l));
                if e.active.is_empty() {
                    return Err(self.err(
                        K::Choice,
                        "branching leaves no label that every offer handles".into(),
                        Some(r),
                        None,
                        &st,
                        focus,
                    ));
                }
                self.c.set_choice(*cv, Session::External(Rc::new(e)));
            }
            Session::External(e) => {
                if !e.active.is_subset(&offered) || !offered.iter().all(|l| e.branches.contains_key(l)) {
                    return Err(self.err(
                        K::Choice,
                        format!("branch labels {{{}}} do not fit {}", join(&offered), s),
                        Some(r),
                        None,
                        &st,
                        focus,
                    ));
                }
            }
            _ => return Err(self.mismatch(focus, &s, &st)),
        }
        for (lab, arm) in arms.iter() {
            let cur = self.sigma.apply(&s);
            let branch = match &cur {
                Session::EVar(cv) => match self.c.choice(*cv) {
                    Some(Session::External(e)) => e.branches[lab].clone(),
                    _ => return Err(self.mismatch(focus, &cur, &st)),
                },
                Session::External(e) => e.branches[lab].clone(),
                _ => return Err(self.mismatch(focus, &cur, &st)),
            };
            let mut b = arm.clone();
            let mut kk = k.clone();
            let mut st2 = st.with_top(branch);
            self.resync(&mut st2, &mut b, &mut kk);
            self.run(st2, b, kk)?;
            self.resync(&mut st, &mut Beh::Tau, &mut k);
        }
        Ok(())
    }

    /// `a <= b`, refining variables on either side; only choice variables
    /// of `a` may gain labels or lose active ones.
    fn sub(&mut self, a: &Session, b: &Session, st: &mut Stack, k: &mut [Beh], pop: &Beh) -> Result<(), SessionError> {
        let (a, b) = (self.sigma.apply(a), self.sigma.apply(b));
        match (&a, &b) {
            (Session::End, Session::End) => Ok(()),
            (Session::Var(x), Session::Var(y)) if x == y => Ok(()),
            (Session::Var(x), t) | (t, Session::Var(x)) => {
                if t.mentions_ses_var(*x) {
                    return Err(self.err(K::Occurs, format!("{x} occurs in {t}"), pop.region(), None, st, pop));
                }
                self.subst(SessionSubst::single(*x, t.clone()), st, k);
                Ok(())
            }
            (Session::Out(t1, k1), Session::Out(t2, k2)) => {
                self.c.add_ty_sub(t2.clone(), t1.clone());
                self.sub(k1, k2, st, k, pop)
            }
            (Session::In(t1, k1), Session::In(t2, k2)) => {
                self.c.add_ty_sub(t1.clone(), t2.clone());
                self.sub(k1, k2, st, k, pop)
            }
            (Session::Deleg(d1, k1), Session::Deleg(d2, k2)) => {
                self.sub(d2, d1, st, k, pop)?;
                self.sub(k1, k2, st, k, pop)
            }
            (Session::Resume(d1, k1), Session::Resume(d2, k2)) => {
                self.sub(d1, d2, st, k, pop)?;
                self.sub(k1, k2, st, k, pop)
            }
            (Session::Internal(_) | Session::IVar(_), Session::Internal(_) | Session::IVar(_)) => {
                let ma = self.internal_view(&a).ok_or_else(|| self.mismatch(pop, &a, st))?;
                let mb = self.internal_view(&b).ok_or_else(|| self.mismatch(pop, &b, st))?;
                for (l, sb) in mb.iter() {
                    match ma.get(l) {
                        Some(sa) => self.sub(sa, sb, st, k, pop)?,
                        None => match &a {
                            Session::IVar(cv) => {
                                let mut m = self.internal_view(&a).expect("bound");
                                m.insert(l.clone(), sb.clone());
                                self.c.set_choice(*cv, Session::internal(m));
                            }
                            _ => {
                                return Err(self.err(K::Choice, format!("{a} cannot select {l} as {b} requires"), pop.region(), None, st, pop));
                            }
                        },
                    }
                }
                Ok(())
            }
            (Session::External(_) | Session::EVar(_), Session::External(_) | Session::EVar(_)) => {
                let ea = self.external_view(&a).ok_or_else(|| self.mismatch(pop, &a, st))?;
                let eb = self.external_view(&b).ok_or_else(|| self.mismatch(pop, &b, st))?;
                let mut na = ea.clone();
                for (l, sb) in &eb.branches {
                    if !na.branches.contains_key(l) {
                        na.branches.insert(l.clone(), sb.clone());
                    }
                }
                na.active.retain(|l| eb.active.contains(l));
                if na != ea {
                    match &a {
                        Session::EVar(cv) if !na.active.is_empty() => self.c.set_choice(*cv, Session::External(Rc::new(na.clone()))),
                        _ => {
                            return Err(self.err(K::Choice, format!("{a} is not a subtype of {b}"), pop.region(), None, st, pop));
                        }
                    }
                }
                for (l, sb) in &eb.branches {
                    let sa = na.branches[l].clone();
                    self.sub(&sa, sb, st, k, pop)?;
                }
                Ok(())
            }
            _ => Err(self.err(K::Stuck, format!("{a} is not a subtype of {b}"), pop.region(), None, st, pop)),
        }
    }

    fn internal_view(&self, s: &Session) -> Option<BTreeMap<ChoiceLabel, Session>> {
        match s {
            Session::Internal(m) => Some((**m).clone()),
            Session::IVar(cv) => match self.c.choice(*cv) {
                Some(Session::Internal(m)) => Some((**m).clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn external_view(&self, s: &Session) -> Option<ExtChoice> {
        match s {
            Session::External(e) => Some((**e).clone()),
            Session::EVar(cv) => match self.c.choice(*cv) {
                Some(Session::External(e)) => Some((**e).clone()),
                _ => None,
            },
            _ => None,
        }
    }

    /// Close every open frame; a frame with protocol left is an error.
    fn finalize(&mut self, mut st: Stack, focus: &Beh) -> Result<(), SessionError> {
        self.emit("finish", &st, focus);
        while let Some(f) = st.frames.pop() {
            match f.session {
                Session::End => {}
                Session::Var(v) => {
                    let mut rest = st.clone();
                    self.subst(SessionSubst::single(v, Session::End), &mut rest, &mut []);
                    st = rest;
                }
                other => {
                    st.frames.push(Frame { label: f.label, session: other.clone() });
                    return Err(self.err(
                        K::Unfinished,
                        format!("endpoint {} still expects {} when its process ends", f.label, other),
                        None,
                        Some(f.label),
                        &st,
                        focus,
                    ));
                }
            }
        }
        Ok(())
    }
}

fn join(ls: &BTreeSet<ChoiceLabel>) -> String {
    ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

//! Abstract shadows: for each process, the set of abstract configurations
//! consistent with what it has done so far.
//!
//! A configuration is a stack of activations. Entering `rec` opens a fresh
//! activation with an empty endpoint stack, mirroring how the abstract
//! semantics checks recursive bodies in isolation; the activation is
//! discarded once it is finished. Concrete events select the matching
//! visible transitions; every silent step is explored.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use sessionml_core::absint::Explorer;
use sessionml_core::constraint::{Closure, ConstraintSet, RegTerm};
use sessionml_core::session::{Frame, Stack};
use sessionml_core::term::{Beh, ChoiceLabel, Label, RegVar, Session};

/// Cap on configurations visited while closing under silent steps.
pub const SILENT_BUDGET: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Activation {
    pub stack: Stack,
    pub beh: Beh,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbsState {
    /// Innermost last.
    pub acts: Vec<Activation>,
}

impl AbsState {
    pub fn start(beh: Beh) -> Self {
        AbsState { acts: vec![Activation { stack: Stack::new(), beh }] }
    }

    fn inner(&self) -> &Activation {
        self.acts.last().expect("at least one activation")
    }

    pub fn is_final(&self) -> bool {
        self.acts.len() == 1 && self.inner().stack.is_empty() && self.inner().beh == Beh::Tau
    }
}

/// What a concrete process just did, in terms of endpoint labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Push(Label),
    Out(Label),
    In(Label),
    Select(Label, ChoiceLabel),
    Offer(Label, ChoiceLabel),
    /// Carrier label, then delegated label.
    Deleg(Label, Label),
    /// Carrier label, then the label of the received endpoint.
    Resume(Label, Label),
    Spawn,
}

enum Move {
    Silent(Beh),
    Enter(Beh, Beh),
    Visible(Vis, Beh),
}

enum Vis {
    Push(Label, Session),
    Pop(Beh),
    Offer(RegVar, ChoiceLabel, BTreeSet<ChoiceLabel>),
    Spawn(Beh),
}

fn moves(b: &Beh, c: &ConstraintSet) -> Vec<Move> {
    match b {
        Beh::Tau => vec![],
        Beh::Seq(a, k) if **a == Beh::Tau => vec![Move::Silent((**k).clone())],
        Beh::Seq(a, k) => moves(a, c)
            .into_iter()
            .map(|m| match m {
                Move::Silent(x) => Move::Silent(Beh::seq(x, (**k).clone())),
                Move::Enter(x, body) => Move::Enter(Beh::seq(x, (**k).clone()), body),
                Move::Visible(v, x) => Move::Visible(v, Beh::seq(x, (**k).clone())),
            })
            .collect(),
        Beh::Var(v) => c.bindings(*v).iter().cloned().map(Move::Silent).collect(),
        Beh::Plus(a, k) => vec![Move::Silent((**a).clone()), Move::Silent((**k).clone())],
        Beh::Rec(_, body) => vec![Move::Enter(Beh::Tau, (**body).clone())],
        Beh::Spawn(body) => vec![Move::Visible(Vis::Spawn((**body).clone()), Beh::Tau)],
        Beh::Push(l, s) => vec![Move::Visible(Vis::Push(*l, s.clone()), Beh::Tau)],
        Beh::Offer(r, arms) => {
            let offered: BTreeSet<_> = arms.keys().cloned().collect();
            arms.iter().map(|(l, arm)| Move::Visible(Vis::Offer(*r, l.clone(), offered.clone()), arm.clone())).collect()
        }
        pop => vec![Move::Visible(Vis::Pop(pop.clone()), Beh::Tau)],
    }
}

fn with_inner(s: &AbsState, stack: Stack, beh: Beh) -> AbsState {
    let mut out = s.clone();
    let mut stack = stack;
    stack.drop_ended();
    *out.acts.last_mut().expect("activation") = Activation { stack, beh };
    out
}

/// Per-process shadow; `None` once the silent budget was exceeded.
#[derive(Clone, Debug)]
pub struct Shadow {
    pub states: Option<BTreeSet<AbsState>>,
}

pub struct Shadows<'c> {
    c: &'c ConstraintSet,
    cl: Rc<Closure>,
    explorer: Explorer<'c, 'static>,
    verdicts: HashMap<Activation, bool>,
    pub checks: usize,
}

impl<'c> Shadows<'c> {
    pub fn new(c: &'c ConstraintSet, budget: usize) -> Self {
        Shadows { c, cl: c.closure(), explorer: Explorer::new(c, budget), verdicts: HashMap::new(), checks: 0 }
    }

    fn at(&self, r: RegVar, l: Label) -> bool {
        self.cl.region_eq(RegTerm::Var(r), RegTerm::Label(l))
    }

    /// Shadow of a process that starts with behaviour `b`.
    pub fn start(&self, b: &Beh) -> Shadow {
        self.close([AbsState::start(b.clone())].into_iter().collect())
    }

    /// Close under silent steps, keeping configurations that can act or are final.
    fn close(&self, init: BTreeSet<AbsState>) -> Shadow {
        let mut seen: BTreeSet<AbsState> = BTreeSet::new();
        let mut ready = BTreeSet::new();
        let mut work: Vec<AbsState> = init.into_iter().collect();
        while let Some(s) = work.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            if seen.len() > SILENT_BUDGET {
                return Shadow { states: None };
            }
            let inner = s.inner();
            if inner.beh == Beh::Tau && inner.stack.is_empty() {
                if s.acts.len() == 1 {
                    ready.insert(s);
                } else {
                    let mut up = s.clone();
                    up.acts.pop();
                    work.push(up);
                }
                continue;
            }
            let mut visible = false;
            for m in moves(&inner.beh, self.c) {
                match m {
                    Move::Silent(b) => work.push(with_inner(&s, inner.stack.clone(), b.simplified())),
                    Move::Enter(k, body) => {
                        let k = k.simplified();
                        let mut next = with_inner(&s, inner.stack.clone(), k.clone());
                        let fresh = Activation { stack: Stack::new(), beh: body };
                        // A finished caller adds nothing; drop it so loops stay bounded.
                        if k == Beh::Tau && inner.stack.is_empty() {
                            *next.acts.last_mut().expect("activation") = fresh;
                        } else {
                            next.acts.push(fresh);
                        }
                        work.push(next);
                    }
                    Move::Visible(..) => visible = true,
                }
            }
            if visible {
                ready.insert(s);
            }
        }
        Shadow { states: Some(ready) }
    }

    /// Advance a shadow by `ev`. Returns the successor shadow and, for a
    /// spawn, the behaviours the child may start with. An empty successor
    /// set means no abstract transition matches.
    pub fn step(&self, sh: &Shadow, ev: &Event) -> (Shadow, Vec<Beh>) {
        let Some(states) = &sh.states else { return (Shadow { states: None }, vec![]) };
        let mut next = BTreeSet::new();
        let mut spawned = Vec::new();
        for s in states {
            let inner = s.inner();
            let st = &inner.stack;
            for m in moves(&inner.beh, self.c) {
                let Move::Visible(v, k) = m else { continue };
                let k = k.simplified();
                if let Some(stack) = self.fire(st, &v, ev, &mut spawned) {
                    next.insert(with_inner(s, stack, k));
                }
            }
        }
        spawned.sort();
        spawned.dedup();
        (self.close(next), spawned)
    }

    fn fire(&self, st: &Stack, v: &Vis, ev: &Event, spawned: &mut Vec<Beh>) -> Option<Stack> {
        let top = st.top();
        let on_top = |l: Label, r: RegVar| top.is_some_and(|f| f.label == l) && self.at(r, l);
        match (v, ev) {
            (Vis::Spawn(b), Event::Spawn) => {
                spawned.push(b.clone());
                Some(st.clone())
            }
            (Vis::Push(l, s), Event::Push(l2)) if l == l2 => {
                let mut s2 = st.clone();
                s2.push(*l, s.clone()).then_some(s2)
            }
            (Vis::Offer(r, lab, offered), Event::Offer(l, lab2)) if lab == lab2 && on_top(*l, *r) => {
                match &top?.session {
                    Session::External(e)
                        if e.active.is_subset(offered) && offered.iter().all(|x| e.branches.contains_key(x)) =>
                    {
                        Some(st.with_top(e.branches.get(lab)?.clone()))
                    }
                    _ => None,
                }
            }
            (Vis::Pop(p), _) => {
                let f = top?;
                match (p, ev, &f.session) {
                    (Beh::Out(r, _), Event::Out(l), Session::Out(_, k)) if on_top(*l, *r) => Some(st.with_top((**k).clone())),
                    (Beh::In(r, _), Event::In(l), Session::In(_, k)) if on_top(*l, *r) => Some(st.with_top((**k).clone())),
                    (Beh::Select(r, lab), Event::Select(l, lab2), Session::Internal(m)) if lab == lab2 && on_top(*l, *r) => {
                        Some(st.with_top(m.get(lab)?.clone()))
                    }
                    (Beh::Deleg(r, d), Event::Deleg(l, l2), Session::Deleg(_, k)) if on_top(*l, *r) => {
                        let below = st.below()?;
                        if below.label != *l2 || !self.at(*d, *l2) {
                            return None;
                        }
                        let mut s2 = st.with_top((**k).clone());
                        let n = s2.frames.len();
                        s2.frames.remove(n - 2);
                        Some(s2)
                    }
                    (Beh::Resume(r, lr), Event::Resume(l, lr2), Session::Resume(d, k))
                        if lr == lr2 && on_top(*l, *r) && st.len() == 1 && !st.history.contains(lr) =>
                    {
                        let mut s2 = st.clone();
                        s2.history.insert(*lr);
                        s2.frames = vec![
                            Frame { label: *lr, session: (**d).clone() },
                            Frame { label: f.label, session: (**k).clone() },
                        ];
                        Some(s2)
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Preservation: every activation of every configuration normalizes.
    /// Returns the first failing activation, if any.
    pub fn preserved(&mut self, sh: &Shadow) -> Result<(), String> {
        let Some(states) = &sh.states else { return Ok(()) };
        for s in states {
            for a in &s.acts {
                let ok = match self.verdicts.get(a) {
                    Some(v) => *v,
                    None => {
                        self.checks += 1;
                        let v = matches!(self.explorer.normalizes(&a.stack, &a.beh), Ok(o) if o.is_yes());
                        self.verdicts.insert(a.clone(), v);
                        v
                    }
                };
                if !ok {
                    return Err(format!("{} | {} does not normalize", a.stack, a.beh.simplified()));
                }
            }
        }
        Ok(())
    }

    /// Whether the shadow admits having finished.
    pub fn may_finish(&self, sh: &Shadow) -> bool {
        sh.states.as_ref().is_none_or(|s| s.iter().any(AbsState::is_final))
    }
}

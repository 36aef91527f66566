//! Exhaustive exploration of the abstract stack semantics.
//!
//! Configurations are `(stack, behaviour)` pairs taken modulo closed
//! frames. `normalizes` decides whether every path from a configuration
//! ends in the empty stack with a silent behaviour; it is independent of
//! the inference algorithms and serves as their oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::constraint::{session_subtype, Closure, ConstraintSet, RegTerm};
use crate::session::{Frame, Stack};
use crate::term::{Beh, BehVar, Session};

/// Default cap on explored configurations.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Tau,
    Seq,
    Beta,
    Plus,
    Push,
    Out,
    In,
    Del,
    Res,
    ICh,
    ECh,
    Rec,
    Spn,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Tau => "Tau",
            Rule::Seq => "Seq",
            Rule::Beta => "Beta",
            Rule::Plus => "Plus",
            Rule::Push => "Push",
            Rule::Out => "Out",
            Rule::In => "In",
            Rule::Del => "Del",
            Rule::Res => "Res",
            Rule::ICh => "ICh",
            Rule::ECh => "ECh",
            Rule::Rec => "Rec",
            Rule::Spn => "Spn",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub stack: Stack,
    pub beh: Beh,
}

impl Config {
    pub fn new(mut stack: Stack, beh: Beh) -> Self {
        stack.drop_ended();
        Config { stack, beh }
    }

    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && self.beh == Beh::Tau
    }

    /// Frames plus behaviour size; strictly decreases on ground steps.
    pub fn size(&self) -> usize {
        self.stack.len() + bsize(&self.beh)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.stack, self.beh.simplified())
    }
}

/// A path from the start to a configuration with no way forward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub path: Vec<(Rule, Config)>,
    pub stuck: Config,
    pub reason: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.reason)?;
        for (r, c) in &self.path {
            writeln!(f, "  {r} -> {c}")?;
        }
        write!(f, "  stuck at {}", self.stuck)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Normalizes,
    Stuck(Box<Witness>),
}

impl Outcome {
    pub fn is_yes(&self) -> bool {
        matches!(self, Outcome::Normalizes)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AbsError {
    #[error("state budget of {0} configurations exhausted")]
    Budget(usize),
    #[error("size measure did not decrease: {from} ({from_size}) -{rule}-> {to} ({to_size})")]
    Measure { rule: Rule, from: String, from_size: usize, to: String, to_size: usize },
}

/// Observer: `(nesting depth, rule, target configuration)`.
pub type StepSink<'a> = &'a mut dyn FnMut(usize, Rule, &Config);

pub struct Explorer<'c, 's> {
    c: &'c ConstraintSet,
    cl: Rc<Closure>,
    budget: usize,
    states: usize,
    /// Premises already proven, keyed by behaviour and binding overrides.
    proven: HashSet<(Beh, BTreeSet<BehVar>)>,
    check_measure: bool,
    sink: Option<StepSink<'s>>,
    depth: usize,
}

/// `normalizes(stack, b, C)` with the default budget.
pub fn normalizes(stack: &Stack, b: &Beh, c: &ConstraintSet) -> Result<Outcome, AbsError> {
    Explorer::new(c, DEFAULT_BUDGET).normalizes(stack, b)
}

impl<'c, 's> Explorer<'c, 's> {
    pub fn new(c: &'c ConstraintSet, budget: usize) -> Self {
        Explorer {
            c,
            cl: c.closure(),
            budget,
            states: 0,
            proven: HashSet::new(),
            check_measure: false,
            sink: None,
            depth: 0,
        }
    }

    /// Fail on any ground transition that does not shrink the configuration.
    pub fn with_measure_check(mut self) -> Self {
        self.check_measure = true;
        self
    }

    pub fn with_sink(mut self, sink: StepSink<'s>) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn normalizes(&mut self, stack: &Stack, b: &Beh) -> Result<Outcome, AbsError> {
        self.explore(Config::new(stack.clone(), b.clone()), &BTreeSet::new())
    }

    fn bindings(&self, v: BehVar, over: &BTreeSet<BehVar>) -> Vec<Beh> {
        if over.contains(&v) {
            vec![Beh::Tau]
        } else {
            self.c.bindings(v).to_vec()
        }
    }

    fn explore(&mut self, start: Config, over: &BTreeSet<BehVar>) -> Result<Outcome, AbsError> {
        let mut done: HashSet<Config> = HashSet::new();
        let mut parent: HashMap<Config, (Rule, Config)> = HashMap::new();
        let mut on_path: HashSet<Config> = HashSet::new();
        // Iterative depth-first search; each entry holds pending successors.
        let mut stack: Vec<(Config, Vec<(Rule, Config)>)> = Vec::new();
        let first = self.enter(&start, over)?;
        if let Some(w) = self.stuck_at(&start, &first, &parent) {
            return Ok(w);
        }
        on_path.insert(start.clone());
        stack.push((start, first));
        while let Some((cur, pending)) = stack.last_mut() {
            let Some((rule, next)) = pending.pop() else {
                let cur = cur.clone();
                on_path.remove(&cur);
                done.insert(cur);
                stack.pop();
                continue;
            };
            let cur = cur.clone();
            if self.check_measure && is_ground(&cur.beh) && next.size() >= cur.size() {
                return Err(AbsError::Measure {
                    rule,
                    from: cur.to_string(),
                    from_size: cur.size(),
                    to: next.to_string(),
                    to_size: next.size(),
                });
            }
            if let Some(s) = self.sink.as_mut() {
                s(self.depth, rule, &next);
            }
            if done.contains(&next) {
                continue;
            }
            if on_path.contains(&next) {
                parent.entry(next.clone()).or_insert((rule, cur));
                return Ok(Outcome::Stuck(Box::new(Witness {
                    path: path_to(&next, &parent),
                    stuck: next,
                    reason: "a cycle of silent steps never terminates".into(),
                })));
            }
            parent.entry(next.clone()).or_insert((rule, cur));
            let succ = self.enter(&next, over)?;
            if let Some(w) = self.stuck_at(&next, &succ, &parent) {
                return Ok(w);
            }
            on_path.insert(next.clone());
            stack.push((next, succ));
        }
        Ok(Outcome::Normalizes)
    }

    fn enter(&mut self, cfg: &Config, over: &BTreeSet<BehVar>) -> Result<Vec<(Rule, Config)>, AbsError> {
        self.states += 1;
        if self.states > self.budget {
            return Err(AbsError::Budget(self.budget));
        }
        let mut out = self.step(cfg, over)?;
        out.reverse();
        Ok(out)
    }

    fn stuck_at(&self, cfg: &Config, succ: &[(Rule, Config)], parent: &HashMap<Config, (Rule, Config)>) -> Option<Outcome> {
        if !succ.is_empty() || cfg.is_final() {
            return None;
        }
        Some(Outcome::Stuck(Box::new(Witness {
            path: path_to(cfg, parent),
            stuck: cfg.clone(),
            reason: self.stuck_reason(cfg),
        })))
    }

    fn stuck_reason(&self, cfg: &Config) -> String {
        let head = head_action(&cfg.beh);
        match (&head, cfg.stack.top()) {
            (Beh::Tau, Some(f)) => format!("process ends with endpoint {} still open at {}", f.label, f.session),
            (Beh::Var(v), _) => format!("behaviour variable {v} has no binding"),
            (h, Some(f)) => format!("{h} cannot act on the top frame ({}:{})", f.label, f.session),
            (h, None) => format!("{h} has no frame to act on"),
        }
    }

    fn matches(&self, r: crate::term::RegVar, l: crate::term::Label) -> bool {
        self.cl.region_eq(RegTerm::Var(r), RegTerm::Label(l))
    }

    /// Every one-step successor.
    pub fn successors(&mut self, cfg: &Config) -> Result<Vec<(Rule, Config)>, AbsError> {
        self.step(cfg, &BTreeSet::new())
    }

    fn premise(&mut self, body: &Beh, over: BTreeSet<BehVar>) -> Result<bool, AbsError> {
        let key = (body.clone(), over.clone());
        if self.proven.contains(&key) {
            return Ok(true);
        }
        self.depth += 1;
        let r = self.explore(Config::new(Stack::new(), body.clone()), &over);
        self.depth -= 1;
        let ok = r?.is_yes();
        if ok {
            self.proven.insert(key);
        }
        Ok(ok)
    }

    fn step(&mut self, cfg: &Config, over: &BTreeSet<BehVar>) -> Result<Vec<(Rule, Config)>, AbsError> {
        let st = &cfg.stack;
        let mut out = Vec::new();
        let done = |s: Stack| Config::new(s, Beh::Tau);
        match &cfg.beh {
            Beh::Tau => {}
            Beh::Seq(a, b) if **a == Beh::Tau => out.push((Rule::Tau, Config::new(st.clone(), (**b).clone()))),
            Beh::Seq(a, b) => {
                for (r, c) in self.step(&Config { stack: st.clone(), beh: (**a).clone() }, over)? {
                    let beh = Beh::seq(c.beh, (**b).clone());
                    out.push((r, Config::new(c.stack, beh)));
                }
            }
            Beh::Var(v) => {
                for b in self.bindings(*v, over) {
                    out.push((Rule::Beta, Config::new(st.clone(), b)));
                }
            }
            Beh::Plus(a, b) => {
                out.push((Rule::Plus, Config::new(st.clone(), (**a).clone())));
                out.push((Rule::Plus, Config::new(st.clone(), (**b).clone())));
            }
            Beh::Rec(v, body) => {
                let mut o = over.clone();
                o.insert(*v);
                if self.premise(body, o)? {
                    out.push((Rule::Rec, done(st.clone())));
                }
            }
            Beh::Spawn(body) => {
                if self.premise(body, over.clone())? {
                    out.push((Rule::Spn, done(st.clone())));
                }
            }
            Beh::Push(l, s) => {
                let mut s2 = st.clone();
                if s2.push(*l, s.clone()) {
                    out.push((Rule::Push, done(s2)));
                }
            }
            pop => {
                let Some(top) = st.top() else { return Ok(out) };
                let r = pop.region().expect("pop");
                if !self.matches(r, top.label) {
                    return Ok(out);
                }
                match (pop, &top.session) {
                    (Beh::Out(_, t), Session::Out(t2, k)) if self.cl.ty_le(t, t2) => {
                        out.push((Rule::Out, done(st.with_top((**k).clone()))));
                    }
                    (Beh::In(_, t), Session::In(t2, k)) if self.cl.ty_le(t2, t) => {
                        out.push((Rule::In, done(st.with_top((**k).clone()))));
                    }
                    (Beh::Deleg(_, d), Session::Deleg(carried, k)) => {
                        if let Some(f2) = st.below() {
                            if self.matches(*d, f2.label) && session_subtype(self.c, &f2.session, carried) {
                                let mut s2 = st.with_top((**k).clone());
                                let n = s2.frames.len();
                                s2.frames.remove(n - 2);
                                out.push((Rule::Del, done(s2)));
                            }
                        }
                    }
                    (Beh::Resume(_, lr), Session::Resume(d, k)) => {
                        if st.len() == 1 && !st.history.contains(lr) {
                            let mut s2 = st.clone();
                            s2.history.insert(*lr);
                            s2.frames = vec![
                                Frame { label: *lr, session: (**d).clone() },
                                Frame { label: top.label, session: (**k).clone() },
                            ];
                            out.push((Rule::Res, done(s2)));
                        }
                    }
                    (Beh::Select(_, lab), Session::Internal(m)) => {
                        if let Some(k) = m.get(lab) {
                            out.push((Rule::ICh, done(st.with_top(k.clone()))));
                        }
                    }
                    (Beh::Offer(_, arms), Session::External(e)) => {
                        let offered: BTreeSet<_> = arms.keys().cloned().collect();
                        if e.active.is_subset(&offered) && offered.iter().all(|l| e.branches.contains_key(l)) {
                            for (l, arm) in arms.iter() {
                                out.push((Rule::ECh, Config::new(st.with_top(e.branches[l].clone()), arm.clone())));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(out)
    }
}

fn path_to(cfg: &Config, parent: &HashMap<Config, (Rule, Config)>) -> Vec<(Rule, Config)> {
    let mut out = Vec::new();
    let mut cur = cfg.clone();
    let mut seen = HashSet::new();
    while let Some((r, p)) = parent.get(&cur) {
        if !seen.insert(cur.clone()) {
            break;
        }
        out.push((*r, cur.clone()));
        cur = p.clone();
    }
    out.reverse();
    out
}

/// Leftmost action that would fire next.
fn head_action(b: &Beh) -> Beh {
    match b {
        Beh::Seq(a, c) if **a == Beh::Tau => head_action(c),
        Beh::Seq(a, _) => head_action(a),
        other => other.clone(),
    }
}

/// Behaviour size: actions weigh one, push and resume two, spawn two plus its body.
pub fn bsize(b: &Beh) -> usize {
    match b {
        Beh::Tau | Beh::Var(_) => 0,
        Beh::Push(..) | Beh::Resume(..) => 2,
        Beh::Out(..) | Beh::In(..) | Beh::Deleg(..) | Beh::Select(..) => 1,
        Beh::Offer(_, m) => 1 + m.values().map(bsize).sum::<usize>(),
        Beh::Seq(a, c) | Beh::Plus(a, c) => 1 + bsize(a) + bsize(c),
        Beh::Rec(_, a) => 1 + bsize(a),
        Beh::Spawn(a) => 2 + bsize(a),
    }
}

pub fn is_ground(b: &Beh) -> bool {
    let mut ok = true;
    b.walk(&mut |x| {
        if matches!(x, Beh::Var(_)) {
            ok = false
        }
    });
    ok
}

/// Expand every behaviour variable into the sum of its bindings; inside
/// `rec v.b` the variable `v` stands for the silent action. Variables
/// without bindings, or reached through a cycle not guarded by `rec`,
/// are left in place.
pub fn ground(b: &Beh, c: &ConstraintSet) -> Beh {
    fn go(b: &Beh, c: &ConstraintSet, rec: &BTreeMap<BehVar, usize>, busy: &mut BTreeSet<BehVar>) -> Beh {
        match b {
            Beh::Var(v) if rec.get(v).is_some_and(|n| *n > 0) => Beh::Tau,
            Beh::Var(v) => {
                let bs = c.bindings(*v);
                if bs.is_empty() || busy.contains(v) {
                    return b.clone();
                }
                busy.insert(*v);
                let parts = bs.iter().map(|x| go(x, c, rec, busy)).collect();
                busy.remove(v);
                Beh::plus_all(parts).expect("non-empty")
            }
            Beh::Rec(v, body) => {
                let mut r = rec.clone();
                *r.entry(*v).or_insert(0) += 1;
                Beh::rec(*v, go(body, c, &r, busy))
            }
            Beh::Seq(a, d) => Beh::seq(go(a, c, rec, busy), go(d, c, rec, busy)),
            Beh::Plus(a, d) => Beh::plus(go(a, c, rec, busy), go(d, c, rec, busy)),
            Beh::Spawn(a) => Beh::spawn(go(a, c, rec, busy)),
            Beh::Offer(r, m) => Beh::offer(*r, m.iter().map(|(k, x)| (k.clone(), go(x, c, rec, busy))).collect()),
            other => other.clone(),
        }
    }
    go(b, c, &BTreeMap::new(), &mut BTreeSet::new())
}

#[cfg(test)]
mod tests;

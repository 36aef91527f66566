//! A system of processes under one seeded schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sessionml_core::constraint::ConstraintSet;
use sessionml_core::syntax::{pretty, EndpointRef, Expr, ExprKind, E};
use sessionml_core::term::{Beh, Label, Session};

use crate::eval::{self, focus, plug, Action, Focus, Redex};
use crate::monitor::{well_stacked, TStack};
use crate::shadow::{Event, Shadow, Shadows};

pub type Pid = usize;

/// Everything the runtime needs from a successful analysis.
#[derive(Clone, Debug)]
pub struct Program {
    pub expr: E,
    /// Session of the frame opened at each label.
    pub sessions: BTreeMap<Label, Session>,
    pub behaviour: Beh,
    pub constraints: ConstraintSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Uniform over enabled redexes.
    Uniform,
    /// Round-robin over process ids.
    Fair,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub max_steps: usize,
    pub policy: Policy,
    /// Local steps granted to each process when classifying a system that
    /// hit `max_steps`.
    pub internal_budget: usize,
    /// Track abstract shadows and re-check normalization after each event.
    pub heavyweight: bool,
    /// Exploration budget for each heavyweight normalization check.
    pub state_budget: usize,
    pub keep_trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: 0,
            max_steps: 100_000,
            policy: Policy::Uniform,
            internal_budget: 10_000,
            heavyweight: false,
            state_budget: 1_000_000,
            keep_trace: false,
        }
    }
}

/// One line of the trace log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: &'static str,
    pub pids: Vec<Pid>,
    pub endpoints: Vec<String>,
    pub payload: Option<String>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pids: Vec<String> = self.pids.iter().map(|p| format!("P{p}")).collect();
        write!(
            f,
            "{}, {}, {}, {}, {}",
            self.step,
            self.rule,
            pids.join(" "),
            if self.endpoints.is_empty() { "-".to_string() } else { self.endpoints.join(" ") },
            self.payload.as_deref().unwrap_or("-")
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// A communication with no matching typed reduction.
    Fidelity,
    /// A process finished with open endpoints.
    Unfinished,
    /// A term with no reduction rule.
    Stuck,
    /// Heavyweight mode: a shadow lost its last configuration or a
    /// configuration no longer normalizes.
    Preservation,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Fidelity => "fidelity",
            ViolationKind::Unfinished => "unfinished",
            ViolationKind::Stuck => "stuck",
            ViolationKind::Preservation => "preservation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    pub pids: Vec<Pid>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pids: Vec<String> = self.pids.iter().map(|p| format!("P{p}")).collect();
        write!(f, "step {}: {} violation at {}: {}", self.step, self.kind, pids.join(" "), self.message)
    }
}

/// Final partition of the processes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub finished: Vec<Pid>,
    /// Still taking local steps when the budget ran out.
    pub diverging: Vec<Pid>,
    /// Blocked at `request` or `accept`.
    pub waiting: Vec<Pid>,
    /// Blocked on a session primitive.
    pub blocked: Vec<Pid>,
    /// No communication is possible.
    pub terminal: bool,
    /// Every blocked process depends on a diverging or waiting one.
    pub blocked_justified: bool,
}

impl Classification {
    /// Without divergence or waiters nothing may be blocked.
    pub fn lock_free(&self) -> bool {
        !(self.terminal && self.diverging.is_empty() && self.waiting.is_empty()) || self.blocked.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub steps: usize,
    pub processes: usize,
    pub violations: Vec<Violation>,
    /// Steps after which the stacks were not well stacked.
    pub unstacked_steps: Vec<usize>,
    pub classification: Classification,
    pub trace: Vec<TraceEvent>,
    /// Heavyweight mode: normalization checks performed.
    pub preservation_checks: usize,
    /// Heavyweight mode: processes whose shadow exceeded the silent budget.
    pub shadows_abandoned: usize,
}

impl RunOutcome {
    pub fn clean(&self) -> bool {
        self.violations.is_empty() && self.unstacked_steps.is_empty() && self.classification.lock_free()
    }
}

struct Proc {
    expr: E,
    stack: TStack,
    focus: Option<Focus>,
    shadow: Option<Shadow>,
}

impl Proc {
    fn new(expr: E) -> Self {
        let focus = focus(&expr);
        Proc { expr, stack: TStack::default(), focus, shadow: None }
    }

    fn set(&mut self, expr: E) {
        self.focus = focus(&expr);
        self.expr = expr;
    }

    /// Replace the focused redex by `with`.
    fn fill(&mut self, with: E) {
        let path = self.focus.as_ref().expect("focused").path.clone();
        let e = plug(&self.expr, &path, with);
        self.set(e);
    }

    fn action(&self) -> Option<&Action> {
        match &self.focus.as_ref()?.redex {
            Redex::Action(a) => Some(a),
            _ => None,
        }
    }

    fn is_local(&self) -> bool {
        matches!(self.focus.as_ref().map(|f| &f.redex), Some(Redex::Local(..)) | Some(Redex::Action(Action::Spawn(_))))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Enabled {
    Local(Pid),
    Init(Pid, Pid),
    Com(Pid, Pid),
    Sel(Pid, Pid),
    Del(Pid, Pid),
}

impl Enabled {
    fn pids(self) -> [Pid; 2] {
        match self {
            Enabled::Local(p) => [p, p],
            Enabled::Init(a, b) | Enabled::Com(a, b) | Enabled::Sel(a, b) | Enabled::Del(a, b) => [a, b],
        }
    }
}

pub struct System<'p> {
    prog: &'p Program,
    opts: Options,
    procs: Vec<Proc>,
    next_session: u32,
    step: usize,
    rng: ChaCha8Rng,
    cursor: Pid,
    shadows: Option<Shadows<'p>>,
    out: RunOutcome,
}

impl<'p> System<'p> {
    pub fn new(prog: &'p Program, opts: Options) -> Self {
        let shadows = opts.heavyweight.then(|| Shadows::new(&prog.constraints, opts.state_budget));
        let mut main = Proc::new(prog.expr.clone());
        if let Some(sh) = &shadows {
            main.shadow = Some(sh.start(&prog.behaviour));
        }
        let out = RunOutcome {
            seed: opts.seed,
            steps: 0,
            processes: 1,
            violations: vec![],
            unstacked_steps: vec![],
            classification: Classification::default(),
            trace: vec![],
            preservation_checks: 0,
            shadows_abandoned: 0,
        };
        System {
            prog,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            opts,
            procs: vec![main],
            next_session: 1,
            step: 0,
            cursor: 0,
            shadows,
            out,
        }
    }

    fn enabled(&self, local_only: bool) -> Vec<Enabled> {
        let mut out = Vec::new();
        let mut by_ep: BTreeMap<(u32, bool), Pid> = BTreeMap::new();
        let mut requests: BTreeMap<String, Vec<Pid>> = BTreeMap::new();
        let mut accepts: BTreeMap<String, Vec<Pid>> = BTreeMap::new();
        for (pid, p) in self.procs.iter().enumerate() {
            if p.is_local() {
                out.push(Enabled::Local(pid));
            }
            match p.action() {
                Some(Action::Request(c, _)) => requests.entry(c.to_string()).or_default().push(pid),
                Some(Action::Accept(c, _)) => accepts.entry(c.to_string()).or_default().push(pid),
                Some(a) => {
                    if let Some(ep) = a.subject() {
                        by_ep.insert(ep.key(), pid);
                    }
                }
                None => {}
            }
        }
        if local_only {
            return out;
        }
        for (c, reqs) in &requests {
            for acc in accepts.get(c).into_iter().flatten() {
                for r in reqs {
                    out.push(Enabled::Init(*r, *acc));
                }
            }
        }
        for (pid, p) in self.procs.iter().enumerate() {
            let Some(a) = p.action() else { continue };
            let Some(ep) = a.subject() else { continue };
            let Some(&q) = by_ep.get(&ep.co()) else { continue };
            let partner = self.procs[q].action();
            match (a, partner) {
                (Action::Send(..), Some(Action::Recv(_))) => out.push(Enabled::Com(pid, q)),
                (Action::Select(..), Some(Action::Case(..))) => out.push(Enabled::Sel(pid, q)),
                (Action::Deleg(..), Some(Action::Resume(..))) => out.push(Enabled::Del(pid, q)),
                _ => {}
            }
        }
        out
    }

    fn choose(&mut self, en: &[Enabled]) -> Enabled {
        match self.opts.policy {
            Policy::Uniform => en[self.rng.gen_range(0..en.len())],
            Policy::Fair => {
                let n = self.procs.len();
                let dist = |e: &Enabled| e.pids().iter().map(|p| (p + n - self.cursor % n) % n).min().unwrap_or(0);
                let pick = *en.iter().min_by_key(|e| dist(e)).expect("non-empty");
                let first = pick.pids().into_iter().min_by_key(|p| (p + n - self.cursor % n) % n).unwrap_or(0);
                self.cursor = first + 1;
                pick
            }
        }
    }

    fn violate(&mut self, kind: ViolationKind, pids: Vec<Pid>, message: impl Into<String>) {
        self.out.violations.push(Violation { step: self.step, kind, pids, message: message.into() });
    }

    fn log(&mut self, rule: &'static str, pids: Vec<Pid>, endpoints: Vec<String>, payload: Option<String>) {
        if self.opts.keep_trace {
            self.out.trace.push(TraceEvent { step: self.step, rule, pids, endpoints, payload });
        }
    }

    /// Advance a shadow; an empty result is a violation.
    fn shadow_event(&mut self, pid: Pid, ev: Event) -> Vec<Beh> {
        let Some(shs) = &mut self.shadows else { return vec![] };
        let Some(sh) = &self.procs[pid].shadow else { return vec![] };
        let (next, spawned) = shs.step(sh, &ev);
        let lost = next.states.as_ref().is_some_and(|s| s.is_empty());
        let kept = shs.preserved(&next);
        self.procs[pid].shadow = Some(next);
        if lost {
            self.violate(ViolationKind::Preservation, vec![pid], format!("no abstract transition matches {ev:?}"));
        } else if let Err(m) = kept {
            self.violate(ViolationKind::Preservation, vec![pid], m);
        }
        spawned
    }

    fn fire(&mut self, e: Enabled) {
        self.step += 1;
        match e {
            Enabled::Local(pid) => {
                let f = self.procs[pid].focus.clone().expect("focused");
                match f.redex {
                    Redex::Local(rule, next) => {
                        self.procs[pid].fill(next);
                        self.log(rule, vec![pid], vec![], None);
                    }
                    Redex::Action(Action::Spawn(v)) => {
                        let like = self.procs[pid].expr.clone();
                        self.procs[pid].fill(eval::unit(&like));
                        let child_expr = Expr::new(ExprKind::App(v.clone(), eval::unit(&v)), v.span);
                        let child = self.procs.len();
                        self.procs.push(Proc::new(child_expr));
                        self.out.processes += 1;
                        let bodies = self.shadow_event(pid, Event::Spawn);
                        if let Some(shs) = &self.shadows {
                            if self.procs[pid].shadow.as_ref().is_some_and(|s| s.states.is_none()) {
                                self.procs[child].shadow = Some(Shadow { states: None });
                            } else {
                                let mut all = std::collections::BTreeSet::new();
                                let mut abandoned = false;
                                for b in &bodies {
                                    match shs.start(b).states {
                                        Some(s) => all.extend(s),
                                        None => abandoned = true,
                                    }
                                }
                                self.procs[child].shadow = Some(Shadow { states: (!abandoned).then_some(all) });
                            }
                        }
                        self.log("RSpn", vec![pid, child], vec![], None);
                    }
                    _ => unreachable!("only local redexes are enabled locally"),
                }
            }
            Enabled::Init(r, a) => {
                let (Some(Action::Request(c, lr)), Some(Action::Accept(_, la))) =
                    (self.procs[r].action().cloned(), self.procs[a].action().cloned())
                else {
                    unreachable!("init pairs a request with an accept")
                };
                let n = self.next_session;
                self.next_session += 1;
                let p = EndpointRef { session: n, dual: false, label: lr };
                let q = EndpointRef { session: n, dual: true, label: la };
                for (pid, ep, l) in [(r, p, lr), (a, q, la)] {
                    let like = self.procs[pid].expr.clone();
                    self.procs[pid].fill(eval::endpoint_expr(ep, &like));
                    match self.prog.sessions.get(&l) {
                        Some(s) => self.procs[pid].stack.push(ep, s.clone()),
                        None => self.violate(ViolationKind::Fidelity, vec![pid], format!("no session inferred for {l}")),
                    }
                    self.shadow_event(pid, Event::Push(l));
                }
                self.log("RInit", vec![r, a], vec![p.to_string(), q.to_string()], Some(c.to_string()));
            }
            Enabled::Com(s, r) => {
                let Some(Action::Send(p, v)) = self.procs[s].action().cloned() else { unreachable!("sender") };
                let Some(Action::Recv(q)) = self.procs[r].action().cloned() else { unreachable!("receiver") };
                if let Err(m) = self.procs[s].stack.send(p, &v) {
                    self.violate(ViolationKind::Fidelity, vec![s], m);
                }
                if let Err(m) = self.procs[r].stack.recv(q, &v) {
                    self.violate(ViolationKind::Fidelity, vec![r], m);
                }
                let like = self.procs[s].expr.clone();
                self.procs[s].fill(eval::unit(&like));
                self.procs[r].fill(v.clone());
                self.shadow_event(s, Event::Out(p.label));
                self.shadow_event(r, Event::In(q.label));
                self.log("RCom", vec![s, r], vec![p.to_string(), q.to_string()], Some(pretty(&v)));
            }
            Enabled::Sel(s, c) => {
                let Some(Action::Select(p, l)) = self.procs[s].action().cloned() else { unreachable!("selector") };
                let Some(Action::Case(q, arms)) = self.procs[c].action().cloned() else { unreachable!("offer") };
                if let Err(m) = self.procs[s].stack.select(p, &l) {
                    self.violate(ViolationKind::Fidelity, vec![s], m);
                }
                if let Err(m) = self.procs[c].stack.offer(q, &l, &arms) {
                    self.violate(ViolationKind::Fidelity, vec![c], m);
                }
                let like = self.procs[s].expr.clone();
                self.procs[s].fill(eval::unit(&like));
                let path = self.procs[c].focus.as_ref().expect("focused").path.clone();
                let node = eval::at(&self.procs[c].expr, &path).clone();
                match eval::select_arm(&node, &l) {
                    Some(arm) => self.procs[c].fill(arm),
                    None => self.violate(ViolationKind::Stuck, vec![c], format!("case has no arm for {l}")),
                }
                self.shadow_event(s, Event::Select(p.label, l.clone()));
                self.shadow_event(c, Event::Offer(q.label, l.clone()));
                self.log("RSel", vec![s, c], vec![p.to_string(), q.to_string()], Some(l.to_string()));
            }
            Enabled::Del(d, r) => {
                let Some(Action::Deleg(p, carried)) = self.procs[d].action().cloned() else { unreachable!("delegator") };
                let Some(Action::Resume(q, lr)) = self.procs[r].action().cloned() else { unreachable!("resumer") };
                let got = EndpointRef { label: lr, ..carried };
                match self.procs[d].stack.deleg(&self.prog.constraints, p, carried) {
                    Ok(actual) => {
                        if let Err(m) = self.procs[r].stack.resume(&self.prog.constraints, q, got, actual) {
                            self.violate(ViolationKind::Fidelity, vec![r], m);
                        }
                    }
                    Err(m) => self.violate(ViolationKind::Fidelity, vec![d], m),
                }
                let like = self.procs[d].expr.clone();
                self.procs[d].fill(eval::unit(&like));
                let like = self.procs[r].expr.clone();
                self.procs[r].fill(eval::endpoint_expr(got, &like));
                self.shadow_event(d, Event::Deleg(p.label, carried.label));
                self.shadow_event(r, Event::Resume(q.label, lr));
                self.log("RDel", vec![d, r], vec![p.to_string(), q.to_string(), carried.to_string()], Some(got.to_string()));
            }
        }
        let stacks: Vec<&TStack> = self.procs.iter().map(|p| &p.stack).collect();
        if !well_stacked(&self.prog.constraints, &stacks) {
            self.out.unstacked_steps.push(self.step);
        }
    }

    /// Run to quiescence or the step limit, then classify.
    pub fn run(mut self) -> RunOutcome {
        while self.step < self.opts.max_steps {
            let en = self.enabled(false);
            if en.is_empty() {
                break;
            }
            let pick = self.choose(&en);
            self.fire(pick);
        }
        // Grant each process a bounded number of local steps.
        let mut spent = vec![0usize; self.procs.len()];
        loop {
            let en: Vec<Enabled> = self
                .enabled(true)
                .into_iter()
                .filter(|e| spent.get(e.pids()[0]).is_none_or(|s| *s < self.opts.internal_budget))
                .collect();
            let Some(&e) = en.first() else { break };
            let pid = e.pids()[0];
            spent.resize(self.procs.len(), 0);
            spent[pid] += 1;
            self.fire(e);
        }
        self.classify();
        self.out.steps = self.step;
        if let Some(shs) = &self.shadows {
            self.out.preservation_checks = shs.checks;
        }
        self.out.shadows_abandoned =
            self.procs.iter().filter(|p| p.shadow.as_ref().is_some_and(|s| s.states.is_none())).count();
        self.out
    }

    fn classify(&mut self) {
        let mut cl = Classification { terminal: self.enabled(false).iter().all(|e| matches!(e, Enabled::Local(_))), ..Default::default() };
        let mut stuck = Vec::new();
        for (pid, p) in self.procs.iter().enumerate() {
            match p.focus.as_ref().map(|f| &f.redex) {
                None => cl.finished.push(pid),
                Some(Redex::Local(..)) | Some(Redex::Action(Action::Spawn(_))) => cl.diverging.push(pid),
                Some(Redex::Action(a)) if a.is_init() => cl.waiting.push(pid),
                Some(Redex::Action(_)) => cl.blocked.push(pid),
                Some(Redex::Stuck(m)) => stuck.push((pid, m.clone())),
            }
        }
        for (pid, m) in stuck {
            self.violate(ViolationKind::Stuck, vec![pid], m);
        }
        for &pid in &cl.finished.clone() {
            if !self.procs[pid].stack.is_empty() {
                let s = self.procs[pid].stack.to_string();
                self.violate(ViolationKind::Unfinished, vec![pid], format!("finished with open frames {s}"));
            }
            if let (Some(shs), Some(sh)) = (&self.shadows, &self.procs[pid].shadow) {
                if !shs.may_finish(sh) {
                    self.violate(ViolationKind::Preservation, vec![pid], "finished where its behaviour cannot");
                }
            }
        }
        cl.blocked_justified = cl.blocked.iter().all(|p| self.depends_on_live(*p, &cl));
        self.out.classification = cl;
    }

    /// `P` reaches a process in D or W by repeatedly following the dual of
    /// the top endpoint to the process that holds it.
    fn depends_on_live(&self, p: Pid, cl: &Classification) -> bool {
        let owner = |key: (u32, bool)| self.procs.iter().position(|q| q.stack.contains(key));
        let mut seen = BTreeSet::new();
        let mut q = p;
        while seen.insert(q) {
            if cl.diverging.contains(&q) || cl.waiting.contains(&q) {
                return true;
            }
            let Some(top) = self.procs[q].stack.top() else { return false };
            let Some(next) = owner(top.ep.co()) else { return false };
            q = next;
        }
        false
    }
}

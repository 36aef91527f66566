//! Typed endpoint stacks and the fidelity checks applied to each event.

use std::collections::HashSet;
use std::fmt;

use sessionml_core::constraint::{dual, session_subtype, ConstraintSet};
use sessionml_core::syntax::{EndpointRef, Expr};
use sessionml_core::term::{ChoiceLabel, Session};

use crate::eval::conforms;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TFrame {
    pub ep: EndpointRef,
    pub session: Session,
}

/// Frames of one process, bottom first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TStack(pub Vec<TFrame>);

impl TStack {
    pub fn top(&self) -> Option<&TFrame> {
        self.0.last()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Finished frames are closed wherever they are.
    pub fn tidy(&mut self) {
        self.0.retain(|f| f.session != Session::End);
    }

    pub fn push(&mut self, ep: EndpointRef, session: Session) {
        self.0.push(TFrame { ep, session });
        self.tidy();
    }

    pub fn contains(&self, key: (u32, bool)) -> bool {
        self.0.iter().any(|f| f.ep.key() == key)
    }

    /// Top frame, which must belong to `ep`.
    fn top_for(&mut self, ep: EndpointRef) -> Result<&mut TFrame, String> {
        match self.0.last_mut() {
            Some(f) if f.ep.key() == ep.key() => Ok(f),
            Some(f) => Err(format!("{ep} is used while {} is on top of the stack", f.ep)),
            None => Err(format!("{ep} is used with an empty stack")),
        }
    }

    pub fn send(&mut self, ep: EndpointRef, v: &Expr) -> Result<(), String> {
        let f = self.top_for(ep)?;
        match &f.session {
            Session::Out(t, k) if conforms(v, t) => {
                f.session = (**k).clone();
            }
            Session::Out(t, _) => return Err(format!("{ep} sends a value that is not of type {t}")),
            s => return Err(format!("{ep} sends but its session is {s}")),
        }
        self.tidy();
        Ok(())
    }

    pub fn recv(&mut self, ep: EndpointRef, v: &Expr) -> Result<(), String> {
        let f = self.top_for(ep)?;
        match &f.session {
            Session::In(t, k) if conforms(v, t) => {
                f.session = (**k).clone();
            }
            Session::In(t, _) => return Err(format!("{ep} receives a value that is not of type {t}")),
            s => return Err(format!("{ep} receives but its session is {s}")),
        }
        self.tidy();
        Ok(())
    }

    pub fn select(&mut self, ep: EndpointRef, l: &ChoiceLabel) -> Result<(), String> {
        let f = self.top_for(ep)?;
        match &f.session {
            Session::Internal(m) => match m.get(l) {
                Some(k) => f.session = k.clone(),
                None => return Err(format!("{ep} selects {l}, which its session does not allow")),
            },
            s => return Err(format!("{ep} selects {l} but its session is {s}")),
        }
        self.tidy();
        Ok(())
    }

    pub fn offer(&mut self, ep: EndpointRef, l: &ChoiceLabel, arms: &[ChoiceLabel]) -> Result<(), String> {
        if !arms.contains(l) {
            return Err(format!("{ep} receives {l} but the case has no such arm"));
        }
        let f = self.top_for(ep)?;
        match &f.session {
            Session::External(e) => match e.branches.get(l) {
                Some(k) => f.session = k.clone(),
                None => return Err(format!("{ep} receives {l}, which its session does not offer")),
            },
            s => return Err(format!("{ep} receives {l} but its session is {s}")),
        }
        self.tidy();
        Ok(())
    }

    /// Delegate `carried` over `carrier`; returns the carried frame's session.
    pub fn deleg(&mut self, c: &ConstraintSet, carrier: EndpointRef, carried: EndpointRef) -> Result<Session, String> {
        let n = self.0.len();
        let below = match n.checked_sub(2).map(|i| &self.0[i]) {
            Some(f) if f.ep.key() == carried.key() => f.session.clone(),
            _ => return Err(format!("{carried} is not directly below the carrier {carrier}")),
        };
        let f = self.top_for(carrier)?;
        match &f.session {
            Session::Deleg(d, k) if session_subtype(c, &below, d) => {
                f.session = (**k).clone();
            }
            Session::Deleg(d, _) => return Err(format!("{carried} has session {below}, which is not a {d}")),
            s => return Err(format!("{carrier} delegates but its session is {s}")),
        }
        self.0.remove(n - 2);
        self.tidy();
        Ok(below)
    }

    /// Receive `got` (with session `actual`) over `carrier`.
    pub fn resume(&mut self, c: &ConstraintSet, carrier: EndpointRef, got: EndpointRef, actual: Session) -> Result<(), String> {
        let f = self.top_for(carrier)?;
        match &f.session {
            Session::Resume(d, k) if session_subtype(c, &actual, d) => {
                f.session = (**k).clone();
            }
            Session::Resume(d, _) => return Err(format!("{got} arrives with session {actual}, which is not a {d}")),
            s => return Err(format!("{carrier} resumes but its session is {s}")),
        }
        let n = self.0.len();
        self.0.insert(n - 1, TFrame { ep: got, session: actual });
        self.tidy();
        Ok(())
    }
}

impl fmt::Display for TStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        let parts: Vec<String> = self.0.iter().rev().map(|fr| format!("({}:{})", fr.ep, fr.session)).collect();
        f.write_str(&parts.join(" . "))
    }
}

/// Whether dual top frames can be removed pairwise until every stack is
/// empty. Backtracks over the removable pairs, memoising failed states.
pub fn well_stacked(c: &ConstraintSet, stacks: &[&TStack]) -> bool {
    type State = Vec<Vec<((u32, bool), Session)>>;
    fn norm(mut s: State) -> State {
        s.retain(|x| !x.is_empty());
        s.sort();
        s
    }
    fn go(c: &ConstraintSet, s: State, failed: &mut HashSet<State>) -> bool {
        if s.is_empty() {
            return true;
        }
        if failed.contains(&s) {
            return false;
        }
        for i in 0..s.len() {
            let (k, eta) = s[i].last().expect("non-empty").clone();
            let co = (k.0, !k.1);
            for j in 0..s.len() {
                if i == j {
                    continue;
                }
                let Some((k2, eta2)) = s[j].last() else { continue };
                if *k2 != co || !dual(c, &eta, eta2) {
                    continue;
                }
                let mut next = s.clone();
                next[i].pop();
                next[j].pop();
                if go(c, norm(next), failed) {
                    return true;
                }
            }
        }
        failed.insert(s);
        false
    }
    let s: State = stacks.iter().map(|t| t.0.iter().map(|f| (f.ep.key(), f.session.clone())).collect()).collect();
    go(c, norm(s), &mut HashSet::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sessionml_core::term::{Label, Type};

    fn ep(n: u32, dual: bool) -> EndpointRef {
        EndpointRef { session: n, dual, label: Label(1) }
    }

    fn frame(n: u32, d: bool, s: Session) -> TStack {
        TStack(vec![TFrame { ep: ep(n, d), session: s }])
    }

    #[test]
    fn empty_stacks_are_well_stacked() {
        assert!(well_stacked(&ConstraintSet::new(), &[&TStack::default(), &TStack::default()]));
    }

    #[test]
    fn dual_tops_are_removed() {
        let a = frame(1, false, Session::out(Type::Int, Session::End));
        let b = frame(1, true, Session::inp(Type::Int, Session::End));
        assert!(well_stacked(&ConstraintSet::new(), &[&a, &b]));
    }

    #[test]
    fn crossed_stacks_are_not_well_stacked() {
        let s = Session::inp(Type::Int, Session::End);
        let d = Session::out(Type::Int, Session::End);
        // p1 below p2 in one process; the duals each on top elsewhere, but
        // the owner of ~p2 also holds ~p1 above it.
        let client = TStack(vec![TFrame { ep: ep(1, false), session: s.clone() }, TFrame { ep: ep(2, false), session: s }]);
        let server = TStack(vec![TFrame { ep: ep(2, true), session: d.clone() }, TFrame { ep: ep(1, true), session: d }]);
        assert!(!well_stacked(&ConstraintSet::new(), &[&client, &server]));
    }

    #[test]
    fn send_checks_the_payload() {
        let mut t = frame(1, false, Session::out(Type::Bool, Session::End));
        let v = sessionml_core::syntax::parse_program("1").unwrap();
        assert!(t.send(ep(1, false), &v).is_err());
    }
}

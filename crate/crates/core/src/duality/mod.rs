//! Duality inference: make the two ends of every channel complementary.
//!
//! A worklist of `left >< right` obligations is decomposed structurally.
//! An open session facing a known shape is expanded to the mirror shape
//! with fresh continuations. Obligations between two open sessions are
//! deferred; if nothing else can progress they are closed to `end`.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraint::{dual, ConstraintSet};
use crate::term::{ChannelEnd, Session, SessionSubst, SesVar, Supply, Type};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{message}: {left} >< {right}")]
pub struct DualityError {
    pub message: String,
    pub left: String,
    pub right: String,
    pub channel: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DualityResult {
    pub sigma: SessionSubst,
    pub constraints: ConstraintSet,
}

type Job = (Session, Session, Option<String>);

struct D<'a> {
    c: ConstraintSet,
    sigma: SessionSubst,
    supply: &'a mut Supply,
    work: VecDeque<Job>,
    rng: Option<ChaCha8Rng>,
}

/// Solve every channel duality in `c`; `seed` randomises the rule order.
pub fn infer_duality(c: &ConstraintSet, supply: &mut Supply, seed: Option<u64>) -> Result<DualityResult, DualityError> {
    let mut d = D {
        c: c.clone(),
        sigma: SessionSubst::id(),
        supply,
        work: VecDeque::new(),
        rng: seed.map(ChaCha8Rng::seed_from_u64),
    };
    for (a, b) in d.c.take_duals() {
        d.work.push_back((a, b, None));
    }
    for (end, s) in d.c.channels().clone() {
        if end.accept {
            if !d.c.channels().contains_key(&ChannelEnd::request(end.chan.clone())) {
                let v = Session::Var(d.supply.ses());
                d.work.push_back((v, s, Some(end.chan.to_string())));
            }
            continue;
        }
        let other = d.c.channel(&ChannelEnd::accept(end.chan.clone())).cloned();
        let other = other.unwrap_or_else(|| Session::Var(d.supply.ses()));
        d.work.push_back((s, other, Some(end.chan.to_string())));
    }
    d.solve()?;
    d.finish()
}

fn err(message: impl Into<String>, a: &Session, b: &Session, ch: &Option<String>) -> DualityError {
    DualityError { message: message.into(), left: a.to_string(), right: b.to_string(), channel: ch.clone() }
}

impl D<'_> {
    fn bind(&mut self, v: SesVar, s: Session) {
        let delta = SessionSubst::single(v, s);
        self.c.apply_sessions(&delta);
        self.sigma = self.sigma.then(&delta);
    }

    fn fresh(&mut self) -> Session {
        Session::Var(self.supply.ses())
    }

    fn take(&mut self) -> Option<Job> {
        let n = self.work.len();
        match (&mut self.rng, n) {
            (_, 0) => None,
            (Some(r), _) => self.work.remove(r.gen_range(0..n)),
            (None, _) => self.work.pop_front(),
        }
    }

    fn solve(&mut self) -> Result<(), DualityError> {
        let mut idle = 0usize;
        while let Some((a, b, ch)) = self.take() {
            let (a, b) = (self.sigma.apply(&a), self.sigma.apply(&b));
            if let (Session::Var(x), Session::Var(y)) = (&a, &b) {
                if x != y && idle <= self.work.len() {
                    idle += 1;
                    self.work.push_back((a, b, ch));
                    continue;
                }
                // Nothing else constrains either side: close both.
                self.bind(*x, Session::End);
                self.work.push_back((Session::End, b, ch));
                idle = 0;
                continue;
            }
            idle = 0;
            self.step(a, b, ch)?;
        }
        Ok(())
    }

    fn step(&mut self, a: Session, b: Session, ch: Option<String>) -> Result<(), DualityError> {
        use Session as S;
        match (&a, &b) {
            (S::End, S::End) => Ok(()),
            (S::Out(t1, k1), S::In(t2, k2)) | (S::In(t2, k2), S::Out(t1, k1)) => {
                self.c.add_ty_sub(t1.clone(), t2.clone());
                self.work.push_back(((**k1).clone(), (**k2).clone(), ch));
                Ok(())
            }
            (S::Deleg(d1, k1), S::Resume(d2, k2)) | (S::Resume(d2, k2), S::Deleg(d1, k1)) => {
                self.sub(d1, d2, &ch)?;
                self.work.push_back(((**k1).clone(), (**k2).clone(), ch));
                Ok(())
            }
            (S::Internal(m), S::External(e)) | (S::External(e), S::Internal(m)) => {
                if m.is_empty() {
                    return Err(err("internal choice without labels", &a, &b, &ch));
                }
                if let Some(l) = m.keys().find(|l| !e.active.contains(*l)) {
                    return Err(err(format!("label {l} may be selected but is not always offered"), &a, &b, &ch));
                }
                for (l, s) in m.iter() {
                    self.work.push_back((s.clone(), e.branches[l].clone(), ch.clone()));
                }
                Ok(())
            }
            (S::Var(x), t) | (t, S::Var(x)) => {
                if t.mentions_ses_var(*x) {
                    return Err(err(format!("{x} would contain itself"), &a, &b, &ch));
                }
                let shape = self.mirror_shape(t).ok_or_else(|| err("no dual shape exists", &a, &b, &ch))?;
                self.bind(*x, shape.clone());
                self.work.push_back((shape, t.clone(), ch));
                Ok(())
            }
            _ => Err(err("sessions are not dual", &a, &b, &ch)),
        }
    }

    /// Head constructor dual to `t`, with fresh parts.
    fn mirror_shape(&mut self, t: &Session) -> Option<Session> {
        Some(match t {
            Session::End => Session::End,
            Session::Out(..) => Session::inp(Type::Var(self.supply.ty()), self.fresh()),
            Session::In(..) => Session::out(Type::Var(self.supply.ty()), self.fresh()),
            Session::Deleg(..) => {
                let d = self.fresh();
                Session::resume(d, self.fresh())
            }
            Session::Resume(..) => {
                let d = self.fresh();
                Session::deleg(d, self.fresh())
            }
            Session::Internal(m) => {
                let branches = m.keys().map(|l| (l.clone(), Session::Var(self.supply.ses()))).collect();
                Session::external(m.keys().cloned().collect(), branches)
            }
            Session::External(e) if !e.active.is_empty() => {
                Session::internal(e.active.iter().map(|l| (l.clone(), Session::Var(self.supply.ses()))).collect())
            }
            _ => return None,
        })
    }

    /// `a <= b` on sessions whose choices are already resolved.
    fn sub(&mut self, a: &Session, b: &Session, ch: &Option<String>) -> Result<(), DualityError> {
        use Session as S;
        let (a, b) = (self.sigma.apply(a), self.sigma.apply(b));
        match (&a, &b) {
            (S::End, S::End) => Ok(()),
            (S::Var(x), S::Var(y)) if x == y => Ok(()),
            (S::Var(x), t) | (t, S::Var(x)) => {
                if t.mentions_ses_var(*x) {
                    return Err(err(format!("{x} would contain itself"), &a, &b, ch));
                }
                self.bind(*x, t.clone());
                Ok(())
            }
            (S::Out(t1, k1), S::Out(t2, k2)) => {
                self.c.add_ty_sub(t2.clone(), t1.clone());
                self.sub(k1, k2, ch)
            }
            (S::In(t1, k1), S::In(t2, k2)) => {
                self.c.add_ty_sub(t1.clone(), t2.clone());
                self.sub(k1, k2, ch)
            }
            (S::Deleg(d1, k1), S::Deleg(d2, k2)) => {
                self.sub(d2, d1, ch)?;
                self.sub(k1, k2, ch)
            }
            (S::Resume(d1, k1), S::Resume(d2, k2)) => {
                self.sub(d1, d2, ch)?;
                self.sub(k1, k2, ch)
            }
            (S::Internal(m1), S::Internal(m2)) => {
                for (l, s2) in m2.iter() {
                    let s1 = m1.get(l).ok_or_else(|| err(format!("delegated session cannot select {l}"), &a, &b, ch))?;
                    self.sub(s1, s2, ch)?;
                }
                Ok(())
            }
            (S::External(e1), S::External(e2)) => {
                if !e1.active.is_subset(&e2.active) || !e2.branches.keys().all(|l| e1.branches.contains_key(l)) {
                    return Err(err("delegated session offers different labels", &a, &b, ch));
                }
                for (l, s2) in &e2.branches {
                    self.sub(&e1.branches[l], s2, ch)?;
                }
                Ok(())
            }
            _ => Err(err("delegated session does not match", &a, &b, ch)),
        }
    }

    fn finish(mut self) -> Result<DualityResult, DualityError> {
        let mut rest = BTreeSet::new();
        for s in self.c.channels().values() {
            s.ses_vars(&mut rest);
        }
        for v in rest {
            self.bind(v, Session::End);
        }
        let chans = self.c.channels().clone();
        for (end, s) in &chans {
            if end.accept {
                continue;
            }
            if let Some(o) = chans.get(&ChannelEnd::accept(end.chan.clone())) {
                if !dual(&self.c, s, o) {
                    return Err(err("inferred sessions fail the duality check", s, o, &Some(end.chan.to_string())));
                }
            }
        }
        Ok(DualityResult { sigma: self.sigma, constraints: self.c })
    }
}

#[cfg(test)]
mod tests;

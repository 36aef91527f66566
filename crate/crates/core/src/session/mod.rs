//! Session inference: symbolic execution of a behaviour that refines
//! session variables until every stack discipline check passes.

mod mc;
pub mod stack;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constraint::ConstraintSet;
use crate::term::{Beh, ChoiceVar, Label, RegVar, Session, SessionSubst, Supply};

pub use stack::{Frame, Stack};

/// Default cap on symbolic steps per analysis.
pub const DEFAULT_STEP_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionErrorKind {
    /// A label pushed twice on one stack.
    Linearity,
    /// No rule applies to the focus.
    Stuck,
    /// A frame still has protocol left when its process ends.
    Unfinished,
    /// Choice labels cannot be reconciled.
    Choice,
    /// A session would contain itself.
    Occurs,
    Budget,
}

impl fmt::Display for SessionErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionErrorKind::Linearity => "linearity",
            SessionErrorKind::Stuck => "stuck",
            SessionErrorKind::Unfinished => "unfinished",
            SessionErrorKind::Choice => "choice",
            SessionErrorKind::Occurs => "occurs",
            SessionErrorKind::Budget => "budget",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind}: {message} [stack {stack}; focus {focus}]")]
pub struct SessionError {
    pub kind: SessionErrorKind,
    pub message: String,
    /// Region of the offending action, for source positions.
    pub region: Option<RegVar>,
    pub label: Option<Label>,
    pub stack: String,
    pub focus: String,
}

/// Result of session inference, with choice variables resolved.
#[derive(Clone, Debug)]
pub struct SessionInference {
    pub sigma: SessionSubst,
    pub constraints: ConstraintSet,
}

/// Observer for symbolic steps: `(rule, stack, focus)`.
pub type TraceSink<'a> = &'a mut dyn FnMut(&str, &Stack, &Beh);

/// Run session inference from the empty stack.
pub fn infer_sessions(
    b: &Beh,
    c: &ConstraintSet,
    supply: &mut Supply,
    trace: Option<TraceSink<'_>>,
) -> Result<SessionInference, SessionError> {
    let (sigma, c1) = mc::check(b, c, supply, trace, DEFAULT_STEP_BUDGET)?;
    let choice = resolve_choices(&c1)?;
    let mut c2 = c1;
    let vars: Vec<ChoiceVar> = c2.choices().keys().copied().collect();
    for v in vars {
        c2.remove_choice(v);
    }
    c2.apply_sessions(&choice);
    Ok(SessionInference { sigma: sigma.then(&choice), constraints: c2 })
}

/// Substitution replacing each choice variable by its binding, closed
/// under nested choice variables.
pub fn resolve_choices(c: &ConstraintSet) -> Result<SessionSubst, SessionError> {
    fn go(
        v: ChoiceVar,
        c: &ConstraintSet,
        done: &mut BTreeMap<ChoiceVar, Session>,
        active: &mut BTreeSet<ChoiceVar>,
    ) -> Result<Session, SessionError> {
        if let Some(s) = done.get(&v) {
            return Ok(s.clone());
        }
        if !active.insert(v) {
            return Err(SessionError {
                kind: SessionErrorKind::Occurs,
                message: format!("choice variable k{} is bound to a session containing itself", v.0),
                region: None,
                label: None,
                stack: String::new(),
                focus: String::new(),
            });
        }
        let body = c.choice(v).cloned().unwrap_or(Session::End);
        let mut inner = BTreeSet::new();
        body.choice_vars(&mut inner);
        let mut sub = SessionSubst::id();
        for w in inner {
            let s = go(w, c, done, active)?;
            sub = sub.then(&SessionSubst::single_choice(w, s));
        }
        let out = sub.apply(&body);
        active.remove(&v);
        done.insert(v, out.clone());
        Ok(out)
    }
    let mut done = BTreeMap::new();
    let mut active = BTreeSet::new();
    let mut sigma = SessionSubst::id();
    for v in c.choices().keys() {
        let s = go(*v, c, &mut done, &mut active)?;
        sigma = sigma.then(&SessionSubst::single_choice(*v, s));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests;

//! Session substitutions over plain and choice variables.

use std::collections::BTreeMap;
use std::fmt;

use super::behaviour::Beh;
use super::session::Session;
use super::vars::{ChoiceVar, SesVar};

/// Idempotent map from session variables (plain and choice) to sessions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionSubst {
    ses: BTreeMap<SesVar, Session>,
    choice: BTreeMap<ChoiceVar, Session>,
}

impl SessionSubst {
    pub fn id() -> Self {
        Self::default()
    }

    pub fn single(v: SesVar, s: Session) -> Self {
        let mut m = Self::default();
        m.ses.insert(v, s);
        m
    }

    pub fn single_choice(v: ChoiceVar, s: Session) -> Self {
        let mut m = Self::default();
        m.choice.insert(v, s);
        m
    }

    pub fn is_id(&self) -> bool {
        self.ses.is_empty() && self.choice.is_empty()
    }

    pub fn get(&self, v: SesVar) -> Option<&Session> {
        self.ses.get(&v)
    }

    pub fn get_choice(&self, v: ChoiceVar) -> Option<&Session> {
        self.choice.get(&v)
    }

    pub fn ses_entries(&self) -> impl Iterator<Item = (&SesVar, &Session)> {
        self.ses.iter()
    }

    pub fn choice_entries(&self) -> impl Iterator<Item = (&ChoiceVar, &Session)> {
        self.choice.iter()
    }

    pub fn apply(&self, s: &Session) -> Session {
        if self.is_id() {
            return s.clone();
        }
        s.rewrite(&mut |n| match n {
            Session::Var(v) => self.ses.get(&v).cloned().unwrap_or(n),
            Session::IVar(v) | Session::EVar(v) => self.choice.get(&v).cloned().unwrap_or(n),
            other => other,
        })
    }

    pub fn apply_beh(&self, b: &Beh) -> Beh {
        if self.is_id() {
            return b.clone();
        }
        b.map_sessions(&mut |s| self.apply(s))
    }

    /// `later ∘ self`: apply `self` first, then `later`.
    pub fn then(&self, later: &SessionSubst) -> SessionSubst {
        if later.is_id() {
            return self.clone();
        }
        let mut out = SessionSubst::default();
        for (v, s) in &self.ses {
            out.ses.insert(*v, later.apply(s));
        }
        for (v, s) in &self.choice {
            out.choice.insert(*v, later.apply(s));
        }
        for (v, s) in &later.ses {
            out.ses.entry(*v).or_insert_with(|| s.clone());
        }
        for (v, s) in &later.choice {
            out.choice.entry(*v).or_insert_with(|| s.clone());
        }
        out
    }
}

impl fmt::Display for SessionSubst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        let mut first = true;
        for (v, s) in &self.ses {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{v}->{s}")?;
        }
        for (v, s) in &self.choice {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "k{}->{s}", v.0)?;
        }
        f.write_str("]")
    }
}

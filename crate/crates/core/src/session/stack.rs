//! Endpoint stacks with their label history.

use std::collections::BTreeSet;
use std::fmt;

use crate::term::{Label, Session, SessionSubst};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    pub label: Label,
    pub session: Session,
}

/// Frames bottom first; `history` holds every label ever pushed.
///
/// Invariant: every frame label is in `history`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stack {
    pub frames: Vec<Frame>,
    pub history: BTreeSet<Label>,
}

impl Stack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// False when the label was pushed before.
    pub fn push(&mut self, label: Label, session: Session) -> bool {
        if !self.history.insert(label) {
            return false;
        }
        self.frames.push(Frame { label, session });
        true
    }

    pub fn top(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn top_mut(&mut self) -> Option<&mut Frame> {
        self.frames.last_mut()
    }

    /// Second frame from the top.
    pub fn below(&self) -> Option<&Frame> {
        self.frames.len().checked_sub(2).map(|i| &self.frames[i])
    }

    /// Closed frames are structurally invisible.
    pub fn drop_ended(&mut self) {
        self.frames.retain(|f| f.session != Session::End);
    }

    pub fn apply(&mut self, sigma: &SessionSubst) {
        if sigma.is_id() {
            return;
        }
        for f in &mut self.frames {
            f.session = sigma.apply(&f.session);
        }
    }

    pub fn with_top(&self, s: Session) -> Stack {
        let mut out = self.clone();
        if let Some(t) = out.top_mut() {
            t.session = s;
        }
        out
    }
}

/// Top frame first, `e` for the empty stack.
impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frames.is_empty() {
            return f.write_str("e");
        }
        for (i, fr) in self.frames.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" . ")?;
            }
            write!(f, "({}:{})", fr.label, fr.session)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_push() {
        let mut s = Stack::new();
        assert!(s.push(Label(1), Session::End));
        s.drop_ended();
        assert!(s.is_empty());
        assert!(!s.push(Label(1), Session::End));
    }

    #[test]
    fn display_is_top_first() {
        let mut s = Stack::new();
        s.push(Label(1), Session::End);
        s.push(Label(2), Session::End);
        assert_eq!(s.to_string(), "(l2:end) . (l1:end)");
        assert_eq!(Stack::new().to_string(), "e");
    }
}

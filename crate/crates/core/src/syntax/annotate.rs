//! Static endpoint labels for request, accept and resume sites.

use std::collections::BTreeMap;

use crate::term::Label;

use super::ast::{Const, Span, E};

/// Label every request/accept/resume occurrence in left-to-right order.
///
/// Returns the labelled tree and the source span of each label.
pub fn annotate(e: &E) -> (E, BTreeMap<Label, Span>) {
    let mut next = 0u32;
    let mut sites = Vec::new();
    // Collect spans first: map_consts visits constants in pre-order, as walk does.
    e.walk(&mut |x| {
        if let super::ast::ExprKind::Const(Const::Request { .. } | Const::Accept { .. } | Const::Resume(_)) = x.kind {
            sites.push(x.span)
        }
    });
    let out = e.map_consts(&mut |c| {
        let mut fresh = || {
            next += 1;
            Some(Label(next))
        };
        match c {
            Const::Request { chan, .. } => Const::Request { chan: chan.clone(), label: fresh() },
            Const::Accept { chan, .. } => Const::Accept { chan: chan.clone(), label: fresh() },
            Const::Resume(_) => Const::Resume(fresh()),
            other => other.clone(),
        }
    });
    let spans = sites.into_iter().enumerate().map(|(i, s)| (Label(i as u32 + 1), s)).collect();
    (out, spans)
}

/// Erase every label.
pub fn strip(e: &E) -> E {
    e.map_consts(&mut |c| match c {
        Const::Request { chan, .. } => Const::Request { chan: chan.clone(), label: None },
        Const::Accept { chan, .. } => Const::Accept { chan: chan.clone(), label: None },
        Const::Resume(_) => Const::Resume(None),
        other => other.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn labels(e: &E) -> Vec<Label> {
        let mut out = Vec::new();
        e.walk(&mut |x| {
            if let super::super::ast::ExprKind::Const(c) = &x.kind {
                out.extend(c.label());
            }
        });
        out
    }

    #[test]
    fn three_sites_three_labels() {
        let e = parse_program("let val p = accept c () val q = accept c () val r = request d () in ()").unwrap();
        let (a, spans) = annotate(&e);
        assert_eq!(labels(&a), vec![Label(1), Label(2), Label(3)]);
        assert_eq!(spans.len(), 3);
    }

    #[test]
    fn no_sites_no_change() {
        let e = parse_program("let x = 1 in x + 2").unwrap();
        assert_eq!(annotate(&e).0, e);
    }

    #[test]
    fn idempotent_through_strip() {
        let e = parse_program("let val p = request c () in resume p").unwrap();
        let (once, _) = annotate(&e);
        let (twice, _) = annotate(&strip(&once));
        assert_eq!(once, twice);
    }
}

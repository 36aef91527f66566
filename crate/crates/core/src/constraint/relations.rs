//! Derivability, functional subtyping, session subtyping and duality.

use crate::term::{Beh, BehVar, Session, Type};

use super::set::{Constraint, ConstraintSet, RegTerm};

/// Membership in the reflexive, transitive, compatible closure.
pub fn derives(c: &ConstraintSet, k: &Constraint) -> bool {
    let cl = c.closure();
    match k {
        Constraint::TySub(a, b) => cl.ty_le(a, b),
        Constraint::Region(r, t) => cl.region_eq(RegTerm::Var(*r), *t),
        Constraint::BehSub(b, v) => derives_beh_sub(c, b, *v),
        Constraint::TyCf(t) => super::wf::confined_type(c, t),
        Constraint::BehCf(b) => super::wf::confined_behaviour(c, b),
        other => c.iter().any(|x| &x == other),
    }
}

/// `b ⊆ v` holds when `b` is `v`, a variable below `v`, or a binding of such a variable.
pub fn derives_beh_sub(c: &ConstraintSet, b: &Beh, v: BehVar) -> bool {
    let cl = c.closure();
    if let Beh::Var(w) = b {
        if cl.beh_le(*w, v) {
            return true;
        }
    }
    c.beh_sub_entries().any(|(w, x)| x == b && cl.beh_le(w, v))
}

pub fn subtype(c: &ConstraintSet, a: &Type, b: &Type) -> bool {
    c.closure().ty_le(a, b)
}

/// Subtyping on resolved finite sessions.
///
/// Internal choice offering more labels is the subtype; external choice
/// with fewer active labels is the subtype.
pub fn session_subtype(c: &ConstraintSet, a: &Session, b: &Session) -> bool {
    match (a, b) {
        (Session::End, Session::End) => true,
        (Session::Out(t1, k1), Session::Out(t2, k2)) => subtype(c, t2, t1) && session_subtype(c, k1, k2),
        (Session::In(t1, k1), Session::In(t2, k2)) => subtype(c, t1, t2) && session_subtype(c, k1, k2),
        (Session::Deleg(d1, k1), Session::Deleg(d2, k2)) => session_subtype(c, d2, d1) && session_subtype(c, k1, k2),
        (Session::Resume(d1, k1), Session::Resume(d2, k2)) => session_subtype(c, d1, d2) && session_subtype(c, k1, k2),
        (Session::Internal(m1), Session::Internal(m2)) => m2
            .iter()
            .all(|(l, s2)| m1.get(l).is_some_and(|s1| session_subtype(c, s1, s2))),
        (Session::External(e1), Session::External(e2)) => {
            e1.active.is_subset(&e2.active)
                && e2.branches.keys().all(|l| e1.branches.contains_key(l))
                && e2.branches.iter().all(|(l, s2)| session_subtype(c, &e1.branches[l], s2))
        }
        (Session::Var(x), Session::Var(y)) => x == y,
        (Session::IVar(x), Session::IVar(y)) | (Session::EVar(x), Session::EVar(y)) => x == y,
        _ => false,
    }
}

/// Duality on resolved sessions, including the symmetric rules.
pub fn dual(c: &ConstraintSet, a: &Session, b: &Session) -> bool {
    match (a, b) {
        (Session::End, Session::End) => true,
        (Session::Out(t1, k1), Session::In(t2, k2)) => subtype(c, t1, t2) && dual(c, k1, k2),
        (Session::In(_, _), Session::Out(_, _)) => dual(c, b, a),
        (Session::Deleg(d1, k1), Session::Resume(d2, k2)) => session_subtype(c, d1, d2) && dual(c, k1, k2),
        (Session::Resume(_, _), Session::Deleg(_, _)) => dual(c, b, a),
        (Session::Internal(m), Session::External(e)) => {
            !m.is_empty()
                && m.keys().all(|l| e.active.contains(l))
                && m.iter().all(|(l, s)| dual(c, s, &e.branches[l]))
        }
        (Session::External(_), Session::Internal(_)) => dual(c, b, a),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{ChoiceLabel, Label, RegVar, TyVar};
    use std::collections::BTreeMap;

    fn l(s: &str) -> ChoiceLabel {
        ChoiceLabel::new(s)
    }

    fn ends(ls: &[&str]) -> BTreeMap<ChoiceLabel, Session> {
        ls.iter().map(|x| (l(x), Session::End)).collect()
    }

    #[test]
    fn derivability_basics() {
        let c = ConstraintSet::from_constraints([Constraint::Region(RegVar(1), RegTerm::Label(Label(1)))]);
        assert!(derives(&c, &Constraint::Region(RegVar(1), RegTerm::Label(Label(1)))));
        let (a, b, d) = (Type::Var(TyVar(1)), Type::Var(TyVar(2)), Type::Var(TyVar(3)));
        let c = ConstraintSet::from_constraints([
            Constraint::TySub(a.clone(), b.clone()),
            Constraint::TySub(b.clone(), d.clone()),
        ]);
        assert!(derives(&c, &Constraint::TySub(a, d)));
    }

    #[test]
    fn pair_inclusion_decomposes() {
        let (a1, a2, b1, b2) = (1, 2, 3, 4).into_types();
        let c = ConstraintSet::from_constraints([Constraint::TySub(
            Type::pair(a1.clone(), a2.clone()),
            Type::pair(b1.clone(), b2.clone()),
        )]);
        assert!(derives(&c, &Constraint::TySub(a1, b1)));
        assert!(derives(&c, &Constraint::TySub(a2, b2)));
    }

    trait IntoTypes {
        fn into_types(self) -> (Type, Type, Type, Type);
    }
    impl IntoTypes for (u32, u32, u32, u32) {
        fn into_types(self) -> (Type, Type, Type, Type) {
            (Type::Var(TyVar(self.0)), Type::Var(TyVar(self.1)), Type::Var(TyVar(self.2)), Type::Var(TyVar(self.3)))
        }
    }

    #[test]
    fn functional_subtyping() {
        let e = ConstraintSet::new();
        assert!(subtype(&e, &Type::Int, &Type::Int));
        let c = ConstraintSet::from_constraints([Constraint::TySub(Type::Var(TyVar(1)), Type::Var(TyVar(2)))]);
        assert!(subtype(&c, &Type::Var(TyVar(1)), &Type::Var(TyVar(2))));
        let c = ConstraintSet::from_constraints([Constraint::BehSub(Beh::Var(BehVar(1)), BehVar(2))]);
        assert!(subtype(
            &c,
            &Type::fun(Type::Int, Type::Int, BehVar(1)),
            &Type::fun(Type::Int, Type::Int, BehVar(2))
        ));
        assert!(!subtype(
            &c,
            &Type::fun(Type::Int, Type::Int, BehVar(2)),
            &Type::fun(Type::Int, Type::Int, BehVar(1))
        ));
    }

    #[test]
    fn endpoint_subtyping_follows_regions() {
        let c = ConstraintSet::from_constraints([Constraint::Region(RegVar(1), RegTerm::Var(RegVar(2)))]);
        assert!(subtype(&c, &Type::Ses(RegVar(1)), &Type::Ses(RegVar(2))));
        assert!(!subtype(&ConstraintSet::new(), &Type::Ses(RegVar(1)), &Type::Ses(RegVar(2))));
    }

    #[test]
    fn internal_choice_with_more_labels_is_the_subtype() {
        let e = ConstraintSet::new();
        let one = Session::internal(ends(&["L1"]));
        let two = Session::internal(ends(&["L1", "L2"]));
        assert!(session_subtype(&e, &two, &one));
        assert!(!session_subtype(&e, &one, &two));
    }

    #[test]
    fn external_choice_subtyping() {
        let e = ConstraintSet::new();
        let a = Session::external([l("L1")].into_iter().collect(), ends(&["L1", "L2"]));
        let b = Session::external([l("L1"), l("L2")].into_iter().collect(), ends(&["L1", "L2"]));
        assert!(session_subtype(&e, &a, &b));
        assert!(!session_subtype(&e, &b, &a));
    }

    #[test]
    fn duality_examples() {
        let e = ConstraintSet::new();
        assert!(dual(&e, &Session::End, &Session::End));
        let p = Session::out(Type::Int, Session::inp(Type::Int, Session::End));
        let q = Session::inp(Type::Int, Session::out(Type::Int, Session::End));
        assert!(dual(&e, &p, &q));
        assert!(dual(&e, &q, &p));
        let i = Session::internal(ends(&["L1"]));
        let x = Session::external([l("L1"), l("L2")].into_iter().collect(), ends(&["L1", "L2"]));
        assert!(dual(&e, &i, &x));
        let x_inactive = Session::external([l("L2")].into_iter().collect(), ends(&["L1", "L2"]));
        assert!(!dual(&e, &i, &x_inactive));
        assert!(!dual(&e, &Session::out(Type::Int, Session::End), &Session::out(Type::Int, Session::End)));
    }
}

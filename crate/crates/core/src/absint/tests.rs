use super::*;
use crate::constraint::Constraint;
use crate::term::{Label, RegVar, Type};

fn region(r: u32, l: u32) -> Constraint {
    Constraint::Region(RegVar(r), RegTerm::Label(Label(l)))
}

fn seq(bs: Vec<Beh>) -> Beh {
    bs.into_iter().rev().reduce(|acc, b| Beh::seq(b, acc)).unwrap_or(Beh::Tau)
}

#[test]
fn push_send_close() {
    let c = ConstraintSet::from_constraints([region(1, 1)]);
    let b = seq(vec![Beh::Push(Label(1), Session::out(Type::Int, Session::End)), Beh::Out(RegVar(1), Type::Int)]);
    assert!(normalizes(&Stack::new(), &b, &c).unwrap().is_yes());
}

#[test]
fn unfinished_session_is_stuck() {
    let c = ConstraintSet::from_constraints([region(1, 1)]);
    let b = Beh::Push(Label(1), Session::out(Type::Int, Session::End));
    let Outcome::Stuck(w) = normalizes(&Stack::new(), &b, &c).unwrap() else { panic!() };
    assert!(w.reason.contains("still open"), "{w}");
}

#[test]
fn only_the_top_frame_may_act() {
    let c = ConstraintSet::from_constraints([region(1, 1), region(2, 2)]);
    let one = Session::out(Type::Int, Session::End);
    let b = seq(vec![
        Beh::Push(Label(1), one.clone()),
        Beh::Push(Label(2), one),
        Beh::Out(RegVar(1), Type::Int),
        Beh::Out(RegVar(2), Type::Int),
    ]);
    assert!(!normalizes(&Stack::new(), &b, &c).unwrap().is_yes());
}

#[test]
fn double_push_is_stuck() {
    let b = seq(vec![Beh::Push(Label(1), Session::End), Beh::Push(Label(1), Session::End)]);
    assert!(!normalizes(&Stack::new(), &b, &ConstraintSet::new()).unwrap().is_yes());
}

#[test]
fn recursion_uses_the_premise() {
    let c0 = ConstraintSet::from_constraints([region(1, 1)]);
    let body = seq(vec![
        Beh::Push(Label(1), Session::inp(Type::Int, Session::End)),
        Beh::In(RegVar(1), Type::Int),
        Beh::Var(BehVar(9)),
    ]);
    let mut c = c0.clone();
    c.add_beh_sub(Beh::rec(BehVar(9), body), BehVar(9));
    assert!(normalizes(&Stack::new(), &Beh::Var(BehVar(9)), &c).unwrap().is_yes());
    let g = ground(&Beh::Var(BehVar(9)), &c);
    assert!(is_ground(&g));
    let mut e = Explorer::new(&c, DEFAULT_BUDGET).with_measure_check();
    assert!(e.normalizes(&Stack::new(), &g).unwrap().is_yes());
}

#[test]
fn budget_is_enforced() {
    let b = Beh::plus(Beh::Tau, Beh::Tau);
    let r = Explorer::new(&ConstraintSet::new(), 1).normalizes(&Stack::new(), &b);
    assert_eq!(r, Err(AbsError::Budget(1)));
}

#[test]
fn sizes() {
    assert_eq!(bsize(&Beh::Push(Label(1), Session::End)), 2);
    assert_eq!(bsize(&Beh::spawn(Beh::Tau)), 2);
    assert_eq!(bsize(&Beh::seq(Beh::Tau, Beh::Out(RegVar(1), Type::Int))), 2);
}

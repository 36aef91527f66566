use super::*;
use crate::term::{Channel, ChoiceLabel};

fn l(s: &str) -> ChoiceLabel {
    ChoiceLabel::new(s)
}

fn with_channel(req: Session, acc: Session) -> ConstraintSet {
    let mut c = ConstraintSet::new();
    c.set_channel(ChannelEnd::request(Channel::new("c")), req);
    c.set_channel(ChannelEnd::accept(Channel::new("c")), acc);
    c
}

fn solved(c: &ConstraintSet, seed: Option<u64>) -> Result<(Session, Session), DualityError> {
    let mut s = Supply::starting_at(c.max_var_id() + 1);
    let r = infer_duality(c, &mut s, seed)?;
    let get = |e: ChannelEnd| r.constraints.channel(&e).unwrap().clone();
    Ok((get(ChannelEnd::request(Channel::new("c"))), get(ChannelEnd::accept(Channel::new("c")))))
}

#[test]
fn open_side_mirrors_the_closed_side() {
    let c = with_channel(Session::out(Type::Int, Session::inp(Type::Bool, Session::End)), Session::Var(SesVar(1)));
    let (_, acc) = solved(&c, None).unwrap();
    assert!(matches!(&acc, Session::In(_, k) if matches!(&**k, Session::Out(_, e) if **e == Session::End)), "{acc}");
}

#[test]
fn mismatched_polarity_is_rejected() {
    let c = with_channel(Session::out(Type::Int, Session::End), Session::out(Type::Int, Session::End));
    assert!(solved(&c, None).is_err());
}

#[test]
fn residual_variables_close() {
    let c = with_channel(Session::Var(SesVar(1)), Session::Var(SesVar(2)));
    assert_eq!(solved(&c, None).unwrap(), (Session::End, Session::End));
}

#[test]
fn internal_needs_active_labels() {
    let i = Session::internal([(l("A"), Session::End)].into_iter().collect());
    let ok = Session::external([l("A")].into_iter().collect(), [(l("A"), Session::End), (l("B"), Session::End)].into_iter().collect());
    let bad = Session::external([l("B")].into_iter().collect(), [(l("A"), Session::End), (l("B"), Session::End)].into_iter().collect());
    assert!(solved(&with_channel(i.clone(), ok), None).is_ok());
    assert!(solved(&with_channel(i, bad), None).is_err());
}

#[test]
fn occurs_is_an_error() {
    let s = Session::out(Type::Int, Session::Var(SesVar(1)));
    let mut c = ConstraintSet::new();
    c.add_dual(Session::Var(SesVar(1)), s);
    let mut sup = Supply::starting_at(10);
    assert!(infer_duality(&c, &mut sup, None).is_err());
}

#[test]
fn delegation_unifies_carried_sessions() {
    let req = Session::deleg(Session::Var(SesVar(1)), Session::End);
    let acc = Session::resume(Session::inp(Type::Int, Session::End), Session::End);
    let (r, _) = solved(&with_channel(req, acc), None).unwrap();
    assert_eq!(r.to_string(), "!<?int.end>.end");
}

#[test]
fn seeds_agree_on_shapes() {
    let req = Session::deleg(Session::Var(SesVar(1)), Session::Var(SesVar(2)));
    let acc = Session::Var(SesVar(3));
    let base = solved(&with_channel(req.clone(), acc.clone()), None).unwrap();
    for seed in 0..20 {
        let (a, b) = solved(&with_channel(req.clone(), acc.clone()), Some(seed)).unwrap();
        assert_eq!(a.size(), base.0.size());
        assert_eq!(b.size(), base.1.size());
    }
}

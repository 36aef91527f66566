//! Semantic objects: types, behaviours, session types and substitutions.

mod behaviour;
mod session;
mod subst;
mod types;
mod vars;

pub use behaviour::Beh;
pub use session::{ExtChoice, Session};
pub use subst::SessionSubst;
pub use types::Type;
pub use vars::{BehVar, Channel, ChannelEnd, ChoiceLabel, ChoiceVar, Label, RegVar, SesVar, Supply, TyVar};

fn max_var_in_type(t: &Type) -> u32 {
    match t {
        Type::Pair(a, b) => max_var_in_type(a).max(max_var_in_type(b)),
        Type::Fun(a, b, v) => max_var_in_type(a).max(max_var_in_type(b)).max(v.0),
        Type::Ses(r) => r.0,
        Type::Var(a) => a.0,
        _ => 0,
    }
}

pub fn max_var_in_session(s: &Session) -> u32 {
    let mut m = 0;
    s.walk(&mut |n| match n {
        Session::Out(t, _) | Session::In(t, _) => m = m.max(max_var_in_type(t)),
        Session::Var(v) => m = m.max(v.0),
        Session::IVar(v) | Session::EVar(v) => m = m.max(v.0),
        _ => {}
    });
    m
}

pub fn max_var_in_beh(b: &Beh) -> u32 {
    let mut m = 0;
    b.walk(&mut |n| match n {
        Beh::Var(v) | Beh::Rec(v, _) => m = m.max(v.0),
        Beh::Push(_, s) => m = m.max(max_var_in_session(s)),
        Beh::Out(r, t) | Beh::In(r, t) => m = m.max(r.0).max(max_var_in_type(t)),
        Beh::Deleg(r, d) => m = m.max(r.0).max(d.0),
        Beh::Resume(r, _) | Beh::Select(r, _) | Beh::Offer(r, _) => m = m.max(r.0),
        _ => {}
    });
    m
}

pub fn max_var_in_types(t: &Type) -> u32 {
    max_var_in_type(t)
}

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use sessionml_core::absint::{bsize, Explorer, Outcome};
use sessionml_core::constraint::{dual, session_subtype, well_formed, ConstraintSet};
use sessionml_core::infer::infer;
use sessionml_core::pipeline::{analyze, Options};
use sessionml_core::session::{infer_sessions, Stack};
use sessionml_core::syntax::{annotate, parse_program, pretty, strip};
use sessionml_core::synth::{program, SynthConfig};
use sessionml_core::term::{ChoiceLabel, Session, Type};

fn label(i: usize) -> ChoiceLabel {
    ChoiceLabel::new(["A", "B", "C"][i])
}

fn payload() -> impl Strategy<Value = Type> {
    prop_oneof![Just(Type::Int), Just(Type::Bool), Just(Type::Unit)]
}

/// Resolved sessions whose choices are non-empty.
fn session() -> impl Strategy<Value = Session> {
    let leaf = Just(Session::End);
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (payload(), inner.clone()).prop_map(|(t, k)| Session::out(t, k)),
            (payload(), inner.clone()).prop_map(|(t, k)| Session::inp(t, k)),
            (inner.clone(), inner.clone()).prop_map(|(d, k)| Session::deleg(d, k)),
            (inner.clone(), inner.clone()).prop_map(|(d, k)| Session::resume(d, k)),
            prop::collection::vec(inner.clone(), 1..=3)
                .prop_map(|ks| Session::internal(ks.into_iter().enumerate().map(|(i, k)| (label(i), k)).collect())),
            (prop::collection::vec(inner, 1..=3), any::<u8>()).prop_map(|(ks, mask)| {
                let branches: BTreeMap<_, _> = ks.into_iter().enumerate().map(|(i, k)| (label(i), k)).collect();
                // The first label is always active.
                let active = (0..branches.len()).filter(|i| *i == 0 || mask >> i & 1 == 1).map(label).collect();
                Session::external(active, branches)
            }),
        ]
    })
}

fn flip(bits: &mut u64) -> bool {
    let b = *bits & 1 == 1;
    *bits = bits.rotate_right(1);
    b
}

/// A supertype of `s`: drop internal labels, and activate or drop
/// inactive external branches. `bits` picks which.
fn widen(s: &Session, bits: &mut u64) -> Session {
    match s {
        Session::Out(t, k) => Session::out(t.clone(), widen(k, bits)),
        Session::In(t, k) => Session::inp(t.clone(), widen(k, bits)),
        // Delegated payload is contravariant; keep it fixed.
        Session::Deleg(d, k) => Session::deleg((**d).clone(), widen(k, bits)),
        Session::Resume(d, k) => Session::resume(widen(d, bits), widen(k, bits)),
        Session::Internal(m) => {
            let mut out = BTreeMap::new();
            for (i, (l, k)) in m.iter().enumerate() {
                if i == 0 || !flip(bits) {
                    out.insert(l.clone(), k.clone());
                }
            }
            let out = out.into_iter().map(|(l, k)| (l, widen(&k, bits))).collect();
            Session::internal(out)
        }
        Session::External(e) => {
            let mut branches = BTreeMap::new();
            let mut active = e.active.clone();
            for (l, k) in e.branches.iter() {
                if active.contains(l) {
                    branches.insert(l.clone(), widen(k, bits));
                } else if flip(bits) {
                    active.insert(l.clone());
                    branches.insert(l.clone(), widen(k, bits));
                } else if flip(bits) {
                    branches.insert(l.clone(), widen(k, bits));
                }
            }
            Session::external(active, branches)
        }
        other => other.clone(),
    }
}

/// Narrow an external choice's active set so it is a proper subtype.
fn deactivate(s: &Session) -> Session {
    match s {
        Session::External(e) if e.active.len() > 1 => {
            let mut active: BTreeSet<_> = e.active.clone();
            let first = active.iter().next().cloned().expect("non-empty");
            active.remove(&first);
            Session::external(active, e.branches.clone())
        }
        other => other.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn subtyping_is_reflexive(s in session()) {
        prop_assert!(session_subtype(&ConstraintSet::new(), &s, &s));
    }

    #[test]
    fn subtyping_is_transitive(s in session(), mut b1: u64, mut b2: u64) {
        let c = ConstraintSet::new();
        let t = widen(&s, &mut b1);
        let u = widen(&t, &mut b2);
        prop_assert!(session_subtype(&c, &s, &t), "{s} <= {t}");
        prop_assert!(session_subtype(&c, &t, &u), "{t} <= {u}");
        prop_assert!(session_subtype(&c, &s, &u), "{s} <= {u}");
    }

    #[test]
    fn deactivating_a_branch_is_a_subtype(s in session()) {
        let c = ConstraintSet::new();
        let t = deactivate(&s);
        prop_assert!(session_subtype(&c, &t, &s));
    }

    #[test]
    fn mirror_is_dual_and_involutive(s in session()) {
        let c = ConstraintSet::new();
        prop_assert!(dual(&c, &s, &s.mirror()));
        // Inactive branches are dropped, so only the image is a fixed point.
        let m = s.mirror();
        prop_assert_eq!(m.mirror().mirror(), m.clone());
        prop_assert!(session_subtype(&c, &s, &m.mirror()) || session_subtype(&c, &m.mirror(), &s));
    }

    #[test]
    fn duality_is_symmetric(a in session(), b in session()) {
        let c = ConstraintSet::new();
        prop_assert_eq!(dual(&c, &a, &b), dual(&c, &b, &a));
        let m = a.mirror();
        prop_assert_eq!(dual(&c, &a, &m), dual(&c, &m, &a));
    }

    #[test]
    fn pretty_printing_round_trips(seed: u64) {
        let src = program(seed, SynthConfig::default());
        let e = parse_program(&src).unwrap();
        let again = parse_program(&pretty(&e)).unwrap();
        prop_assert_eq!(strip(&again), strip(&e));
    }

    #[test]
    fn session_inference_is_sound(seed: u64) {
        let src = program(seed, SynthConfig::default());
        let (e, _) = annotate(&parse_program(&src).unwrap());
        let mut r = infer(&e).unwrap();
        prop_assume!(well_formed(&r.constraints).is_ok());
        if let Ok(si) = infer_sessions(&r.beh, &r.constraints, &mut r.supply, None) {
            let b1 = si.sigma.apply_beh(&r.beh);
            let out = Explorer::new(&si.constraints, 1_000_000).normalizes(&Stack::new(), &b1);
            prop_assert!(matches!(out, Ok(Outcome::Normalizes)), "{src}\n{out:?}");
        }
    }

    #[test]
    fn ground_steps_shrink_the_measure(seed: u64) {
        let a = analyze(&program(seed, SynthConfig::default()), &Options::default());
        prop_assume!(a.accepted());
        let (c, b) = (a.constraints.as_ref().unwrap(), a.behaviour.as_ref().unwrap());
        let mut ex = Explorer::new(c, 1_000_000).with_measure_check();
        let out = ex.normalizes(&Stack::new(), b);
        prop_assert!(out.is_ok(), "{out:?}");
        prop_assert!(ex.states() <= 1_000_000);
        prop_assert!(bsize(b) > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn duality_order_does_not_matter(seed: u64) {
        let src = program(seed, SynthConfig::default());
        let base = analyze(&src, &Options::default());
        let key = base.canonical_report();
        for d in 0..20 {
            let a = analyze(&src, &Options { duality_seed: Some(d), ..Options::default() });
            prop_assert_eq!(a.category(), base.category());
            prop_assert_eq!(a.canonical_report(), key.clone());
        }
    }
}

//! Well-formedness of constraint sets and confinement queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Beh, BehVar, Type};

use super::set::ConstraintSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    TypeConsistent,
    RegionConsistent,
    BehaviourCompact,
    WellConfined,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::TypeConsistent => "Type-Consistent",
            Condition::RegionConsistent => "Region-Consistent",
            Condition::BehaviourCompact => "Behaviour-Compact",
            Condition::WellConfined => "Well-Confined",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub witness: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.condition, self.witness)
    }
}

/// Check all four conditions, listing every violation found.
pub fn well_formed(c: &ConstraintSet) -> Result<(), Vec<Violation>> {
    let cl = c.closure();
    let mut out = Vec::new();

    for (a, b) in cl.clashes() {
        out.push(Violation {
            condition: Condition::TypeConsistent,
            witness: format!("{} <= {}", a.annotated(), b.annotated()),
        });
    }

    for labels in cl.label_conflicts() {
        let names: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        out.push(Violation {
            condition: Condition::RegionConsistent,
            witness: format!("one region aliases endpoints {}", names.join(", ")),
        });
    }

    out.extend(compactness(c));

    let mut bad_types: Vec<&Type> = cl.cf_types().filter(|t| matches!(t, Type::Ses(_))).collect();
    bad_types.sort();
    for t in bad_types {
        out.push(Violation {
            condition: Condition::WellConfined,
            witness: format!("endpoint type {t} must be confined"),
        });
    }
    let mut bad_behs: Vec<&Beh> = cl.cf_behs().filter(|b| b.is_pop()).collect();
    bad_behs.sort();
    for b in bad_behs {
        out.push(Violation {
            condition: Condition::WellConfined,
            witness: format!("communication {b} inside a confined behaviour"),
        });
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn compactness(c: &ConstraintSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut edges: BTreeMap<BehVar, BTreeSet<BehVar>> = BTreeMap::new();
    for (v, b) in c.beh_sub_entries() {
        if let Beh::Rec(bound, _) = b {
            if *bound != v {
                out.push(Violation {
                    condition: Condition::BehaviourCompact,
                    witness: format!("{b} bound to {v}"),
                });
            }
            if c.bindings(v).len() != 1 {
                out.push(Violation {
                    condition: Condition::BehaviourCompact,
                    witness: format!("{v} has bindings besides its recursion"),
                });
            }
            continue;
        }
        let mut fv = BTreeSet::new();
        b.free_beh_vars(&mut fv);
        for w in fv {
            edges.entry(w).or_default().insert(v);
        }
    }
    // Iterative three-colour DFS.
    let mut colour: BTreeMap<BehVar, u8> = BTreeMap::new();
    let roots: Vec<BehVar> = edges.keys().copied().collect();
    for root in roots {
        if colour.get(&root).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(BehVar, Vec<BehVar>)> = vec![(root, edges.get(&root).map(|s| s.iter().copied().collect()).unwrap_or_default())];
        colour.insert(root, 1);
        while let Some((v, succ)) = stack.last_mut() {
            if let Some(w) = succ.pop() {
                match colour.get(&w).copied().unwrap_or(0) {
                    0 => {
                        colour.insert(w, 1);
                        let next = edges.get(&w).map(|s| s.iter().copied().collect()).unwrap_or_default();
                        stack.push((w, next));
                    }
                    1 => {
                        out.push(Violation {
                            condition: Condition::BehaviourCompact,
                            witness: format!("cycle through {w} and {v} without recursion"),
                        });
                        return out;
                    }
                    _ => {}
                }
            } else {
                colour.insert(*v, 2);
                stack.pop();
            }
        }
    }
    out
}

/// Derivable confinement of a type.
pub fn confined_type(c: &ConstraintSet, t: &Type) -> bool {
    let cl = c.closure();
    fn go(cl: &super::closure::Closure, c: &ConstraintSet, t: &Type) -> bool {
        if t.is_base() || cl.is_cf_type(t) {
            return true;
        }
        match t {
            Type::Pair(a, b) => go(cl, c, a) && go(cl, c, b),
            Type::Fun(a, b, v) => go(cl, c, a) && go(cl, c, b) && cl.is_cf_beh(&Beh::Var(*v)),
            _ => false,
        }
    }
    go(&cl, c, t)
}

/// Derivable confinement of a behaviour.
pub fn confined_behaviour(c: &ConstraintSet, b: &Beh) -> bool {
    let cl = c.closure();
    fn go(cl: &super::closure::Closure, b: &Beh) -> bool {
        match b {
            Beh::Tau | Beh::Rec(..) => true,
            _ if cl.is_cf_beh(b) => !b.is_pop() && !matches!(b, Beh::Push(..)),
            Beh::Seq(x, y) | Beh::Plus(x, y) => go(cl, x) && go(cl, y),
            Beh::Spawn(x) => go(cl, x),
            _ => false,
        }
    }
    go(&cl, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, RegTerm};
    use crate::term::{Label, RegVar, Session};

    #[test]
    fn empty_is_well_formed() {
        assert!(well_formed(&ConstraintSet::new()).is_ok());
    }

    #[test]
    fn two_labels_in_one_region() {
        let c = ConstraintSet::from_constraints([
            Constraint::Region(RegVar(1), RegTerm::Label(Label(1))),
            Constraint::Region(RegVar(1), RegTerm::Label(Label(2))),
        ]);
        let v = well_formed(&c).unwrap_err();
        assert_eq!(v[0].condition, Condition::RegionConsistent);
    }

    #[test]
    fn inclusion_cycle_without_rec() {
        let c = ConstraintSet::from_constraints([
            Constraint::BehSub(Beh::Var(BehVar(1)), BehVar(2)),
            Constraint::BehSub(Beh::Var(BehVar(2)), BehVar(1)),
        ]);
        let v = well_formed(&c).unwrap_err();
        assert!(v.iter().all(|x| x.condition == Condition::BehaviourCompact));
    }

    #[test]
    fn rec_breaks_cycles() {
        let body = Beh::seq(Beh::Tau, Beh::Var(BehVar(1)));
        let c = ConstraintSet::from_constraints([Constraint::BehSub(Beh::rec(BehVar(1), body), BehVar(1))]);
        assert!(well_formed(&c).is_ok());
    }

    #[test]
    fn constructor_clash() {
        let c = ConstraintSet::from_constraints([Constraint::TySub(Type::Int, Type::Bool)]);
        assert_eq!(well_formed(&c).unwrap_err()[0].condition, Condition::TypeConsistent);
    }

    #[test]
    fn confined_endpoint_is_rejected() {
        let c = ConstraintSet::from_constraints([Constraint::TyCf(Type::Ses(RegVar(1)))]);
        assert_eq!(well_formed(&c).unwrap_err()[0].condition, Condition::WellConfined);
    }

    #[test]
    fn confined_pop_through_binding_is_rejected() {
        let c = ConstraintSet::from_constraints([
            Constraint::BehCf(Beh::Var(BehVar(1))),
            Constraint::BehSub(Beh::Out(RegVar(2), Type::Int), BehVar(1)),
        ]);
        assert_eq!(well_formed(&c).unwrap_err()[0].condition, Condition::WellConfined);
    }

    #[test]
    fn push_may_be_confined() {
        let c = ConstraintSet::from_constraints([
            Constraint::BehCf(Beh::Var(BehVar(1))),
            Constraint::BehSub(Beh::Push(Label(1), Session::End), BehVar(1)),
        ]);
        assert!(well_formed(&c).is_ok());
    }

    #[test]
    fn confinement_queries() {
        let c = ConstraintSet::new();
        assert!(confined_type(&c, &Type::Int));
        assert!(!confined_type(&c, &Type::Ses(RegVar(1))));
        assert!(confined_behaviour(&c, &Beh::seq(Beh::Tau, Beh::rec(BehVar(1), Beh::Tau))));
        for b in [
            Beh::Out(RegVar(1), Type::Int),
            Beh::In(RegVar(1), Type::Int),
            Beh::Deleg(RegVar(1), RegVar(2)),
            Beh::Resume(RegVar(1), Label(1)),
            Beh::Push(Label(1), Session::End),
        ] {
            assert!(!confined_behaviour(&c, &b), "{b}");
        }
    }

    #[test]
    fn confinement_flows_backwards_through_inclusions() {
        let c = ConstraintSet::from_constraints([
            Constraint::TyCf(Type::Var(crate::term::TyVar(2))),
            Constraint::TySub(Type::Var(crate::term::TyVar(1)), Type::Var(crate::term::TyVar(2))),
        ]);
        assert!(confined_type(&c, &Type::Var(crate::term::TyVar(1))));
    }
}

//! ML types annotated with behaviour and region variables.

use std::collections::BTreeSet;
use std::fmt;

use super::vars::{BehVar, RegVar, TyVar};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Unit,
    Bool,
    Int,
    Pair(Box<Type>, Box<Type>),
    /// Argument, result, latent behaviour variable.
    Fun(Box<Type>, Box<Type>, BehVar),
    Ses(RegVar),
    Var(TyVar),
}

impl Type {
    pub fn pair(a: Type, b: Type) -> Type {
        Type::Pair(Box::new(a), Box::new(b))
    }

    pub fn fun(a: Type, r: Type, b: BehVar) -> Type {
        Type::Fun(Box::new(a), Box::new(r), b)
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Type::Unit | Type::Bool | Type::Int)
    }

    /// Head constructor tag; variables have none.
    pub fn head(&self) -> Option<&'static str> {
        match self {
            Type::Unit => Some("unit"),
            Type::Bool => Some("bool"),
            Type::Int => Some("int"),
            Type::Pair(..) => Some("pair"),
            Type::Fun(..) => Some("fun"),
            Type::Ses(_) => Some("ses"),
            Type::Var(_) => None,
        }
    }

    pub fn ty_vars(&self, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Var(a) => {
                out.insert(*a);
            }
            Type::Pair(a, b) | Type::Fun(a, b, _) => {
                a.ty_vars(out);
                b.ty_vars(out);
            }
            _ => {}
        }
    }

    pub fn beh_vars(&self, out: &mut BTreeSet<BehVar>) {
        match self {
            Type::Pair(a, b) => {
                a.beh_vars(out);
                b.beh_vars(out);
            }
            Type::Fun(a, b, beta) => {
                out.insert(*beta);
                a.beh_vars(out);
                b.beh_vars(out);
            }
            _ => {}
        }
    }

    pub fn reg_vars(&self, out: &mut BTreeSet<RegVar>) {
        match self {
            Type::Ses(r) => {
                out.insert(*r);
            }
            Type::Pair(a, b) | Type::Fun(a, b, _) => {
                a.reg_vars(out);
                b.reg_vars(out);
            }
            _ => {}
        }
    }

    pub fn mentions_ses(&self) -> bool {
        match self {
            Type::Ses(_) => true,
            Type::Pair(a, b) | Type::Fun(a, b, _) => a.mentions_ses() || b.mentions_ses(),
            _ => false,
        }
    }

    /// Rename every variable through the given maps.
    pub fn map_vars(
        &self,
        fa: &mut impl FnMut(TyVar) -> Type,
        fb: &mut impl FnMut(BehVar) -> BehVar,
        fr: &mut impl FnMut(RegVar) -> RegVar,
    ) -> Type {
        match self {
            Type::Unit | Type::Bool | Type::Int => self.clone(),
            Type::Pair(a, b) => Type::pair(a.map_vars(fa, fb, fr), b.map_vars(fa, fb, fr)),
            Type::Fun(a, b, beta) => {
                let a = a.map_vars(fa, fb, fr);
                let b = b.map_vars(fa, fb, fr);
                Type::fun(a, b, fb(*beta))
            }
            Type::Ses(r) => Type::Ses(fr(*r)),
            Type::Var(a) => fa(*a),
        }
    }

    /// Printer that shows latent behaviour variables (`a -b3-> b`).
    pub fn annotated(&self) -> Annotated<'_> {
        Annotated(self)
    }
}

fn fmt_type(t: &Type, f: &mut fmt::Formatter<'_>, show_beh: bool) -> fmt::Result {
    match t {
        Type::Unit => f.write_str("unit"),
        Type::Bool => f.write_str("bool"),
        Type::Int => f.write_str("int"),
        Type::Pair(a, b) => {
            f.write_str("(")?;
            fmt_type(a, f, show_beh)?;
            f.write_str(" * ")?;
            fmt_type(b, f, show_beh)?;
            f.write_str(")")
        }
        Type::Fun(a, b, beta) => {
            f.write_str("(")?;
            fmt_type(a, f, show_beh)?;
            if show_beh {
                write!(f, " -{beta}-> ")?;
            } else {
                f.write_str(" -> ")?;
            }
            fmt_type(b, f, show_beh)?;
            f.write_str(")")
        }
        Type::Ses(r) => write!(f, "ses {r}"),
        Type::Var(a) => write!(f, "{a}"),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_type(self, f, false)
    }
}

pub struct Annotated<'a>(&'a Type);

impl fmt::Display for Annotated<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_type(self.0, f, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing() {
        let t = Type::fun(Type::pair(Type::Int, Type::Ses(RegVar(2))), Type::Var(TyVar(4)), BehVar(3));
        assert_eq!(t.to_string(), "((int * ses r2) -> a4)");
        assert_eq!(t.annotated().to_string(), "((int * ses r2) -b3-> a4)");
    }

    #[test]
    fn ses_detection() {
        assert!(Type::pair(Type::Int, Type::Ses(RegVar(1))).mentions_ses());
        assert!(!Type::fun(Type::Int, Type::Int, BehVar(1)).mentions_ses());
    }
}

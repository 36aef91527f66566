//! Type and behaviour reconstruction with constraint generation.
//!
//! Unification solves type equalities eagerly; behaviour and region facts
//! accumulate as constraints. Latent behaviour variables of unified arrow
//! types are merged, so every function type carries a single variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::constraint::{
    constant_schema, constraint_vars, instantiate, type_vars, well_formed, Constraint, ConstraintSet, RegTerm,
    SchemaError, SchemeVar, TypeSchema, Violation,
};
use crate::syntax::{ExprKind, Name, Span, E};
use crate::term::{Beh, BehVar, ChannelEnd, RegVar, SesVar, Session, Supply, TyVar, Type};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InferError {
    #[error("{span}: unbound variable `{name}`")]
    Unbound { name: String, span: Span },
    #[error("{span}: type mismatch, expected {expected} but found {found}")]
    Mismatch { expected: String, found: String, span: Span },
    #[error("{span}: infinite type {var} = {ty}")]
    Occurs { var: String, ty: String, span: Span },
    #[error("{span}: runtime endpoint in a source program")]
    Endpoint { span: Span },
    #[error("{span}: {source}")]
    Schema { source: SchemaError, span: Span },
    #[error("{span}: session value in a confined position ({ty})")]
    NotConfined { ty: String, span: Span },
}

impl InferError {
    pub fn span(&self) -> Span {
        match self {
            InferError::Unbound { span, .. }
            | InferError::Mismatch { span, .. }
            | InferError::Occurs { span, .. }
            | InferError::Endpoint { span }
            | InferError::Schema { span, .. }
            | InferError::NotConfined { span, .. } => *span,
        }
    }
}

/// A let-bound name with its generalized schema.
#[derive(Clone, Debug)]
pub struct Binding {
    pub name: Name,
    pub schema: TypeSchema,
    pub span: Span,
}

/// Outcome of reconstruction: `(sigma, T, b, C)` with sigma already applied.
#[derive(Clone, Debug)]
pub struct Inferred {
    pub ty: Type,
    pub beh: Beh,
    pub constraints: ConstraintSet,
    pub bindings: Vec<Binding>,
    /// Violations found in the bound constraints of individual schemas.
    pub schema_violations: Vec<(Name, Violation)>,
    pub region_sites: BTreeMap<RegVar, Span>,
    pub channels: BTreeMap<ChannelEnd, SesVar>,
    pub supply: Supply,
}

struct Env {
    entries: Vec<(Name, TypeSchema)>,
}

impl Env {
    fn lookup(&self, x: &str) -> Option<&TypeSchema> {
        self.entries.iter().rev().find(|(n, _)| &**n == x).map(|(_, s)| s)
    }
}

struct W {
    supply: Supply,
    tsub: HashMap<TyVar, Type>,
    bparent: HashMap<BehVar, BehVar>,
    cons: Vec<Constraint>,
    channels: BTreeMap<ChannelEnd, SesVar>,
    region_sites: BTreeMap<RegVar, Span>,
    bindings: Vec<Binding>,
    env: Env,
}

/// Reconstruct an annotated closed program.
pub fn infer(e: &E) -> Result<Inferred, InferError> {
    let mut w = W {
        supply: Supply::new(),
        tsub: HashMap::new(),
        bparent: HashMap::new(),
        cons: Vec::new(),
        channels: BTreeMap::new(),
        region_sites: BTreeMap::new(),
        bindings: Vec::new(),
        env: Env { entries: Vec::new() },
    };
    let (t, b) = w.expr(e)?;
    w.finish(t, b, e.span)
}

impl W {
    fn find(&mut self, mut b: BehVar) -> BehVar {
        while let Some(&p) = self.bparent.get(&b) {
            b = p;
        }
        b
    }

    fn find_ro(&self, mut b: BehVar) -> BehVar {
        while let Some(&p) = self.bparent.get(&b) {
            b = p;
        }
        b
    }

    fn merge(&mut self, a: BehVar, b: BehVar) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.bparent.insert(hi, lo);
        }
    }

    fn zonk(&self, t: &Type) -> Type {
        t.map_vars(
            &mut |a| match self.tsub.get(&a) {
                Some(u) => self.zonk(u),
                None => Type::Var(a),
            },
            &mut |b| self.find_ro(b),
            &mut |r| r,
        )
    }

    fn zonk_session(&self, s: &Session) -> Session {
        s.map_types(&mut |t| self.zonk(t))
    }

    fn zonk_beh(&self, b: &Beh) -> Beh {
        b.rewrite(&mut |n| match n {
            Beh::Var(v) => Beh::Var(self.find_ro(v)),
            Beh::Rec(v, body) => Beh::Rec(self.find_ro(v), body),
            Beh::Out(r, t) => Beh::Out(r, self.zonk(&t)),
            Beh::In(r, t) => Beh::In(r, self.zonk(&t)),
            Beh::Push(l, s) => Beh::Push(l, self.zonk_session(&s)),
            other => other,
        })
    }

    fn zonk_constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::TySub(a, b) => Constraint::TySub(self.zonk(a), self.zonk(b)),
            Constraint::TyCf(t) => Constraint::TyCf(self.zonk(t)),
            Constraint::BehCf(b) => Constraint::BehCf(self.zonk_beh(b)),
            Constraint::BehSub(b, v) => Constraint::BehSub(self.zonk_beh(b), self.find_ro(*v)),
            Constraint::Region(..) => c.clone(),
            Constraint::Chan(e, s) => Constraint::Chan(e.clone(), self.zonk_session(s)),
            Constraint::Choice(v, s) => Constraint::Choice(*v, self.zonk_session(s)),
            Constraint::Dual(a, b) => Constraint::Dual(self.zonk_session(a), self.zonk_session(b)),
        }
    }

    fn zonk_schema(&self, s: &TypeSchema) -> TypeSchema {
        TypeSchema {
            vars: s.vars.clone(),
            constraints: s.constraints.iter().map(|c| self.zonk_constraint(c)).collect(),
            ty: self.zonk(&s.ty),
        }
    }

    fn unify(&mut self, expected: &Type, found: &Type, span: Span) -> Result<(), InferError> {
        let (a, b) = (self.zonk(expected), self.zonk(found));
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(x), t) | (t, Type::Var(x)) => {
                let mut fv = BTreeSet::new();
                t.ty_vars(&mut fv);
                if fv.contains(x) {
                    return Err(InferError::Occurs {
                        var: x.to_string(),
                        ty: t.to_string(),
                        span,
                    });
                }
                self.tsub.insert(*x, t.clone());
                Ok(())
            }
            (Type::Unit, Type::Unit) | (Type::Bool, Type::Bool) | (Type::Int, Type::Int) => Ok(()),
            (Type::Pair(a1, a2), Type::Pair(b1, b2)) => {
                self.unify(a1, b1, span)?;
                self.unify(a2, b2, span)
            }
            (Type::Fun(a1, a2, x), Type::Fun(b1, b2, y)) => {
                self.merge(*x, *y);
                self.unify(a1, b1, span)?;
                self.unify(a2, b2, span)
            }
            (Type::Ses(r1), Type::Ses(r2)) => {
                if r1 != r2 {
                    self.cons.push(Constraint::Region(*r1, RegTerm::Var(*r2)));
                }
                Ok(())
            }
            _ => Err(InferError::Mismatch {
                expected: a.to_string(),
                found: b.to_string(),
                span,
            }),
        }
    }

    fn inst(&mut self, ts: &TypeSchema, span: Span) -> Type {
        let start = self.supply.peek();
        let (t, cs) = instantiate(ts, &mut self.supply);
        let mut vs = BTreeSet::new();
        type_vars(&t, &mut vs);
        for c in &cs {
            constraint_vars(c, &mut vs);
        }
        for v in vs {
            if let SchemeVar::Reg(r) = v {
                if r.0 >= start {
                    self.region_sites.insert(r, span);
                }
            }
        }
        self.cons.extend(cs);
        t
    }

    fn fresh_ty(&mut self) -> Type {
        Type::Var(self.supply.ty())
    }

    fn bind(&mut self, x: &Option<Name>, ts: TypeSchema) -> bool {
        match x {
            Some(n) => {
                self.env.entries.push((n.clone(), ts));
                true
            }
            None => false,
        }
    }

    fn unbind(&mut self, pushed: bool) {
        if pushed {
            self.env.entries.pop();
        }
    }

    fn expr(&mut self, e: &E) -> Result<(Type, Beh), InferError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Var(x) => {
                let ts = self.env.lookup(x).cloned().ok_or_else(|| InferError::Unbound { name: x.to_string(), span })?;
                Ok((self.inst(&ts, span), Beh::Tau))
            }
            ExprKind::Const(k) => {
                let ts = constant_schema(k, &mut self.supply, &mut self.channels)
                    .map_err(|source| InferError::Schema { source, span })?;
                Ok((self.inst(&ts, span), Beh::Tau))
            }
            ExprKind::Endpoint(_) => Err(InferError::Endpoint { span }),
            ExprKind::Pair(a, b) => {
                let (t1, b1) = self.expr(a)?;
                let (t2, b2) = self.expr(b)?;
                Ok((Type::pair(t1, t2), Beh::seq(b1, b2)))
            }
            ExprKind::App(f, a) => {
                let (t1, b1) = self.expr(f)?;
                let (t2, b2) = self.expr(a)?;
                let res = self.fresh_ty();
                let beta = self.supply.beh();
                self.unify(&Type::fun(t2, res.clone(), beta), &t1, f.span)?;
                Ok((res, Beh::seq(Beh::seq(b1, b2), Beh::Var(beta))))
            }
            ExprKind::Lam(x, body) => {
                let arg = self.fresh_ty();
                let pushed = self.bind(x, TypeSchema::mono(arg.clone()));
                let r = self.expr(body);
                self.unbind(pushed);
                let (tb, bb) = r?;
                let beta = self.supply.beh();
                self.cons.push(Constraint::BehSub(bb, beta));
                Ok((Type::fun(arg, tb, beta), Beh::Tau))
            }
            ExprKind::Fix(f, x, body) => {
                let (arg, res, inner) = (self.fresh_ty(), self.fresh_ty(), self.supply.beh());
                self.env.entries.push((f.clone(), TypeSchema::mono(Type::fun(arg.clone(), res.clone(), inner))));
                let pushed = self.bind(x, TypeSchema::mono(arg.clone()));
                let r = self.expr(body);
                self.unbind(pushed);
                self.env.entries.pop();
                let (tb, bb) = r?;
                self.unify(&res, &tb, body.span)?;
                let inner = self.find(inner);
                self.cons.push(Constraint::BehSub(Beh::rec(inner, bb), inner));
                self.cons.push(Constraint::TyCf(arg.clone()));
                self.cons.push(Constraint::TyCf(res.clone()));
                let outer = self.supply.beh();
                self.cons.push(Constraint::BehSub(Beh::Var(inner), outer));
                Ok((Type::fun(arg, res, outer), Beh::Tau))
            }
            ExprKind::Let(x, e1, e2) => {
                let (t1, b1) = self.expr(e1)?;
                let ts = self.generalize(&t1, &b1);
                if let Some(n) = x {
                    self.bindings.push(Binding { name: n.clone(), schema: ts.clone(), span: e1.span });
                }
                let pushed = self.bind(x, ts);
                let r = self.expr(e2);
                self.unbind(pushed);
                let (t2, b2) = r?;
                Ok((t2, Beh::seq(b1, b2)))
            }
            ExprKind::If(c, a, b) => {
                let (t0, b0) = self.expr(c)?;
                self.unify(&Type::Bool, &t0, c.span)?;
                let (t1, b1) = self.expr(a)?;
                let (t2, b2) = self.expr(b)?;
                self.unify(&t1, &t2, b.span)?;
                Ok((t1, Beh::seq(b0, Beh::plus(b1, b2))))
            }
            ExprKind::Spawn(a) => {
                let (t, b) = self.expr(a)?;
                let (res, beta) = (self.fresh_ty(), self.supply.beh());
                self.unify(&Type::fun(Type::Unit, res, beta), &t, a.span)?;
                Ok((Type::Unit, Beh::seq(b, Beh::spawn(Beh::Var(beta)))))
            }
            ExprKind::Match(s, arms) => {
                let (t0, b0) = self.expr(s)?;
                let r = self.supply.reg();
                self.region_sites.insert(r, s.span);
                self.unify(&Type::Ses(r), &t0, s.span)?;
                let res = self.fresh_ty();
                let mut m = BTreeMap::new();
                for (lab, arm) in arms {
                    let (ti, bi) = self.expr(arm)?;
                    self.unify(&res, &ti, arm.span)?;
                    m.insert(lab.clone(), bi);
                }
                Ok((res, Beh::seq(b0, Beh::offer(r, m))))
            }
        }
    }

    fn schema_fv(&self, ts: &TypeSchema, out: &mut BTreeSet<SchemeVar>) {
        let z = self.zonk_schema(ts);
        let mut vs = BTreeSet::new();
        type_vars(&z.ty, &mut vs);
        for c in &z.constraints {
            constraint_vars(c, &mut vs);
        }
        for v in &z.vars {
            vs.remove(v);
        }
        out.extend(vs);
    }

    /// Quantify the constraint components reachable from the type that touch
    /// neither the environment, the behaviour, nor a channel session.
    fn generalize(&mut self, t: &Type, b: &Beh) -> TypeSchema {
        let t = self.zonk(t);
        let b = self.zonk_beh(b);
        let cons: Vec<Constraint> = self.cons.iter().map(|c| self.zonk_constraint(c)).collect();
        self.cons = cons;

        let mut fixed = BTreeSet::new();
        for (_, ts) in &self.env.entries {
            self.schema_fv(ts, &mut fixed);
        }
        crate::constraint::beh_vars(&b, &mut fixed);
        fixed.extend(self.channels.values().map(|v| SchemeVar::Ses(*v)));

        // Components over constraint co-occurrence.
        let mut parent: BTreeMap<SchemeVar, SchemeVar> = BTreeMap::new();
        fn root(p: &BTreeMap<SchemeVar, SchemeVar>, mut v: SchemeVar) -> SchemeVar {
            while let Some(&q) = p.get(&v) {
                if q == v {
                    break;
                }
                v = q;
            }
            v
        }
        let mut per_cons = Vec::with_capacity(self.cons.len());
        for c in &self.cons {
            let mut vs = BTreeSet::new();
            constraint_vars(c, &mut vs);
            let mut it = vs.iter();
            if let Some(&first) = it.next() {
                let r0 = root(&parent, first);
                for &v in it {
                    let r = root(&parent, v);
                    if r != r0 {
                        parent.insert(r, r0);
                    }
                }
            }
            per_cons.push(vs);
        }
        let fixed_roots: BTreeSet<SchemeVar> = fixed.iter().map(|v| root(&parent, *v)).collect();

        let mut tv = BTreeSet::new();
        type_vars(&t, &mut tv);
        let quant_roots: BTreeSet<SchemeVar> =
            tv.iter().map(|v| root(&parent, *v)).filter(|r| !fixed_roots.contains(r)).collect();
        if quant_roots.is_empty() {
            return TypeSchema::mono(t);
        }

        let mut vars = BTreeSet::new();
        let mut c0 = Vec::new();
        let mut rest = Vec::new();
        for (c, vs) in std::mem::take(&mut self.cons).into_iter().zip(per_cons) {
            match vs.iter().next() {
                Some(v) if quant_roots.contains(&root(&parent, *v)) => {
                    vars.extend(vs);
                    c0.push(c);
                }
                _ => rest.push(c),
            }
        }
        self.cons = rest;
        vars.extend(tv.into_iter().filter(|v| quant_roots.contains(&root(&parent, *v))));
        TypeSchema { vars: vars.into_iter().collect(), constraints: c0, ty: t }
    }

    fn finish(mut self, t: Type, b: Beh, span: Span) -> Result<Inferred, InferError> {
        let ty = self.zonk(&t);
        let beh = self.zonk_beh(&b);
        let mut cs = ConstraintSet::new();
        for c in &self.cons {
            cs.add(self.zonk_constraint(c));
        }
        let bindings: Vec<Binding> = self
            .bindings
            .iter()
            .map(|bd| Binding { name: bd.name.clone(), schema: self.zonk_schema(&bd.schema), span: bd.span })
            .collect();

        // Behaviour variables without any binding stand for the silent action.
        let mut all = BTreeSet::new();
        type_vars(&ty, &mut all);
        crate::constraint::beh_vars(&beh, &mut all);
        for c in cs.iter() {
            constraint_vars(&c, &mut all);
        }
        for v in all {
            if let SchemeVar::Beh(v) = v {
                if cs.bindings(v).is_empty() {
                    cs.add_beh_sub(Beh::Tau, v);
                }
            }
        }

        let cl = cs.closure();
        if let Some(bad) = cl.cf_types().filter(|t| t.mentions_ses()).min() {
            let site = bad_site(bad, &self.region_sites).unwrap_or(span);
            return Err(InferError::NotConfined { ty: bad.annotated().to_string(), span: site });
        }

        let mut schema_violations = Vec::new();
        for bd in &bindings {
            if bd.schema.constraints.is_empty() {
                continue;
            }
            let mut c0 = ConstraintSet::from_constraints(bd.schema.constraints.iter().cloned());
            let mut vs = BTreeSet::new();
            for c in &bd.schema.constraints {
                constraint_vars(c, &mut vs);
            }
            for v in vs {
                if let SchemeVar::Beh(v) = v {
                    if c0.bindings(v).is_empty() {
                        c0.add_beh_sub(Beh::Tau, v);
                    }
                }
            }
            if let Err(vs) = well_formed(&c0) {
                schema_violations.extend(vs.into_iter().map(|v| (bd.name.clone(), v)));
            }
        }

        self.supply = Supply::starting_at(self.supply.peek().max(cs.max_var_id() + 1));
        Ok(Inferred {
            ty,
            beh,
            constraints: cs,
            bindings,
            schema_violations,
            region_sites: self.region_sites,
            channels: self.channels,
            supply: self.supply,
        })
    }
}

fn bad_site(t: &Type, sites: &BTreeMap<RegVar, Span>) -> Option<Span> {
    let mut rs = BTreeSet::new();
    t.reg_vars(&mut rs);
    rs.iter().find_map(|r| sites.get(r).copied())
}

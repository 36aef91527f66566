//! Reflexive, transitive, compatible closure of a constraint set.
//!
//! Computed once per set version and cached by [`ConstraintSet::closure`].

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::term::{Beh, BehVar, Label, Type};

use super::set::{ConstraintSet, RegTerm};

const STRUCTURAL_DEPTH: usize = 32;

#[derive(Debug)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[derive(Debug)]
pub struct Closure {
    reg_index: HashMap<RegTerm, usize>,
    reg_rep: Vec<usize>,
    nodes: Vec<Type>,
    node_index: HashMap<Type, usize>,
    reach: Vec<Vec<bool>>,
    beh_up: HashMap<BehVar, BTreeSet<BehVar>>,
    derived_beh_edges: Vec<(BehVar, BehVar)>,
    cf_types: HashSet<Type>,
    cf_behs: HashSet<Beh>,
    clashes: Vec<(Type, Type)>,
}

fn add_node(t: &Type, nodes: &mut Vec<Type>, index: &mut HashMap<Type, usize>) -> usize {
    if let Some(i) = index.get(t) {
        return *i;
    }
    match t {
        Type::Pair(a, b) | Type::Fun(a, b, _) => {
            add_node(a, nodes, index);
            add_node(b, nodes, index);
        }
        _ => {}
    }
    let i = nodes.len();
    nodes.push(t.clone());
    index.insert(t.clone(), i);
    i
}

impl Closure {
    pub fn compute(c: &ConstraintSet) -> Closure {
        let mut reg_index: HashMap<RegTerm, usize> = HashMap::new();
        let reg_of = |t: RegTerm, reg_index: &mut HashMap<RegTerm, usize>| {
            let n = reg_index.len();
            *reg_index.entry(t).or_insert(n)
        };
        let mut nodes = Vec::new();
        let mut node_index = HashMap::new();
        let mut seeds = Vec::new();
        for (a, b) in c.ty_sub_entries() {
            let i = add_node(a, &mut nodes, &mut node_index);
            let j = add_node(b, &mut nodes, &mut node_index);
            seeds.push((i, j));
        }
        for t in &nodes {
            if let Type::Ses(r) = t {
                reg_of(RegTerm::Var(*r), &mut reg_index);
            }
        }
        let mut reg_pairs = Vec::new();
        for (r, t) in c.region_entries() {
            let a = reg_of(RegTerm::Var(*r), &mut reg_index);
            let b = reg_of(*t, &mut reg_index);
            reg_pairs.push((a, b));
        }
        let mut uf = UnionFind { parent: (0..reg_index.len()).collect() };
        for (a, b) in reg_pairs {
            uf.union(a, b);
        }

        let n = nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for (i, j) in seeds {
            reach[i][j] = true;
        }

        let mut beh_edges: BTreeSet<(BehVar, BehVar)> = BTreeSet::new();
        for (v, b) in c.beh_sub_entries() {
            if let Beh::Var(w) = b {
                beh_edges.insert((*w, v));
            }
        }
        let mut derived = BTreeSet::new();

        loop {
            let mut changed = false;
            for k in 0..n {
                for i in 0..n {
                    if i != k && reach[i][k] {
                        for j in 0..n {
                            if reach[k][j] && !reach[i][j] {
                                reach[i][j] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    match (&nodes[i], &nodes[j]) {
                        (Type::Pair(a, b), Type::Pair(x, y)) => {
                            let (ia, ib, ix, iy) = (node_index[&**a], node_index[&**b], node_index[&**x], node_index[&**y]);
                            if reach[i][j] {
                                for (p, q) in [(ia, ix), (ib, iy)] {
                                    if !reach[p][q] {
                                        reach[p][q] = true;
                                        changed = true;
                                    }
                                }
                            } else if reach[ia][ix] && reach[ib][iy] {
                                reach[i][j] = true;
                                changed = true;
                            }
                        }
                        (Type::Fun(a, b, v), Type::Fun(x, y, w)) => {
                            let (ia, ib, ix, iy) = (node_index[&**a], node_index[&**b], node_index[&**x], node_index[&**y]);
                            if reach[i][j] {
                                for (p, q) in [(ix, ia), (ib, iy)] {
                                    if !reach[p][q] {
                                        reach[p][q] = true;
                                        changed = true;
                                    }
                                }
                                if v != w && beh_edges.insert((*v, *w)) {
                                    derived.insert((*v, *w));
                                    changed = true;
                                }
                            } else if reach[ix][ia] && reach[ib][iy] && beh_reach(&beh_edges, *v, *w) {
                                reach[i][j] = true;
                                changed = true;
                            }
                        }
                        (Type::Ses(r1), Type::Ses(r2)) => {
                            let a = reg_index[&RegTerm::Var(*r1)];
                            let b = reg_index[&RegTerm::Var(*r2)];
                            if reach[i][j] {
                                if uf.union(a, b) {
                                    changed = true;
                                }
                            } else if uf.find(a) == uf.find(b) {
                                reach[i][j] = true;
                                changed = true;
                            }
                        }
                        _ => {}
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut clashes = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if reach[i][j] {
                    if let (Some(h1), Some(h2)) = (nodes[i].head(), nodes[j].head()) {
                        if h1 != h2 {
                            clashes.push((nodes[i].clone(), nodes[j].clone()));
                        }
                    }
                }
            }
        }

        let mut beh_vars: BTreeSet<BehVar> = BTreeSet::new();
        for (a, b) in &beh_edges {
            beh_vars.insert(*a);
            beh_vars.insert(*b);
        }
        let mut beh_up = HashMap::new();
        for v in beh_vars {
            let mut seen = BTreeSet::new();
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                if seen.insert(x) {
                    for (a, b) in &beh_edges {
                        if *a == x {
                            stack.push(*b);
                        }
                    }
                }
            }
            beh_up.insert(v, seen);
        }

        let reg_rep = (0..reg_index.len()).map(|i| uf.find(i)).collect();
        let mut cl = Closure {
            reg_index,
            reg_rep,
            nodes,
            node_index,
            reach,
            beh_up,
            derived_beh_edges: derived.into_iter().collect(),
            cf_types: HashSet::new(),
            cf_behs: HashSet::new(),
            clashes,
        };
        cl.compute_confined(c);
        cl
    }

    fn compute_confined(&mut self, c: &ConstraintSet) {
        let mut wt: Vec<Type> = c.ty_cf_entries().cloned().collect();
        let mut wb: Vec<Beh> = c.beh_cf_entries().cloned().collect();
        while !wt.is_empty() || !wb.is_empty() {
            while let Some(t) = wt.pop() {
                if !self.cf_types.insert(t.clone()) {
                    continue;
                }
                match &t {
                    Type::Pair(a, b) => {
                        wt.push((**a).clone());
                        wt.push((**b).clone());
                    }
                    Type::Fun(a, b, v) => {
                        wt.push((**a).clone());
                        wt.push((**b).clone());
                        wb.push(Beh::Var(*v));
                    }
                    _ => {}
                }
                if let Some(&j) = self.node_index.get(&t) {
                    for i in 0..self.nodes.len() {
                        if self.reach[i][j] {
                            wt.push(self.nodes[i].clone());
                        }
                    }
                }
            }
            while let Some(b) = wb.pop() {
                if !self.cf_behs.insert(b.clone()) {
                    continue;
                }
                match &b {
                    Beh::Seq(x, y) | Beh::Plus(x, y) => {
                        wb.push((**x).clone());
                        wb.push((**y).clone());
                    }
                    Beh::Spawn(x) => wb.push((**x).clone()),
                    Beh::Var(v) => {
                        wb.extend(c.bindings(*v).iter().cloned());
                        for (w, ups) in &self.beh_up {
                            if w != v && ups.contains(v) {
                                wb.push(Beh::Var(*w));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn region_eq(&self, a: RegTerm, b: RegTerm) -> bool {
        if a == b {
            return true;
        }
        match (self.reg_index.get(&a), self.reg_index.get(&b)) {
            (Some(&i), Some(&j)) => self.reg_rep[i] == self.reg_rep[j],
            _ => false,
        }
    }

    /// Labels in the region class of `a`.
    pub fn labels_of(&self, a: RegTerm) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        if let RegTerm::Label(l) = a {
            out.insert(l);
        }
        if let Some(&i) = self.reg_index.get(&a) {
            for (t, &j) in &self.reg_index {
                if let RegTerm::Label(l) = t {
                    if self.reg_rep[j] == self.reg_rep[i] {
                        out.insert(*l);
                    }
                }
            }
        }
        out
    }

    /// Region classes holding more than one label.
    pub fn label_conflicts(&self) -> Vec<BTreeSet<Label>> {
        let mut by_rep: HashMap<usize, BTreeSet<Label>> = HashMap::new();
        for (t, &i) in &self.reg_index {
            if let RegTerm::Label(l) = t {
                by_rep.entry(self.reg_rep[i]).or_default().insert(*l);
            }
        }
        let mut v: Vec<_> = by_rep.into_values().filter(|s| s.len() > 1).collect();
        v.sort();
        v
    }

    pub fn beh_le(&self, a: BehVar, b: BehVar) -> bool {
        a == b || self.beh_up.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn derived_beh_edges(&self) -> &[(BehVar, BehVar)] {
        &self.derived_beh_edges
    }

    pub fn ty_le(&self, a: &Type, b: &Type) -> bool {
        self.ty_le_depth(a, b, STRUCTURAL_DEPTH)
    }

    fn ty_le_depth(&self, a: &Type, b: &Type, depth: usize) -> bool {
        if a == b {
            return true;
        }
        if let (Some(&i), Some(&j)) = (self.node_index.get(a), self.node_index.get(b)) {
            if self.reach[i][j] {
                return true;
            }
        }
        if depth == 0 {
            return false;
        }
        if self.structural_le(a, b, depth) {
            return true;
        }
        if let Some(&i) = self.node_index.get(a) {
            for k in 0..self.nodes.len() {
                if k != i && self.reach[i][k] && self.nodes[k].head() == b.head() && self.structural_le(&self.nodes[k], b, depth - 1) {
                    return true;
                }
            }
        }
        if let Some(&j) = self.node_index.get(b) {
            for k in 0..self.nodes.len() {
                if k != j && self.reach[k][j] && self.nodes[k].head() == a.head() && self.structural_le(a, &self.nodes[k], depth - 1) {
                    return true;
                }
            }
        }
        false
    }

    fn structural_le(&self, a: &Type, b: &Type, depth: usize) -> bool {
        match (a, b) {
            (Type::Pair(a1, a2), Type::Pair(b1, b2)) => self.ty_le_depth(a1, b1, depth) && self.ty_le_depth(a2, b2, depth),
            (Type::Fun(a1, a2, x), Type::Fun(b1, b2, y)) => {
                self.ty_le_depth(b1, a1, depth) && self.ty_le_depth(a2, b2, depth) && self.beh_le(*x, *y)
            }
            (Type::Ses(r1), Type::Ses(r2)) => self.region_eq(RegTerm::Var(*r1), RegTerm::Var(*r2)),
            _ => false,
        }
    }

    /// Non-variable types below and above `t` in the closure.
    pub fn bounds(&self, t: &Type) -> (Vec<Type>, Vec<Type>) {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        if let Some(&i) = self.node_index.get(t) {
            for (k, n) in self.nodes.iter().enumerate() {
                if k == i || matches!(n, Type::Var(_)) {
                    continue;
                }
                if self.reach[k][i] {
                    lo.push(n.clone());
                }
                if self.reach[i][k] {
                    hi.push(n.clone());
                }
            }
        }
        (lo, hi)
    }

    /// Replace variables by their concrete bound, lower bounds first, when
    /// the bounds agree.
    pub fn resolve_type(&self, t: &Type) -> Type {
        self.resolve_depth(t, STRUCTURAL_DEPTH)
    }

    fn resolve_depth(&self, t: &Type, depth: usize) -> Type {
        if depth == 0 {
            return t.clone();
        }
        match t {
            Type::Var(_) => {
                let (lo, hi) = self.bounds(t);
                let cands: Vec<Type> =
                    if lo.is_empty() { hi } else { lo }.iter().map(|b| self.resolve_depth(b, depth - 1)).collect();
                let Some(first) = cands.first() else { return t.clone() };
                // Unrelated bounds leave the variable open: any of them may flow here.
                let agree = cands.iter().all(|c| c == first)
                    || (matches!(first, Type::Fun(..) | Type::Ses(_)) && cands.iter().all(|c| c.head() == first.head()));
                if agree {
                    first.clone()
                } else {
                    t.clone()
                }
            }
            Type::Pair(a, b) => Type::pair(self.resolve_depth(a, depth - 1), self.resolve_depth(b, depth - 1)),
            Type::Fun(a, b, v) => Type::fun(self.resolve_depth(a, depth - 1), self.resolve_depth(b, depth - 1), *v),
            other => other.clone(),
        }
    }

    pub fn is_cf_type(&self, t: &Type) -> bool {
        self.cf_types.contains(t)
    }

    pub fn is_cf_beh(&self, b: &Beh) -> bool {
        self.cf_behs.contains(b)
    }

    pub fn cf_types(&self) -> impl Iterator<Item = &Type> {
        self.cf_types.iter()
    }

    pub fn cf_behs(&self) -> impl Iterator<Item = &Beh> {
        self.cf_behs.iter()
    }

    pub fn clashes(&self) -> &[(Type, Type)] {
        &self.clashes
    }
}

fn beh_reach(edges: &BTreeSet<(BehVar, BehVar)>, a: BehVar, b: BehVar) -> bool {
    if a == b {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![a];
    while let Some(x) = stack.pop() {
        if x == b {
            return true;
        }
        if seen.insert(x) {
            stack.extend(edges.iter().filter(|(p, _)| *p == x).map(|(_, q)| *q));
        }
    }
    false
}

//! The staged analysis: parse, label, reconstruct, check constraints,
//! infer sessions, infer duality.

use std::collections::BTreeMap;
use std::fmt;

use crate::absint::{AbsError, Explorer, Outcome};
use crate::constraint::{well_formed, ConstraintSet};
use crate::duality::{infer_duality, DualityResult};
use crate::infer::{infer, Inferred};
use crate::session::{infer_sessions, SessionErrorKind, SessionInference, Stack, TraceSink};
use crate::syntax::{annotate, parse_program, Span, E};
use crate::term::{Beh, ChannelEnd, Label, Session, SessionSubst};

/// Why a program was rejected; exit codes depend on this alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Parse,
    MlType,
    WellFormedness,
    Linearity,
    Session,
    Duality,
    Internal,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Parse => "parse",
            Category::MlType => "ml-type",
            Category::WellFormedness => "well-formedness",
            Category::Linearity => "linearity",
            Category::Session => "session",
            Category::Duality => "duality",
            Category::Internal => "internal",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        [
            Category::Parse,
            Category::MlType,
            Category::WellFormedness,
            Category::Linearity,
            Category::Session,
            Category::Duality,
            Category::Internal,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub category: Category,
    pub message: String,
    pub span: Option<Span>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}: {}", self.category, self.message),
            None => write!(f, "{}: {}", self.category, self.message),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Keep going after a failed stage where possible.
    pub all_stages: bool,
    /// Randomise the duality worklist order.
    pub duality_seed: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub program: Option<E>,
    pub label_sites: BTreeMap<Label, Span>,
    pub inferred: Option<Inferred>,
    pub sessions: Option<SessionInference>,
    pub duality: Option<DualityResult>,
    pub diagnostics: Vec<Diagnostic>,
    /// Final behaviour with every session substitution applied.
    pub behaviour: Option<Beh>,
    /// Final constraint set.
    pub constraints: Option<ConstraintSet>,
}

impl Analysis {
    pub fn accepted(&self) -> bool {
        self.diagnostics.is_empty() && self.constraints.is_some()
    }

    /// Category of the first failing stage.
    pub fn category(&self) -> Option<Category> {
        self.diagnostics.first().map(|d| d.category)
    }

    /// Channel sessions with payload types resolved through the constraints.
    pub fn channel_sessions(&self) -> Vec<(ChannelEnd, Session)> {
        let Some(c) = &self.constraints else { return Vec::new() };
        let cl = c.closure();
        c.channels().iter().map(|(e, s)| (e.clone(), s.map_types(&mut |t| cl.resolve_type(t)))).collect()
    }

    /// Session of every opened endpoint label.
    pub fn label_sessions(&self) -> BTreeMap<Label, Session> {
        let mut out = BTreeMap::new();
        let (Some(c), Some(b)) = (&self.constraints, &self.behaviour) else { return out };
        let cl = c.closure();
        let mut visit = |b: &Beh| {
            b.walk(&mut |x| {
                if let Beh::Push(l, s) = x {
                    out.entry(*l).or_insert_with(|| s.map_types(&mut |t| cl.resolve_type(t)));
                }
            })
        };
        visit(b);
        for (_, x) in c.beh_sub_entries() {
            visit(x);
        }
        out
    }

    /// Sessions and behaviour with variables renamed by first occurrence,
    /// so runs that differ only in fresh names compare equal.
    pub fn canonical_report(&self) -> String {
        let mut out = String::new();
        for (e, s) in self.channel_sessions() {
            out.push_str(&format!("{e} : {s}\n"));
        }
        for (l, s) in self.label_sessions() {
            out.push_str(&format!("{l} : {s}\n"));
        }
        if let Some(b) = &self.behaviour {
            out.push_str(&b.to_string());
        }
        canonical(&out)
    }

    /// Run the exhaustive explorer on the final behaviour.
    pub fn oracle(&self, budget: usize) -> Option<Result<Outcome, AbsError>> {
        let (c, b) = (self.constraints.as_ref()?, self.behaviour.as_ref()?);
        Some(Explorer::new(c, budget).normalizes(&Stack::new(), b))
    }
}

fn diag(category: Category, message: impl Into<String>, span: Option<Span>) -> Diagnostic {
    Diagnostic { category, message: message.into(), span }
}

pub fn analyze(src: &str, opts: &Options) -> Analysis {
    analyze_traced(src, opts, None)
}

/// As [`analyze`], reporting each session inference step to `trace`.
pub fn analyze_traced(src: &str, opts: &Options, trace: Option<TraceSink<'_>>) -> Analysis {
    let mut a = Analysis::default();
    let e = match parse_program(src) {
        Ok(e) => e,
        Err(err) => {
            a.diagnostics.push(diag(Category::Parse, err.to_string(), Some(err.span())));
            return a;
        }
    };
    let (e, sites) = annotate(&e);
    a.program = Some(e.clone());
    a.label_sites = sites;

    let mut inf = match infer(&e) {
        Ok(r) => r,
        Err(err) => {
            let span = err.span();
            a.diagnostics.push(diag(Category::MlType, strip_span(&err.to_string()), Some(span)));
            return a;
        }
    };

    let region_span = |inf: &Inferred, sites: &BTreeMap<Label, Span>, r: Option<crate::term::RegVar>, l: Option<Label>| {
        r.and_then(|r| inf.region_sites.get(&r).copied()).or_else(|| l.and_then(|l| sites.get(&l).copied()))
    };

    for (name, v) in &inf.schema_violations {
        let span = inf.bindings.iter().find(|b| &b.name == name).map(|b| b.span);
        a.diagnostics.push(diag(Category::WellFormedness, format!("{v} (in the type of `{name}`)"), span));
    }
    if let Err(vs) = well_formed(&inf.constraints) {
        for v in vs {
            a.diagnostics.push(diag(Category::WellFormedness, v.to_string(), None));
        }
    }
    if !a.diagnostics.is_empty() && !opts.all_stages {
        a.inferred = Some(inf);
        return a;
    }

    let si = infer_sessions(&inf.beh, &inf.constraints, &mut inf.supply, trace);
    let si = match si {
        Ok(s) => s,
        Err(err) => {
            let cat = match err.kind {
                SessionErrorKind::Linearity => Category::Linearity,
                SessionErrorKind::Budget => Category::Internal,
                _ => Category::Session,
            };
            let span = region_span(&inf, &a.label_sites, err.region, err.label);
            let msg = match cat {
                Category::Session => format!("{}: {} [stack {}; focus {}]", err.kind, err.message, err.stack, err.focus),
                _ => format!("{} [stack {}; focus {}]", err.message, err.stack, err.focus),
            };
            a.diagnostics.push(diag(cat, msg, span));
            a.inferred = Some(inf);
            return a;
        }
    };

    let d = match infer_duality(&si.constraints, &mut inf.supply, opts.duality_seed) {
        Ok(d) => d,
        Err(err) => {
            let msg = match &err.channel {
                Some(ch) => format!("{err} (channel {ch})"),
                None => err.to_string(),
            };
            a.diagnostics.push(diag(Category::Duality, msg, None));
            a.inferred = Some(inf);
            a.sessions = Some(si);
            return a;
        }
    };

    if let Err(vs) = well_formed(&d.constraints) {
        for v in vs {
            a.diagnostics.push(diag(Category::WellFormedness, format!("{v} (after session inference)"), None));
        }
    }
    let sigma: SessionSubst = si.sigma.then(&d.sigma);
    a.behaviour = Some(sigma.apply_beh(&inf.beh));
    a.constraints = Some(d.constraints.clone());
    a.inferred = Some(inf);
    a.sessions = Some(si);
    a.duality = Some(d);
    a
}

/// Rename `a7`, `s12`, `r3`, `b4`, `k2` style variables in order of first
/// occurrence. Endpoint labels are left alone.
pub fn canonical(text: &str) -> String {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut out = String::with_capacity(text.len());
    let cs: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        let boundary = i == 0 || !cs[i - 1].is_ascii_alphanumeric();
        if boundary && "abrsk".contains(c) && cs.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
            let mut j = i + 1;
            while j < cs.len() && cs[j].is_ascii_digit() {
                j += 1;
            }
            if j == cs.len() || !cs[j].is_ascii_alphanumeric() {
                let tok: String = cs[i..j].iter().collect();
                let fresh = names.entry(tok).or_insert_with(|| {
                    let n = counts.entry(c).or_insert(0);
                    *n += 1;
                    format!("{c}{n}")
                });
                out.push_str(fresh);
                i = j;
                continue;
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Error texts carry their position already in the `span` field.
fn strip_span(s: &str) -> String {
    match s.split_once(": ") {
        Some((head, rest)) if head.split(':').all(|p| p.chars().all(|c| c.is_ascii_digit())) => rest.to_string(),
        _ => s.to_string(),
    }
}

#[cfg(test)]
mod tests;

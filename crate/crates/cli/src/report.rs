//! Serializable reports. Every struct rejects unknown fields, so parsing a
//! report back is a schema check.

use serde::{Deserialize, Serialize};

use sessionml_core::absint::{AbsError, Outcome};
use sessionml_core::pipeline::{Analysis, Category, Diagnostic};
use sessionml_core::syntax::Span;
use sessionml_runtime::RunOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanReport {
    pub line: u32,
    pub col: u32,
    pub start: usize,
    pub end: usize,
}

impl From<Span> for SpanReport {
    fn from(s: Span) -> Self {
        SpanReport { line: s.line, col: s.col, start: s.start, end: s.end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub status: Status,
    /// Stage that rejected the program.
    pub category: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelReport {
    pub channel: String,
    /// Session of the `request` side.
    pub request: Option<String>,
    /// Session of the `accept` side.
    pub accept: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelReport {
    pub label: String,
    pub session: String,
    pub span: Option<SpanReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticReport {
    pub category: String,
    pub message: String,
    pub span: Option<SpanReport>,
}

impl From<&Diagnostic> for DiagnosticReport {
    fn from(d: &Diagnostic) -> Self {
        DiagnosticReport { category: d.category.to_string(), message: d.message.clone(), span: d.span.map(Into::into) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleReport {
    /// `normalizes`, `stuck` or `budget`.
    pub outcome: String,
    /// The explorer accepts exactly when inference did.
    pub agrees: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub file: String,
    pub verdict: Verdict,
    pub channels: Vec<ChannelReport>,
    pub labels: Vec<LabelReport>,
    /// Final behaviour, simplified.
    pub behaviour: Option<String>,
    pub diagnostics: Vec<DiagnosticReport>,
    /// Present for `check` only.
    pub oracle: Option<OracleReport>,
}

impl AnalysisReport {
    pub fn new(file: &str, a: &Analysis) -> Self {
        let mut channels: Vec<ChannelReport> = Vec::new();
        for (end, s) in a.channel_sessions() {
            let name = end.chan.to_string();
            let i = match channels.iter().position(|c| c.channel == name) {
                Some(i) => i,
                None => {
                    channels.push(ChannelReport { channel: name, request: None, accept: None });
                    channels.len() - 1
                }
            };
            let slot = if end.accept { &mut channels[i].accept } else { &mut channels[i].request };
            *slot = Some(s.to_string());
        }
        let labels = a
            .label_sessions()
            .into_iter()
            .map(|(l, s)| LabelReport {
                label: l.to_string(),
                session: s.to_string(),
                span: a.label_sites.get(&l).copied().map(Into::into),
            })
            .collect();
        AnalysisReport {
            file: file.to_string(),
            verdict: Verdict {
                status: if a.accepted() { Status::Accepted } else { Status::Rejected },
                category: a.category().map(|c| c.to_string()),
            },
            channels,
            labels,
            behaviour: a.behaviour.as_ref().map(|b| b.simplified().to_string()),
            diagnostics: a.diagnostics.iter().map(Into::into).collect(),
            oracle: None,
        }
    }

    /// A file that could not be read.
    pub fn unreadable(file: &str, err: &std::io::Error) -> Self {
        AnalysisReport {
            file: file.to_string(),
            verdict: Verdict { status: Status::Rejected, category: Some(Category::Parse.to_string()) },
            channels: vec![],
            labels: vec![],
            behaviour: None,
            diagnostics: vec![DiagnosticReport {
                category: Category::Parse.to_string(),
                message: format!("cannot read {file}: {err}"),
                span: None,
            }],
            oracle: None,
        }
    }

    pub fn with_oracle(mut self, accepted: bool, r: Option<Result<Outcome, AbsError>>) -> Self {
        let (outcome, detail) = match &r {
            None => return self,
            Some(Ok(Outcome::Normalizes)) => ("normalizes", None),
            Some(Ok(Outcome::Stuck(w))) => ("stuck", Some(w.to_string())),
            Some(Err(e)) => ("budget", Some(e.to_string())),
        };
        let agrees = match outcome {
            "normalizes" => accepted,
            "stuck" => !accepted,
            _ => false,
        };
        self.oracle = Some(OracleReport { outcome: outcome.into(), agrees, detail });
        self
    }

    /// Exit code: 0 accepted, 1 rejected, 2 internal or budget failure.
    pub fn exit_code(&self) -> i32 {
        if let Some(o) = &self.oracle {
            if !o.agrees {
                return 2;
            }
        }
        match (self.verdict.status, self.verdict.category.as_deref()) {
            (Status::Accepted, _) => 0,
            (Status::Rejected, Some("internal")) => 2,
            (Status::Rejected, _) => 1,
        }
    }

    /// Human-readable form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.channels {
            if let Some(s) = &c.request {
                out.push_str(&format!("{} : {s}\n", c.channel));
            }
            if let Some(s) = &c.accept {
                out.push_str(&format!("~{} : {s}\n", c.channel));
            }
        }
        for l in &self.labels {
            out.push_str(&format!("  {} : {}\n", l.label, l.session));
        }
        if let Some(b) = &self.behaviour {
            out.push_str(&format!("behaviour: {b}\n"));
        }
        for d in &self.diagnostics {
            match d.span {
                Some(s) => out.push_str(&format!("{}:{}: {}: {}\n", s.line, s.col, d.category, d.message)),
                None => out.push_str(&format!("{}: {}\n", d.category, d.message)),
            }
        }
        if let Some(o) = &self.oracle {
            out.push_str(&format!("oracle: {} ({})\n", o.outcome, if o.agrees { "agrees" } else { "DISAGREES" }));
        }
        match (&self.verdict.status, &self.verdict.category) {
            (Status::Accepted, _) => out.push_str("accepted\n"),
            (Status::Rejected, Some(c)) => out.push_str(&format!("rejected ({c})\n")),
            (Status::Rejected, None) => out.push_str("rejected\n"),
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub seed: u64,
    pub steps: usize,
    pub processes: usize,
    pub finished: Vec<usize>,
    /// Suspected diverging: still stepping when the budget ran out.
    pub diverging: Vec<usize>,
    pub waiting: Vec<usize>,
    pub blocked: Vec<usize>,
    pub terminal: bool,
    pub lock_free: bool,
    pub well_stacked: bool,
    pub violations: Vec<String>,
    pub trace: Vec<String>,
}

impl From<&RunOutcome> for RunSummary {
    fn from(o: &RunOutcome) -> Self {
        let c = &o.classification;
        RunSummary {
            seed: o.seed,
            steps: o.steps,
            processes: o.processes,
            finished: c.finished.clone(),
            diverging: c.diverging.clone(),
            waiting: c.waiting.clone(),
            blocked: c.blocked.clone(),
            terminal: c.terminal,
            lock_free: c.lock_free(),
            well_stacked: o.unstacked_steps.is_empty(),
            violations: o.violations.iter().map(ToString::to_string).collect(),
            trace: o.trace.iter().map(ToString::to_string).collect(),
        }
    }
}

impl RunSummary {
    pub fn clean(&self) -> bool {
        self.violations.is_empty() && self.well_stacked && self.lock_free
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub file: String,
    pub forced: bool,
    pub runs: Vec<RunSummary>,
}

impl RunReport {
    /// 0 when every run is clean, 3 on any monitor violation.
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().all(RunSummary::clean) {
            0
        } else {
            3
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            for t in &r.trace {
                out.push_str(t);
                out.push('\n');
            }
            out.push_str(&format!(
                "seed {}: {} steps, {} processes, F={:?} D?={:?} W={:?} B={:?}{}{}\n",
                r.seed,
                r.steps,
                r.processes,
                r.finished,
                r.diverging,
                r.waiting,
                r.blocked,
                if r.well_stacked { "" } else { ", not well stacked" },
                if r.lock_free { "" } else { ", locked" },
            ));
            for v in &r.violations {
                out.push_str(&format!("  {v}\n"));
            }
        }
        let clean = self.runs.iter().filter(|r| r.clean()).count();
        out.push_str(&format!("{clean}/{} schedules clean\n", self.runs.len()));
        out
    }
}

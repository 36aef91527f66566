//! Running a program under many seeded schedules.

use sessionml_core::pipeline::Analysis;

use crate::system::{Options, Program, RunOutcome, System};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RunError {
    #[error("program was rejected by the analysis")]
    Rejected,
}

impl Program {
    /// Runtime input from an accepted analysis.
    pub fn from_analysis(a: &Analysis) -> Result<Program, RunError> {
        match (&a.program, &a.behaviour, &a.constraints) {
            (Some(e), Some(b), Some(c)) if a.accepted() => Ok(Program {
                expr: e.clone(),
                sessions: a.label_sessions(),
                behaviour: b.clone(),
                constraints: c.clone(),
            }),
            _ => Err(RunError::Rejected),
        }
    }

    /// Best-effort input for a rejected program; missing stages default to
    /// an empty behaviour and constraint set.
    pub fn forced(a: &Analysis) -> Option<Program> {
        Some(Program {
            expr: a.program.clone()?,
            sessions: a.label_sessions(),
            behaviour: a.behaviour.clone().unwrap_or(sessionml_core::term::Beh::Tau),
            constraints: a.constraints.clone().unwrap_or_default(),
        })
    }
}

/// Outcomes of `schedules` runs with seeds `opts.seed`, `opts.seed + 1`, ...
pub fn run_schedules(prog: &Program, opts: &Options, schedules: usize) -> Vec<RunOutcome> {
    (0..schedules as u64)
        .map(|i| System::new(prog, Options { seed: opts.seed.wrapping_add(i), ..opts.clone() }).run())
        .collect()
}

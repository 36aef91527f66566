//! Seeded process runtime with a session monitor.

pub mod eval;
pub mod monitor;
pub mod run;
pub mod shadow;
pub mod system;

pub use run::{run_schedules, RunError};
pub use system::{Classification, Options, Policy, Program, RunOutcome, System, TraceEvent, Violation, ViolationKind};

//! Constraints over types, behaviours, regions and sessions.

mod closure;
mod relations;
mod schema;
mod set;
mod wf;

pub use closure::Closure;
pub use relations::{derives, derives_beh_sub, dual, session_subtype, subtype};
pub use schema::{beh_vars, constant_schema, constraint_vars, instantiate, session_vars, solvable, type_vars, ChannelVars, SchemaError, SchemeVar, TypeSchema, VarMap};
pub use set::{Constraint, ConstraintSet, RegTerm};
pub use wf::{confined_behaviour, confined_type, well_formed, Condition, Violation};

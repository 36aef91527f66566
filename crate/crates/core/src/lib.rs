//! Type, behaviour and session inference for a small concurrent ML.

pub mod absint;
pub mod constraint;
pub mod duality;
pub mod infer;
pub mod pipeline;
pub mod session;
pub mod syntax;
pub mod synth;
pub mod term;

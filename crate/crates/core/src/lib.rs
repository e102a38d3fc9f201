//! Synthesis of stabilizing guarded-command protocols through SMT solving,
//! with an independent explicit-state verifier for the results.

pub mod formula;
pub mod parser;
pub mod problem;
pub mod encoder;
pub mod smt;
pub mod space;
pub mod minimize;
pub mod protocol;
pub mod solver;
pub mod decoder;
pub mod verifier;
pub mod pipeline;

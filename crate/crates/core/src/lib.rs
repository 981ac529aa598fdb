//! Applied join calculus: algebraic patterns on join-definition channels,
//! compiled away into ordinary join patterns plus first-match dispatchers.

pub mod frontend;
pub mod lang;
pub mod print;
pub mod types;
pub mod pattern;
pub mod lattice;
pub mod compiler;
pub mod runtime;
pub mod harness;

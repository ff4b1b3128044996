//! Numerical verification of projectively equivalent metric pairs.
//!
//! From a pair of metrics `g`, `ḡ` given in coordinates this crate builds the
//! tensor `L`, the one-parameter family of Killing tensors `K(t)` and their
//! Carter-quantized operators `K̂(t) = ∇_i K^{ij} ∇_j`, and checks pointwise
//! that the classical and quantum integrability identities hold. All
//! derivatives are computed with truncated multivariate Taylor series
//! ([`jets::Jet`]).

pub mod jets;
pub mod expr;
pub mod geometry;
pub mod projective;
pub mod pairfile;
pub mod operators;
pub mod catalog;
pub mod verify;
pub mod cli;

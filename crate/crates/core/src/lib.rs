//! Optimal minimum-error measurements for geometrically uniform quantum
//! state ensembles.
//!
//! An ensemble ρ_i = S^i ρ₀ S^{-i} (i = 0..M-1, uniform priors) is
//! discriminated optimally by solving a trace-minimization SDP. Operators
//! commuting with S are block-diagonal in the eigenbasis of S, so the
//! dual reduces to a single constraint on a block-diagonal variable. The
//! measurement is recovered from complementary slackness and checked.

pub mod cli;
pub mod closedform2d;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod operators;
pub mod povm;
pub mod sdp;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;

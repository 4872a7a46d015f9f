//! Closed-loop stability certificates for a heat equation with a fractional
//! Laplacian feedback and a transport equation with nonlocal boundary feedback.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod closed_loop;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod semigroup;
pub mod verifier;

pub use error::{Error, Result};

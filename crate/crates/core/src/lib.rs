//! Function encoders: a finite set of learned neural-network basis functions
//! that represent any function in a Hilbert space by a coefficient vector.
//!
//! - [`numerics`]: tensors, a reverse-mode tape, MLPs and Adam.
//! - [`hilbert`]: Monte-Carlo inner products and simplex/logit algebra.
//! - [`encoder`]: coefficient solvers, prediction, training and persistence.
//! - [`geometry`]: span and convex-hull projections, transfer classification.
//! - [`tasks`]: deterministic task generators.

pub mod encoder;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod numerics;
pub mod tasks;

pub use error::{Error, Result};

//! Compatible Lie brackets built from elliptic theta functions.
//!
//! The crate constructs pencils `[.,.]_1 + u [.,.]_2` on spaces of
//! `sl_n`-valued quasi-periodic functions, their polynomial Casimir
//! elements, exact rational and trigonometric degenerations, vector-valued
//! generalizations, and the argument-shift construction for quadratic
//! Poisson brackets. Every identity is checked by residual computations
//! collected in [`report::Report`].

pub mod error;
pub mod scalar;
pub mod linalg;
pub mod theta;
pub mod heisenberg;
pub mod poly;
pub mod exact;
pub mod lie;
pub mod elliptic;
pub mod casimir;
pub mod degenerate;
pub mod bundle;
pub mod shift;
pub mod report;
pub mod json;
pub mod battery;

pub use error::{Error, Result};
pub use scalar::C64;

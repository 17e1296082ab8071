//! Numerics for the Cartan domain of type III and the Siegel upper half-space.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod domains;
pub mod error;
pub mod geometry;
pub mod haar;
pub mod linalg;
pub mod montecarlo;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};

//! Fibering and Nehari manifold solver for singular Kirchhoff problems
//! driven by generalized N-function operators.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod fibering;
pub mod mesh;
pub mod modular;
pub mod nehari;
pub mod nfunction;
pub mod output;
pub mod par;
pub mod problem;
pub mod properties;

pub use error::{Error, Result};

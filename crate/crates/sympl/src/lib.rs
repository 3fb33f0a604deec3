//! Symplectic linear algebra for Gaussian quantum processes.
//!
//! Phase-space vectors use interleaved ordering `(q1, p1, q2, p2, ...)` unless
//! a type says otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod control;
pub mod discrete;
pub mod error;
pub mod json;
pub mod linalg;
pub mod scattering;
pub mod sensing;
pub mod states;
pub mod symplectic;
pub mod transduction;

pub use channels::GaussianChannel;
pub use error::{Result, SymplError};
pub use linalg::{CMat, Mat, Vector};
pub use states::GaussianState;
pub use symplectic::{
    ModeOrdering, SpAlgebraElement, SubspaceBasis, SubspaceKind, SymplecticForm, SymplecticMatrix,
};

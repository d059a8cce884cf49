//! Period-doubling renormalization of three-dimensional Hénon-like maps.
//!
//! The crate builds the renormalization tower of a dissipative Hénon-like map
//! `F(x, y, z) = (f(x) - ε(x, y, z), x, δ(x, y, z))` and measures what the
//! theory predicts about it: the decay of the perturbation terms, the Cantor
//! attractor, universality of the Jacobian and cone-field criteria for toy
//! models.

// `!(x > 0.0)` also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over coupled arrays read closer to the formulas.
#![allow(clippy::needless_range_loop)]

pub mod cantor;
pub mod config;
pub mod error;
pub mod funcrep;
pub mod henon;
pub mod io;
pub mod toysplit;
pub mod unimodal;
pub mod universality;

pub use error::{Error, Result};
pub use funcrep::{Box3, Interval, ScalarField1D, ScalarField3D};

#[cfg(test)]
pub(crate) mod testkit;

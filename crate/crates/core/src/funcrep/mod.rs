//! Spectral representation of smooth functions on intervals and boxes.

pub mod cheb;
mod domain;
mod field1;
mod field3;
mod quad;
mod solve;

pub use domain::{Box3, Interval};
pub use field1::{ScalarField1D, TAIL_TOL};
pub use field3::{ScalarField3D, MAX_DEGREE_3D};
pub use quad::GaussLegendre;
pub use solve::{
    bracketed_root, critical_point, invert_monotone, invert_point, solve_implicit,
    try_solve_implicit,
};

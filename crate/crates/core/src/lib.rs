//! Numerical homogenization of stationary random two-phase media whose
//! inclusion energy may be infinite-valued.
//!
//! The crate computes finite-volume approximations of the homogenized energy
//! densities `V̄(Λ)` (convex) and `W̄(Λ)` (nonconvex perturbation) by solving
//! cell problems on cubes `Q_R` with Q1 finite elements and averaging over
//! realizations of a random inclusion set.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod ext;
pub mod grid;
pub mod homogenize;
pub mod integrands;
pub mod linalg;
pub mod mat;
pub mod microstructure;
pub mod oracle;
pub mod reduce;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use mat::Mat;

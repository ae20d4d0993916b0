//! Numerical laboratory for rotationally symmetric Riemannian manifolds with
//! density `dr² + phi(r)² g_{S^{n-1}}`, `X = s·∇f(r)`.
//!
//! The crate builds the model spaces (Gaussian space, round sphere, and a
//! family of doubled capped cylinders whose diameters approach `pi/eps`),
//! evaluates their Ricci, Bakry–Émery and weighted sectional curvatures in
//! closed form, integrates geodesics, computes Jacobi fields and Morse
//! indices, and checks the quantitative comparison estimates on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod geodesics;
pub mod ode;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod variation;
pub mod verify;

pub use error::{Error, Result};

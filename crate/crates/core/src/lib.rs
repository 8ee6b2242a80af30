//! Elliptic mesh deformation techniques for moving-mesh ALE simulations on
//! multi-patch tensor-product spline domains.
//!
//! The crate is organised bottom-up:
//!
//! - [`discretization`]: B-spline bases, patches, multi-patch topology,
//!   degree-of-freedom maps and the oscillating-beam benchmark geometry.
//! - [`operators`]: material laws and assembly of the Laplace, mixed
//!   bi-harmonic, linear elasticity and nonlinear elasticity operators, with
//!   Jacobian-based local stiffening, plus the sparse direct solvers.
//! - [`mdt`]: the seven mesh deformation techniques behind one stepping
//!   interface.
//! - [`dynamics`]: the St. Venant-Kirchhoff beam driven by a body force and
//!   integrated with the Newmark scheme.
//! - [`quality`]: bijectivity audit, ALE norm, period detection and phase
//!   timing.

pub mod discretization;
pub mod dynamics;
pub mod error;
pub mod mdt;
pub mod operators;
pub mod quality;

pub use error::{Error, Result};

/// Two-dimensional vector used for points, displacements and coefficients.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 matrix used for Jacobians, deformation gradients and stresses.
pub type Mat2 = nalgebra::Matrix2<f64>;

use thiserror::Error;

use crate::quality::BijectivityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid knot vector: {0}")]
    KnotVector(String),

    /// Patches, interfaces or couplings do not fit together.
    #[error("topology error: {0}")]
    Topology(String),

    /// The geometry map is not bijective at a quadrature point.
    #[error("invalid geometry in patch {patch} at quadrature point {point}: det = {det:e}")]
    InvalidGeometry {
        patch: usize,
        point: usize,
        det: f64,
    },

    /// A deformation state has a nonpositive Jacobian determinant.
    #[error("invalid state in patch {patch} at quadrature point {point}: J = {jacobian:e}")]
    InvalidState {
        patch: usize,
        point: usize,
        jacobian: f64,
    },

    #[error("singular material: {0}")]
    SingularMaterial(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    /// A mesh deformation step produced a non-bijective mapping. The state
    /// that attempted the step is left untouched.
    #[error("step rejected: min J = {:e} in patch {} at point {}", .0.min_j, .0.patch, .0.point)]
    StepRejected(BijectivityReport),

    #[error("nonlinear iteration failed: {0}")]
    Convergence(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

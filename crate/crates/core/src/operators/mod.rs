//! Material laws, operator assembly and sparse direct solvers.

pub mod assembly;
pub mod material;
pub mod solver;
pub mod sparse;

pub use assembly::{
    flatten, stiffening_weight, unflatten, AssembledSystem, Assembler, NonlinearSystem, Stiffening,
    EPS_J,
};
pub use material::{isotropic_tangent, tangent_fd_error, LameParameters, MaterialLaw, Tensor4};
pub use solver::{Factorization, SolverKind, SymbolicCache};
pub use sparse::{BlockLayout, CscPattern, ElementPattern, Partition, SparseMatrix};

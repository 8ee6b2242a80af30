//! Spline bases, patches, multi-patch topology and the function space used by
//! every operator.

pub mod benchmark;
pub mod domain;
pub mod geometry_file;
pub mod knots;
pub mod patch;
pub mod quadrature;
pub mod space;

pub use benchmark::{build_benchmark_geometry, BenchmarkGeometry, BenchmarkLayout, Coupling};
pub use domain::{BoundaryTag, DofClass, DofMap, Interface, MultiPatchDomain, Slot};
pub use knots::{BasisValues, KnotVector};
pub use patch::{GeometryEval, Side, SplinePatch};
pub use quadrature::GaussRule;
pub use space::{Element, FunctionSpace, QuadPoint};

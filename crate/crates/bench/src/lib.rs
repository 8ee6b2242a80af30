//! Oscillating-beam benchmark for the mesh deformation techniques of
//! `mdt-core`: experiment configuration, runners, CSV records and VTK
//! export.

pub mod config;
pub mod experiments;
pub mod record;
pub mod vtk;

pub use config::ExperimentConfig;
pub use experiments::{Benchmark, Horizon, Trajectory, TrajectoryCache};
pub use record::{PhaseTimes, Row, RunRecord, Status};

/// Route the sparse factorizations through the sequential kernels; the
/// benchmark systems are far too small to amortize threading.
pub fn sequential_solvers() {
    faer::set_global_parallelism(faer::Par::Seq);
}

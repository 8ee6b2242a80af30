#![allow(dead_code)]

use std::sync::Arc;

use mdt_core::discretization::{build_benchmark_geometry, FunctionSpace};
use mdt_core::operators::Assembler;
use mdt_core::{Mat2, Vec2};

/// Fluid mesh of the benchmark refined `refinement` times.
pub fn benchmark(refinement: usize) -> Arc<Assembler> {
    let g = build_benchmark_geometry(refinement).unwrap();
    Arc::new(Assembler::new(Arc::new(
        FunctionSpace::new(g.fluid).unwrap(),
    )))
}

/// Interface trace of a cantilever-like deflection with tip value `amp`.
pub fn deflection(asm: &Assembler, amp: f64) -> Vec<Vec2> {
    let space = asm.space();
    space
        .dofs()
        .gamma()
        .iter()
        .map(|&d| {
            let s = ((space.control_point(d).x - 0.24899) / (0.6 - 0.24899)).clamp(0.0, 1.0);
            Vec2::new(-0.1 * amp * s * s * s, amp * s * s)
        })
        .collect()
}

/// Affine field `A x + b` on every Dirichlet DoF.
pub fn affine_dirichlet(asm: &Assembler, a: Mat2, b: Vec2) -> Vec<Vec2> {
    let space = asm.space();
    space
        .dofs()
        .dirichlet()
        .iter()
        .map(|&d| a * space.control_point(d) + b)
        .collect()
}

pub fn max_diff(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

//! Legacy ASCII VTK export of a displaced multi-patch mesh.

use std::fmt::Write as _;
use std::path::Path;

use mdt_core::discretization::FunctionSpace;
use mdt_core::{Result, Vec2};

const VTK_QUAD: u8 = 9;

/// Sample parameters per direction: every break and every element midpoint.
fn samples(breaks: &[f64]) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        out.push(0.5 * (w[0] + w[1]));
        out.push(w[1]);
    }
    out
}

/// Unstructured grid with each element split into 2x2 bilinear cells.
/// Points sit at the displaced positions and carry `u`; cells carry `J`
/// sampled at their centres.
pub fn render(space: &FunctionSpace, u: &[Vec2]) -> Result<String> {
    let domain = space.domain();
    let per_patch = space.dofs().scatter(u);
    let mut points = Vec::new();
    let mut displacements = Vec::new();
    let mut cells = Vec::new();
    let mut jacobians = Vec::new();
    for (p, patch) in domain.patches().iter().enumerate() {
        let sx = samples(&patch.basis(0).breaks());
        let sy = samples(&patch.basis(1).breaks());
        let offset = points.len();
        for &eta in &sy {
            for &xi in &sx {
                let x = patch.eval_point(xi, eta)?;
                let (d, _) = patch.eval_field_with_gradient(&per_patch[p], xi, eta)?;
                points.push(x + d);
                displacements.push(d);
            }
        }
        let nx = sx.len();
        for j in 0..sy.len() - 1 {
            for i in 0..nx - 1 {
                let a = offset + j * nx + i;
                cells.push([a, a + 1, a + nx + 1, a + nx]);
                let (xi, eta) = (0.5 * (sx[i] + sx[i + 1]), 0.5 * (sy[j] + sy[j + 1]));
                let g = patch.eval_geometry(xi, eta)?;
                let (_, du) = patch.eval_field_with_gradient(&per_patch[p], xi, eta)?;
                jacobians.push((g.jacobian + du).determinant() / g.det);
            }
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\nALE mesh\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", points.len());
    for x in &points {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", x.x, x.y);
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), 5 * cells.len());
    for c in &cells {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        let _ = writeln!(s, "{VTK_QUAD}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nVECTORS u double", points.len());
    for d in &displacements {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", d.x, d.y);
    }
    let _ = writeln!(
        s,
        "CELL_DATA {}\nSCALARS J double 1\nLOOKUP_TABLE default",
        cells.len()
    );
    for j in &jacobians {
        let _ = writeln!(s, "{j:.16e}");
    }
    Ok(s)
}

pub fn write(space: &FunctionSpace, u: &[Vec2], path: &Path) -> Result<()> {
    std::fs::write(path, render(space, u)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mdt_core::discretization::build_benchmark_geometry;

    #[test]
    fn undeformed_export_counts_and_unit_jacobian() {
        let g = build_benchmark_geometry(1).unwrap();
        let space = FunctionSpace::new(g.fluid.clone()).unwrap();
        let u = vec![Vec2::zeros(); space.num_dofs()];
        let text = render(&space, &u).unwrap();
        let expected: usize = g
            .fluid
            .patches()
            .iter()
            .map(|p| {
                let (ex, ey) = p.num_elements();
                (2 * ex + 1) * (2 * ey + 1)
            })
            .sum();
        assert!(text.contains(&format!("POINTS {expected} double")));
        let start = text.find("LOOKUP_TABLE default\n").unwrap() + 21;
        let js: Vec<f64> = text[start..].lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(js.len(), 3 * 4 * 4);
        assert!(js.iter().all(|j| (j - 1.0).abs() < 1e-14));
        assert_eq!(text, render(&space, &u).unwrap());
    }
}

//! Weak-form assembly of the mesh deformation operators.
//!
//! Every operator is assembled over all DoFs on a fixed element pattern and
//! then split into the free-free block (the system matrix) and the
//! free-Dirichlet block (the elimination matrix). Element matrices may be
//! computed concurrently; they are always summed in element order, so the
//! result does not depend on the thread count.

use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;

use super::material::{LameParameters, MaterialLaw};
use super::solver::SolverKind;
use super::sparse::{BlockLayout, BlockSource, ElementPattern, Partition, SparseMatrix};
use crate::discretization::{Element, FunctionSpace, Slot};
use crate::{Error, Mat2, Result, Vec2};

/// Smallest admissible Jacobian determinant of a deformation.
pub const EPS_J: f64 = 1e-10;

/// Quadrature measure `det^(1 - chi)` replacing `det` in stiffened integrals.
pub fn stiffening_weight(det: f64, chi: f64) -> Result<f64> {
    if !(det > 0.0) {
        return Err(Error::InvalidGeometry {
            patch: 0,
            point: 0,
            det,
        });
    }
    Ok(if chi == 0.0 { det } else { det.powf(1.0 - chi) })
}

/// Jacobian-based local stiffening.
///
/// With `base == None` the stiffening determinant is that of the geometry
/// map being integrated over; otherwise it is taken from the map with the
/// given control points.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stiffening<'a> {
    pub chi: f64,
    pub base: Option<&'a [Vec2]>,
}

impl<'a> Stiffening<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(chi: f64) -> Self {
        Self { chi, base: None }
    }

    pub fn with_base(chi: f64, base: &'a [Vec2]) -> Self {
        Self {
            chi,
            base: Some(base),
        }
    }
}

/// Linear system over the free unknowns.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SparseMatrix,
    /// Coupling of the system rows to the Dirichlet values.
    pub elimination: SparseMatrix,
    /// Interleaved field components per DoF (1 for scalar operators).
    pub components: usize,
    pub symmetric: bool,
    pub saddle: bool,
}

impl AssembledSystem {
    /// Right-hand side `-K_IB g` for Dirichlet values `g` (one column per
    /// right-hand side).
    pub fn rhs(&self, dirichlet: &Mat<f64>) -> Mat<f64> {
        let mut out = Mat::zeros(self.matrix.nrows(), dirichlet.ncols());
        let mut y = vec![0.0; self.matrix.nrows()];
        for j in 0..dirichlet.ncols() {
            let g: Vec<f64> = (0..dirichlet.nrows()).map(|i| dirichlet[(i, j)]).collect();
            y.iter_mut().for_each(|v| *v = 0.0);
            self.elimination.mul_add(&g, -1.0, &mut y);
            for (i, v) in y.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        out
    }

    pub fn solver_kind(&self) -> SolverKind {
        if self.symmetric && !self.saddle {
            SolverKind::Cholesky
        } else {
            SolverKind::Lu
        }
    }
}

/// Residual and tangent of a nonlinear elasticity problem over all DoFs.
#[derive(Debug, Clone)]
pub struct NonlinearSystem {
    /// Interleaved residual, index `dof * 2 + comp`.
    pub residual: Vec<f64>,
    pub tangent: SparseMatrix,
}

/// Pre-built patterns of every operator on one function space.
#[derive(Debug, Clone)]
pub struct Assembler {
    space: Arc<FunctionSpace>,
    scalar: ElementPattern,
    vector: ElementPattern,
    scalar_part: Partition,
    vector_part: Partition,
    saddle_matrix: BlockLayout,
    saddle_elimination: BlockLayout,
}

impl Assembler {
    pub fn new(space: Arc<FunctionSpace>) -> Self {
        let scalar = ElementPattern::new(&space, 1);
        let vector = ElementPattern::new(&space, 2);
        let dofs = space.dofs();
        let scalar_part = Partition::new(&scalar, dofs);
        let vector_part = Partition::new(&vector, dofs);

        // unknowns: q over all DoFs, then u over free DoFs
        let n = dofs.num_dofs();
        let nf = dofs.free().len();
        let all = |i: usize| Some(i);
        let free_shifted = |i: usize| match dofs.slot(i) {
            Slot::Free(s) => Some(n + s),
            Slot::Dirichlet(_) => None,
        };
        let dir = |i: usize| match dofs.slot(i) {
            Slot::Dirichlet(s) => Some(s),
            Slot::Free(_) => None,
        };
        let p = scalar.pattern().as_ref();
        let saddle_matrix = BlockLayout::new(
            n + nf,
            n + nf,
            &[
                BlockSource {
                    pattern: p,
                    row_map: &all,
                    col_map: &all,
                },
                BlockSource {
                    pattern: p,
                    row_map: &all,
                    col_map: &free_shifted,
                },
                BlockSource {
                    pattern: p,
                    row_map: &free_shifted,
                    col_map: &all,
                },
            ],
        );
        let saddle_elimination = BlockLayout::new(
            n + nf,
            dofs.dirichlet().len(),
            &[BlockSource {
                pattern: p,
                row_map: &all,
                col_map: &dir,
            }],
        );
        Self {
            space,
            scalar,
            vector,
            scalar_part,
            vector_part,
            saddle_matrix,
            saddle_elimination,
        }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    fn element_matrices<F>(&self, kernel: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(usize, &Element) -> Result<Vec<f64>> + Sync,
    {
        let results: Vec<Result<Vec<f64>>> = self
            .space
            .elements()
            .par_iter()
            .enumerate()
            .map(|(k, e)| kernel(k, e))
            .collect();
        results.into_iter().collect()
    }

    fn split(&self, full: &SparseMatrix, components: usize, symmetric: bool) -> AssembledSystem {
        let part = if components == 1 {
            &self.scalar_part
        } else {
            &self.vector_part
        };
        AssembledSystem {
            matrix: part.free_free.fill(&[full.values()]),
            elimination: part.free_dirichlet.fill(&[full.values()]),
            components,
            symmetric,
            saddle: false,
        }
    }

    /// Free-free and free-Dirichlet blocks of a full vector operator.
    pub fn split_vector(&self, full: &SparseMatrix, symmetric: bool) -> AssembledSystem {
        self.split(full, 2, symmetric)
    }

    /// Scalar stiffness `int grad N_a . grad N_b` over all DoFs.
    pub fn laplace_full(
        &self,
        geometry: &[Vec2],
        stiffening: Stiffening<'_>,
    ) -> Result<SparseMatrix> {
        let ke = self.element_matrices(|_, e| {
            let n = e.dofs.len();
            let mut ke = vec![0.0; n * n];
            let mut gx = vec![[0.0; 2]; n];
            for q in 0..e.points.len() {
                let (jac, w) = measure(e, q, geometry, &stiffening)?;
                physical_gradients(e, q, &jac, &mut gx);
                for a in 0..n {
                    for b in 0..n {
                        ke[a * n + b] += w * (gx[a][0] * gx[b][0] + gx[a][1] * gx[b][1]);
                    }
                }
            }
            Ok(ke)
        })?;
        Ok(self.scalar.scatter(&ke))
    }

    /// Scalar mass `int rho N_a N_b` over all DoFs.
    pub fn mass_full(
        &self,
        geometry: &[Vec2],
        density: f64,
        stiffening: Stiffening<'_>,
    ) -> Result<SparseMatrix> {
        let ke = self.element_matrices(|_, e| {
            let n = e.dofs.len();
            let mut ke = vec![0.0; n * n];
            for q in 0..e.points.len() {
                let (_, w) = measure(e, q, geometry, &stiffening)?;
                let v = &e.points[q].values;
                for a in 0..n {
                    for b in 0..n {
                        ke[a * n + b] += w * density * v[a] * v[b];
                    }
                }
            }
            Ok(ke)
        })?;
        Ok(self.scalar.scatter(&ke))
    }

    /// Vector mass over all DoFs (interleaved components).
    pub fn vector_mass_full(&self, geometry: &[Vec2], density: f64) -> Result<SparseMatrix> {
        let stiffening = Stiffening::none();
        let ke = self.element_matrices(|_, e| {
            let n = e.dofs.len();
            let m = 2 * n;
            let mut ke = vec![0.0; m * m];
            for q in 0..e.points.len() {
                let (_, w) = measure(e, q, geometry, &stiffening)?;
                let v = &e.points[q].values;
                for a in 0..n {
                    for b in 0..n {
                        let s = w * density * v[a] * v[b];
                        ke[(2 * a) * m + 2 * b] += s;
                        ke[(2 * a + 1) * m + 2 * b + 1] += s;
                    }
                }
            }
            Ok(ke)
        })?;
        Ok(self.vector.scatter(&ke))
    }

    /// Linear elasticity stiffness over all DoFs (interleaved components).
    pub fn elasticity_full(
        &self,
        geometry: &[Vec2],
        lame: LameParameters,
        stiffening: Stiffening<'_>,
    ) -> Result<SparseMatrix> {
        let ke = self.element_matrices(|_, e| {
            let n = e.dofs.len();
            let m = 2 * n;
            let mut ke = vec![0.0; m * m];
            let mut gx = vec![[0.0; 2]; n];
            for q in 0..e.points.len() {
                let (jac, w) = measure(e, q, geometry, &stiffening)?;
                physical_gradients(e, q, &jac, &mut gx);
                for a in 0..n {
                    for b in 0..n {
                        let dot = gx[a][0] * gx[b][0] + gx[a][1] * gx[b][1];
                        for i in 0..2 {
                            for j in 0..2 {
                                let mut v = lame.lambda * gx[a][i] * gx[b][j]
                                    + lame.mu * gx[a][j] * gx[b][i];
                                if i == j {
                                    v += lame.mu * dot;
                                }
                                ke[(2 * a + i) * m + 2 * b + j] += w * v;
                            }
                        }
                    }
                }
            }
            Ok(ke)
        })?;
        Ok(self.vector.scatter(&ke))
    }

    /// Laplace operator on the map with control points `geometry`; one
    /// scalar unknown per free DoF.
    pub fn laplace(
        &self,
        geometry: &[Vec2],
        stiffening: Stiffening<'_>,
    ) -> Result<AssembledSystem> {
        Ok(self.split(&self.laplace_full(geometry, stiffening)?, 1, true))
    }

    /// Linear elasticity on the map with control points `geometry`.
    pub fn linear_elasticity(
        &self,
        geometry: &[Vec2],
        lame: LameParameters,
        stiffening: Stiffening<'_>,
    ) -> Result<AssembledSystem> {
        Ok(self.split(&self.elasticity_full(geometry, lame, stiffening)?, 2, true))
    }

    /// Mixed bi-harmonic saddle system in the unknowns `(q, u)`: `q` over all
    /// DoFs, then `u` over the free DoFs.
    ///
    /// ```text
    /// [ M       K_{:,I} ] [q  ]   [ -K_{:,B} g ]
    /// [ K_{I,:} 0       ] [u_I] = [ 0          ]
    /// ```
    pub fn mixed_biharmonic(
        &self,
        geometry: &[Vec2],
        stiffening: Stiffening<'_>,
    ) -> Result<AssembledSystem> {
        let k = self.laplace_full(geometry, stiffening)?;
        let m = self.mass_full(geometry, 1.0, stiffening)?;
        Ok(AssembledSystem {
            matrix: self
                .saddle_matrix
                .fill(&[m.values(), k.values(), k.values()]),
            elimination: self.saddle_elimination.fill(&[k.values()]),
            components: 1,
            symmetric: true,
            saddle: true,
        })
    }

    /// Residual `int F S : grad w` and tangent of a hyperelastic law at the
    /// displacement `u`, on the initial configuration of the space.
    pub fn nonlinear(
        &self,
        law: &MaterialLaw,
        u: &[Vec2],
        stiffening: Stiffening<'_>,
    ) -> Result<NonlinearSystem> {
        let geometry = self.space.initial_points();
        let blocks: Vec<Result<(Vec<f64>, Vec<f64>)>> = self
            .space
            .elements()
            .par_iter()
            .map(|e| nonlinear_element(e, law, geometry, u, &stiffening))
            .collect();
        let mut residual = vec![0.0; 2 * self.space.num_dofs()];
        let mut kes = Vec::with_capacity(blocks.len());
        for (e, block) in self.space.elements().iter().zip(blocks) {
            let (re, ke) = block?;
            for (a, &dof) in e.dofs.iter().enumerate() {
                residual[2 * dof] += re[2 * a];
                residual[2 * dof + 1] += re[2 * a + 1];
            }
            kes.push(ke);
        }
        Ok(NonlinearSystem {
            residual,
            tangent: self.vector.scatter(&kes),
        })
    }

    /// Load vector `int rho g . w` (interleaved components).
    pub fn body_force(&self, density: f64, g: Vec2) -> Result<Vec<f64>> {
        let geometry = self.space.initial_points();
        let stiffening = Stiffening::none();
        let mut f = vec![0.0; 2 * self.space.num_dofs()];
        for e in self.space.elements() {
            for q in 0..e.points.len() {
                let (_, w) = measure(e, q, geometry, &stiffening)?;
                for (&dof, &n) in e.dofs.iter().zip(&e.points[q].values) {
                    f[2 * dof] += w * density * g.x * n;
                    f[2 * dof + 1] += w * density * g.y * n;
                }
            }
        }
        Ok(f)
    }
}

/// Parametric Jacobian of the geometry and the (stiffened) quadrature weight.
#[inline]
fn measure(
    e: &Element,
    q: usize,
    geometry: &[Vec2],
    stiffening: &Stiffening<'_>,
) -> Result<(Mat2, f64)> {
    let jac = e.jacobian(q, geometry);
    let det = jac.determinant();
    let point = e.first_point + q;
    if !(det > 0.0) {
        return Err(Error::InvalidGeometry {
            patch: e.patch,
            point,
            det,
        });
    }
    let w = e.points[q].weight;
    if stiffening.chi == 0.0 {
        return Ok((jac, w * det));
    }
    let scale = match stiffening.base {
        None => det.powf(1.0 - stiffening.chi),
        Some(base) => {
            let det_base = e.jacobian(q, base).determinant();
            if !(det_base > 0.0) {
                return Err(Error::InvalidGeometry {
                    patch: e.patch,
                    point,
                    det: det_base,
                });
            }
            det * det_base.powf(-stiffening.chi)
        }
    };
    Ok((jac, w * scale))
}

/// Physical gradients `J^{-T} grad_xi N` of the element basis.
#[inline]
fn physical_gradients(e: &Element, q: usize, jac: &Mat2, out: &mut [[f64; 2]]) {
    let inv_det = 1.0 / jac.determinant();
    let (a, b, c, d) = (jac[(0, 0)], jac[(0, 1)], jac[(1, 0)], jac[(1, 1)]);
    for (o, g) in out.iter_mut().zip(&e.points[q].grads) {
        o[0] = (d * g[0] - c * g[1]) * inv_det;
        o[1] = (-b * g[0] + a * g[1]) * inv_det;
    }
}

fn nonlinear_element(
    e: &Element,
    law: &MaterialLaw,
    geometry: &[Vec2],
    u: &[Vec2],
    stiffening: &Stiffening<'_>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = e.dofs.len();
    let m = 2 * n;
    let mut re = vec![0.0; m];
    let mut ke = vec![0.0; m * m];
    let mut gx = vec![[0.0; 2]; n];
    // B[a][i] = F_iI dN_a/dX_J as a 2x2 (I, J) matrix, the strain variation
    // of the test function N_a e_i before symmetrisation
    let mut bmat = vec![[Mat2::zeros(); 2]; n];
    let mut cb = vec![[Mat2::zeros(); 2]; n];
    for q in 0..e.points.len() {
        let (jac, w) = measure(e, q, geometry, stiffening)?;
        physical_gradients(e, q, &jac, &mut gx);
        let mut grad_u = Mat2::zeros();
        for (a, &dof) in e.dofs.iter().enumerate() {
            let ua = u[dof];
            grad_u[(0, 0)] += ua.x * gx[a][0];
            grad_u[(0, 1)] += ua.x * gx[a][1];
            grad_u[(1, 0)] += ua.y * gx[a][0];
            grad_u[(1, 1)] += ua.y * gx[a][1];
        }
        let f = Mat2::identity() + grad_u;
        let jdet = f.determinant();
        if !(jdet > EPS_J) {
            return Err(Error::InvalidState {
                patch: e.patch,
                point: e.first_point + q,
                jacobian: jdet,
            });
        }
        let (s, c) = law.stress_and_tangent(&f).map_err(|err| match err {
            Error::InvalidState { jacobian, .. } => Error::InvalidState {
                patch: e.patch,
                point: e.first_point + q,
                jacobian,
            },
            other => other,
        })?;
        let p = f * s;
        for a in 0..n {
            for i in 0..2 {
                re[2 * a + i] += w * (p[(i, 0)] * gx[a][0] + p[(i, 1)] * gx[a][1]);
                let mut bm = Mat2::zeros();
                for ii in 0..2 {
                    for jj in 0..2 {
                        bm[(ii, jj)] = f[(i, ii)] * gx[a][jj];
                    }
                }
                bmat[a][i] = bm;
                // C : B
                let mut cbm = Mat2::zeros();
                for ii in 0..2 {
                    for jj in 0..2 {
                        let mut v = 0.0;
                        for kk in 0..2 {
                            for ll in 0..2 {
                                v += c[ii][jj][kk][ll] * bm[(kk, ll)];
                            }
                        }
                        cbm[(ii, jj)] = v;
                    }
                }
                cb[a][i] = cbm;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let geo = {
                    let ga = gx[a];
                    let gb = gx[b];
                    s[(0, 0)] * ga[0] * gb[0]
                        + s[(0, 1)] * ga[0] * gb[1]
                        + s[(1, 0)] * ga[1] * gb[0]
                        + s[(1, 1)] * ga[1] * gb[1]
                };
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = bmat[a][i].component_mul(&cb[b][j]).sum();
                        if i == j {
                            v += geo;
                        }
                        ke[(2 * a + i) * m + 2 * b + j] += w * v;
                    }
                }
            }
        }
    }
    Ok((re, ke))
}

/// Interleave a vector field into `[x0, y0, x1, y1, ...]`.
pub fn flatten(u: &[Vec2]) -> Vec<f64> {
    u.iter().flat_map(|v| [v.x, v.y]).collect()
}

pub fn unflatten(x: &[f64]) -> Vec<Vec2> {
    x.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BoundaryTag, MultiPatchDomain, SplinePatch};
    use approx::assert_abs_diff_eq;

    fn skewed_space(refine: usize) -> Arc<FunctionSpace> {
        let patch = SplinePatch::bilinear(
            2,
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.1),
            Vec2::new(1.2, 1.0),
            Vec2::new(-0.1, 0.8),
        )
        .uniform_refine(refine);
        Arc::new(
            FunctionSpace::new(MultiPatchDomain::single(patch, BoundaryTag::OuterFixed)).unwrap(),
        )
    }

    #[test]
    fn stiffening_weight_values() {
        assert_eq!(stiffening_weight(0.7, 0.0).unwrap(), 0.7);
        assert_eq!(stiffening_weight(0.7, 1.0).unwrap(), 1.0);
        assert_eq!(stiffening_weight(4.0, 2.0).unwrap(), 0.25);
        assert!(matches!(
            stiffening_weight(0.0, 1.0),
            Err(Error::InvalidGeometry { .. })
        ));
    }

    #[test]
    fn chi_zero_is_bitwise_unstiffened() {
        let space = skewed_space(2);
        let asm = Assembler::new(space.clone());
        let x = space.initial_points();
        let a = asm.laplace_full(x, Stiffening::none()).unwrap();
        let b = asm.laplace_full(x, Stiffening::with_base(0.0, x)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn laplace_annihilates_constants_and_is_symmetric() {
        let space = skewed_space(2);
        let asm = Assembler::new(space.clone());
        let k = asm
            .laplace_full(space.initial_points(), Stiffening::new(1.5))
            .unwrap();
        let ones = vec![1.0; space.num_dofs()];
        assert!(k.mul(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(k.asymmetry() <= 1e-13 * k.max_abs());
    }

    #[test]
    fn mass_integrates_area() {
        let space = skewed_space(1);
        let asm = Assembler::new(space.clone());
        let m = asm
            .mass_full(space.initial_points(), 1.0, Stiffening::none())
            .unwrap();
        let ones = vec![1.0; space.num_dofs()];
        let area: f64 = m.mul(&ones).iter().sum();
        // shoelace area of the bilinear quad
        let c = [(0.0, 0.0), (1.0, 0.1), (1.2, 1.0), (-0.1, 0.8)];
        let shoelace: f64 = (0..4)
            .map(|i| c[i].0 * c[(i + 1) % 4].1 - c[(i + 1) % 4].0 * c[i].1)
            .sum::<f64>()
            / 2.0;
        assert_abs_diff_eq!(area, shoelace, epsilon = 1e-13);
    }

    #[test]
    fn neo_hookean_tangent_at_zero_is_linear_elasticity() {
        let space = skewed_space(2);
        let asm = Assembler::new(space.clone());
        let lame = LameParameters::from_young_poisson(1.0, 0.3).unwrap();
        let zero = vec![Vec2::zeros(); space.num_dofs()];
        for chi in [0.0, 2.0] {
            let nl = asm
                .nonlinear(
                    &MaterialLaw::NeoHookeanLog(lame),
                    &zero,
                    Stiffening::new(chi),
                )
                .unwrap();
            let le = asm
                .elasticity_full(space.initial_points(), lame, Stiffening::new(chi))
                .unwrap();
            assert!(nl.residual.iter().all(|v| *v == 0.0));
            let diff = nl
                .tangent
                .values()
                .iter()
                .zip(le.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-10, "{diff:e}");
        }
    }

    #[test]
    fn folded_state_is_invalid() {
        let space = skewed_space(0);
        let asm = Assembler::new(space.clone());
        let lame = LameParameters::from_young_poisson(1.0, 0.3).unwrap();
        let u: Vec<Vec2> = space
            .initial_points()
            .iter()
            .map(|x| Vec2::new(-2.0 * x.x, 0.0))
            .collect();
        let res = asm.nonlinear(&MaterialLaw::NeoHookeanLog(lame), &u, Stiffening::none());
        assert!(matches!(
            res,
            Err(Error::InvalidState {
                patch: 0,
                point: 0,
                ..
            })
        ));
    }
}

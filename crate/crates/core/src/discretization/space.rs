//! Element quadrature cache over a multi-patch domain.
//!
//! Basis values and parametric gradients are evaluated once per Gauss point
//! and reused for every geometry map that shares the same bases (initial and
//! deformed configurations differ only in their control points).

use super::domain::{DofMap, MultiPatchDomain};
use super::quadrature::GaussRule;
use crate::{Mat2, Result, Vec2};

/// Gauss point of an element in parametric coordinates.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    /// Gauss weight times the parametric cell area.
    pub weight: f64,
    pub xi: f64,
    pub eta: f64,
    /// Values of the element's nonzero basis functions.
    pub values: Vec<f64>,
    /// Parametric gradients `[d/dxi, d/deta]` of the same functions.
    pub grads: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub patch: usize,
    /// Index of the first Gauss point of this element within its patch.
    pub first_point: usize,
    /// Global DoFs of the nonzero basis functions.
    pub dofs: Vec<usize>,
    pub points: Vec<QuadPoint>,
}

impl Element {
    /// Parametric Jacobian `dx/dxi` of the map with global coefficients `x`
    /// at Gauss point `q`.
    #[inline]
    pub fn jacobian(&self, q: usize, x: &[Vec2]) -> Mat2 {
        let qp = &self.points[q];
        let mut jac = Mat2::zeros();
        for (k, &dof) in self.dofs.iter().enumerate() {
            let c = x[dof];
            let g = qp.grads[k];
            jac[(0, 0)] += c.x * g[0];
            jac[(0, 1)] += c.x * g[1];
            jac[(1, 0)] += c.y * g[0];
            jac[(1, 1)] += c.y * g[1];
        }
        jac
    }

    /// Value of the field with global coefficients `u` at Gauss point `q`.
    #[inline]
    pub fn value(&self, q: usize, u: &[Vec2]) -> Vec2 {
        let qp = &self.points[q];
        self.dofs
            .iter()
            .zip(&qp.values)
            .map(|(&d, &n)| u[d] * n)
            .sum()
    }
}

/// Degree-of-freedom map plus element quadrature data of a domain.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    domain: MultiPatchDomain,
    dofs: DofMap,
    elements: Vec<Element>,
    /// Global control points of the initial configuration.
    x0: Vec<Vec2>,
}

impl FunctionSpace {
    /// Build with `(p+1)^2` Gauss points per element.
    pub fn new(domain: MultiPatchDomain) -> Result<Self> {
        let dofs = DofMap::build(&domain)?;
        let mut elements = Vec::new();
        for (p, patch) in domain.patches().iter().enumerate() {
            let ku = patch.basis(0);
            let kv = patch.basis(1);
            let rule_u = GaussRule::new(ku.degree() + 1);
            let rule_v = GaussRule::new(kv.degree() + 1);
            let bu = ku.breaks();
            let bv = kv.breaks();
            let mut first_point = 0;
            for v in bv.windows(2) {
                for u in bu.windows(2) {
                    let mut points = Vec::with_capacity(rule_u.len() * rule_v.len());
                    let mut dofs_e = Vec::new();
                    for &(eta, wv) in &rule_v.mapped(v[0], v[1]) {
                        let nv = kv.eval_basis(eta, 1)?;
                        for &(xi, wu) in &rule_u.mapped(u[0], u[1]) {
                            let nu = ku.eval_basis(xi, 1)?;
                            let mut values = Vec::new();
                            let mut grads = Vec::new();
                            let mut local = Vec::new();
                            for b in 0..nv.values[0].len() {
                                for a in 0..nu.values[0].len() {
                                    values.push(nu.values[0][a] * nv.values[0][b]);
                                    grads.push([
                                        nu.values[1][a] * nv.values[0][b],
                                        nu.values[0][a] * nv.values[1][b],
                                    ]);
                                    local.push(patch.local_index(nu.first + a, nv.first + b));
                                }
                            }
                            let global: Vec<usize> =
                                local.iter().map(|&l| dofs.global(p, l)).collect();
                            if dofs_e.is_empty() {
                                dofs_e = global;
                            } else {
                                debug_assert_eq!(dofs_e, global);
                            }
                            points.push(QuadPoint {
                                weight: wu * wv,
                                xi,
                                eta,
                                values,
                                grads,
                            });
                        }
                    }
                    let n = points.len();
                    elements.push(Element {
                        patch: p,
                        first_point,
                        dofs: dofs_e,
                        points,
                    });
                    first_point += n;
                }
            }
        }
        let per_patch: Vec<Vec<Vec2>> = domain
            .patches()
            .iter()
            .map(|p| p.control_points().to_vec())
            .collect();
        let x0 = dofs.gather(&per_patch);
        Ok(Self {
            domain,
            dofs,
            elements,
            x0,
        })
    }

    pub fn domain(&self) -> &MultiPatchDomain {
        &self.domain
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    /// Global control points of the initial configuration.
    pub fn initial_points(&self) -> &[Vec2] {
        &self.x0
    }

    /// Global control points displaced by `u`.
    pub fn displaced_points(&self, u: &[Vec2]) -> Vec<Vec2> {
        self.x0.iter().zip(u).map(|(x, d)| x + d).collect()
    }

    /// Domain whose control points are displaced by the global field `u`.
    pub fn displaced_domain(&self, u: &[Vec2]) -> Result<MultiPatchDomain> {
        self.domain
            .with_control_points(self.dofs.scatter(&self.displaced_points(u)))
    }

    /// Initial control point of a global DoF.
    pub fn control_point(&self, dof: usize) -> Vec2 {
        self.x0[dof]
    }
}

use std::fmt;
use std::str::FromStr;

use super::knots::KnotVector;
use crate::{Error, Mat2, Result, Vec2};

/// Side of the parameter square `[0, 1]^2`.
///
/// `West`/`East` are `xi = 0`/`xi = 1` and run along `eta`; `South`/`North`
/// are `eta = 0`/`eta = 1` and run along `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parametric direction the side runs along.
    pub fn tangent_direction(self) -> usize {
        match self {
            Side::West | Side::East => 1,
            Side::South | Side::North => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::West => "west",
            Side::East => "east",
            Side::South => "south",
            Side::North => "north",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "west" => Ok(Side::West),
            "east" => Ok(Side::East),
            "south" => Ok(Side::South),
            "north" => Ok(Side::North),
            other => Err(Error::Parse(format!("unknown side '{other}'"))),
        }
    }
}

/// Point, Jacobian `[dG/dxi | dG/deta]` and its determinant.
#[derive(Debug, Clone, Copy)]
pub struct GeometryEval {
    pub point: Vec2,
    pub jacobian: Mat2,
    pub det: f64,
}

/// Tensor-product polynomial B-spline map of the unit square into the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SplinePatch {
    basis: [KnotVector; 2],
    /// Tensor index `(i, j)` is stored at `i + n_xi * j`.
    control_points: Vec<Vec2>,
}

impl SplinePatch {
    pub fn new(
        basis_xi: KnotVector,
        basis_eta: KnotVector,
        control_points: Vec<Vec2>,
    ) -> Result<Self> {
        let expected = basis_xi.num_basis() * basis_eta.num_basis();
        if control_points.len() != expected {
            return Err(Error::Topology(format!(
                "{} control points for a basis of dimension {expected}",
                control_points.len()
            )));
        }
        Ok(Self {
            basis: [basis_xi, basis_eta],
            control_points,
        })
    }

    /// Degree-`degree` single-element patch of the bilinear map through the
    /// four corners (counter-clockwise from `(0,0)`: `c00, c10, c11, c01`).
    pub fn bilinear(degree: usize, c00: Vec2, c10: Vec2, c11: Vec2, c01: Vec2) -> Self {
        let kv = KnotVector::uniform(degree, 1);
        let n = degree + 1;
        let mut cps = Vec::with_capacity(n * n);
        for j in 0..n {
            let t = j as f64 / degree as f64;
            for i in 0..n {
                let s = i as f64 / degree as f64;
                cps.push(
                    c00 * ((1.0 - s) * (1.0 - t))
                        + c10 * (s * (1.0 - t))
                        + c11 * (s * t)
                        + c01 * ((1.0 - s) * t),
                );
            }
        }
        Self {
            basis: [kv.clone(), kv],
            control_points: cps,
        }
    }

    /// Identity map of the unit square with `elements` uniform spans per direction.
    pub fn unit_square(degree: usize, elements: usize) -> Self {
        let patch = Self::bilinear(
            degree,
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        );
        let mut out = patch;
        // uniform knots are a refinement of the single-element patch
        for direction in 0..2 {
            for i in 1..elements {
                out.insert_knot(direction, i as f64 / elements as f64);
            }
        }
        out
    }

    pub fn basis(&self, direction: usize) -> &KnotVector {
        &self.basis[direction]
    }

    pub fn control_points(&self) -> &[Vec2] {
        &self.control_points
    }

    pub fn control_points_mut(&mut self) -> &mut [Vec2] {
        &mut self.control_points
    }

    pub fn num_basis(&self) -> (usize, usize) {
        (self.basis[0].num_basis(), self.basis[1].num_basis())
    }

    pub fn num_elements(&self) -> (usize, usize) {
        (self.basis[0].num_elements(), self.basis[1].num_elements())
    }

    pub fn local_index(&self, i: usize, j: usize) -> usize {
        i + self.basis[0].num_basis() * j
    }

    /// Local indices of the coefficients on `side`, ordered along the side.
    pub fn side_indices(&self, side: Side) -> Vec<usize> {
        let (nu, nv) = self.num_basis();
        match side {
            Side::West => (0..nv).map(|j| self.local_index(0, j)).collect(),
            Side::East => (0..nv).map(|j| self.local_index(nu - 1, j)).collect(),
            Side::South => (0..nu).map(|i| self.local_index(i, 0)).collect(),
            Side::North => (0..nu).map(|i| self.local_index(i, nv - 1)).collect(),
        }
    }

    /// Parameter pair of the point on `side` at running parameter `t`.
    pub fn side_parameter(side: Side, t: f64) -> (f64, f64) {
        match side {
            Side::West => (0.0, t),
            Side::East => (1.0, t),
            Side::South => (t, 0.0),
            Side::North => (t, 1.0),
        }
    }

    pub fn eval_geometry(&self, xi: f64, eta: f64) -> Result<GeometryEval> {
        let (point, jacobian) = self.eval_field_with_gradient(&self.control_points, xi, eta)?;
        Ok(GeometryEval {
            point,
            jacobian,
            det: jacobian.determinant(),
        })
    }

    /// Evaluate a vector field with the given coefficients on this patch's
    /// basis, returning the value and its parametric gradient `[d/dxi | d/deta]`.
    pub fn eval_field_with_gradient(
        &self,
        coeffs: &[Vec2],
        xi: f64,
        eta: f64,
    ) -> Result<(Vec2, Mat2)> {
        debug_assert_eq!(coeffs.len(), self.control_points.len());
        let bu = self.basis[0].eval_basis(xi, 1)?;
        let bv = self.basis[1].eval_basis(eta, 1)?;
        let mut value = Vec2::zeros();
        let mut grad = Mat2::zeros();
        for (b, &nv) in bv.values[0].iter().enumerate() {
            let dv = bv.values[1][b];
            for (a, &nu) in bu.values[0].iter().enumerate() {
                let du = bu.values[1][a];
                let c = coeffs[self.local_index(bu.first + a, bv.first + b)];
                value += c * (nu * nv);
                grad += c * nalgebra::RowVector2::new(du * nv, nu * dv);
            }
        }
        Ok((value, grad))
    }

    pub fn eval_point(&self, xi: f64, eta: f64) -> Result<Vec2> {
        Ok(self.eval_geometry(xi, eta)?.point)
    }

    fn insert_knot(&mut self, direction: usize, x: f64) {
        let (nu, nv) = self.num_basis();
        if direction == 0 {
            let mut rows: Vec<Vec<Vec2>> = (0..nv)
                .map(|j| self.control_points[j * nu..(j + 1) * nu].to_vec())
                .collect();
            self.basis[0].insert_knot(x, &mut rows);
            self.control_points = rows.concat();
        } else {
            let mut cols: Vec<Vec<Vec2>> = (0..nu)
                .map(|i| (0..nv).map(|j| self.control_points[i + nu * j]).collect())
                .collect();
            self.basis[1].insert_knot(x, &mut cols);
            let nv_new = nv + 1;
            let mut cps = Vec::with_capacity(nu * nv_new);
            for j in 0..nv_new {
                for col in &cols {
                    cps.push(col[j]);
                }
            }
            self.control_points = cps;
        }
    }

    /// Insert the midpoint of every nonempty span in both directions,
    /// `times` times over. The geometry map is unchanged.
    pub fn uniform_refine(&self, times: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..times {
            for direction in 0..2 {
                for x in out.basis[direction].midpoints() {
                    out.insert_knot(direction, x);
                }
            }
        }
        out
    }

    /// Minimum of `det` over the Gauss points of every element.
    pub fn min_quadrature_det(&self) -> f64 {
        let rule = super::quadrature::GaussRule::new(
            self.basis[0].degree().max(self.basis[1].degree()) + 1,
        );
        let bu = self.basis[0].breaks();
        let bv = self.basis[1].breaks();
        let mut min = f64::INFINITY;
        for v in bv.windows(2) {
            for u in bu.windows(2) {
                for &(sv, _) in rule.mapped(v[0], v[1]).iter() {
                    for &(su, _) in rule.mapped(u[0], u[1]).iter() {
                        let det = self
                            .eval_geometry(su, sv)
                            .map(|g| g.det)
                            .unwrap_or(f64::NAN);
                        min = min.min(det);
                    }
                }
            }
        }
        min
    }
}

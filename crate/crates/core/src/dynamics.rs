//! St. Venant-Kirchhoff beam under a body force, integrated with Newmark.

use std::sync::Arc;

use crate::discretization::{BenchmarkGeometry, DofMap, FunctionSpace, Side, SplinePatch};
use crate::operators::{
    flatten, Assembler, Factorization, LameParameters, MaterialLaw, SparseMatrix, Stiffening,
    SymbolicCache,
};
use crate::quality::{self, BijectivityReport};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
}

impl Default for NewmarkParams {
    fn default() -> Self {
        Self {
            beta: 0.5,
            gamma: 1.0,
            dt: 0.0025,
        }
    }
}

impl NewmarkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.dt > 0.0) {
            return Err(Error::Usage(format!(
                "Newmark parameters beta = {}, gamma = {}, dt = {}",
                self.beta, self.gamma, self.dt
            )));
        }
        Ok(())
    }

    /// Acceleration at the new level implied by the new displacement.
    #[inline]
    pub fn acceleration(&self, u_new: f64, u: f64, v: f64, a: f64) -> f64 {
        let dt = self.dt;
        (u_new - u - dt * v - dt * dt * (0.5 - self.beta) * a) / (self.beta * dt * dt)
    }

    #[inline]
    pub fn velocity(&self, v: f64, a: f64, a_new: f64) -> f64 {
        v + self.dt * ((1.0 - self.gamma) * a + self.gamma * a_new)
    }

    /// `d a_new / d u_new`.
    pub fn mass_factor(&self) -> f64 {
        1.0 / (self.beta * self.dt * self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverParams {
    /// Density in kg/m^3.
    pub density: f64,
    /// Young's modulus in Pa.
    pub young: f64,
    pub poisson: f64,
    /// Loading level `l` of the body acceleration `g = (0, l)` in m/s^2.
    pub load: f64,
    /// Use `g = (0, -l)`.
    pub flip_gravity: bool,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            density: 1.0e3,
            young: 1.4e6,
            poisson: 0.4,
            load: 0.0,
            flip_gravity: false,
        }
    }
}

impl DriverParams {
    pub fn gravity(&self) -> Vec2 {
        Vec2::new(
            0.0,
            if self.flip_gravity {
                -self.load
            } else {
                self.load
            },
        )
    }
}

/// Displacement, velocity and acceleration coefficients over all beam DoFs.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub u: Vec<Vec2>,
    pub v: Vec<Vec2>,
    pub a: Vec<Vec2>,
    pub t: f64,
}

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 20;

/// Time stepper of the clamped beam and its coupling to the fluid mesh.
#[derive(Debug, Clone)]
pub struct BeamSolver {
    assembler: Assembler,
    beam: SplinePatch,
    law: MaterialLaw,
    newmark: NewmarkParams,
    driver: DriverParams,
    mass: SparseMatrix,
    f_ext: Vec<f64>,
    symbolic: SymbolicCache,
    /// Beam DoF feeding each fluid interface DoF, in fluid `gamma()` order.
    trace: Vec<usize>,
    tip_eta: f64,
}

impl BeamSolver {
    pub fn new(
        geometry: &BenchmarkGeometry,
        fluid_dofs: &DofMap,
        newmark: NewmarkParams,
        driver: DriverParams,
    ) -> Result<Self> {
        newmark.validate()?;
        let lame = LameParameters::from_young_poisson(driver.young, driver.poisson)?;
        let space = Arc::new(FunctionSpace::new(geometry.beam_domain()?)?);
        let assembler = Assembler::new(space.clone());
        let mass = assembler
            .split_vector(
                &assembler.vector_mass_full(space.initial_points(), driver.density)?,
                true,
            )
            .matrix;
        let f_all = assembler.body_force(driver.density, driver.gravity())?;
        let f_ext = free_part(space.dofs(), &f_all);
        let trace = trace_map(geometry, fluid_dofs, space.dofs())?;
        let tip_eta = tip_parameter(&geometry.beam)?;
        Ok(Self {
            assembler,
            beam: geometry.beam.clone(),
            law: MaterialLaw::StVenantKirchhoff(lame),
            newmark,
            driver,
            mass,
            f_ext,
            symbolic: SymbolicCache::default(),
            trace,
            tip_eta,
        })
    }

    pub fn space(&self) -> &FunctionSpace {
        self.assembler.space()
    }

    pub fn newmark(&self) -> NewmarkParams {
        self.newmark
    }

    pub fn driver(&self) -> DriverParams {
        self.driver
    }

    pub fn initial_state(&self) -> BeamState {
        let n = self.space().num_dofs();
        BeamState {
            u: vec![Vec2::zeros(); n],
            v: vec![Vec2::zeros(); n],
            a: vec![Vec2::zeros(); n],
            t: 0.0,
        }
    }

    /// Free-DoF residual `f_int(u) - f_ext` and its tangent.
    fn static_residual(&self, u: &[Vec2]) -> Result<(Vec<f64>, SparseMatrix)> {
        let nl = self.assembler.nonlinear(&self.law, u, Stiffening::none())?;
        let mut r = free_part(self.space().dofs(), &nl.residual);
        r.iter_mut().zip(&self.f_ext).for_each(|(r, f)| *r -= f);
        let k = self.assembler.split_vector(&nl.tangent, true).matrix;
        Ok((r, k))
    }

    /// One Newmark step from `state`.
    pub fn step(&mut self, state: &BeamState) -> Result<BeamState> {
        let nm = self.newmark;
        let dofs = self.space().dofs().clone();
        let free = dofs.free();
        let u_n = flatten(&gather_free(&dofs, &state.u));
        let v_n = flatten(&gather_free(&dofs, &state.v));
        let a_n = flatten(&gather_free(&dofs, &state.a));
        let mut x = u_n.clone();
        let accel = |x: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|i| nm.acceleration(x[i], u_n[i], v_n[i], a_n[i]))
                .collect()
        };
        let reference = l2(&self.f_ext);
        let mut g0 = None;
        let mut converged = false;
        for _ in 0..=NEWTON_MAX_ITER {
            let mut u_full = state.u.clone();
            scatter_free(free, &x, &mut u_full);
            let (mut g, k) = self.static_residual(&u_full)?;
            self.mass.mul_add(&accel(&x), 1.0, &mut g);
            let norm = l2(&g);
            let scale = *g0.get_or_insert(norm.max(reference));
            if norm <= NEWTON_TOL * scale || norm == 0.0 {
                converged = true;
                break;
            }
            let mut jac = k;
            let mf = nm.mass_factor();
            jac.values_mut()
                .iter_mut()
                .zip(self.mass.values())
                .for_each(|(j, m)| *j += mf * m);
            let f = Factorization::new_spd_or_lu(&jac, &mut self.symbolic)?;
            let dx = f.solve_vec(&g)?;
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x -= d);
            if increment_converged(&dx, &x) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "beam Newton did not converge in {NEWTON_MAX_ITER} iterations at t = {}",
                state.t + nm.dt
            )));
        }
        let a_new = accel(&x);
        let v_new: Vec<f64> = (0..x.len())
            .map(|i| nm.velocity(v_n[i], a_n[i], a_new[i]))
            .collect();
        let mut next = BeamState {
            u: state.u.clone(),
            v: state.v.clone(),
            a: state.a.clone(),
            t: state.t + nm.dt,
        };
        scatter_free(free, &x, &mut next.u);
        scatter_free(free, &v_new, &mut next.v);
        scatter_free(free, &a_new, &mut next.a);
        Ok(next)
    }

    /// Equilibrium `f_int(u) = f_ext` by Newton from rest.
    pub fn static_solution(&mut self) -> Result<Vec<Vec2>> {
        let dofs = self.space().dofs().clone();
        let mut u = vec![Vec2::zeros(); dofs.num_dofs()];
        let mut x = vec![0.0; 2 * dofs.free().len()];
        let reference = l2(&self.f_ext);
        for _ in 0..=NEWTON_MAX_ITER {
            scatter_free(dofs.free(), &x, &mut u);
            let (g, k) = self.static_residual(&u)?;
            if l2(&g) <= NEWTON_TOL * reference || l2(&g) == 0.0 {
                return Ok(u);
            }
            let f = Factorization::new_spd_or_lu(&k, &mut self.symbolic)?;
            let dx = f.solve_vec(&g)?;
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x -= d);
            if increment_converged(&dx, &x) {
                scatter_free(dofs.free(), &x, &mut u);
                return Ok(u);
            }
        }
        Err(Error::Convergence(
            "static beam solve did not converge".into(),
        ))
    }

    /// Beam displacement coefficients copied onto the fluid interface DoFs.
    pub fn interface_trace(&self, state: &BeamState) -> Vec<Vec2> {
        self.trace.iter().map(|&b| state.u[b]).collect()
    }

    /// Displacement at the midpoint of the beam's tip side.
    pub fn tip_displacement(&self, state: &BeamState) -> Result<Vec2> {
        let coeffs = self.space().dofs().scatter(&state.u).swap_remove(0);
        let (value, _) = self
            .beam
            .eval_field_with_gradient(&coeffs, 1.0, self.tip_eta)?;
        Ok(value)
    }

    /// Kinetic plus stored energy minus the potential of the body force.
    pub fn energy(&self, state: &BeamState) -> Result<f64> {
        let space = self.space();
        let x0 = space.initial_points();
        let v = flatten(&state.v);
        let m_full = self.assembler.vector_mass_full(x0, self.driver.density)?;
        let kinetic = 0.5 * dot(&v, &m_full.mul(&v));
        let mut stored = 0.0;
        for e in space.elements() {
            for q in 0..e.points.len() {
                let j0 = e.jacobian(q, x0);
                let ju = e.jacobian(q, &state.u);
                let f =
                    crate::Mat2::identity() + ju * j0.try_inverse().expect("valid beam geometry");
                stored += e.points[q].weight * j0.determinant() * self.law.energy_density(&f)?;
            }
        }
        let f_all = self
            .assembler
            .body_force(self.driver.density, self.driver.gravity())?;
        Ok(kinetic + stored - dot(&f_all, &flatten(&state.u)))
    }

    pub fn min_jacobian(&self, state: &BeamState) -> BijectivityReport {
        quality::min_jacobian(self.space(), &state.u)
    }
}

/// Residual round-off can stall above the relative tolerance once the
/// Newton update has reached machine precision.
fn increment_converged(dx: &[f64], x: &[f64]) -> bool {
    l2(dx) <= NEWTON_TOL * l2(x)
}

fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn free_part(dofs: &DofMap, full: &[f64]) -> Vec<f64> {
    dofs.free()
        .iter()
        .flat_map(|&d| [full[2 * d], full[2 * d + 1]])
        .collect()
}

fn gather_free(dofs: &DofMap, u: &[Vec2]) -> Vec<Vec2> {
    dofs.free().iter().map(|&d| u[d]).collect()
}

fn scatter_free(free: &[usize], x: &[f64], out: &mut [Vec2]) {
    for (s, &d) in free.iter().enumerate() {
        out[d] = Vec2::new(x[2 * s], x[2 * s + 1]);
    }
}

fn trace_map(geometry: &BenchmarkGeometry, fluid: &DofMap, beam: &DofMap) -> Result<Vec<usize>> {
    let gamma = fluid.gamma();
    let mut map = vec![usize::MAX; gamma.len()];
    for c in &geometry.couplings {
        let (fi, bi) = geometry.coupled_indices(c);
        for (f, b) in fi.into_iter().zip(bi) {
            let g = fluid.global(c.fluid_patch, f);
            let k = gamma.binary_search(&g).map_err(|_| {
                Error::Topology(format!("coupled fluid DoF {g} is not on the interface"))
            })?;
            let bd = beam.global(0, b);
            if map[k] != usize::MAX && map[k] != bd {
                return Err(Error::Topology(format!(
                    "fluid DoF {g} coupled to two beam DoFs"
                )));
            }
            map[k] = bd;
        }
    }
    if let Some(k) = map.iter().position(|&b| b == usize::MAX) {
        return Err(Error::Topology(format!(
            "interface DoF {} has no beam coupling",
            gamma[k]
        )));
    }
    Ok(map)
}

/// Parameter `eta` on the East side where `y` is halfway between the side's
/// end points.
fn tip_parameter(beam: &SplinePatch) -> Result<f64> {
    let y = |eta: f64| -> Result<f64> {
        let (xi, eta) = SplinePatch::side_parameter(Side::East, eta);
        Ok(beam.eval_point(xi, eta)?.y)
    };
    let (y0, y1) = (y(0.0)?, y(1.0)?);
    let target = 0.5 * (y0 + y1);
    let (mut lo, mut hi) = (0.0, 1.0);
    let increasing = y1 > y0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (y(mid)? < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Mesh deformation techniques.
//!
//! Every technique is driven by the total interface displacement; the
//! incremental ones form their own increments from the previous data.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::Mat;

use crate::discretization::{FunctionSpace, MultiPatchDomain, Slot};
use crate::operators::{
    AssembledSystem, Assembler, Factorization, LameParameters, MaterialLaw, Stiffening,
    SymbolicCache,
};
use crate::quality::{min_jacobian, BijectivityReport, Phase, TimingBreakdown};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    He,
    Ihe,
    Be,
    Ibe,
    Le,
    Ile,
    Tine,
}

impl Technique {
    pub const ALL: [Technique; 7] = [
        Technique::He,
        Technique::Ihe,
        Technique::Be,
        Technique::Ibe,
        Technique::Le,
        Technique::Ile,
        Technique::Tine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::He => "HE",
            Technique::Ihe => "IHE",
            Technique::Be => "BE",
            Technique::Ibe => "IBE",
            Technique::Le => "LE",
            Technique::Ile => "ILE",
            Technique::Tine => "TINE",
        }
    }

    /// Operator posed on the currently deformed domain.
    pub fn deformed_configuration(self) -> bool {
        matches!(self, Technique::Ihe | Technique::Ibe | Technique::Ile)
    }

    pub fn incremental(self) -> bool {
        self.deformed_configuration() || self == Technique::Tine
    }

    pub fn default_stiffening_base(self) -> StiffeningBase {
        if self.deformed_configuration() {
            StiffeningBase::Deformed
        } else {
            StiffeningBase::Initial
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown technique '{s}' (expected HE, IHE, BE, IBE, LE, ILE or TINE)"
                ))
            })
    }
}

/// Which geometry map supplies the stiffening determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StiffeningBase {
    Initial,
    Deformed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffeningConfig {
    pub chi: f64,
    pub base: StiffeningBase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdtConfig {
    pub technique: Technique,
    pub chi: f64,
    /// Poisson's ratio of the pseudo-material (LE, ILE, TINE).
    pub nu_a: f64,
    /// Replaces the technique's stiffening base; for debugging only.
    pub base_override: Option<StiffeningBase>,
}

impl MdtConfig {
    pub fn new(technique: Technique, chi: f64) -> Self {
        Self {
            technique,
            chi,
            nu_a: 0.3,
            base_override: None,
        }
    }
}

/// Young's modulus of the pseudo-material; it scales out of the solution.
pub const PSEUDO_YOUNG: f64 = 1.0;

#[derive(Debug, Clone)]
struct Cached {
    system: AssembledSystem,
    factorization: Factorization,
}

/// Persistent state of one mesh deformation technique.
#[derive(Debug, Clone)]
pub struct MdtState {
    technique: Technique,
    assembler: Arc<Assembler>,
    stiffening: StiffeningConfig,
    lame: LameParameters,
    /// Total ALE displacement over all DoFs.
    u: Vec<Vec2>,
    /// Dirichlet values of the last accepted step.
    d_prev: Vec<Vec2>,
    cached: Option<Cached>,
    symbolic: SymbolicCache,
    timing: TimingBreakdown,
}

impl MdtState {
    pub fn new(assembler: Arc<Assembler>, config: MdtConfig) -> Result<Self> {
        if !(config.chi >= 0.0) {
            return Err(Error::Usage(format!(
                "stiffening degree {} is negative",
                config.chi
            )));
        }
        let lame = LameParameters::from_young_poisson(PSEUDO_YOUNG, config.nu_a)?;
        let n = assembler.space().num_dofs();
        let nd = assembler.space().dofs().dirichlet().len();
        let mut state = Self {
            technique: config.technique,
            stiffening: StiffeningConfig {
                chi: config.chi,
                base: config
                    .base_override
                    .unwrap_or(config.technique.default_stiffening_base()),
            },
            assembler,
            lame,
            u: vec![Vec2::zeros(); n],
            d_prev: vec![Vec2::zeros(); nd],
            cached: None,
            symbolic: SymbolicCache::default(),
            timing: TimingBreakdown::default(),
        };
        if state.reuses_operator() {
            let system = state.assemble_linear()?;
            let factorization = state.factorize(&system)?;
            state.cached = Some(Cached {
                system,
                factorization,
            });
        }
        Ok(state)
    }

    pub fn technique(&self) -> Technique {
        self.technique
    }

    pub fn stiffening(&self) -> StiffeningConfig {
        self.stiffening
    }

    pub fn space(&self) -> &FunctionSpace {
        self.assembler.space()
    }

    /// Current total ALE displacement over all DoFs.
    pub fn displacement(&self) -> &[Vec2] {
        &self.u
    }

    /// Interface displacement of the last accepted step, in the order of
    /// [`crate::discretization::DofMap::gamma`].
    pub fn g_prev(&self) -> Vec<Vec2> {
        let dofs = self.space().dofs();
        dofs.gamma()
            .iter()
            .map(|&g| match dofs.slot(g) {
                Slot::Dirichlet(s) => self.d_prev[s],
                Slot::Free(_) => unreachable!("interface DoFs are Dirichlet"),
            })
            .collect()
    }

    pub fn timing(&self) -> &TimingBreakdown {
        &self.timing
    }

    /// Dimension of the cached linear system, if any.
    pub fn system_dim(&self) -> Option<usize> {
        self.cached.as_ref().map(|c| c.system.matrix.nrows())
    }

    pub fn has_factorization(&self) -> bool {
        self.cached.is_some()
    }

    /// The operator depends on neither the state nor the step.
    fn reuses_operator(&self) -> bool {
        !self.technique.incremental()
            && (self.stiffening.chi == 0.0 || self.stiffening.base == StiffeningBase::Initial)
    }

    /// Domain with control points `c_k + d_k`.
    pub fn deformed_geometry(&self) -> Result<MultiPatchDomain> {
        self.space().displaced_domain(&self.u)
    }

    fn stiffening_for<'a>(
        &self,
        geometry_is_initial: bool,
        deformed: &'a [Vec2],
        initial: &'a [Vec2],
    ) -> Stiffening<'a> {
        let chi = self.stiffening.chi;
        match (self.stiffening.base, geometry_is_initial) {
            (StiffeningBase::Initial, true) | (StiffeningBase::Deformed, false) => {
                Stiffening::new(chi)
            }
            (StiffeningBase::Initial, false) => Stiffening::with_base(chi, initial),
            (StiffeningBase::Deformed, true) => Stiffening::with_base(chi, deformed),
        }
    }

    fn assemble_linear(&self) -> Result<AssembledSystem> {
        let space = self.assembler.space();
        let x0 = space.initial_points();
        let xi = space.displaced_points(&self.u);
        let on_initial = !self.technique.deformed_configuration();
        let geometry: &[Vec2] = if on_initial { x0 } else { &xi };
        let st = self.stiffening_for(on_initial, &xi, x0);
        self.timing.run(Phase::Assembly, || match self.technique {
            Technique::He | Technique::Ihe => self.assembler.laplace(geometry, st),
            Technique::Be | Technique::Ibe => self.assembler.mixed_biharmonic(geometry, st),
            Technique::Le | Technique::Ile => {
                self.assembler.linear_elasticity(geometry, self.lame, st)
            }
            Technique::Tine => unreachable!("TINE has no linear operator"),
        })
    }

    fn factorize(&mut self, system: &AssembledSystem) -> Result<Factorization> {
        let kind = system.solver_kind();
        let symbolic = &mut self.symbolic;
        self.timing.run(Phase::Solve, || {
            Factorization::new(&system.matrix, kind, symbolic)
        })
    }

    /// Dirichlet values with `g` on the interface and zero elsewhere.
    pub fn dirichlet_values(&self, g: &[Vec2]) -> Result<Vec<Vec2>> {
        let dofs = self.space().dofs();
        if g.len() != dofs.gamma().len() {
            return Err(Error::Topology(format!(
                "interface trace has {} values, expected {}",
                g.len(),
                dofs.gamma().len()
            )));
        }
        let mut d = vec![Vec2::zeros(); dofs.dirichlet().len()];
        for (&dof, v) in dofs.gamma().iter().zip(g) {
            if let Slot::Dirichlet(s) = dofs.slot(dof) {
                d[s] = *v;
            }
        }
        Ok(d)
    }

    /// Solve `system` for Dirichlet data `d` and return the full field.
    fn solve_with(
        &self,
        system: &AssembledSystem,
        f: &Factorization,
        d: &[Vec2],
        extra: Option<&[f64]>,
    ) -> Result<Vec<Vec2>> {
        let dofs = self.space().dofs();
        let comps = system.components;
        let g = if comps == 1 {
            Mat::from_fn(d.len(), 2, |i, j| d[i][j])
        } else {
            Mat::from_fn(2 * d.len(), 1, |i, _| d[i / 2][i % 2])
        };
        let mut rhs = system.rhs(&g);
        if let Some(extra) = extra {
            for (i, v) in extra.iter().enumerate() {
                rhs[(i, 0)] += v;
            }
        }
        f.solve_in_place(&mut rhs)?;
        let offset = if system.saddle { dofs.num_dofs() } else { 0 };
        let mut out = vec![Vec2::zeros(); dofs.num_dofs()];
        for (dof, v) in out.iter_mut().enumerate() {
            *v = match dofs.slot(dof) {
                Slot::Dirichlet(s) => d[s],
                Slot::Free(s) => {
                    if comps == 1 {
                        Vec2::new(rhs[(offset + s, 0)], rhs[(offset + s, 1)])
                    } else {
                        Vec2::new(rhs[(2 * s, 0)], rhs[(2 * s + 1, 0)])
                    }
                }
            };
        }
        Ok(out)
    }

    /// Advance to the total interface displacement `g_new` (ordered as
    /// [`crate::discretization::DofMap::gamma`]). On rejection the state is
    /// unchanged.
    pub fn step(&mut self, g_new: &[Vec2]) -> Result<BijectivityReport> {
        let d = self.dirichlet_values(g_new)?;
        self.step_dirichlet(&d)
    }

    /// [`MdtState::step`] with explicit values on every Dirichlet DoF,
    /// including the outer boundary.
    pub fn step_dirichlet(&mut self, d_new: &[Vec2]) -> Result<BijectivityReport> {
        if d_new.len() != self.d_prev.len() {
            return Err(Error::Topology(format!(
                "{} Dirichlet values, expected {}",
                d_new.len(),
                self.d_prev.len()
            )));
        }
        let candidate = self.propose(d_new).map_err(reject_invalid)?;
        let report = self.timing.run(Phase::Check, || {
            Ok(min_jacobian(self.assembler.space(), &candidate))
        })?;
        if !report.pass {
            return Err(Error::StepRejected(report));
        }
        self.u = candidate;
        self.d_prev = d_new.to_vec();
        Ok(report)
    }

    fn propose(&mut self, d_new: &[Vec2]) -> Result<Vec<Vec2>> {
        match self.technique {
            Technique::Tine => self.propose_tine(d_new),
            _ if self.cached.is_some() => {
                let cached = self.cached.as_ref().expect("checked");
                self.timing.run(Phase::Solve, || {
                    self.solve_with(&cached.system, &cached.factorization, d_new, None)
                })
            }
            _ => {
                let system = self.assemble_linear()?;
                let f = self.factorize(&system)?;
                if self.technique.incremental() {
                    let delta: Vec<Vec2> =
                        d_new.iter().zip(&self.d_prev).map(|(a, b)| a - b).collect();
                    let du = self
                        .timing
                        .run(Phase::Solve, || self.solve_with(&system, &f, &delta, None))?;
                    Ok(self.u.iter().zip(du).map(|(u, d)| u + d).collect())
                } else {
                    self.timing
                        .run(Phase::Solve, || self.solve_with(&system, &f, d_new, None))
                }
            }
        }
    }

    fn tine_law(&self) -> MaterialLaw {
        MaterialLaw::NeoHookeanLog(self.lame)
    }

    /// Tangent system and free residual of the nonlinear problem at `u`.
    fn tine_linearization(&self, u: &[Vec2]) -> Result<(AssembledSystem, Vec<f64>, f64)> {
        let space = self.assembler.space();
        let xi = space.displaced_points(u);
        let st = self.stiffening_for(true, &xi, space.initial_points());
        let law = self.tine_law();
        self.timing.run(Phase::Assembly, || {
            let nl = self.assembler.nonlinear(&law, u, st)?;
            let system = self.assembler.split_vector(&nl.tangent, true);
            let dofs = space.dofs();
            let mut r_free = vec![0.0; 2 * dofs.free().len()];
            for (s, &dof) in dofs.free().iter().enumerate() {
                r_free[2 * s] = nl.residual[2 * dof];
                r_free[2 * s + 1] = nl.residual[2 * dof + 1];
            }
            let r_all = nl.residual.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((system, r_free, r_all))
        })
    }

    fn propose_tine(&mut self, d_new: &[Vec2]) -> Result<Vec<Vec2>> {
        let u = self.u.clone();
        let (system, r_free, _) = self.tine_linearization(&u)?;
        let symbolic = &mut self.symbolic;
        let f = self.timing.run(Phase::Solve, || {
            Factorization::new_spd_or_lu(&system.matrix, symbolic)
        })?;
        let delta: Vec<Vec2> = d_new.iter().zip(&self.d_prev).map(|(a, b)| a - b).collect();
        let minus_r: Vec<f64> = r_free.iter().map(|v| -v).collect();
        let du = self.timing.run(Phase::Solve, || {
            self.solve_with(&system, &f, &delta, Some(&minus_r))
        })?;
        Ok(u.iter().zip(du).map(|(u, d)| u + d).collect())
    }

    /// Fully converged nonlinear elasticity solution for the interface data
    /// `g_new`, started from the current state. A validation oracle; the
    /// state is not modified. Returns the field and the iteration count.
    pub fn solve_full_newton(
        &mut self,
        g_new: &[Vec2],
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<Vec2>, usize)> {
        if self.technique != Technique::Tine {
            return Err(Error::Usage(format!(
                "full Newton solve requested for {}",
                self.technique
            )));
        }
        let d = self.dirichlet_values(g_new)?;
        // impose the new boundary data through one linearized step so that
        // the starting iterate is admissible
        let delta: Vec<Vec2> = d.iter().zip(&self.d_prev).map(|(a, b)| a - b).collect();
        let mut u = self.u.clone();
        if delta.iter().any(|v| v.norm() > 0.0) {
            let (system, r_free, _) = self.tine_linearization(&u)?;
            let f = Factorization::new_spd_or_lu(&system.matrix, &mut self.symbolic)?;
            let minus_r: Vec<f64> = r_free.iter().map(|v| -v).collect();
            let du = self.solve_with(&system, &f, &delta, Some(&minus_r))?;
            u = u.iter().zip(du).map(|(a, b)| a + b).collect();
        }
        let zero = vec![Vec2::zeros(); d.len()];
        let (mut system, mut r, r_all) = self.tine_linearization(&u)?;
        let mut norm = l2(&r);
        let scale = r_all.max(norm);
        for iter in 0..=max_iter {
            if norm <= tol * scale || norm == 0.0 {
                return Ok((u, iter));
            }
            if iter == max_iter {
                break;
            }
            let f = Factorization::new_spd_or_lu(&system.matrix, &mut self.symbolic)?;
            let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
            let du = self.solve_with(&system, &f, &zero, Some(&minus_r))?;
            let mut alpha = 1.0;
            loop {
                let trial: Vec<Vec2> = u.iter().zip(&du).map(|(a, b)| a + b * alpha).collect();
                let accepted = match self.tine_linearization(&trial) {
                    Ok((s, rt, _)) => {
                        let n = l2(&rt);
                        (n < norm || alpha < MIN_DAMPING).then_some((s, rt, n))
                    }
                    Err(Error::InvalidState { .. }) if alpha >= MIN_DAMPING => None,
                    Err(e) => return Err(e),
                };
                match accepted {
                    Some((s, rt, n)) => {
                        u = trial;
                        system = s;
                        r = rt;
                        norm = n;
                        break;
                    }
                    None => alpha *= 0.5,
                }
            }
        }
        Err(Error::Convergence(format!(
            "full Newton: residual {norm:e} after {max_iter} iterations"
        )))
    }

    /// Zero displacement and interface history; cached factorizations and
    /// accumulated timings are kept.
    pub fn reset(&mut self) {
        self.u.iter_mut().for_each(|v| *v = Vec2::zeros());
        self.d_prev.iter_mut().for_each(|v| *v = Vec2::zeros());
    }
}

/// Smallest step fraction tried by the damped Newton oracle.
const MIN_DAMPING: f64 = 1e-3;

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn reject_invalid(e: Error) -> Error {
    match e {
        Error::InvalidState {
            patch,
            point,
            jacobian,
        } => Error::StepRejected(BijectivityReport {
            min_j: jacobian,
            patch,
            point,
            pass: false,
        }),
        Error::InvalidGeometry { patch, point, det } => Error::StepRejected(BijectivityReport {
            min_j: det,
            patch,
            point,
            pass: false,
        }),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BoundaryTag, MultiPatchDomain, SplinePatch};
    use approx::assert_abs_diff_eq;

    /// Unit square whose south side is the interface.
    fn square(refine: usize) -> Arc<Assembler> {
        let patch = SplinePatch::unit_square(2, 1).uniform_refine(refine);
        let tags = [
            Some(BoundaryTag::OuterFixed),
            Some(BoundaryTag::OuterFixed),
            Some(BoundaryTag::Gamma),
            Some(BoundaryTag::OuterFixed),
        ];
        let domain = MultiPatchDomain::new(vec![patch], vec![], vec![tags]).unwrap();
        Arc::new(Assembler::new(Arc::new(
            FunctionSpace::new(domain).unwrap(),
        )))
    }

    fn bump(asm: &Assembler, amp: f64) -> Vec<Vec2> {
        let space = asm.space();
        space
            .dofs()
            .gamma()
            .iter()
            .map(|&g| {
                let x = space.control_point(g).x;
                Vec2::new(0.0, amp * x * (1.0 - x))
            })
            .collect()
    }

    #[test]
    fn names_roundtrip() {
        for t in Technique::ALL {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert!("he".parse::<Technique>().is_err());
    }

    #[test]
    fn zero_trace_gives_zero() {
        let asm = square(2);
        for t in Technique::ALL {
            let mut s = MdtState::new(asm.clone(), MdtConfig::new(t, 1.0)).unwrap();
            let g = vec![Vec2::zeros(); asm.space().dofs().gamma().len()];
            let r = s.step(&g).unwrap();
            assert_eq!(r.min_j, 1.0);
            assert!(s.displacement().iter().all(|v| v.norm() == 0.0), "{t}");
        }
    }

    #[test]
    fn factorization_only_for_non_incremental() {
        let asm = square(1);
        for t in Technique::ALL {
            let s = MdtState::new(asm.clone(), MdtConfig::new(t, 0.0)).unwrap();
            assert_eq!(s.has_factorization(), !t.incremental(), "{t}");
        }
        let be = MdtState::new(asm.clone(), MdtConfig::new(Technique::Be, 0.0)).unwrap();
        let dofs = asm.space().dofs();
        assert_eq!(be.system_dim(), Some(dofs.num_dofs() + dofs.free().len()));
    }

    #[test]
    fn first_step_equivalence() {
        let asm = square(2);
        let g = bump(&asm, 0.2);
        for (a, b) in [
            (Technique::He, Technique::Ihe),
            (Technique::Be, Technique::Ibe),
            (Technique::Le, Technique::Ile),
        ] {
            let mut sa = MdtState::new(asm.clone(), MdtConfig::new(a, 2.0)).unwrap();
            let mut sb = MdtState::new(asm.clone(), MdtConfig::new(b, 2.0)).unwrap();
            sa.step(&g).unwrap();
            sb.step(&g).unwrap();
            for (x, y) in sa.displacement().iter().zip(sb.displacement()) {
                assert!((x - y).norm() <= 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejected_step_leaves_state() {
        let asm = square(2);
        let mut s = MdtState::new(asm.clone(), MdtConfig::new(Technique::He, 0.0)).unwrap();
        s.step(&bump(&asm, 0.5)).unwrap();
        let before = s.displacement().to_vec();
        let err = s.step(&bump(&asm, 8.0)).unwrap_err();
        match err {
            Error::StepRejected(r) => assert!(r.min_j <= 1e-10),
            other => panic!("{other}"),
        }
        assert_eq!(s.displacement(), &before[..]);
        assert_abs_diff_eq!(s.g_prev()[3].y, bump(&asm, 0.5)[3].y);
    }

    #[test]
    fn tine_rigid_translation_is_exact() {
        let asm = square(2);
        let mut s = MdtState::new(asm.clone(), MdtConfig::new(Technique::Tine, 2.0)).unwrap();
        let c = Vec2::new(0.03, -0.07);
        let d = vec![c; asm.space().dofs().dirichlet().len()];
        let r = s.step_dirichlet(&d).unwrap();
        assert_abs_diff_eq!(r.min_j, 1.0, epsilon = 1e-12);
        for v in s.displacement() {
            assert!((v - c).norm() <= 1e-12);
        }
    }

    #[test]
    fn full_newton_trivial_and_converged() {
        let asm = square(2);
        let mut s = MdtState::new(asm.clone(), MdtConfig::new(Technique::Tine, 0.0)).unwrap();
        let zero = vec![Vec2::zeros(); asm.space().dofs().gamma().len()];
        let (u, it) = s.solve_full_newton(&zero, 1e-10, 30).unwrap();
        assert_eq!(it, 0);
        assert!(u.iter().all(|v| v.norm() == 0.0));
        let (u, _) = s.solve_full_newton(&bump(&asm, 0.8), 1e-10, 30).unwrap();
        assert!(min_jacobian(asm.space(), &u).pass);
    }

    #[test]
    fn reset_restores_fresh_behaviour() {
        let asm = square(2);
        let g = bump(&asm, 0.3);
        for t in Technique::ALL {
            let mut fresh = MdtState::new(asm.clone(), MdtConfig::new(t, 1.0)).unwrap();
            fresh.step(&g).unwrap();
            let mut used = MdtState::new(asm.clone(), MdtConfig::new(t, 1.0)).unwrap();
            used.step(&bump(&asm, 0.5)).unwrap();
            used.step(&bump(&asm, -0.2)).unwrap();
            used.reset();
            assert!(used.displacement().iter().all(|v| v.norm() == 0.0));
            used.step(&g).unwrap();
            for (x, y) in fresh.displacement().iter().zip(used.displacement()) {
                assert!((x - y).norm() <= 1e-14, "{t}");
            }
        }
    }
}

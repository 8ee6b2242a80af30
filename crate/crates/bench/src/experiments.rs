//! Benchmark experiments: single-period robustness runs, the `l_max`
//! sweep, long-term runs, timing runs and the material tangent check.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use mdt_core::discretization::{BenchmarkGeometry, FunctionSpace};
use mdt_core::dynamics::BeamSolver;
use mdt_core::mdt::{MdtConfig, MdtState, Technique};
use mdt_core::operators::{tangent_fd_error, Assembler, LameParameters, MaterialLaw};
use mdt_core::quality::{ale_norm, period_minima, PERIOD_SEPARATION};
use mdt_core::{Error, Mat2, Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::record::{num, PhaseTimes, Row, RunRecord, Status};

/// Horizon of a single-period run that never completes a period.
pub const T_CAP: f64 = 1.5;
/// A period ends at the first ALE-norm minimum at or after this time.
pub const PERIOD_START: f64 = 0.4;
/// Nominal oscillation period, the fixed horizon of timing runs.
pub const NOMINAL_PERIOD: f64 = 0.91;

/// The fluid mesh shared by every run on one geometry.
#[derive(Debug, Clone)]
pub struct Benchmark {
    geometry: BenchmarkGeometry,
    assembler: Arc<Assembler>,
}

impl Benchmark {
    pub fn new(geometry: BenchmarkGeometry) -> Result<Self> {
        let space = Arc::new(FunctionSpace::new(geometry.fluid.clone())?);
        Ok(Self {
            geometry,
            assembler: Arc::new(Assembler::new(space)),
        })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Self::new(config.geometry()?)
    }

    pub fn geometry(&self) -> &BenchmarkGeometry {
        &self.geometry
    }

    pub fn space(&self) -> &FunctionSpace {
        self.assembler.space()
    }

    pub fn mdt_state(&self, config: MdtConfig) -> Result<MdtState> {
        MdtState::new(self.assembler.clone(), config)
    }

    /// Beam motion over `steps` steps. The beam does not feel the mesh, so
    /// one trajectory serves every technique at the same loading.
    pub fn trajectory(&self, config: &ExperimentConfig, steps: usize) -> Result<Trajectory> {
        let mut beam = BeamSolver::new(
            &self.geometry,
            self.space().dofs(),
            config.newmark(),
            config.driver(),
        )?;
        let mut state = beam.initial_state();
        let mut traj = Trajectory {
            dt: config.dt,
            traces: vec![beam.interface_trace(&state)],
            tips: vec![beam.tip_displacement(&state)?],
            failure: None,
        };
        for k in 1..=steps {
            match beam.step(&state) {
                Ok(next) => state = next,
                Err(e) => {
                    traj.failure = Some((k as f64 * config.dt, e.to_string()));
                    break;
                }
            }
            traj.traces.push(beam.interface_trace(&state));
            traj.tips.push(beam.tip_displacement(&state)?);
        }
        Ok(traj)
    }
}

/// Interface traces and tip displacements at `t = k dt`, from `k = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub traces: Vec<Vec<Vec2>>,
    pub tips: Vec<Vec2>,
    /// Time and message of a beam step that failed.
    pub failure: Option<(f64, String)>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.traces.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Beam trajectories keyed by loading level.
#[derive(Debug, Default)]
pub struct TrajectoryCache {
    map: HashMap<u64, Arc<Trajectory>>,
}

impl TrajectoryCache {
    /// Trajectory of `config.l` covering at least `steps` steps.
    pub fn get(
        &mut self,
        bench: &Benchmark,
        config: &ExperimentConfig,
        steps: usize,
    ) -> Result<Arc<Trajectory>> {
        let key = config.l.to_bits();
        if let Some(t) = self.map.get(&key) {
            if t.steps() >= steps || t.failure.is_some() {
                return Ok(t.clone());
            }
        }
        let t = Arc::new(bench.trajectory(config, steps)?);
        self.map.insert(key, t.clone());
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop at the end of the first oscillation period, or at [`T_CAP`].
    SinglePeriod,
    Steps(usize),
}

impl Horizon {
    pub fn steps(self, dt: f64) -> usize {
        match self {
            Horizon::SinglePeriod => steps_for(T_CAP, dt),
            Horizon::Steps(n) => n,
        }
    }
}

/// Number of steps of size `dt` needed to reach `t`.
pub fn steps_for(t: f64, dt: f64) -> usize {
    (t / dt - 1e-9).ceil() as usize
}

fn phase_times(state: &MdtState) -> PhaseTimes {
    let t = state.timing();
    PhaseTimes {
        assembly_s: t.assembly_s(),
        solve_s: t.solve_s(),
        check_s: t.check_s(),
    }
}

/// Drive one technique along a beam trajectory.
pub fn run(
    bench: &Benchmark,
    traj: &Trajectory,
    config: MdtConfig,
    name: String,
    horizon: Horizon,
) -> RunRecord {
    run_observed(bench, traj, config, name, horizon, &mut |_, _| {})
}

/// [`run`], calling `observe` after every accepted step.
pub fn run_observed(
    bench: &Benchmark,
    traj: &Trajectory,
    config: MdtConfig,
    name: String,
    horizon: Horizon,
    observe: &mut dyn FnMut(&Row, &MdtState),
) -> RunRecord {
    let mut record = RunRecord {
        name,
        rows: Vec::new(),
        timings: Vec::new(),
        status: Status::Completed,
        minima: Vec::new(),
    };
    let mut state = match bench.mdt_state(config) {
        Ok(s) => s,
        Err(e) => {
            record.status = Status::SolverFailed {
                t: 0.0,
                message: e.to_string(),
            };
            return record;
        }
    };
    record.rows.push(Row {
        t: 0.0,
        ale_norm: 0.0,
        min_j: 1.0,
        tip: traj.tips[0],
    });
    record.timings.push(phase_times(&state));
    let steps = horizon.steps(traj.dt);
    for k in 1..=steps {
        let t = traj.time(k);
        if k > traj.steps() {
            let (t, message) = traj
                .failure
                .clone()
                .unwrap_or((t, "beam trajectory too short".into()));
            record.status = Status::SolverFailed { t, message };
            break;
        }
        let before = phase_times(&state);
        let outcome = state.step(&traj.traces[k]);
        record.timings.push(phase_times(&state).delta(&before));
        match outcome {
            Ok(report) => {
                let row = Row {
                    t,
                    ale_norm: ale_norm(bench.space(), state.displacement()),
                    min_j: report.min_j,
                    tip: traj.tips[k],
                };
                observe(&row, &state);
                record.rows.push(row);
            }
            Err(Error::StepRejected(report)) => {
                record.rows.push(Row {
                    t,
                    ale_norm: f64::NAN,
                    min_j: report.min_j,
                    tip: traj.tips[k],
                });
                record.status = Status::BijectivityFailed { t };
                break;
            }
            Err(e) => {
                record.timings.pop();
                record.status = Status::SolverFailed {
                    t,
                    message: e.to_string(),
                };
                break;
            }
        }
        if horizon == Horizon::SinglePeriod && period_end(&record.rows).is_some() {
            break;
        }
    }
    record.minima = norm_minima(&record.rows);
    if horizon == Horizon::SinglePeriod
        && record.status.completed()
        && period_end(&record.rows).is_none()
    {
        // never completed a period within the cap; the run itself was valid
        record.minima.clear();
    }
    record
}

fn norm_minima(rows: &[Row]) -> Vec<(f64, f64)> {
    let series: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.ale_norm.is_nan())
        .map(|r| (r.t, r.ale_norm))
        .collect();
    period_minima(&series, PERIOD_SEPARATION)
}

/// First ALE-norm minimum at or after [`PERIOD_START`].
pub fn period_end(rows: &[Row]) -> Option<(f64, f64)> {
    norm_minima(rows)
        .into_iter()
        .find(|m| m.0 >= PERIOD_START - 1e-12)
}

/// Single-period robustness run.
pub fn run_single_period(
    bench: &Benchmark,
    config: &ExperimentConfig,
    cache: &mut TrajectoryCache,
) -> Result<RunRecord> {
    let traj = cache.get(bench, config, Horizon::SinglePeriod.steps(config.dt))?;
    Ok(run(
        bench,
        &traj,
        config.mdt()?,
        config.run_name(),
        Horizon::SinglePeriod,
    ))
}

/// Fixed-horizon run to `config.t_end`, with the norm minima filled in.
pub fn run_long_term(bench: &Benchmark, config: &ExperimentConfig) -> Result<RunRecord> {
    let steps = steps_for(config.t_end, config.dt);
    let traj = bench.trajectory(config, steps)?;
    Ok(run(
        bench,
        &traj,
        config.mdt()?,
        config.run_name(),
        Horizon::Steps(steps),
    ))
}

/// Run over one nominal period regardless of where the minima fall, so that
/// every technique does the same number of steps.
pub fn run_timing(
    bench: &Benchmark,
    config: &ExperimentConfig,
    cache: &mut TrajectoryCache,
) -> Result<RunRecord> {
    let steps = steps_for(NOMINAL_PERIOD, config.dt);
    let traj = cache.get(bench, config, steps)?;
    Ok(run(
        bench,
        &traj,
        config.mdt()?,
        config.run_name(),
        Horizon::Steps(steps),
    ))
}

pub fn timing_csv(records: &[(ExperimentConfig, RunRecord)]) -> String {
    let mut s = String::from("technique,l,chi,steps,assembly_s,solve_s,check_s,total_s,status\n");
    for (c, r) in records {
        let t = r.totals();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.technique,
            c.l,
            c.chi,
            r.rows.len() - 1,
            num(t.assembly_s),
            num(t.solve_s),
            num(t.check_s),
            num(t.total_s()),
            status_tag(&r.status)
        );
    }
    s
}

fn status_tag(s: &Status) -> &'static str {
    match s {
        Status::Completed => "COMPLETED",
        Status::BijectivityFailed { .. } => "BIJECTIVITY_FAILED",
        Status::SolverFailed { .. } => "SOLVER_FAILED",
    }
}

/// Loading levels `step, 2 step, ...` up to `cap`, rounded to the grid.
pub fn load_grid(step: f64, cap: f64) -> Vec<f64> {
    let n = (cap / step + 1e-9).floor() as usize;
    (1..=n)
        .map(|k| (k as f64 * step * 1e9).round() / 1e9)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub technique: Technique,
    pub chi: f64,
    /// Largest completed level on the grid, 0 when the first one fails.
    pub l_max: f64,
    /// Status and last recorded `min_J` of the first failing level.
    pub failure: Option<(Status, f64)>,
}

/// Ascending scan of the loading grid with early exit at the first failure.
pub fn lmax_scan(
    bench: &Benchmark,
    base: &ExperimentConfig,
    technique: Technique,
    chi: f64,
    cache: &mut TrajectoryCache,
) -> Result<SweepPoint> {
    let mut point = SweepPoint {
        technique,
        chi,
        l_max: 0.0,
        failure: None,
    };
    for l in load_grid(base.l_step, base.l_cap) {
        let config = ExperimentConfig {
            technique: technique.name().into(),
            l,
            chi,
            ..base.clone()
        };
        let rec = run_single_period(bench, &config, cache)?;
        if !rec.status.completed() {
            let min_j = rec.rows.last().map_or(f64::NAN, |r| r.min_j);
            point.failure = Some((rec.status, min_j));
            break;
        }
        point.l_max = l;
    }
    Ok(point)
}

pub fn lmax_sweep(
    bench: &Benchmark,
    base: &ExperimentConfig,
    techniques: &[Technique],
    cache: &mut TrajectoryCache,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &t in techniques {
        for &chi in &base.chi_grid {
            out.push(lmax_scan(bench, base, t, chi, cache)?);
        }
    }
    Ok(out)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("technique,chi,l_max\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.technique, p.chi, p.l_max);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    StVenantKirchhoff,
    NeoHookeanLog,
}

impl LawKind {
    pub fn name(self) -> &'static str {
        match self {
            LawKind::StVenantKirchhoff => "StVK",
            LawKind::NeoHookeanLog => "NeoHookeanLog",
        }
    }

    pub fn law(self, lame: LameParameters) -> MaterialLaw {
        match self {
            LawKind::StVenantKirchhoff => MaterialLaw::StVenantKirchhoff(lame),
            LawKind::NeoHookeanLog => MaterialLaw::NeoHookeanLog(lame),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentReport {
    pub law: LawKind,
    pub trials: usize,
    /// Draws discarded for `det F` at or below the admissibility bound.
    pub rejected: usize,
    pub max_error: f64,
}

impl TangentReport {
    pub fn pass(&self) -> bool {
        self.max_error < TANGENT_TOL
    }
}

pub const TANGENT_TOL: f64 = 1e-6;
/// Draws with `det F` at or below this are rejected.
pub const MIN_TRIAL_DET: f64 = 0.3;
const TANGENT_SEED: u64 = 0x6d64_7462;
const FD_STEP: f64 = 1e-5;

/// Compare the material tangent with central differences of the stress at
/// `trials` random deformation gradients `F = I + H`, `|H_ij| < 0.6`.
pub fn tangent_check(kind: LawKind, trials: usize) -> Result<TangentReport> {
    let law = kind.law(LameParameters::from_young_poisson(1.0, 0.3)?);
    let mut rng = ChaCha8Rng::seed_from_u64(TANGENT_SEED);
    let mut report = TangentReport {
        law: kind,
        trials,
        rejected: 0,
        max_error: 0.0,
    };
    let mut accepted = 0;
    while accepted < trials {
        let f = Mat2::identity() + Mat2::from_fn(|_, _| rng.gen_range(-0.6..0.6));
        if f.determinant() <= MIN_TRIAL_DET {
            report.rejected += 1;
            continue;
        }
        report.max_error = report.max_error.max(tangent_fd_error(&law, &f, FD_STEP)?);
        accepted += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_exact_decimal() {
        let g = load_grid(0.1, 4.0);
        assert_eq!(g.len(), 40);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 4.0);
        assert_eq!(steps_for(1.5, 0.0025), 600);
        assert_eq!(steps_for(0.91, 0.0025), 364);
    }

    #[test]
    fn tangent_check_passes_and_counts_rejections() {
        for kind in [LawKind::StVenantKirchhoff, LawKind::NeoHookeanLog] {
            let r = tangent_check(kind, 20).unwrap();
            assert!(r.pass(), "{r:?}");
            assert!(r.rejected > 0);
        }
    }

    #[test]
    fn period_end_needs_a_later_minimum() {
        let row = |t: f64, v: f64| Row {
            t,
            ale_norm: v,
            min_j: 1.0,
            tip: Vec2::zeros(),
        };
        let rows: Vec<Row> = (0..100)
            .map(|k| k as f64 * 0.01)
            .map(|t| row(t, (t * 5.0).sin().abs()))
            .collect();
        assert!(period_end(&rows[..70]).is_some_and(|m| (m.0 - 0.63).abs() < 0.011));
        assert!(period_end(&rows[..62]).is_none());
    }
}

//! Bijectivity audit, ALE displacement norm, period detection and phase
//! timing.

use std::cell::Cell;
use std::time::{Duration, Instant};

use crate::discretization::FunctionSpace;
use crate::operators::EPS_J;
use crate::{Error, Result, Vec2};

/// Smallest sampled `J = det(I + grad u)` and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BijectivityReport {
    pub min_j: f64,
    pub patch: usize,
    /// Gauss point index within the patch (element-major).
    pub point: usize,
    pub pass: bool,
}

/// Sample `J` at every Gauss point as `det grad G^i / det grad G^0`, where
/// `G^i` has control points displaced by `u`. Ties resolve to the lowest
/// patch, then the lowest point.
pub fn min_jacobian(space: &FunctionSpace, u: &[Vec2]) -> BijectivityReport {
    let x0 = space.initial_points();
    let mut best = BijectivityReport {
        min_j: f64::INFINITY,
        patch: 0,
        point: 0,
        pass: true,
    };
    for e in space.elements() {
        for q in 0..e.points.len() {
            let j0 = e.jacobian(q, x0);
            let ju = e.jacobian(q, u);
            let det = (j0 + ju).determinant() / j0.determinant();
            // NaN compares false and would otherwise hide a broken state
            if det < best.min_j || det.is_nan() && !best.min_j.is_nan() {
                best.min_j = det;
                best.patch = e.patch;
                best.point = e.first_point + q;
            }
        }
    }
    best.pass = best.min_j > EPS_J;
    best
}

/// `sqrt(int_{Omega^0} |u|^2 dx)`.
pub fn ale_norm(space: &FunctionSpace, u: &[Vec2]) -> f64 {
    let x0 = space.initial_points();
    let mut sum = 0.0;
    for e in space.elements() {
        for q in 0..e.points.len() {
            let det = e.jacobian(q, x0).determinant();
            sum += e.points[q].weight * det * e.value(q, u).norm_squared();
        }
    }
    sum.sqrt()
}

/// Strict interior local minima of a time series, at least `separation`
/// apart. Of two minima closer than that, the smaller value is kept (the
/// earlier one on a tie).
pub fn period_minima(series: &[(f64, f64)], separation: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in series.windows(3) {
        let (prev, cur, next) = (w[0].1, w[1], w[2].1);
        if !(cur.1 < prev && cur.1 < next) {
            continue;
        }
        match out.last_mut() {
            Some(last) if cur.0 - last.0 < separation => {
                if cur.1 < last.1 {
                    *last = cur;
                }
            }
            _ => out.push(cur),
        }
    }
    out
}

/// Default separation guard of [`period_minima`] in seconds.
pub const PERIOD_SEPARATION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Assembly,
    Solve,
    Check,
}

impl Phase {
    fn index(self) -> usize {
        self as usize
    }
}

/// Wall time accumulated per phase.
#[derive(Debug, Default)]
pub struct TimingBreakdown {
    seconds: [Cell<f64>; 3],
    active: [Cell<bool>; 3],
}

impl Clone for TimingBreakdown {
    fn clone(&self) -> Self {
        Self {
            seconds: [
                Cell::new(self.seconds[0].get()),
                Cell::new(self.seconds[1].get()),
                Cell::new(self.seconds[2].get()),
            ],
            active: Default::default(),
        }
    }
}

impl TimingBreakdown {
    pub fn assembly_s(&self) -> f64 {
        self.seconds[Phase::Assembly.index()].get()
    }

    pub fn solve_s(&self) -> f64 {
        self.seconds[Phase::Solve.index()].get()
    }

    pub fn check_s(&self) -> f64 {
        self.seconds[Phase::Check.index()].get()
    }

    pub fn total_s(&self) -> f64 {
        self.assembly_s() + self.solve_s() + self.check_s()
    }

    pub fn add(&self, phase: Phase, elapsed: Duration) {
        let c = &self.seconds[phase.index()];
        c.set(c.get() + elapsed.as_secs_f64());
    }

    pub fn reset(&self) {
        for c in &self.seconds {
            c.set(0.0);
        }
    }

    /// Run `f`, charging its wall time to `phase`. Nesting the same phase
    /// is a usage error and runs nothing.
    pub fn timed<T>(&self, phase: Phase, f: impl FnOnce() -> T) -> Result<(T, Duration)> {
        let flag = &self.active[phase.index()];
        if flag.get() {
            return Err(Error::Usage(format!("nested timing of phase {phase:?}")));
        }
        flag.set(true);
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        flag.set(false);
        self.add(phase, elapsed);
        Ok((out, elapsed))
    }

    /// [`TimingBreakdown::timed`] for a fallible closure.
    pub fn run<T>(&self, phase: Phase, f: impl FnOnce() -> Result<T>) -> Result<T> {
        self.timed(phase, f)?.0
    }
}

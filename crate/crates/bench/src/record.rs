//! Run records and their CSV serialization.

use std::fmt::{self, Write as _};
use std::path::Path;

use mdt_core::{Result, Vec2};

/// Header of the per-step run CSV.
pub const RUN_HEADER: &str = "t,ale_norm,min_J,tip_x,tip_y";
/// Header of the per-step timing CSV.
pub const TIMING_HEADER: &str = "t,assembly_s,solve_s,check_s";

/// Values are written with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    /// `NaN` on a rejected step, whose displacement is discarded.
    pub ale_norm: f64,
    pub min_j: f64,
    pub tip: Vec2,
}

/// Wall seconds spent per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub assembly_s: f64,
    pub solve_s: f64,
    pub check_s: f64,
}

impl PhaseTimes {
    pub fn total_s(&self) -> f64 {
        self.assembly_s + self.solve_s + self.check_s
    }

    pub fn delta(&self, earlier: &Self) -> Self {
        Self {
            assembly_s: self.assembly_s - earlier.assembly_s,
            solve_s: self.solve_s - earlier.solve_s,
            check_s: self.check_s - earlier.check_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Completed,
    BijectivityFailed { t: f64 },
    SolverFailed { t: f64, message: String },
}

impl Status {
    pub fn completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    /// Process exit code of a run ending in this status.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Completed => 0,
            Status::BijectivityFailed { .. } => 2,
            Status::SolverFailed { .. } => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Completed => write!(f, "COMPLETED"),
            Status::BijectivityFailed { t } => write!(f, "BIJECTIVITY_FAILED at t = {t}"),
            Status::SolverFailed { t, message } => write!(f, "SOLVER_FAILED at t = {t}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    /// Starts with the pristine state at `t = 0`.
    pub rows: Vec<Row>,
    /// Phase times of each row; the first entry holds the setup cost.
    pub timings: Vec<PhaseTimes>,
    pub status: Status,
    /// Local minima of the ALE norm series.
    pub minima: Vec<(f64, f64)>,
}

impl RunRecord {
    pub fn totals(&self) -> PhaseTimes {
        self.timings
            .iter()
            .fold(PhaseTimes::default(), |acc, t| PhaseTimes {
                assembly_s: acc.assembly_s + t.assembly_s,
                solve_s: acc.solve_s + t.solve_s,
                check_s: acc.check_s + t.check_s,
            })
    }

    /// Largest ALE norm over accepted steps.
    pub fn peak_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.ale_norm)
            .filter(|v| !v.is_nan())
            .fold(0.0, f64::max)
    }

    /// Time of the last accepted step.
    pub fn last_valid_t(&self) -> f64 {
        self.rows
            .iter()
            .rev()
            .find(|r| !r.ale_norm.is_nan())
            .map_or(0.0, |r| r.t)
    }

    pub fn run_csv(&self) -> String {
        let mut s = format!("{RUN_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                num(r.t),
                num(r.ale_norm),
                num(r.min_j),
                num(r.tip.x),
                num(r.tip.y)
            );
        }
        s
    }

    pub fn timing_csv(&self) -> String {
        let mut s = format!("{TIMING_HEADER}\n");
        for (r, t) in self.rows.iter().zip(&self.timings) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                num(r.t),
                num(t.assembly_s),
                num(t.solve_s),
                num(t.check_s)
            );
        }
        s
    }

    pub fn minima_csv(&self) -> String {
        let mut s = String::from("t,ale_norm\n");
        for (t, v) in &self.minima {
            let _ = writeln!(s, "{},{}", num(*t), num(*v));
        }
        s
    }

    /// Writes `<name>.csv` and `<name>_timing.csv` into `dir`, plus
    /// `<name>_minima.csv` when `with_minima` is set.
    pub fn write(&self, dir: &Path, with_minima: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), self.run_csv())?;
        std::fs::write(
            dir.join(format!("{}_timing.csv", self.name)),
            self.timing_csv(),
        )?;
        if with_minima {
            std::fs::write(
                dir.join(format!("{}_minima.csv", self.name)),
                self.minima_csv(),
            )?;
        }
        Ok(())
    }
}

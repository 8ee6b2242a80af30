use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdt_bench::experiments::{self, Horizon, LawKind, TrajectoryCache};
use mdt_bench::{vtk, Benchmark, ExperimentConfig, RunRecord};
use mdt_core::discretization::build_benchmark_geometry;
use mdt_core::mdt::Technique;
use mdt_core::{Error, Result, Vec2};

#[derive(Parser)]
#[command(
    name = "mdt-bench",
    version,
    about = "Oscillating-beam benchmark for spline mesh deformation techniques"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run until the first oscillation period completes or the mesh folds.
    SinglePeriod(Common),
    /// Largest completed loading level for each stiffening degree.
    LmaxSweep(Common),
    /// Fixed-horizon run reporting the ALE-norm minima.
    LongTerm(Common),
    /// Assembly, solve and check times over one nominal period.
    Timing(Common),
    /// Compare material tangents with finite differences.
    TangentCheck {
        /// StVK, NeoHookeanLog or both.
        #[arg(long, default_value = "both")]
        law: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Write the default benchmark geometry file.
    ExportGeometry {
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[arg(long, default_value = "geometry.toml")]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// HE, IHE, BE, IBE, LE, ILE or TINE; the sweep and timing runs take
    /// all techniques when omitted.
    #[arg(long)]
    technique: Option<String>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    nu_a: Option<f64>,
    #[arg(long)]
    flip_gravity: bool,
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for element assembly.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write VTK meshes at the peak ALE norm and at the last step.
    #[arg(long)]
    vtk: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = &self.technique {
            c.technique = t.clone();
        }
        c.l = self.l.unwrap_or(c.l);
        c.chi = self.chi.unwrap_or(c.chi);
        c.refinement = self.refine.unwrap_or(c.refinement);
        c.dt = self.dt.unwrap_or(c.dt);
        c.t_end = self.t_end.unwrap_or(c.t_end);
        c.nu_a = self.nu_a.unwrap_or(c.nu_a);
        c.flip_gravity |= self.flip_gravity;
        if self.geometry.is_some() {
            c.geometry = self.geometry.clone();
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        c.validate()?;
        Ok(c)
    }

    fn techniques(&self, config: &ExperimentConfig) -> Result<Vec<Technique>> {
        match (&self.technique, &self.config) {
            (None, None) => Ok(Technique::ALL.to_vec()),
            _ => Ok(vec![config.technique()?]),
        }
    }
}

fn main() -> ExitCode {
    // exit code 2 is reserved for bijectivity failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    mdt_bench::sequential_solvers();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::StepRejected(_) | Error::InvalidState { .. } => 2,
                Error::Usage(_) | Error::Parse(_) | Error::Io(_) => 1,
                _ => 3,
            })
        }
    }
}

fn init_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| Error::Usage(e.to_string()))
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::SinglePeriod(args) => run_one(&args, false),
        Command::LongTerm(args) => run_one(&args, true),
        Command::LmaxSweep(args) => lmax_sweep(&args),
        Command::Timing(args) => timing(&args),
        Command::TangentCheck { law, trials } => tangent_check(&law, trials),
        Command::ExportGeometry { refine, out } => {
            build_benchmark_geometry(refine)?.save(&out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn run_one(args: &Common, long: bool) -> Result<u8> {
    init_threads(args.threads)?;
    let config = args.resolve()?;
    let bench = Benchmark::from_config(&config)?;
    let horizon = if long {
        Horizon::Steps(experiments::steps_for(config.t_end, config.dt))
    } else {
        Horizon::SinglePeriod
    };
    let traj = bench.trajectory(&config, horizon.steps(config.dt))?;
    let mut peak = (f64::NEG_INFINITY, Vec::new());
    let mut last = Vec::new();
    let record = experiments::run_observed(
        &bench,
        &traj,
        config.mdt()?,
        config.run_name(),
        horizon,
        &mut |row, state| {
            if args.vtk {
                if row.ale_norm > peak.0 {
                    peak = (row.ale_norm, state.displacement().to_vec());
                }
                last = state.displacement().to_vec();
            }
        },
    );
    record.write(&config.out, long)?;
    if args.vtk {
        let zeros = vec![Vec2::zeros(); bench.space().num_dofs()];
        for (tag, u) in [("peak", &peak.1), ("final", &last)] {
            let u = if u.is_empty() { &zeros } else { u };
            vtk::write(
                bench.space(),
                u,
                &config.out.join(format!("{}_{tag}.vtk", record.name)),
            )?;
        }
    }
    summarize(&record, long);
    Ok(record.status.exit_code() as u8)
}

fn summarize(record: &RunRecord, long: bool) {
    let t = record.totals();
    println!("{}: {}", record.name, record.status);
    println!(
        "  steps {}  peak ALE norm {:.6e}  assembly {:.3}s  solve {:.3}s  check {:.3}s",
        record.rows.len() - 1,
        record.peak_norm(),
        t.assembly_s,
        t.solve_s,
        t.check_s
    );
    if long {
        println!("  {} norm minima", record.minima.len());
    }
}

fn lmax_sweep(args: &Common) -> Result<u8> {
    init_threads(args.threads)?;
    let mut config = args.resolve()?;
    if let Some(chi) = args.chi {
        config.chi_grid = vec![chi];
    }
    let bench = Benchmark::from_config(&config)?;
    let mut cache = TrajectoryCache::default();
    let mut points = Vec::new();
    for t in args.techniques(&config)? {
        for &chi in &config.chi_grid {
            let p = experiments::lmax_scan(&bench, &config, t, chi, &mut cache)?;
            println!("{} chi = {}: l_max = {}", p.technique, p.chi, p.l_max);
            points.push(p);
        }
    }
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(config.out.join("lmax.csv"), experiments::sweep_csv(&points))?;
    Ok(0)
}

fn timing(args: &Common) -> Result<u8> {
    init_threads(args.threads)?;
    let config = args.resolve()?;
    let bench = Benchmark::from_config(&config)?;
    let mut cache = TrajectoryCache::default();
    let mut records = Vec::new();
    for t in args.techniques(&config)? {
        let c = ExperimentConfig {
            technique: t.name().into(),
            ..config.clone()
        };
        let r = experiments::run_timing(&bench, &c, &mut cache)?;
        summarize(&r, false);
        records.push((c, r));
    }
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(
        config.out.join("timing.csv"),
        experiments::timing_csv(&records),
    )?;
    Ok(0)
}

fn tangent_check(law: &str, trials: usize) -> Result<u8> {
    let kinds = match law.to_ascii_lowercase().as_str() {
        "stvk" => vec![LawKind::StVenantKirchhoff],
        "neohookeanlog" => vec![LawKind::NeoHookeanLog],
        "both" => vec![LawKind::StVenantKirchhoff, LawKind::NeoHookeanLog],
        other => return Err(Error::Usage(format!("unknown law {other:?}"))),
    };
    let mut code = 0;
    for kind in kinds {
        let r = experiments::tangent_check(kind, trials)?;
        println!(
            "{}: {} trials, {} rejected draws, max relative error {:.3e} {}",
            kind.name(),
            r.trials,
            r.rejected,
            r.max_error,
            if r.pass() { "PASS" } else { "FAIL" }
        );
        if !r.pass() {
            code = 3;
        }
    }
    Ok(code)
}

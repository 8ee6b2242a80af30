//! Experiment configuration, loadable from TOML and overridable from the
//! command line.

use std::path::{Path, PathBuf};

use mdt_core::discretization::{build_benchmark_geometry, BenchmarkGeometry};
use mdt_core::dynamics::{DriverParams, NewmarkParams};
use mdt_core::mdt::{MdtConfig, Technique};
use mdt_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub technique: String,
    /// Loading level, the magnitude of the body acceleration `(0, l)`.
    pub l: f64,
    pub chi: f64,
    pub refinement: usize,
    pub dt: f64,
    pub t_end: f64,
    pub nu_a: f64,
    pub density: f64,
    pub young: f64,
    pub poisson: f64,
    pub beta: f64,
    pub gamma: f64,
    pub flip_gravity: bool,
    /// Coarse benchmark geometry; refined `refinement` times after loading.
    pub geometry: Option<PathBuf>,
    pub out: PathBuf,
    /// Stiffening degrees scanned by the `l_max` sweep.
    pub chi_grid: Vec<f64>,
    pub l_step: f64,
    pub l_cap: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let nm = NewmarkParams::default();
        let dp = DriverParams::default();
        Self {
            technique: "TINE".into(),
            l: 1.0,
            chi: 2.0,
            refinement: 3,
            dt: nm.dt,
            t_end: 20.0,
            nu_a: 0.3,
            density: dp.density,
            young: dp.young,
            poisson: dp.poisson,
            beta: nm.beta,
            gamma: nm.gamma,
            flip_gravity: false,
            geometry: None,
            out: PathBuf::from("out"),
            chi_grid: (0..=8).map(|k| 0.5 * k as f64).collect(),
            l_step: 0.1,
            l_cap: 4.0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn technique(&self) -> Result<Technique> {
        self.technique.parse()
    }

    pub fn newmark(&self) -> NewmarkParams {
        NewmarkParams {
            beta: self.beta,
            gamma: self.gamma,
            dt: self.dt,
        }
    }

    pub fn driver(&self) -> DriverParams {
        DriverParams {
            density: self.density,
            young: self.young,
            poisson: self.poisson,
            load: self.l,
            flip_gravity: self.flip_gravity,
        }
    }

    pub fn mdt(&self) -> Result<MdtConfig> {
        Ok(MdtConfig {
            nu_a: self.nu_a,
            ..MdtConfig::new(self.technique()?, self.chi)
        })
    }

    /// Refined benchmark geometry, from the geometry file when one is set.
    pub fn geometry(&self) -> Result<BenchmarkGeometry> {
        match &self.geometry {
            Some(path) => BenchmarkGeometry::load(path)?.refine(self.refinement),
            None => build_benchmark_geometry(self.refinement),
        }
    }

    /// Run file stem `<technique>_<l>_<chi>`.
    pub fn run_name(&self) -> String {
        format!("{}_{}_{}", self.technique, self.l, self.chi)
    }

    pub fn validate(&self) -> Result<()> {
        self.technique()?;
        self.newmark().validate()?;
        let positive = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("l_step", self.l_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.chi >= 0.0) || self.chi_grid.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Usage(
                "stiffening degrees must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

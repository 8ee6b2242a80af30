//! Plain-text geometry description (TOML).
//!
//! ```toml
//! [[fluid]]
//! name = "top"
//! degree = [2, 2]
//! knots_xi = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
//! knots_eta = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
//! control_points = [[0.249, 0.21], ...]   # i along xi fastest
//! # each side: "gamma", "outer" or "interface"
//! west = "outer"
//! east = "interface"
//! south = "gamma"
//! north = "outer"
//!
//! [[interface]]
//! a = "top"
//! side_a = "east"
//! b = "right"
//! side_b = "north"
//! reversed = false
//!
//! [beam]
//! degree = [2, 2]
//! knots_xi = [...]
//! knots_eta = [...]
//! control_points = [...]
//! clamped = ["west"]
//!
//! [[coupling]]
//! fluid = "top"
//! fluid_side = "south"
//! beam_side = "north"
//! reversed = false
//! ```
//!
//! Patches are stored unrefined or refined alike; the loader does not refine.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::{BenchmarkGeometry, Coupling};
use super::domain::{BoundaryTag, Interface, MultiPatchDomain};
use super::knots::KnotVector;
use super::patch::{Side, SplinePatch};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PatchRecord {
    degree: [usize; 2],
    knots_xi: Vec<f64>,
    knots_eta: Vec<f64>,
    control_points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FluidRecord {
    name: String,
    #[serde(flatten)]
    patch: PatchRecord,
    west: String,
    east: String,
    south: String,
    north: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InterfaceRecord {
    a: String,
    side_a: String,
    b: String,
    side_b: String,
    reversed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BeamRecord {
    #[serde(flatten)]
    patch: PatchRecord,
    clamped: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CouplingRecord {
    fluid: String,
    fluid_side: String,
    beam_side: String,
    reversed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeometryFile {
    fluid: Vec<FluidRecord>,
    #[serde(default)]
    interface: Vec<InterfaceRecord>,
    beam: BeamRecord,
    coupling: Vec<CouplingRecord>,
}

impl PatchRecord {
    fn from_patch(p: &SplinePatch) -> Self {
        Self {
            degree: [p.basis(0).degree(), p.basis(1).degree()],
            knots_xi: p.basis(0).knots().to_vec(),
            knots_eta: p.basis(1).knots().to_vec(),
            control_points: p.control_points().iter().map(|c| [c.x, c.y]).collect(),
        }
    }

    fn to_patch(&self) -> Result<SplinePatch> {
        SplinePatch::new(
            KnotVector::new(self.degree[0], self.knots_xi.clone())?,
            KnotVector::new(self.degree[1], self.knots_eta.clone())?,
            self.control_points
                .iter()
                .map(|c| Vec2::new(c[0], c[1]))
                .collect(),
        )
    }
}

fn side_tag_name(tag: Option<BoundaryTag>) -> String {
    match tag {
        None => "interface".into(),
        Some(t) => t.name().into(),
    }
}

fn parse_side_tag(s: &str) -> Result<Option<BoundaryTag>> {
    match s {
        "interface" => Ok(None),
        other => other.parse().map(Some),
    }
}

impl BenchmarkGeometry {
    pub fn to_toml(&self) -> Result<String> {
        let fluid = self
            .fluid
            .patches()
            .iter()
            .enumerate()
            .map(|(p, patch)| FluidRecord {
                name: self.fluid_names[p].clone(),
                patch: PatchRecord::from_patch(patch),
                west: side_tag_name(self.fluid.boundary_tag(p, Side::West)),
                east: side_tag_name(self.fluid.boundary_tag(p, Side::East)),
                south: side_tag_name(self.fluid.boundary_tag(p, Side::South)),
                north: side_tag_name(self.fluid.boundary_tag(p, Side::North)),
            })
            .collect();
        let interface = self
            .fluid
            .interfaces()
            .iter()
            .map(|i| InterfaceRecord {
                a: self.fluid_names[i.patch_a].clone(),
                side_a: i.side_a.name().into(),
                b: self.fluid_names[i.patch_b].clone(),
                side_b: i.side_b.name().into(),
                reversed: i.reversed,
            })
            .collect();
        let coupling = self
            .couplings
            .iter()
            .map(|c| CouplingRecord {
                fluid: self.fluid_names[c.fluid_patch].clone(),
                fluid_side: c.fluid_side.name().into(),
                beam_side: c.beam_side.name().into(),
                reversed: c.reversed,
            })
            .collect();
        let file = GeometryFile {
            fluid,
            interface,
            beam: BeamRecord {
                patch: PatchRecord::from_patch(&self.beam),
                clamped: self.beam_clamped.iter().map(|s| s.name().into()).collect(),
            },
            coupling,
        };
        toml::to_string(&file).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GeometryFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let names: Vec<String> = file.fluid.iter().map(|f| f.name.clone()).collect();
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Parse(format!("unknown fluid patch '{name}'")))
        };
        let mut patches = Vec::new();
        let mut tags = Vec::new();
        for f in &file.fluid {
            patches.push(f.patch.to_patch()?);
            tags.push([
                parse_side_tag(&f.west)?,
                parse_side_tag(&f.east)?,
                parse_side_tag(&f.south)?,
                parse_side_tag(&f.north)?,
            ]);
        }
        let interfaces = file
            .interface
            .iter()
            .map(|i| {
                Ok(Interface {
                    patch_a: index(&i.a)?,
                    side_a: i.side_a.parse()?,
                    patch_b: index(&i.b)?,
                    side_b: i.side_b.parse()?,
                    reversed: i.reversed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let couplings = file
            .coupling
            .iter()
            .map(|c| {
                Ok(Coupling {
                    fluid_patch: index(&c.fluid)?,
                    fluid_side: c.fluid_side.parse()?,
                    beam_side: c.beam_side.parse()?,
                    reversed: c.reversed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let geometry = Self {
            fluid: MultiPatchDomain::new(patches, interfaces, tags)?,
            fluid_names: names,
            beam: file.beam.patch.to_patch()?,
            beam_clamped: file
                .beam
                .clamped
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?,
            couplings,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

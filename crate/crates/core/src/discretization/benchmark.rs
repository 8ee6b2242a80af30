//! Geometry of the oscillating-beam benchmark: the flexible beam and the three
//! fluid patches around it that absorb the mesh deformation.

use super::domain::{BoundaryTag, Interface, MultiPatchDomain, INTERFACE_TOL};
use super::patch::{Side, SplinePatch};
use crate::{Error, Result, Vec2};

pub const DEGREE: usize = 2;

/// Glues a fluid patch side to a beam side. Fluid Γ coefficients copy the
/// beam coefficients one to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub fluid_patch: usize,
    pub fluid_side: Side,
    pub beam_side: Side,
    pub reversed: bool,
}

/// The deforming fluid region and the beam driving it.
#[derive(Debug, Clone)]
pub struct BenchmarkGeometry {
    pub fluid: MultiPatchDomain,
    pub fluid_names: Vec<String>,
    pub beam: SplinePatch,
    pub beam_clamped: Vec<Side>,
    pub couplings: Vec<Coupling>,
}

/// Corner coordinates of the default benchmark layout.
#[derive(Debug, Clone)]
pub struct BenchmarkLayout {
    /// Left end of the beam where its straight sides meet the disk.
    pub beam_root_x: f64,
    /// Middle control point of the quadratic beam root edge.
    pub beam_root_mid: Vec2,
    pub beam_tip_x: f64,
    pub beam_bottom: f64,
    pub beam_top: f64,
    /// `x` of the right edge of the deforming region.
    pub right_x: f64,
    pub channel_bottom: f64,
    pub channel_top: f64,
    /// Horizontal shift of the outer corners of the TOP/BOTTOM parallelograms.
    pub shear: f64,
}

impl Default for BenchmarkLayout {
    fn default() -> Self {
        // where the beam's straight sides cut the disk of radius 0.05 around (0.2, 0.2)
        let root_x = 0.2 + (0.05f64 * 0.05 - 0.01 * 0.01).sqrt();
        Self {
            beam_root_x: root_x,
            // quadratic through (root_x, 0.19), (0.25, 0.2), (root_x, 0.21)
            beam_root_mid: Vec2::new(2.0 * 0.25 - root_x, 0.2),
            beam_tip_x: 0.6,
            beam_bottom: 0.19,
            beam_top: 0.21,
            right_x: 0.75,
            channel_bottom: 0.0,
            channel_top: 0.41,
            shear: 0.15,
        }
    }
}

/// Default benchmark geometry refined `refinement` times.
pub fn build_benchmark_geometry(refinement: usize) -> Result<BenchmarkGeometry> {
    BenchmarkGeometry::from_layout(&BenchmarkLayout::default())?.refine(refinement)
}

impl BenchmarkGeometry {
    pub fn from_layout(l: &BenchmarkLayout) -> Result<Self> {
        let v = Vec2::new;
        let root_lo = v(l.beam_root_x, l.beam_bottom);
        let root_hi = v(l.beam_root_x, l.beam_top);
        let tip_lo = v(l.beam_tip_x, l.beam_bottom);
        let tip_hi = v(l.beam_tip_x, l.beam_top);

        let top = SplinePatch::bilinear(
            DEGREE,
            root_hi,
            tip_hi,
            v(l.right_x, l.channel_top),
            v(l.beam_root_x + l.shear, l.channel_top),
        );
        let bottom = SplinePatch::bilinear(
            DEGREE,
            v(l.beam_root_x + l.shear, l.channel_bottom),
            v(l.right_x, l.channel_bottom),
            tip_lo,
            root_lo,
        );
        let right = SplinePatch::bilinear(
            DEGREE,
            tip_lo,
            v(l.right_x, l.channel_bottom),
            v(l.right_x, l.channel_top),
            tip_hi,
        );

        let mut beam = SplinePatch::bilinear(DEGREE, root_lo, tip_lo, tip_hi, root_hi);
        // bend the root edge (column i = 0) and shift the middle column accordingly
        let mid_row = beam.local_index(0, 1);
        beam.control_points_mut()[mid_row] = l.beam_root_mid;
        let tip_mid = beam.control_points()[beam.local_index(2, 1)];
        let centre = beam.local_index(1, 1);
        beam.control_points_mut()[centre] = 0.5 * (l.beam_root_mid + tip_mid);

        use BoundaryTag::{Gamma, OuterFixed};
        let fluid = MultiPatchDomain::new(
            vec![top, bottom, right],
            vec![
                Interface {
                    patch_a: 0,
                    side_a: Side::East,
                    patch_b: 2,
                    side_b: Side::North,
                    reversed: false,
                },
                Interface {
                    patch_a: 1,
                    side_a: Side::East,
                    patch_b: 2,
                    side_b: Side::South,
                    reversed: true,
                },
            ],
            vec![
                // west, east, south, north
                [Some(OuterFixed), None, Some(Gamma), Some(OuterFixed)],
                [Some(OuterFixed), None, Some(OuterFixed), Some(Gamma)],
                [Some(Gamma), Some(OuterFixed), None, None],
            ],
        )?;
        let geometry = Self {
            fluid,
            fluid_names: vec!["top".into(), "bottom".into(), "right".into()],
            beam,
            beam_clamped: vec![Side::West],
            couplings: vec![
                Coupling {
                    fluid_patch: 0,
                    fluid_side: Side::South,
                    beam_side: Side::North,
                    reversed: false,
                },
                Coupling {
                    fluid_patch: 1,
                    fluid_side: Side::North,
                    beam_side: Side::South,
                    reversed: false,
                },
                Coupling {
                    fluid_patch: 2,
                    fluid_side: Side::West,
                    beam_side: Side::East,
                    reversed: false,
                },
            ],
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Check that every coupling glues matching sides and that every Γ side
    /// of the fluid is coupled to the beam.
    pub fn validate(&self) -> Result<()> {
        for c in &self.couplings {
            if c.fluid_patch >= self.fluid.patches().len() {
                return Err(Error::Topology(format!(
                    "coupling names missing patch {}",
                    c.fluid_patch
                )));
            }
            if self.fluid.boundary_tag(c.fluid_patch, c.fluid_side) != Some(BoundaryTag::Gamma) {
                return Err(Error::Topology(format!(
                    "coupled side {} of fluid patch {} is not tagged gamma",
                    c.fluid_side, c.fluid_patch
                )));
            }
            let fp = self.fluid.patch(c.fluid_patch);
            let kf = fp.basis(c.fluid_side.tangent_direction());
            let kb = self.beam.basis(c.beam_side.tangent_direction());
            let kb = if c.reversed {
                kb.reversed()
            } else {
                kb.clone()
            };
            if !kf.approx_eq(&kb, INTERFACE_TOL) {
                return Err(Error::Topology(format!(
                    "knot mismatch between fluid patch {} {} and beam {}",
                    c.fluid_patch, c.fluid_side, c.beam_side
                )));
            }
            let (fi, bi) = self.coupled_indices(c);
            for (f, b) in fi.into_iter().zip(bi) {
                let d = (fp.control_points()[f] - self.beam.control_points()[b]).norm();
                if d > INTERFACE_TOL {
                    return Err(Error::Topology(format!(
                        "fluid patch {} {} and beam {} control points differ by {d:e}",
                        c.fluid_patch, c.fluid_side, c.beam_side
                    )));
                }
            }
        }
        for p in 0..self.fluid.patches().len() {
            for side in Side::ALL {
                if self.fluid.boundary_tag(p, side) == Some(BoundaryTag::Gamma)
                    && !self
                        .couplings
                        .iter()
                        .any(|c| c.fluid_patch == p && c.fluid_side == side)
                {
                    return Err(Error::Topology(format!(
                        "gamma side {side} of patch {p} has no beam coupling"
                    )));
                }
            }
        }
        if self.beam_clamped.is_empty() {
            return Err(Error::Topology("beam has no clamped side".into()));
        }
        Ok(())
    }

    /// Matching local indices `(fluid, beam)` along a coupling.
    pub fn coupled_indices(&self, c: &Coupling) -> (Vec<usize>, Vec<usize>) {
        let fi = self.fluid.patch(c.fluid_patch).side_indices(c.fluid_side);
        let mut bi = self.beam.side_indices(c.beam_side);
        if c.reversed {
            bi.reverse();
        }
        (fi, bi)
    }

    /// The beam as a single-patch domain: clamped sides fixed, the rest free.
    pub fn beam_domain(&self) -> Result<MultiPatchDomain> {
        let mut tags = [Some(BoundaryTag::Natural); 4];
        for side in &self.beam_clamped {
            tags[side.index()] = Some(BoundaryTag::OuterFixed);
        }
        MultiPatchDomain::new(vec![self.beam.clone()], vec![], vec![tags])
    }

    pub fn refine(&self, times: usize) -> Result<Self> {
        let out = Self {
            fluid: self.fluid.uniform_refine(times)?,
            fluid_names: self.fluid_names.clone(),
            beam: self.beam.uniform_refine(times),
            beam_clamped: self.beam_clamped.clone(),
            couplings: self.couplings.clone(),
        };
        out.validate()?;
        Ok(out)
    }
}

use std::fmt;
use std::str::FromStr;

use super::patch::{Side, SplinePatch};
use crate::{Error, Result, Vec2};

/// Coincidence tolerance for interface knots and control points.
pub const INTERFACE_TOL: f64 = 1e-12;

/// Boundary condition attached to a patch side that is not an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Fluid-structure interface: displacement prescribed by the structure.
    Gamma,
    /// Fixed outer boundary (zero displacement; clamped for the structure).
    OuterFixed,
    /// Traction-free side. Only used for the structure.
    Natural,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Gamma => "gamma",
            BoundaryTag::OuterFixed => "outer",
            BoundaryTag::Natural => "natural",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(BoundaryTag::Gamma),
            "outer" => Ok(BoundaryTag::OuterFixed),
            "natural" => Ok(BoundaryTag::Natural),
            other => Err(Error::Parse(format!("unknown boundary tag '{other}'"))),
        }
    }
}

/// Two patch sides glued together. With `reversed` the sides run in
/// opposite directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interface {
    pub patch_a: usize,
    pub side_a: Side,
    pub patch_b: usize,
    pub side_b: Side,
    pub reversed: bool,
}

/// Patches glued along matching sides.
#[derive(Debug, Clone)]
pub struct MultiPatchDomain {
    patches: Vec<SplinePatch>,
    interfaces: Vec<Interface>,
    /// Per patch, per [`Side::index`]; `None` for interface sides.
    boundary: Vec<[Option<BoundaryTag>; 4]>,
}

impl MultiPatchDomain {
    pub fn new(
        patches: Vec<SplinePatch>,
        interfaces: Vec<Interface>,
        boundary: Vec<[Option<BoundaryTag>; 4]>,
    ) -> Result<Self> {
        let domain = Self {
            patches,
            interfaces,
            boundary,
        };
        domain.validate()?;
        Ok(domain)
    }

    /// One patch whose sides all carry `tag`.
    pub fn single(patch: SplinePatch, tag: BoundaryTag) -> Self {
        Self {
            patches: vec![patch],
            interfaces: Vec::new(),
            boundary: vec![[Some(tag); 4]],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.boundary.len() != self.patches.len() {
            return Err(Error::Topology(
                "boundary tags must be given for every patch".into(),
            ));
        }
        let mut is_interface = vec![[false; 4]; self.patches.len()];
        for (k, iface) in self.interfaces.iter().enumerate() {
            for (p, s) in [(iface.patch_a, iface.side_a), (iface.patch_b, iface.side_b)] {
                if p >= self.patches.len() {
                    return Err(Error::Topology(format!(
                        "interface {k} names missing patch {p}"
                    )));
                }
                if is_interface[p][s.index()] {
                    return Err(Error::Topology(format!(
                        "patch {p} side {s} is glued twice"
                    )));
                }
                is_interface[p][s.index()] = true;
            }
            self.check_interface(iface)?;
        }
        for (p, tags) in self.boundary.iter().enumerate() {
            for side in Side::ALL {
                match (is_interface[p][side.index()], tags[side.index()]) {
                    (true, Some(_)) => {
                        return Err(Error::Topology(format!(
                            "patch {p} side {side} is an interface and also carries a boundary tag"
                        )))
                    }
                    (false, None) => {
                        return Err(Error::Topology(format!(
                            "patch {p} side {side} is neither an interface nor tagged"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn check_interface(&self, iface: &Interface) -> Result<()> {
        let pa = &self.patches[iface.patch_a];
        let pb = &self.patches[iface.patch_b];
        let ka = pa.basis(iface.side_a.tangent_direction());
        let kb = pb.basis(iface.side_b.tangent_direction());
        let kb = if iface.reversed {
            kb.reversed()
        } else {
            kb.clone()
        };
        if !ka.approx_eq(&kb, INTERFACE_TOL) {
            return Err(Error::Topology(format!(
                "knot mismatch across interface patch {} {} / patch {} {}",
                iface.patch_a, iface.side_a, iface.patch_b, iface.side_b
            )));
        }
        let ia = pa.side_indices(iface.side_a);
        let mut ib = pb.side_indices(iface.side_b);
        if iface.reversed {
            ib.reverse();
        }
        for (&a, &b) in ia.iter().zip(&ib) {
            let d = (pa.control_points()[a] - pb.control_points()[b]).norm();
            if d > INTERFACE_TOL {
                return Err(Error::Topology(format!(
                    "control points across interface patch {} {} / patch {} {} differ by {d:e}",
                    iface.patch_a, iface.side_a, iface.patch_b, iface.side_b
                )));
            }
        }
        Ok(())
    }

    pub fn patches(&self) -> &[SplinePatch] {
        &self.patches
    }

    pub fn patch(&self, index: usize) -> &SplinePatch {
        &self.patches[index]
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn boundary_tag(&self, patch: usize, side: Side) -> Option<BoundaryTag> {
        self.boundary[patch][side.index()]
    }

    pub fn boundary_tags(&self) -> &[[Option<BoundaryTag>; 4]] {
        &self.boundary
    }

    /// Uniformly refine every patch. Interfaces stay matched since every
    /// span is bisected on both sides.
    pub fn uniform_refine(&self, times: usize) -> Result<Self> {
        Self::new(
            self.patches
                .iter()
                .map(|p| p.uniform_refine(times))
                .collect(),
            self.interfaces.clone(),
            self.boundary.clone(),
        )
    }

    /// Same topology with the control points of every patch replaced.
    pub fn with_control_points(&self, control_points: Vec<Vec<Vec2>>) -> Result<Self> {
        let mut patches = self.patches.clone();
        for (patch, cps) in patches.iter_mut().zip(control_points) {
            *patch = SplinePatch::new(patch.basis(0).clone(), patch.basis(1).clone(), cps)?;
        }
        Ok(Self {
            patches,
            interfaces: self.interfaces.clone(),
            boundary: self.boundary.clone(),
        })
    }
}

/// Classification of a global degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofClass {
    Free,
    DirichletGamma,
    DirichletOuter,
}

impl DofClass {
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, DofClass::Free)
    }
}

/// Position of a global DoF within the free or the Dirichlet block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Free(usize),
    Dirichlet(usize),
}

/// Global numbering of the coefficients of a multi-patch domain.
#[derive(Debug, Clone)]
pub struct DofMap {
    local_to_global: Vec<Vec<usize>>,
    classes: Vec<DofClass>,
    slots: Vec<Slot>,
    free: Vec<usize>,
    dirichlet: Vec<usize>,
    gamma: Vec<usize>,
}

impl DofMap {
    pub fn build(domain: &MultiPatchDomain) -> Result<Self> {
        let offsets: Vec<usize> = domain
            .patches()
            .iter()
            .scan(0, |acc, p| {
                let start = *acc;
                *acc += p.control_points().len();
                Some(start)
            })
            .collect();
        let total: usize = domain
            .patches()
            .iter()
            .map(|p| p.control_points().len())
            .sum();
        let mut uf = UnionFind::new(total);
        for iface in domain.interfaces() {
            domain.check_interface(iface)?;
            let ia = domain.patch(iface.patch_a).side_indices(iface.side_a);
            let mut ib = domain.patch(iface.patch_b).side_indices(iface.side_b);
            if iface.reversed {
                ib.reverse();
            }
            for (a, b) in ia.into_iter().zip(ib) {
                uf.union(offsets[iface.patch_a] + a, offsets[iface.patch_b] + b);
            }
        }

        let mut root_to_global = vec![usize::MAX; total];
        let mut count = 0;
        let mut local_to_global = Vec::with_capacity(domain.patches().len());
        for (p, patch) in domain.patches().iter().enumerate() {
            let mut map = Vec::with_capacity(patch.control_points().len());
            for local in 0..patch.control_points().len() {
                let root = uf.find(offsets[p] + local);
                if root_to_global[root] == usize::MAX {
                    root_to_global[root] = count;
                    count += 1;
                }
                map.push(root_to_global[root]);
            }
            local_to_global.push(map);
        }

        let mut on_gamma = vec![false; count];
        let mut on_outer = vec![false; count];
        for (p, patch) in domain.patches().iter().enumerate() {
            for side in Side::ALL {
                let marks = match domain.boundary_tag(p, side) {
                    Some(BoundaryTag::Gamma) => &mut on_gamma,
                    Some(BoundaryTag::OuterFixed) => &mut on_outer,
                    _ => continue,
                };
                for local in patch.side_indices(side) {
                    marks[local_to_global[p][local]] = true;
                }
            }
        }
        let classes: Vec<DofClass> = (0..count)
            .map(|g| {
                if on_gamma[g] {
                    DofClass::DirichletGamma
                } else if on_outer[g] {
                    DofClass::DirichletOuter
                } else {
                    DofClass::Free
                }
            })
            .collect();

        let mut free = Vec::new();
        let mut dirichlet = Vec::new();
        let mut gamma = Vec::new();
        let mut slots = Vec::with_capacity(count);
        for (g, class) in classes.iter().enumerate() {
            if class.is_dirichlet() {
                slots.push(Slot::Dirichlet(dirichlet.len()));
                dirichlet.push(g);
                if *class == DofClass::DirichletGamma {
                    gamma.push(g);
                }
            } else {
                slots.push(Slot::Free(free.len()));
                free.push(g);
            }
        }
        Ok(Self {
            local_to_global,
            classes,
            slots,
            free,
            dirichlet,
            gamma,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.classes.len()
    }

    pub fn global(&self, patch: usize, local: usize) -> usize {
        self.local_to_global[patch][local]
    }

    pub fn patch_dofs(&self, patch: usize) -> &[usize] {
        &self.local_to_global[patch]
    }

    pub fn class(&self, dof: usize) -> DofClass {
        self.classes[dof]
    }

    pub fn slot(&self, dof: usize) -> Slot {
        self.slots[dof]
    }

    /// Free DoFs in ascending global order.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Dirichlet DoFs (both classes) in ascending global order.
    pub fn dirichlet(&self) -> &[usize] {
        &self.dirichlet
    }

    /// Interface DoFs in ascending global order.
    pub fn gamma(&self) -> &[usize] {
        &self.gamma
    }

    /// Gather per-patch coefficient arrays into one global array. Shared
    /// coefficients are taken from the first patch that owns them.
    pub fn gather(&self, per_patch: &[Vec<Vec2>]) -> Vec<Vec2> {
        let mut out = vec![Vec2::zeros(); self.num_dofs()];
        let mut seen = vec![false; self.num_dofs()];
        for (p, values) in per_patch.iter().enumerate() {
            for (local, v) in values.iter().enumerate() {
                let g = self.local_to_global[p][local];
                if !seen[g] {
                    out[g] = *v;
                    seen[g] = true;
                }
            }
        }
        out
    }

    /// Scatter a global array back to per-patch coefficient arrays.
    pub fn scatter(&self, global: &[Vec2]) -> Vec<Vec<Vec2>> {
        self.local_to_global
            .iter()
            .map(|map| map.iter().map(|&g| global[g]).collect())
            .collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // keep the smaller index as root for deterministic numbering
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_squares(n_elem: usize) -> MultiPatchDomain {
        let left = SplinePatch::unit_square(2, n_elem);
        let mut right = left.clone();
        for c in right.control_points_mut() {
            c.x += 1.0;
        }
        MultiPatchDomain::new(
            vec![left, right],
            vec![Interface {
                patch_a: 0,
                side_a: Side::East,
                patch_b: 1,
                side_b: Side::West,
                reversed: false,
            }],
            vec![
                [
                    Some(BoundaryTag::OuterFixed),
                    None,
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                ],
                [
                    None,
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                ],
            ],
        )
        .unwrap()
    }

    #[test]
    fn shared_edge_counts_once() {
        for n_elem in 1..4 {
            let n = n_elem + 2;
            let dom = two_squares(n_elem);
            let map = DofMap::build(&dom).unwrap();
            assert_eq!(map.num_dofs(), 2 * n * n - n);
            let east: Vec<usize> = dom
                .patch(0)
                .side_indices(Side::East)
                .iter()
                .map(|&l| map.global(0, l))
                .collect();
            let west: Vec<usize> = dom
                .patch(1)
                .side_indices(Side::West)
                .iter()
                .map(|&l| map.global(1, l))
                .collect();
            assert_eq!(east, west);
        }
    }

    #[test]
    fn single_patch_outer_boundary() {
        let dom = MultiPatchDomain::single(SplinePatch::unit_square(2, 3), BoundaryTag::OuterFixed);
        let map = DofMap::build(&dom).unwrap();
        let n = 5;
        assert_eq!(map.dirichlet().len(), 4 * n - 4);
        assert_eq!(map.free().len(), (n - 2) * (n - 2));
        assert!(map.gamma().is_empty());
        for &d in map.dirichlet() {
            assert_eq!(map.class(d), DofClass::DirichletOuter);
        }
    }

    #[test]
    fn classification_is_a_partition() {
        let dom = two_squares(2);
        let map = DofMap::build(&dom).unwrap();
        let mut seen = vec![0; map.num_dofs()];
        for &d in map.free().iter().chain(map.dirichlet()) {
            seen[d] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn knot_mismatch_is_topology_error() {
        let left = SplinePatch::unit_square(2, 2);
        let mut right = SplinePatch::unit_square(2, 3);
        for c in right.control_points_mut() {
            c.x += 1.0;
        }
        let err = MultiPatchDomain::new(
            vec![left, right],
            vec![Interface {
                patch_a: 0,
                side_a: Side::East,
                patch_b: 1,
                side_b: Side::West,
                reversed: false,
            }],
            vec![
                [
                    Some(BoundaryTag::OuterFixed),
                    None,
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                ],
                [
                    None,
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                    Some(BoundaryTag::OuterFixed),
                ],
            ],
        );
        assert!(matches!(err, Err(Error::Topology(_))));
    }

    #[test]
    fn untagged_side_is_rejected() {
        let err = MultiPatchDomain::new(
            vec![SplinePatch::unit_square(2, 1)],
            vec![],
            vec![[
                Some(BoundaryTag::OuterFixed),
                None,
                Some(BoundaryTag::OuterFixed),
                Some(BoundaryTag::OuterFixed),
            ]],
        );
        assert!(matches!(err, Err(Error::Topology(_))));
    }

    #[test]
    fn gather_scatter_roundtrip() {
        let dom = two_squares(2);
        let map = DofMap::build(&dom).unwrap();
        let per_patch: Vec<Vec<Vec2>> = dom
            .patches()
            .iter()
            .map(|p| p.control_points().to_vec())
            .collect();
        let global = map.gather(&per_patch);
        assert_eq!(map.scatter(&global), per_patch);
    }
}

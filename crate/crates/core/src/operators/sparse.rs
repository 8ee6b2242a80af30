//! Fixed-pattern compressed-column matrices.
//!
//! Operators are assembled repeatedly on the same mesh topology, so each
//! pattern is built once. Element contributions are scattered through
//! precomputed value positions and sub-blocks are gathered through
//! precomputed index maps.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::sparse::{SparseColMat, SymbolicSparseColMat};

use crate::discretization::{DofMap, FunctionSpace, Slot};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscPattern {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl CscPattern {
    /// Pattern holding every listed `(row, col)` entry; duplicates merge.
    pub fn from_entries(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c)| (c, r));
        entries.dedup();
        let mut col_ptr = vec![0; ncols + 1];
        for &(_, c) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx = entries.into_iter().map(|(r, _)| r).collect();
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    /// Value position of `(row, col)` if it is part of the pattern.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.col_ptr[col];
        let rows = &self.row_idx[start..self.col_ptr[col + 1]];
        rows.binary_search(&row).ok().map(|k| start + k)
    }

    /// `(row, col, position)` for every stored entry in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, k))
        })
    }

    fn symbolic(&self) -> SymbolicSparseColMat<usize> {
        SymbolicSparseColMat::new_checked(
            self.nrows,
            self.ncols,
            self.col_ptr.clone(),
            None,
            self.row_idx.clone(),
        )
    }
}

/// Matrix with a shared pattern and owned values.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pattern: Arc<CscPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<CscPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_values(pattern: Arc<CscPattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<CscPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    /// Entry `(row, col)`, zero outside the pattern.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern
            .position(row, col)
            .map_or(0.0, |k| self.values[k])
    }

    /// `y += alpha * A x`.
    pub fn mul_add(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        debug_assert_eq!(y.len(), self.nrows());
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                y[self.pattern.row_idx[k]] += alpha * self.values[k] * xc;
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.mul_add(x, 1.0, &mut y);
        y
    }

    /// `max |A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.pattern
            .entries()
            .map(|(r, c, k)| (self.values[k] - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        SparseColMat::new(self.pattern.symbolic(), self.values.clone())
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols()]; self.nrows()];
        for (r, c, k) in self.pattern.entries() {
            out[r][c] = self.values[k];
        }
        out
    }

    /// Write `row col value` lines (zero-based) for cross-checking.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            w,
            "% {} {} {}",
            self.nrows(),
            self.ncols(),
            self.pattern.nnz()
        )?;
        for (r, c, k) in self.pattern.entries() {
            writeln!(w, "{r} {c} {:.17e}", self.values[k])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pattern of an operator over all DoFs of a space with `components`
/// interleaved field components (index `dof * components + comp`), with the
/// value position of every element-matrix entry.
#[derive(Debug, Clone)]
pub struct ElementPattern {
    pattern: Arc<CscPattern>,
    components: usize,
    /// Per element, row-major positions of the `(n d) x (n d)` element matrix.
    positions: Vec<Vec<usize>>,
}

impl ElementPattern {
    pub fn new(space: &FunctionSpace, components: usize) -> Self {
        let d = components;
        let n = space.num_dofs() * d;
        let mut entries = Vec::new();
        for e in space.elements() {
            for &a in &e.dofs {
                for &b in &e.dofs {
                    for i in 0..d {
                        for j in 0..d {
                            entries.push((a * d + i, b * d + j));
                        }
                    }
                }
            }
        }
        let pattern = Arc::new(CscPattern::from_entries(n, n, entries));
        let positions = space
            .elements()
            .iter()
            .map(|e| {
                let mut pos = Vec::with_capacity((e.dofs.len() * d).pow(2));
                for &a in &e.dofs {
                    for i in 0..d {
                        for &b in &e.dofs {
                            for j in 0..d {
                                pos.push(
                                    pattern
                                        .position(a * d + i, b * d + j)
                                        .expect("entry in pattern"),
                                );
                            }
                        }
                    }
                }
                pos
            })
            .collect();
        Self {
            pattern,
            components,
            positions,
        }
    }

    pub fn pattern(&self) -> &Arc<CscPattern> {
        &self.pattern
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn element_positions(&self, element: usize) -> &[usize] {
        &self.positions[element]
    }

    /// Add element matrices (row-major, in element order) into a zero matrix.
    pub fn scatter(&self, element_matrices: &[Vec<f64>]) -> SparseMatrix {
        let mut values = vec![0.0; self.pattern.nnz()];
        for (pos, ke) in self.positions.iter().zip(element_matrices) {
            for (&p, &v) in pos.iter().zip(ke) {
                values[p] += v;
            }
        }
        SparseMatrix::from_values(self.pattern.clone(), values)
    }
}

/// One source block of a [`BlockLayout`]: the entries of a source pattern
/// whose row and column both map into the target.
pub struct BlockSource<'a> {
    pub pattern: &'a CscPattern,
    pub row_map: &'a dyn Fn(usize) -> Option<usize>,
    pub col_map: &'a dyn Fn(usize) -> Option<usize>,
}

/// Gather map assembling a target matrix from entries of source matrices.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pattern: Arc<CscPattern>,
    /// `(source, source position, target position)`.
    gather: Vec<(usize, usize, usize)>,
}

impl BlockLayout {
    pub fn new(nrows: usize, ncols: usize, sources: &[BlockSource<'_>]) -> Self {
        let mut raw = Vec::new();
        for (s, src) in sources.iter().enumerate() {
            for (r, c, k) in src.pattern.entries() {
                if let (Some(tr), Some(tc)) = ((src.row_map)(r), (src.col_map)(c)) {
                    raw.push((tr, tc, s, k));
                }
            }
        }
        let pattern = Arc::new(CscPattern::from_entries(
            nrows,
            ncols,
            raw.iter().map(|&(r, c, _, _)| (r, c)).collect(),
        ));
        let gather = raw
            .into_iter()
            .map(|(r, c, s, k)| (s, k, pattern.position(r, c).expect("entry in pattern")))
            .collect();
        Self { pattern, gather }
    }

    pub fn pattern(&self) -> &Arc<CscPattern> {
        &self.pattern
    }

    pub fn fill(&self, sources: &[&[f64]]) -> SparseMatrix {
        let mut values = vec![0.0; self.pattern.nnz()];
        for &(s, k, t) in &self.gather {
            values[t] += sources[s][k];
        }
        SparseMatrix::from_values(self.pattern.clone(), values)
    }
}

/// Free-free and free-Dirichlet blocks of an [`ElementPattern`].
#[derive(Debug, Clone)]
pub struct Partition {
    pub free_free: BlockLayout,
    pub free_dirichlet: BlockLayout,
    pub components: usize,
}

impl Partition {
    pub fn new(element: &ElementPattern, dofs: &DofMap) -> Self {
        let d = element.components();
        let free_map = |i: usize| match dofs.slot(i / d) {
            Slot::Free(s) => Some(s * d + i % d),
            Slot::Dirichlet(_) => None,
        };
        let dir_map = |i: usize| match dofs.slot(i / d) {
            Slot::Dirichlet(s) => Some(s * d + i % d),
            Slot::Free(_) => None,
        };
        let nf = dofs.free().len() * d;
        let nd = dofs.dirichlet().len() * d;
        let free_free = BlockLayout::new(
            nf,
            nf,
            &[BlockSource {
                pattern: element.pattern(),
                row_map: &free_map,
                col_map: &free_map,
            }],
        );
        let free_dirichlet = BlockLayout::new(
            nf,
            nd,
            &[BlockSource {
                pattern: element.pattern(),
                row_map: &free_map,
                col_map: &dir_map,
            }],
        );
        Self {
            free_free,
            free_dirichlet,
            components: d,
        }
    }
}

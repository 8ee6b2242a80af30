//! Sparse direct solvers with reusable symbolic analysis.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::{Mat, Side};

use super::sparse::SparseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Symmetric positive definite path.
    Cholesky,
    /// General path, used for indefinite and saddle-point systems.
    Lu,
}

/// Symbolic factorizations of one sparsity pattern, shared by every
/// numeric factorization on that pattern.
#[derive(Debug, Clone, Default)]
pub struct SymbolicCache {
    llt: Option<SymbolicLlt<usize>>,
    lu: Option<SymbolicLu<usize>>,
}

#[derive(Debug, Clone)]
enum Inner {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

#[derive(Debug, Clone)]
pub struct Factorization {
    inner: Inner,
    n: usize,
}

impl Factorization {
    pub fn new(matrix: &SparseMatrix, kind: SolverKind, cache: &mut SymbolicCache) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Solver(format!(
                "matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix has non-finite entries".into()));
        }
        let a = matrix.to_faer();
        let inner = match kind {
            SolverKind::Cholesky => {
                let symbolic = match &cache.llt {
                    Some(s) => s.clone(),
                    None => {
                        let s = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
                            .map_err(|e| Error::Solver(format!("symbolic Cholesky: {e:?}")))?;
                        cache.llt = Some(s.clone());
                        s
                    }
                };
                Inner::Cholesky(
                    Llt::try_new_with_symbolic(symbolic, a.as_ref(), Side::Lower)
                        .map_err(|e| Error::Solver(format!("Cholesky: {e:?}")))?,
                )
            }
            SolverKind::Lu => {
                let symbolic = match &cache.lu {
                    Some(s) => s.clone(),
                    None => {
                        let s = SymbolicLu::try_new(a.symbolic())
                            .map_err(|e| Error::Solver(format!("symbolic LU: {e:?}")))?;
                        cache.lu = Some(s.clone());
                        s
                    }
                };
                Inner::Lu(
                    Lu::try_new_with_symbolic(symbolic, a.as_ref())
                        .map_err(|e| Error::Solver(format!("LU: {e:?}")))?,
                )
            }
        };
        Ok(Self {
            inner,
            n: matrix.nrows(),
        })
    }

    /// Cholesky if the matrix admits it, LU otherwise.
    pub fn new_spd_or_lu(matrix: &SparseMatrix, cache: &mut SymbolicCache) -> Result<Self> {
        Self::new(matrix, SolverKind::Cholesky, cache)
            .or_else(|_| Self::new(matrix, SolverKind::Lu, cache))
    }

    pub fn kind(&self) -> SolverKind {
        match self.inner {
            Inner::Cholesky(_) => SolverKind::Cholesky,
            Inner::Lu(_) => SolverKind::Lu,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve for every column of `rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut Mat<f64>) -> Result<()> {
        if rhs.nrows() != self.n {
            return Err(Error::Solver(format!(
                "rhs has {} rows, expected {}",
                rhs.nrows(),
                self.n
            )));
        }
        match &self.inner {
            Inner::Cholesky(f) => f.solve_in_place(rhs.as_mut()),
            Inner::Lu(f) => f.solve_in_place(rhs.as_mut()),
        }
        for j in 0..rhs.ncols() {
            for i in 0..rhs.nrows() {
                if !rhs[(i, j)].is_finite() {
                    return Err(Error::Solver("solution has non-finite entries".into()));
                }
            }
        }
        Ok(())
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.solve_in_place(&mut m)?;
        Ok((0..rhs.len()).map(|i| m[(i, 0)]).collect())
    }
}

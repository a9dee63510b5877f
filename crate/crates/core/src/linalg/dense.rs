//! Dense operators with a direct route for moderate sizes and a Krylov
//! route above [`DENSE_FACTOR_CAP`] unknowns.

use crate::error::{Error, Result};
use crate::linalg::gmres::{gmres, GmresOptions};
use faer::prelude::*;
use rayon::prelude::*;

/// Largest system handed to the direct factorization; larger assembled
/// systems are solved with restarted GMRES on the stored matrix.
pub const DENSE_FACTOR_CAP: usize = 6000;

/// A dense square operator stored column-major.
#[derive(Clone)]
pub struct DenseOp {
    n: usize,
    a: faer::Mat<f64>,
}

impl DenseOp {
    /// Fills the matrix entrywise; rows are computed in parallel.
    pub fn from_rows(n: usize, row: impl Fn(usize) -> Vec<f64> + Sync) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(&row).collect();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Assembly(format!(
                "row {bad} has length {}, expected {n}",
                rows[bad].len()
            )));
        }
        let a = faer::Mat::from_fn(n, n, |i, j| rows[i][j]);
        Ok(DenseOp { n, a })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        DenseOp {
            n,
            a: faer::Mat::from_fn(n, n, f),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a.read(i, j)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let xm = faer::mat::from_column_major_slice::<f64>(x, self.n, 1);
        let y = &self.a * xm;
        (0..self.n).map(|i| y.read(i, 0)).collect()
    }

    /// Maximum absolute asymmetry |a_ij - a_ji| over all pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.a.read(i, j) - self.a.read(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.a.read(i, j))
    }

    /// Eigenvalues of the (nonsymmetric) matrix as (re, im) pairs.
    pub fn complex_eigenvalues(&self) -> Vec<(f64, f64)> {
        self.a
            .eigenvalues::<faer::complex_native::c64>()
            .into_iter()
            .map(|z| (z.re, z.im))
            .collect()
    }

    /// Solver selection per size: direct factorization up to
    /// [`DENSE_FACTOR_CAP`], restarted GMRES beyond.
    pub fn solver(self) -> DenseSolver {
        if self.n <= DENSE_FACTOR_CAP {
            DenseSolver::Factored {
                lu: self.a.partial_piv_lu(),
                n: self.n,
            }
        } else {
            DenseSolver::Iterative(self)
        }
    }
}

/// A ready-to-solve dense system; one factorization serves many right-hand
/// sides.
pub enum DenseSolver {
    Factored {
        lu: faer::linalg::solvers::PartialPivLu<f64>,
        n: usize,
    },
    Iterative(DenseOp),
}

impl DenseSolver {
    pub fn n(&self) -> usize {
        match self {
            DenseSolver::Factored { n, .. } => *n,
            DenseSolver::Iterative(op) => op.n,
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, DenseSolver::Factored { .. })
    }

    /// Solves A x = b and returns the solution with its relative residual.
    pub fn solve(&self, b: &[f64]) -> Result<DenseSolution> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::LinearSolve(format!(
                "rhs length {} does not match system size {n}",
                b.len()
            )));
        }
        match self {
            DenseSolver::Factored { lu, .. } => {
                let bm = faer::mat::from_column_major_slice::<f64>(b, n, 1);
                let xm = lu.solve(bm);
                let x: Vec<f64> = (0..n).map(|i| xm.read(i, 0)).collect();
                Ok(DenseSolution {
                    x,
                    residual: f64::NAN,
                    iterations: 0,
                })
            }
            DenseSolver::Iterative(op) => {
                let sol = gmres(
                    |x, y| {
                        let r = op.apply(x);
                        y.copy_from_slice(&r);
                    },
                    b,
                    None,
                    &GmresOptions::default(),
                )?;
                Ok(DenseSolution {
                    x: sol.x,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
        }
    }

    /// Solve followed by an explicit residual check against the operator.
    pub fn solve_checked(&self, op: &DenseOp, b: &[f64]) -> Result<DenseSolution> {
        let mut sol = self.solve(b)?;
        let ax = op.apply(&sol.x);
        let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res = ax
            .iter()
            .zip(b.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        sol.residual = if norm_b > 0.0 { res / norm_b } else { res };
        Ok(sol)
    }
}

pub struct DenseSolution {
    pub x: Vec<f64>,
    /// Relative residual when it was computed, NaN for a plain direct solve.
    pub residual: f64,
    pub iterations: usize,
}

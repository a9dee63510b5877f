//! CSR matrices, conjugate gradients and the rank-one augmented solve used
//! for systems with a known one-dimensional kernel.

use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square CSR matrix from (row, col, value) triplets, summing
    /// duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(Error::Assembly(format!(
                "triplet ({i}, {j}) outside {n} x {n} matrix"
            )));
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if prev == Some((i, j)) {
                *data.last_mut().expect("duplicate follows an entry") += v;
            } else {
                indices.push(j);
                data.push(v);
                prev = Some((i, j));
            }
            indptr[i + 1] = indices.len();
        }
        // Forward-fill row pointers for rows without entries.
        for i in 1..=n {
            indptr[i] = indptr[i].max(indptr[i - 1]);
        }
        Ok(CsrMatrix {
            n,
            indptr,
            indices,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *yi = acc;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[k] == i {
                    d[i] += self.data[k];
                }
            }
        }
        d
    }

    /// Largest |a_ij − a_ji|; assembly sanity check for symmetric operators.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                let aji = self.get(j, i);
                worst = worst.max((self.data[k] - aji).abs());
            }
        }
        worst
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.indptr[i]..self.indptr[i + 1] {
            if self.indices[k] == j {
                return self.data[k];
            }
        }
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-12,
            max_iters: 20_000,
        }
    }
}

pub struct SparseSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator given as a
/// closure; `diag` supplies the preconditioner.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    opts: &CgOptions,
) -> Result<SparseSolution> {
    let n = b.len();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(SparseSolution {
            x: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
        });
    }
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];

    for iter in 0..opts.max_iters {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::LinearSolve(format!(
                "conjugate gradients: operator not positive definite (p·Ap = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        for ((xi, pi), (ri, api)) in x
            .iter_mut()
            .zip(p.iter())
            .zip(r.iter_mut().zip(ap.iter()))
        {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
        if res <= opts.tol {
            return Ok(SparseSolution {
                x,
                residual: res,
                iterations: iter + 1,
            });
        }
        for ((zi, ri), di) in z.iter_mut().zip(r.iter()).zip(inv_diag.iter()) {
            *zi = ri * di;
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(z.iter()) {
            *pi = zi + beta * *pi;
        }
    }
    let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
    Err(Error::LinearSolve(format!(
        "conjugate gradients did not converge: relative residual {res:.3e} after {} iterations",
        opts.max_iters
    )))
}

/// Convenience wrapper for a CSR system.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<SparseSolution> {
    conjugate_gradient(|x, y| a.matvec(x, y), &a.diagonal(), b, opts)
}

/// Solves A u = f subject to c·u = 0 where A is symmetric positive
/// semidefinite with a one-dimensional kernel not orthogonal to c.
///
/// Works on the SPD rank-one augmentation Â = A + σ c cᵀ: with
/// w = Â⁻¹ f and z = Â⁻¹ c, the constrained solution is u = w − μ z,
/// μ = (c·w)/(c·z). For f compatible with A the multiplier μ vanishes up to
/// solver tolerance; otherwise it projects out the incompatible component.
pub fn solve_constrained(
    a: &CsrMatrix,
    f: &[f64],
    c: &[f64],
    opts: &CgOptions,
) -> Result<SparseSolution> {
    let n = a.n();
    if f.len() != n || c.len() != n {
        return Err(Error::LinearSolve(
            "constrained solve: dimension mismatch".into(),
        ));
    }
    let cc: f64 = c.iter().map(|v| v * v).sum();
    if cc == 0.0 {
        return Err(Error::LinearSolve(
            "constrained solve: zero constraint vector".into(),
        ));
    }
    let diag_a = a.diagonal();
    let mean_diag = diag_a.iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    let sigma = mean_diag.max(1e-300) / cc;
    let apply = |x: &[f64], y: &mut [f64]| {
        a.matvec(x, y);
        let cx: f64 = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
        for (yi, ci) in y.iter_mut().zip(c.iter()) {
            *yi += sigma * cx * ci;
        }
    };
    let diag_aug: Vec<f64> = diag_a
        .iter()
        .zip(c.iter())
        .map(|(d, ci)| d + sigma * ci * ci)
        .collect();
    let w = conjugate_gradient(&apply, &diag_aug, f, opts)?;
    let z = conjugate_gradient(&apply, &diag_aug, c, opts)?;
    let cw: f64 = c.iter().zip(&w.x).map(|(a, b)| a * b).sum();
    let cz: f64 = c.iter().zip(&z.x).map(|(a, b)| a * b).sum();
    if cz.abs() < 1e-300 {
        return Err(Error::LinearSolve(
            "constrained solve: constraint orthogonal to the kernel".into(),
        ));
    }
    let mu = cw / cz;
    let x: Vec<f64> = w
        .x
        .iter()
        .zip(z.x.iter())
        .map(|(wi, zi)| wi - mu * zi)
        .collect();
    Ok(SparseSolution {
        x,
        residual: w.residual.max(z.residual),
        iterations: w.iterations + z.iterations,
    })
}

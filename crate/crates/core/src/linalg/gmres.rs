//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub tol: f64,
    pub max_outer: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 60,
            tol: 1e-10,
            max_outer: 50,
        }
    }
}

pub struct GmresResult {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves A x = b for the operator given as `apply(x, y)` writing y = A x.
/// Convergence is declared on the relative residual ‖b − A x‖ / ‖b‖.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &GmresOptions,
) -> Result<GmresResult> {
    let n = b.len();
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok(GmresResult {
            x: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
        });
    }
    let m = opts.restart.max(1);
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut total_iters = 0usize;
    let mut scratch = vec![0.0; n];

    for _outer in 0..opts.max_outer {
        apply(&x, &mut scratch);
        let mut r: Vec<f64> = b.iter().zip(scratch.iter()).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta / norm_b <= opts.tol {
            return Ok(GmresResult {
                x,
                residual: beta / norm_b,
                iterations: total_iters,
            });
        }
        for ri in r.iter_mut() {
            *ri /= beta;
        }
        let mut basis: Vec<Vec<f64>> = vec![r];
        // Upper Hessenberg stored column-wise, plus Givens coefficients.
        let mut h = vec![vec![0.0f64; 0]; 0];
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k_used = 0usize;

        for k in 0..m {
            apply(&basis[k], &mut scratch);
            let mut w = scratch.clone();
            let mut hk = vec![0.0; k + 2];
            for (j, vj) in basis.iter().enumerate() {
                let hjk: f64 = w.iter().zip(vj.iter()).map(|(a, b)| a * b).sum();
                hk[j] = hjk;
                for (wi, vji) in w.iter_mut().zip(vj.iter()) {
                    *wi -= hjk * vji;
                }
            }
            let wn = norm(&w);
            hk[k + 1] = wn;
            // Apply accumulated rotations to the new column.
            for j in 0..k {
                let t = cs[j] * hk[j] + sn[j] * hk[j + 1];
                hk[j + 1] = -sn[j] * hk[j] + cs[j] * hk[j + 1];
                hk[j] = t;
            }
            let denom = (hk[k] * hk[k] + hk[k + 1] * hk[k + 1]).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (hk[k] / denom, hk[k + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            hk[k] = c * hk[k] + s * hk[k + 1];
            hk[k + 1] = 0.0;
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(hk);
            total_iters += 1;
            k_used = k + 1;

            let rel = g[k + 1].abs() / norm_b;
            let breakdown = wn <= 1e-14 * norm_b.max(1.0);
            if rel <= opts.tol || breakdown {
                break;
            }
            let mut v = w;
            for vi in v.iter_mut() {
                *vi /= wn;
            }
            basis.push(v);
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k_used {
                acc -= h[j][i] * y[j];
            }
            if h[i][i] == 0.0 {
                return Err(Error::LinearSolve(
                    "gmres breakdown: singular Hessenberg diagonal".into(),
                ));
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vji) in x.iter_mut().zip(basis[j].iter()) {
                *xi += yj * vji;
            }
        }

        apply(&x, &mut scratch);
        let res = b
            .iter()
            .zip(scratch.iter())
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt()
            / norm_b;
        if res <= opts.tol {
            return Ok(GmresResult {
                x,
                residual: res,
                iterations: total_iters,
            });
        }
    }

    apply(&x, &mut scratch);
    let res = b
        .iter()
        .zip(scratch.iter())
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt()
        / norm_b;
    Err(Error::LinearSolve(format!(
        "gmres did not converge: relative residual {res:.3e} after {total_iters} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(a: &[Vec<f64>]) -> impl Fn(&[f64], &mut [f64]) + '_ {
        move |x, y| {
            for (i, row) in a.iter().enumerate() {
                y[i] = row.iter().zip(x.iter()).map(|(r, xi)| r * xi).sum();
            }
        }
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 80;
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j {
                    2.0
                } else {
                    rng.gen_range(-0.5..0.5) / n as f64
                };
            }
        }
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; n];
        dense_apply(&a)(&x_true, &mut b);
        let sol = gmres(dense_apply(&a), &b, None, &GmresOptions::default()).unwrap();
        assert!(sol.residual <= 1e-10);
        for (got, want) in sol.x.iter().zip(x_true.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn restart_path_still_converges() {
        let n = 60;
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0 + i as f64 / n as f64;
            if i + 1 < n {
                row[i + 1] = 0.3;
            }
        }
        let b = vec![1.0; n];
        let opts = GmresOptions {
            restart: 5,
            tol: 1e-11,
            max_outer: 200,
        };
        let sol = gmres(dense_apply(&a), &b, None, &opts).unwrap();
        assert!(sol.residual <= 1e-11);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let a = vec![vec![1.0]];
        let sol = gmres(dense_apply(&a), &[0.0], None, &GmresOptions::default()).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn nonconvergence_is_an_error() {
        // Rotation-like system with tiny iteration budget.
        let a = vec![vec![0.0, -1.0], vec![1.0, 0.0]];
        let opts = GmresOptions {
            restart: 1,
            tol: 1e-16,
            max_outer: 1,
        };
        let out = gmres(dense_apply(&a), &[1.0, 1.0], None, &opts);
        assert!(out.is_err());
    }
}

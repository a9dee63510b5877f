//! Quadrature rules on reference simplices and Gauss-Legendre rules on [0, 1].
//!
//! Simplex rules are stored in barycentric coordinates with weights summing
//! to one, so a physical integral is `cell_measure · Σ w_q f(x_q)`. Degrees
//! 1, 2 and 4 are provided in both dimensions.

use crate::error::{Error, Result};
use crate::meshgeom::Point;

/// Symmetric quadrature rule on the reference triangle or tetrahedron.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    dim: usize,
    degree: u32,
    /// Barycentric coordinates, one row of dim+1 entries per point.
    bary: Vec<f64>,
    /// Weights, normalized to sum to one.
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule on the d-simplex exact for polynomials of the given total degree.
    pub fn simplex(dim: usize, degree: u32) -> Result<Self> {
        let (bary, weights) = match (dim, degree) {
            (2, 0) | (2, 1) => (vec![vec![THIRD, THIRD, THIRD]], vec![1.0]),
            (2, 2) => (
                symmetric_orbit_2d(&[0.5, 0.5, 0.0]),
                vec![THIRD; 3],
            ),
            (2, 3) | (2, 4) => {
                let mut b = symmetric_orbit_2d(&[DUN4_A1, DUN4_B1, DUN4_B1]);
                b.extend(symmetric_orbit_2d(&[DUN4_A2, DUN4_B2, DUN4_B2]));
                let mut w = vec![DUN4_W1; 3];
                w.extend(vec![DUN4_W2; 3]);
                (b, w)
            }
            (3, 0) | (3, 1) => (vec![vec![0.25; 4]], vec![1.0]),
            (3, 2) => (
                symmetric_orbit_3d(&[TET2_A, TET2_B, TET2_B, TET2_B]),
                vec![0.25; 4],
            ),
            (3, 3) | (3, 4) => {
                let mut b = symmetric_orbit_3d(&[KEAST_A1, KEAST_A1, KEAST_A1, 1.0 - 3.0 * KEAST_A1]);
                b.extend(symmetric_orbit_3d(&[KEAST_A2, KEAST_A2, KEAST_A2, 1.0 - 3.0 * KEAST_A2]));
                b.extend(symmetric_orbit_3d(&[
                    KEAST_A3,
                    KEAST_A3,
                    0.5 - KEAST_A3,
                    0.5 - KEAST_A3,
                ]));
                let mut w = vec![KEAST_W1; 4];
                w.extend(vec![KEAST_W2; 4]);
                w.extend(vec![KEAST_W3; 6]);
                (b, w)
            }
            (d, _) if d != 2 && d != 3 => return Err(Error::Dimension(d)),
            (_, deg) => {
                return Err(Error::Quadrature(format!(
                    "no simplex rule of degree {deg}; available degrees are 1, 2, 4"
                )))
            }
        };
        let flat: Vec<f64> = bary.into_iter().flatten().collect();
        Ok(QuadratureRule {
            dim,
            degree,
            bary: flat,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Barycentric coordinates of the q-th point (dim+1 entries).
    pub fn bary(&self, q: usize) -> &[f64] {
        let n = self.dim + 1;
        &self.bary[q * n..(q + 1) * n]
    }

    /// Physical quadrature point from the cell's vertex positions.
    pub fn point(&self, q: usize, vertices: &[Point]) -> Point {
        let lambda = self.bary(q);
        let mut x = Point::zeros();
        for (l, v) in lambda.iter().zip(vertices.iter()) {
            x += *l * *v;
        }
        x
    }
}

const THIRD: f64 = 1.0 / 3.0;

// Degree-4 triangle rule, six points in two symmetric orbits.
const DUN4_A1: f64 = 0.108_103_018_168_070;
const DUN4_B1: f64 = 0.445_948_490_915_965;
const DUN4_W1: f64 = 0.223_381_589_678_011;
const DUN4_A2: f64 = 0.816_847_572_980_459;
const DUN4_B2: f64 = 0.091_576_213_509_771;
const DUN4_W2: f64 = 0.109_951_743_655_322;

// Degree-2 tetrahedron rule, four points.
const TET2_A: f64 = 0.585_410_196_624_968_5;
const TET2_B: f64 = 0.138_196_601_125_010_5;

// Degree-4 tetrahedron rule, fourteen points in three orbits.
const KEAST_A1: f64 = 0.092_735_250_310_891_23;
const KEAST_W1: f64 = 0.073_493_043_116_361_95;
const KEAST_A2: f64 = 0.310_885_919_263_300_6;
const KEAST_W2: f64 = 0.112_687_925_718_015_48;
const KEAST_A3: f64 = 0.045_503_704_125_649_65;
const KEAST_W3: f64 = 0.042_546_020_777_081_466;

/// All distinct permutations of a barycentric pattern on the triangle,
/// keeping the first listed entry distinguished (rotation orbit of size 3).
fn symmetric_orbit_2d(pattern: &[f64; 3]) -> Vec<Vec<f64>> {
    vec![
        vec![pattern[0], pattern[1], pattern[2]],
        vec![pattern[2], pattern[0], pattern[1]],
        vec![pattern[1], pattern[2], pattern[0]],
    ]
}

/// Distinct permutations of a tetrahedral barycentric pattern.
fn symmetric_orbit_3d(pattern: &[f64; 4]) -> Vec<Vec<f64>> {
    let mut perms: Vec<Vec<f64>> = Vec::new();
    let idx = [0usize, 1, 2, 3];
    permute(&idx, &mut Vec::new(), &mut |p| {
        let cand: Vec<f64> = p.iter().map(|&k| pattern[k]).collect();
        if !perms.iter().any(|e| {
            e.iter()
                .zip(cand.iter())
                .all(|(a, b)| (a - b).abs() < 1e-14)
        }) {
            perms.push(cand);
        }
    });
    perms
}

fn permute(rest: &[usize], acc: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if rest.is_empty() {
        visit(acc);
        return;
    }
    for (n, &k) in rest.iter().enumerate() {
        let mut next: Vec<usize> = rest.to_vec();
        next.remove(n);
        acc.push(k);
        permute(&next, acc, visit);
        acc.pop();
    }
}

/// Gauss-Legendre nodes and weights on [0, 1]; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// ∫_T x^a y^b over the unit triangle = a! b! / (a+b+2)!.
    fn tri_moment(a: u32, b: u32) -> f64 {
        use crate::meshgeom::multiindex::factorial;
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    /// ∫_T x^a y^b z^c over the unit tetrahedron = a! b! c! / (a+b+c+3)!.
    fn tet_moment(a: u32, b: u32, c: u32) -> f64 {
        use crate::meshgeom::multiindex::factorial;
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    fn tri_quad(rule: &QuadratureRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1); area 1/2.
        let mut acc = 0.0;
        for q in 0..rule.len() {
            let l = rule.bary(q);
            let (x, y) = (l[1], l[2]);
            acc += rule.weights()[q] * f(x, y);
        }
        acc * 0.5
    }

    fn tet_quad(rule: &QuadratureRule, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for q in 0..rule.len() {
            let l = rule.bary(q);
            acc += rule.weights()[q] * f(l[1], l[2], l[3]);
        }
        acc / 6.0
    }

    #[test]
    fn weights_are_normalized() {
        for dim in [2usize, 3] {
            for degree in [1u32, 2, 4] {
                let rule = QuadratureRule::simplex(dim, degree).unwrap();
                let s: f64 = rule.weights().iter().sum();
                assert_relative_eq!(s, 1.0, epsilon = 1e-14);
                for q in 0..rule.len() {
                    let bs: f64 = rule.bary(q).iter().sum();
                    assert_relative_eq!(bs, 1.0, epsilon = 1e-14);
                    assert!(rule.bary(q).iter().all(|&l| l >= -1e-14));
                }
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact_to_declared_degree() {
        for degree in [1u32, 2, 4] {
            let rule = QuadratureRule::simplex(2, degree).unwrap();
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let got = tri_quad(&rule, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    assert_relative_eq!(
                        got,
                        tri_moment(a, b),
                        max_relative = 1e-13,
                        epsilon = 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn tetrahedron_rules_are_exact_to_declared_degree() {
        for degree in [1u32, 2, 4] {
            let rule = QuadratureRule::simplex(3, degree).unwrap();
            assert_eq!(rule.len(), match degree {
                1 => 1,
                2 => 4,
                _ => 14,
            });
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for c in 0..=(degree - a - b) {
                        let got = tet_quad(&rule, |x, y, z| {
                            x.powi(a as i32) * y.powi(b as i32) * z.powi(c as i32)
                        });
                        assert_relative_eq!(
                            got,
                            tet_moment(a, b, c),
                            max_relative = 1e-12,
                            epsilon = 1e-16
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn degree_four_triangle_fails_gracefully_beyond_design_order() {
        // Degree-4 rule is not exact at degree 6; this guards against a
        // silently over-claimed table.
        let rule = QuadratureRule::simplex(2, 4).unwrap();
        let got = tri_quad(&rule, |x, _| x.powi(6));
        assert!((got - tri_moment(6, 0)).abs() > 1e-8);
    }

    #[test]
    fn unsupported_degree_is_rejected() {
        assert!(QuadratureRule::simplex(2, 7).is_err());
        assert!(QuadratureRule::simplex(4, 2).is_err());
    }

    #[test]
    fn gauss_legendre_nodes_match_known_values() {
        let (x, w) = gauss_legendre(2);
        let r = 0.5 + 0.5 / 3.0_f64.sqrt();
        assert_relative_eq!(x[0], 1.0 - r, epsilon = 1e-14);
        assert_relative_eq!(x[1], r, epsilon = 1e-14);
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
            // Exact for degree 2n−1.
            let p = (2 * n - 1) as i32;
            let got: f64 = x.iter().zip(w.iter()).map(|(xi, wi)| wi * xi.powi(p)).sum();
            assert_relative_eq!(got, 1.0 / (p as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_handles_graded_log_panels() {
        // The radially collapsed form of a logarithmic kernel integrand is
        // u·ln(u); the graded panels used by the singular quadrature resolve
        // ∫_0^1 u ln(u) du = -1/4 well below the per-cell tolerance.
        let panels = [0.0, 1e-4, 5e-3, 0.08, 0.35, 1.0];
        let (x, w) = gauss_legendre(10);
        let mut acc = 0.0;
        for pair in panels.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for (xi, wi) in x.iter().zip(w.iter()) {
                let t = a + (b - a) * xi;
                acc += wi * (b - a) * t * t.ln();
            }
        }
        assert_relative_eq!(acc, -0.25, epsilon = 1e-9);
    }
}

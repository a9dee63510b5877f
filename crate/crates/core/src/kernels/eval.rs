//! Near-singular and singular integration of kernel moments over mesh cells.
//!
//! Every primitive integrates `weight(x) · K(x − y)` over one cell, where K
//! is the fundamental solution or one of its derivatives. Three regimes:
//!
//! * far cells use the mesh's stored degree-4 quadrature;
//! * cells containing y (or touching it) are split at y into apex simplices
//!   and integrated with a Duffy transform, whose radial direction uses
//!   graded Gauss-Legendre panels so logarithmic kernels are resolved to the
//!   declared per-cell tolerance;
//! * nearby-but-disjoint cells are bisected recursively until each piece is
//!   well separated from y.

use crate::error::{Error, Result};
use crate::kernels::gamma::{gamma_unchecked, grad_gamma_unchecked, hess_gamma_unchecked};
use crate::meshgeom::mesh::simplex_diameter;
use crate::meshgeom::{gauss_legendre, Point, QuadratureRule, VolumeMesh};

/// Graded radial panels for the Duffy transform.
const RADIAL_PANELS: [f64; 6] = [0.0, 1e-4, 5e-3, 0.08, 0.35, 1.0];
const GL_NODES: usize = 10;
/// Distance (in cell diameters, measured from the centroid) beyond which
/// the stored cell rule is used directly.
const NEAR_THRESHOLD: f64 = 2.0;
/// Separation (in sub-cell diameters) at which recursive bisection stops.
const SEP_FACTOR: f64 = 4.0;
const MAX_DEPTH: usize = 30;

/// Quadrisection depth of the face rule in the 3D Duffy transform.
const FACE_DEPTH: usize = 2;

/// Kernel integration engine for one spatial dimension.
#[derive(Clone, Debug)]
pub struct KernelEval {
    dim: usize,
    /// Declared absolute tolerance per cell integral.
    pub tol: f64,
    radial: Vec<(f64, f64)>,
    angular: Vec<(f64, f64)>,
    face_pts: Vec<([f64; 3], f64)>,
    leaf_rule: QuadratureRule,
}

impl KernelEval {
    pub fn new(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        let (gx, gw) = gauss_legendre(GL_NODES);
        let radial = if dim == 2 {
            // The radial integrand carries the u·log u collapse of the
            // logarithmic kernel; graded panels resolve it.
            let mut r = Vec::with_capacity((RADIAL_PANELS.len() - 1) * GL_NODES);
            for pair in RADIAL_PANELS.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                for (x, w) in gx.iter().zip(gw.iter()) {
                    r.push((a + (b - a) * x, w * (b - a)));
                }
            }
            r
        } else {
            // In 3D the u² Jacobian cancels the kernel singularity, so the
            // radial integrand is smooth and one panel suffices.
            gx.iter().copied().zip(gw.iter().copied()).collect()
        };
        let angular = gx.iter().copied().zip(gw.iter().copied()).collect();
        Ok(KernelEval {
            dim,
            tol: 1e-8,
            radial,
            angular,
            face_pts: quadrisected_face_rule(FACE_DEPTH)?,
            leaf_rule: QuadratureRule::simplex(dim, 4)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the target y needs singular treatment for cell c.
    pub fn is_near(&self, mesh: &VolumeMesh, c: usize, y: &Point) -> bool {
        let diam = mesh.cell_diameter(c);
        (mesh.cell_centroid(c) - y).norm() <= NEAR_THRESHOLD * diam
    }

    /// ∫_c w(x) Γ(x − y) dx.
    pub fn cell_weighted_gamma(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        w: impl Fn(&Point) -> f64,
    ) -> f64 {
        let dim = self.dim;
        self.integrate_cell::<1>(mesh, c, y, &|x| {
            let d = x - y;
            [w(x) * gamma_unchecked(dim, d.norm())]
        })[0]
    }

    /// ∫_c w(x) ∇Γ(x − y) dx as a vector.
    pub fn cell_weighted_grad_gamma(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        w: impl Fn(&Point) -> f64,
    ) -> Point {
        let dim = self.dim;
        let out = self.integrate_cell::<3>(mesh, c, y, &|x| {
            let d = x - y;
            let g = grad_gamma_unchecked(dim, &d, d.norm()) * w(x);
            [g.x, g.y, g.z]
        });
        Point::new(out[0], out[1], out[2])
    }

    /// ∫_c F(x) · ∇Γ(x − y) dx for a vector field F.
    pub fn cell_vector_grad_gamma(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        f: impl Fn(&Point) -> Point,
    ) -> f64 {
        let dim = self.dim;
        self.integrate_cell::<1>(mesh, c, y, &|x| {
            let d = x - y;
            [f(x).dot(&grad_gamma_unchecked(dim, &d, d.norm()))]
        })[0]
    }

    /// ∫_c w(x) λ_p(x) Γ(x − y) dx for the cell's P1 hat functions,
    /// indexed like the cell's local vertices (entry 3 unused in 2D).
    pub fn cell_weighted_gamma_p1(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        w: impl Fn(&Point) -> f64,
    ) -> [f64; 4] {
        let dim = self.dim;
        let grads: Vec<Point> = mesh.cell_p1_gradients(c).to_vec();
        let v0 = *mesh.vertex(mesh.cell(c)[0]);
        self.integrate_cell::<4>(mesh, c, y, &|x| {
            let d = x - y;
            let g = w(x) * gamma_unchecked(dim, d.norm());
            let rel = x - v0;
            let mut lam = [0.0f64; 4];
            let mut rest = 0.0;
            for p in 1..=dim {
                let l = grads[p].dot(&rel);
                lam[p] = l;
                rest += l;
            }
            lam[0] = 1.0 - rest;
            [g * lam[0], g * lam[1], g * lam[2], g * lam[3]]
        })
    }

    /// ∫_c (Hess Γ)(x − y) F(x) dx; y must not lie inside the cell.
    pub fn cell_vector_hess_gamma(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        f: impl Fn(&Point) -> Point,
    ) -> Result<Point> {
        if self.locate_in_simplex(&mesh.cell_vertices(c), y) {
            return Err(Error::Quadrature(
                "Hessian kernel moment requested with the target inside the cell".into(),
            ));
        }
        let dim = self.dim;
        let out = self.integrate_cell::<3>(mesh, c, y, &|x| {
            let d = x - y;
            let h = hess_gamma_unchecked(dim, &d, d.norm()) * f(x);
            [h.x, h.y, h.z]
        });
        Ok(Point::new(out[0], out[1], out[2]))
    }

    /// ∫_Ω q(x) Γ(x − y) dx for a cellwise (P0) or nodal (P1) density.
    pub fn newtonian_potential(
        &self,
        mesh: &VolumeMesh,
        density: &ScalarDensity,
        y: &Point,
    ) -> Result<f64> {
        density.validate(mesh)?;
        let mut acc = 0.0;
        for c in 0..mesh.num_cells() {
            acc += match density {
                ScalarDensity::Cellwise(v) => self.cell_weighted_gamma(mesh, c, y, |_| v[c]),
                ScalarDensity::Nodal(v) => {
                    let affine = NodalAffine::on_cell(mesh, c, v);
                    self.cell_weighted_gamma(mesh, c, y, |x| affine.eval(x))
                }
            };
        }
        Ok(acc)
    }

    /// ∫_Ω F(x) · ∇Γ(x − y) dx for a cellwise-constant vector density.
    pub fn newtonian_grad_potential(
        &self,
        mesh: &VolumeMesh,
        density: &VectorDensity,
        y: &Point,
    ) -> Result<f64> {
        density.validate(mesh)?;
        let mut acc = 0.0;
        for c in 0..mesh.num_cells() {
            let VectorDensity::Cellwise(vals) = density;
            let fc = vals[c];
            acc += self.cell_vector_grad_gamma(mesh, c, y, |_| fc);
        }
        Ok(acc)
    }

    /// ∇_y of [`Self::newtonian_grad_potential`]; equals −∫ HessΓ(x−y) F dx.
    pub fn grad_newtonian_grad_potential(
        &self,
        mesh: &VolumeMesh,
        density: &VectorDensity,
        y: &Point,
    ) -> Result<Point> {
        density.validate(mesh)?;
        let mut acc = Point::zeros();
        for c in 0..mesh.num_cells() {
            let VectorDensity::Cellwise(vals) = density;
            let fc = vals[c];
            acc -= self.cell_vector_hess_gamma(mesh, c, y, |_| fc)?;
        }
        Ok(acc)
    }

    fn integrate_cell<const K: usize>(
        &self,
        mesh: &VolumeMesh,
        c: usize,
        y: &Point,
        f: &dyn Fn(&Point) -> [f64; K],
    ) -> [f64; K] {
        let diam = mesh.cell_diameter(c);
        let dist = (mesh.cell_centroid(c) - y).norm();
        if dist > NEAR_THRESHOLD * diam {
            let mut acc = [0.0f64; K];
            for (x, w) in mesh
                .cell_quad_points(c)
                .iter()
                .zip(mesh.cell_quad_weights(c))
            {
                accumulate(&mut acc, &f(x), *w);
            }
            return acc;
        }
        let vs = mesh.cell_vertices(c);
        self.integrate_near(&vs, y, f)
    }

    fn integrate_near<const K: usize>(
        &self,
        vs: &[Point],
        y: &Point,
        f: &dyn Fn(&Point) -> [f64; K],
    ) -> [f64; K] {
        if self.locate_in_simplex(vs, y) {
            // Split at y: one apex simplex per facet; slivers vanish when y
            // lies on a facet and are skipped.
            let total = simplex_measure(self.dim, vs);
            let mut acc = [0.0f64; K];
            for skip in 0..vs.len() {
                let facet: Vec<Point> = vs
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &p)| p)
                    .collect();
                let mut sub = vec![*y];
                sub.extend_from_slice(&facet);
                if simplex_measure(self.dim, &sub) > 1e-12 * total {
                    let part = self.duffy_apex(y, &facet, f);
                    accumulate(&mut acc, &part, 1.0);
                }
            }
            return acc;
        }
        self.integrate_subdivided(vs, y, f, 0)
    }

    fn integrate_subdivided<const K: usize>(
        &self,
        vs: &[Point],
        y: &Point,
        f: &dyn Fn(&Point) -> [f64; K],
        depth: usize,
    ) -> [f64; K] {
        let diam = simplex_diameter(vs);
        let dist = self.point_simplex_distance(vs, y);
        if dist >= SEP_FACTOR * diam || depth >= MAX_DEPTH || diam < 1e-14 {
            let measure = simplex_measure(self.dim, vs);
            let mut acc = [0.0f64; K];
            for q in 0..self.leaf_rule.len() {
                let x = self.leaf_rule.point(q, vs);
                accumulate(&mut acc, &f(&x), self.leaf_rule.weights()[q] * measure);
            }
            return acc;
        }
        // Bisect the longest edge.
        let (mut ea, mut eb, mut best) = (0usize, 1usize, 0.0f64);
        for a in 0..vs.len() {
            for b in (a + 1)..vs.len() {
                let l = (vs[a] - vs[b]).norm();
                if l > best {
                    best = l;
                    ea = a;
                    eb = b;
                }
            }
        }
        let mid = 0.5 * (vs[ea] + vs[eb]);
        let mut left = vs.to_vec();
        left[ea] = mid;
        let mut right = vs.to_vec();
        right[eb] = mid;
        let mut acc = self.integrate_subdivided(&left, y, f, depth + 1);
        let other = self.integrate_subdivided(&right, y, f, depth + 1);
        accumulate(&mut acc, &other, 1.0);
        acc
    }

    fn duffy_apex<const K: usize>(
        &self,
        apex: &Point,
        facet: &[Point],
        f: &dyn Fn(&Point) -> [f64; K],
    ) -> [f64; K] {
        let mut acc = [0.0f64; K];
        if self.dim == 2 {
            let (b, c) = (facet[0], facet[1]);
            let e1 = b - apex;
            let e2 = c - apex;
            let two_area = (e1.x * e2.y - e1.y * e2.x).abs();
            // The angular integrand varies fastest where the ray direction
            // comes closest to the facet; split there.
            let d = e2 - e1;
            let dd = d.norm_squared();
            let vstar = if dd > 0.0 {
                (-e1.dot(&d) / dd).clamp(0.0, 1.0)
            } else {
                0.5
            };
            let segs: &[(f64, f64)] = if vstar > 0.01 && vstar < 0.99 {
                &[(0.0, vstar), (vstar, 1.0)]
            } else {
                &[(0.0, 1.0)]
            };
            for &(u, wu) in &self.radial {
                for &(lo, hi) in segs {
                    for &(v0, wv) in &self.angular {
                        let v = lo + (hi - lo) * v0;
                        let x = apex + u * ((1.0 - v) * e1 + v * e2);
                        accumulate(&mut acc, &f(&x), wu * wv * (hi - lo) * u * two_area);
                    }
                }
            }
        } else {
            let (b, c, d) = (facet[0], facet[1], facet[2]);
            let e1 = b - apex;
            let e2 = c - apex;
            let e3 = d - apex;
            let six_vol = e1.dot(&e2.cross(&e3)).abs();
            for &(u, wu) in &self.radial {
                for &(lam, wq) in &self.face_pts {
                    let dir = lam[0] * e1 + lam[1] * e2 + lam[2] * e3;
                    let x = apex + u * dir;
                    // Face weights sum to one over the unit triangle
                    // (measure 1/2), radial factor u² from the collapse.
                    let w = wu * wq * 0.5 * u * u * six_vol;
                    accumulate(&mut acc, &f(&x), w);
                }
            }
        }
        acc
    }

    fn locate_in_simplex(&self, vs: &[Point], y: &Point) -> bool {
        let total = simplex_measure(self.dim, vs);
        if total <= 0.0 {
            return false;
        }
        let reltol = 1e-9;
        // Barycentric coordinates via sub-simplex measures with signs.
        for k in 0..vs.len() {
            let mut sub = vs.to_vec();
            sub[k] = *y;
            let lambda = signed_measure_ratio(self.dim, &sub, vs, total);
            if lambda < -reltol {
                return false;
            }
        }
        true
    }

    fn point_simplex_distance(&self, vs: &[Point], y: &Point) -> f64 {
        if self.locate_in_simplex(vs, y) {
            return 0.0;
        }
        if self.dim == 2 {
            segment_distance(y, &vs[0], &vs[1])
                .min(segment_distance(y, &vs[1], &vs[2]))
                .min(segment_distance(y, &vs[0], &vs[2]))
        } else {
            let mut d = f64::INFINITY;
            for skip in 0..4 {
                let face: Vec<&Point> = vs
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, p)| p)
                    .collect();
                d = d.min(triangle_distance(y, face[0], face[1], face[2]));
            }
            d
        }
    }
}

/// Degree-4 triangle rule applied on a 4^depth quadrisection of the unit
/// triangle; returned barycentric points refer to the original vertices and
/// the weights sum to one.
fn quadrisected_face_rule(depth: usize) -> Result<Vec<([f64; 3], f64)>> {
    let rule = QuadratureRule::simplex(2, 4)?;
    type Bary = [[f64; 3]; 3];
    let mut tris: Vec<Bary> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    let mid = |p: &[f64; 3], q: &[f64; 3]| {
        [
            0.5 * (p[0] + q[0]),
            0.5 * (p[1] + q[1]),
            0.5 * (p[2] + q[2]),
        ]
    };
    for _ in 0..depth {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [p, q, r] in &tris {
            let pq = mid(p, q);
            let qr = mid(q, r);
            let rp = mid(r, p);
            next.push([*p, pq, rp]);
            next.push([pq, *q, qr]);
            next.push([rp, qr, *r]);
            next.push([pq, qr, rp]);
        }
        tris = next;
    }
    let frac = 1.0 / tris.len() as f64;
    let mut out = Vec::with_capacity(tris.len() * rule.len());
    for [p, q, r] in &tris {
        for k in 0..rule.len() {
            let lam = rule.bary(k);
            let mut b = [0.0f64; 3];
            for a in 0..3 {
                b[a] = lam[0] * p[a] + lam[1] * q[a] + lam[2] * r[a];
            }
            out.push((b, rule.weights()[k] * frac));
        }
    }
    Ok(out)
}

#[inline]
fn accumulate<const K: usize>(acc: &mut [f64; K], v: &[f64; K], w: f64) {
    for (a, b) in acc.iter_mut().zip(v.iter()) {
        *a += w * b;
    }
}

fn simplex_measure(dim: usize, vs: &[Point]) -> f64 {
    signed_simplex_measure(dim, vs).abs()
}

fn signed_simplex_measure(dim: usize, vs: &[Point]) -> f64 {
    if dim == 2 {
        let a = vs[1] - vs[0];
        let b = vs[2] - vs[0];
        0.5 * (a.x * b.y - a.y * b.x)
    } else {
        let a = vs[1] - vs[0];
        let b = vs[2] - vs[0];
        let c = vs[3] - vs[0];
        a.dot(&b.cross(&c)) / 6.0
    }
}

fn signed_measure_ratio(dim: usize, sub: &[Point], whole: &[Point], total: f64) -> f64 {
    let s = signed_simplex_measure(dim, sub);
    let w = signed_simplex_measure(dim, whole);
    if w == 0.0 {
        return -1.0;
    }
    let _ = total;
    s / w
}

fn segment_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (x - (a + t * ab)).norm()
}

fn triangle_distance(x: &Point, a: &Point, b: &Point, c: &Point) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    if nn == 0.0 {
        return segment_distance(x, a, b);
    }
    let d = (x - a).dot(&n) / nn;
    let proj = x - d * n;
    let v0 = b - a;
    let v1 = c - a;
    let v2 = proj - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    if v >= 0.0 && w >= 0.0 && v + w <= 1.0 {
        (x - proj).norm()
    } else {
        segment_distance(x, a, b)
            .min(segment_distance(x, b, c))
            .min(segment_distance(x, a, c))
    }
}

/// Affine extension of a P1 nodal field over one cell.
struct NodalAffine {
    base: f64,
    grad: Point,
    origin: Point,
}

impl NodalAffine {
    fn on_cell(mesh: &VolumeMesh, c: usize, nodal: &[f64]) -> Self {
        let origin = *mesh.vertex(mesh.cell(c)[0]);
        NodalAffine {
            base: nodal[mesh.cell(c)[0]],
            grad: mesh.p1_gradient(c, nodal),
            origin,
        }
    }

    #[inline]
    fn eval(&self, x: &Point) -> f64 {
        self.base + self.grad.dot(&(x - self.origin))
    }
}

/// Scalar density attached to a mesh.
pub enum ScalarDensity<'a> {
    Cellwise(&'a [f64]),
    Nodal(&'a [f64]),
}

impl ScalarDensity<'_> {
    fn validate(&self, mesh: &VolumeMesh) -> Result<()> {
        let (len, want, what) = match self {
            ScalarDensity::Cellwise(v) => (v.len(), mesh.num_cells(), "cells"),
            ScalarDensity::Nodal(v) => (v.len(), mesh.num_vertices(), "vertices"),
        };
        if len != want {
            return Err(Error::Quadrature(format!(
                "density has {len} values for {want} {what}"
            )));
        }
        Ok(())
    }
}

/// Cellwise-constant vector density.
pub enum VectorDensity<'a> {
    Cellwise(&'a [Point]),
}

impl VectorDensity<'_> {
    fn validate(&self, mesh: &VolumeMesh) -> Result<()> {
        let VectorDensity::Cellwise(v) = self;
        if v.len() != mesh.num_cells() {
            return Err(Error::Quadrature(format!(
                "vector density has {} values for {} cells",
                v.len(),
                mesh.num_cells()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::{unit_ball_mesh, unit_disk_mesh};
    use approx::assert_relative_eq;

    /// Uniform unit-disk density: Γ-potential is (1 − r²)/4 inside and
    /// −ln(r)/2 outside.
    fn disk_potential_exact(r: f64) -> f64 {
        if r <= 1.0 {
            (1.0 - r * r) / 4.0
        } else {
            -r.ln() / 2.0
        }
    }

    #[test]
    fn disk_potential_outside() {
        let mesh = unit_disk_mesh(24).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let ones = vec![1.0; mesh.num_cells()];
        let y = Point::new(2.0, 0.0, 0.0);
        let got = eval
            .newtonian_potential(&mesh, &ScalarDensity::Cellwise(&ones), &y)
            .unwrap();
        assert_relative_eq!(got, disk_potential_exact(2.0), max_relative = 5e-4);
    }

    #[test]
    fn disk_potential_inside_hits_all_quadrature_paths() {
        let mesh = unit_disk_mesh(24).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let ones = vec![1.0; mesh.num_cells()];
        // On a vertex ring, inside cells, near edges: exercised together.
        for y in [
            Point::new(0.3, 0.1, 0.0),
            Point::new(0.0, 0.0, 0.0),
            Point::new(0.5, 0.5, 0.0),
        ] {
            let got = eval
                .newtonian_potential(&mesh, &ScalarDensity::Cellwise(&ones), &y)
                .unwrap();
            assert_relative_eq!(
                got,
                disk_potential_exact(y.norm()),
                max_relative = 2e-3,
                epsilon = 2e-4
            );
        }
    }

    #[test]
    fn polarized_disk_grad_potential() {
        // ∫_B e1·∇Γ(x−y) dx = −∂_{y1} V(y) = y1/(2|y|²) outside, y1/2 inside.
        let mesh = unit_disk_mesh(24).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let e1: Vec<Point> = vec![Point::new(1.0, 0.0, 0.0); mesh.num_cells()];
        let y_out = Point::new(3.0, 0.0, 0.0);
        let got_out = eval
            .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &y_out)
            .unwrap();
        assert_relative_eq!(got_out, 1.0 / 6.0, max_relative = 1e-3);
        let y_in = Point::new(0.3, 0.1, 0.0);
        let got_in = eval
            .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &y_in)
            .unwrap();
        assert_relative_eq!(got_in, 0.15, max_relative = 3e-3);
    }

    #[test]
    fn ball_potential_matches_shell_theorem() {
        let mesh = unit_ball_mesh(4, 2).unwrap();
        let eval = KernelEval::new(3).unwrap();
        let ones = vec![1.0; mesh.num_cells()];
        let y = Point::new(3.0, 0.0, 0.0);
        let got = eval
            .newtonian_potential(&mesh, &ScalarDensity::Cellwise(&ones), &y)
            .unwrap();
        // Exterior potential equals total mass × Γ(y); the mesh carries the
        // polyhedral volume, so compare against that mass.
        let mass = mesh.total_measure();
        assert_relative_eq!(
            got,
            mass / (4.0 * std::f64::consts::PI * 3.0),
            max_relative = 1e-3
        );
        // And the ideal 1/9 within the tessellation volume error.
        assert_relative_eq!(got, 1.0 / 9.0, max_relative = 0.1);
    }

    #[test]
    fn ball_potential_inside() {
        let mesh = unit_ball_mesh(5, 3).unwrap();
        let eval = KernelEval::new(3).unwrap();
        let ones = vec![1.0; mesh.num_cells()];
        let y = Point::new(0.2, 0.1, -0.1, );
        let got = eval
            .newtonian_potential(&mesh, &ScalarDensity::Cellwise(&ones), &y)
            .unwrap();
        let r = y.norm();
        assert_relative_eq!(got, 0.5 - r * r / 6.0, max_relative = 2e-2);
    }

    #[test]
    fn singular_cell_integral_converges_under_refinement() {
        // One triangle with the target at a vertex, inside, and on an edge.
        // Splitting the triangle in four and re-integrating rearranges the
        // whole singular decomposition, so agreement is a genuine check;
        // the brute-force centroid sum bounds the absolute value loosely.
        let vs = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.2, 0.0),
            Point::new(0.3, 0.9, 0.0),
        ];
        let mesh = VolumeMesh::new(2, vs.to_vec(), vec![0, 1, 2]).unwrap();
        let ab = 0.5 * (vs[0] + vs[1]);
        let bc = 0.5 * (vs[1] + vs[2]);
        let ca = 0.5 * (vs[2] + vs[0]);
        let split = VolumeMesh::new(
            2,
            vec![vs[0], vs[1], vs[2], ab, bc, ca],
            vec![0, 3, 5, 3, 1, 4, 5, 4, 2, 3, 4, 5],
        )
        .unwrap();
        let eval = KernelEval::new(2).unwrap();
        let weight = |x: &Point| 1.0 + x.x + 0.5 * x.y;
        for y in [
            Point::new(0.0, 0.0, 0.0),
            Point::new(0.4, 0.35, 0.0),
            Point::new(0.65, 0.55, 0.0),
        ] {
            let got = eval.cell_weighted_gamma(&mesh, 0, &y, weight);
            let refined: f64 = (0..split.num_cells())
                .map(|c| eval.cell_weighted_gamma(&split, c, &y, weight))
                .sum();
            assert_relative_eq!(got, refined, max_relative = 1e-9);
            let brute = brute_force_gamma(&vs, &y, weight);
            assert_relative_eq!(got, brute, max_relative = 5e-6);
        }
    }

    fn brute_force_gamma(vs: &[Point; 3], y: &Point, w: impl Fn(&Point) -> f64) -> f64 {
        // Uniform 4^k subdivision with centroid evaluation; the integrand is
        // integrable so this converges (slowly but reliably).
        let mut tris = vec![[vs[0], vs[1], vs[2]]];
        for _ in 0..9 {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for t in &tris {
                let ab = 0.5 * (t[0] + t[1]);
                let bc = 0.5 * (t[1] + t[2]);
                let ca = 0.5 * (t[2] + t[0]);
                next.push([t[0], ab, ca]);
                next.push([ab, t[1], bc]);
                next.push([ca, bc, t[2]]);
                next.push([ab, bc, ca]);
            }
            tris = next;
        }
        let mut acc = 0.0;
        for t in &tris {
            let centroid = (t[0] + t[1] + t[2]) / 3.0;
            let a = t[1] - t[0];
            let b = t[2] - t[0];
            let area = 0.5 * (a.x * b.y - a.y * b.x).abs();
            let d = (centroid - y).norm();
            if d > 0.0 {
                acc += area * w(&centroid) * gamma_unchecked(2, d);
            }
        }
        acc
    }

    #[test]
    fn gradient_moment_antisymmetry() {
        // For a centrally symmetric cell pair and odd kernel, the moments
        // at ±y agree up to sign.
        let mesh = unit_disk_mesh(8).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let e1: Vec<Point> = vec![Point::new(1.0, 0.0, 0.0); mesh.num_cells()];
        let y = Point::new(1.7, 0.4, 0.0);
        let a = eval
            .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &y)
            .unwrap();
        let b = eval
            .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &(-y))
            .unwrap();
        assert_relative_eq!(a, -b, max_relative = 1e-6, epsilon = 1e-10);
    }

    #[test]
    fn hessian_moment_matches_difference_quotient() {
        let mesh = unit_disk_mesh(12).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let e1: Vec<Point> = vec![Point::new(1.0, 0.0, 0.0); mesh.num_cells()];
        let y = Point::new(1.8, 0.3, 0.0);
        let g = eval
            .grad_newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &y)
            .unwrap();
        let h = 1e-5;
        for axis in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[axis] += h;
            ym[axis] -= h;
            let fp = eval
                .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &yp)
                .unwrap();
            let fm = eval
                .newtonian_grad_potential(&mesh, &VectorDensity::Cellwise(&e1), &ym)
                .unwrap();
            assert_relative_eq!(g[axis], (fp - fm) / (2.0 * h), max_relative = 1e-4);
        }
        // Inside a cell the Hessian moment must refuse.
        let y_in = mesh.cell_centroid(0);
        let bad = eval.cell_vector_hess_gamma(&mesh, 0, &y_in, |_| Point::new(1.0, 0.0, 0.0));
        assert!(bad.is_err());
    }

    #[test]
    fn p1_hat_moments_sum_to_plain_moment() {
        let mesh = unit_disk_mesh(6).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let y = Point::new(0.21, 0.13, 0.0);
        for c in [0usize, 5, 20] {
            let parts = eval.cell_weighted_gamma_p1(&mesh, c, &y, |x| 1.0 + x.y);
            let whole = eval.cell_weighted_gamma(&mesh, c, &y, |x| 1.0 + x.y);
            let sum: f64 = parts[..3].iter().sum();
            assert_relative_eq!(sum, whole, max_relative = 1e-10, epsilon = 1e-13);
        }
    }

    #[test]
    fn density_length_mismatch_is_rejected() {
        let mesh = unit_disk_mesh(3).unwrap();
        let eval = KernelEval::new(2).unwrap();
        let short = vec![1.0; 3];
        let y = Point::new(2.0, 0.0, 0.0);
        assert!(eval
            .newtonian_potential(&mesh, &ScalarDensity::Cellwise(&short), &y)
            .is_err());
    }
}

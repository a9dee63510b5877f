//! Inclusion contrast profiles D₁ (or q₁) on the reference domain B.

use crate::error::{Error, Result};
use crate::meshgeom::{Point, VolumeMesh};
use crate::Fnv64;
use std::sync::Arc;

/// Smoothness class of the contrast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    SmoothCompact,
    Jump,
}

/// Closed-form profile families with analytic derivatives.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFn {
    Constant(f64),
    /// a·(1 − (r/R)²)³ inside radius R, zero outside; C² at the edge.
    RadialBump { amplitude: f64, radius: f64 },
    /// a·(1 − ((r−c)/w)²)³ in the annulus |r−c| < w, zero outside.
    RadialShell {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Bump of radius R centered away from the origin.
    OffsetBump {
        amplitude: f64,
        center: [f64; 3],
        radius: f64,
    },
    /// Quintic-smoothstep mollification of a·1_{r<R}, transition width 2w.
    SmoothedDisk {
        amplitude: f64,
        radius: f64,
        width: f64,
    },
    Sum(Vec<ProfileFn>),
    Scaled { factor: f64, inner: Box<ProfileFn> },
    /// Liouville potential Δ√(b + f(x)) / √(b + f(x)) induced by a contrast f
    /// over a constant background b.
    ///
    /// The value is exact, assembled from the inner profile's analytic
    /// gradient and Laplacian. Derivatives of the potential itself would
    /// need third and fourth derivatives of the contrast, so `grad` and
    /// `laplacian` fall back to central differences of the exact value.
    Bohm {
        background: f64,
        dim: usize,
        inner: Box<ProfileFn>,
    },
}

/// a(1−s)³ with s = |x−c|²/R²; returns (value, d/ds, d²/ds²) at s.
fn bump_shape(amplitude: f64, s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let t = 1.0 - s;
    (amplitude * t * t * t, -3.0 * amplitude * t * t, 6.0 * amplitude * t)
}

impl ProfileFn {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            ProfileFn::Constant(a) => *a,
            ProfileFn::RadialBump { amplitude, radius } => {
                bump_shape(*amplitude, x.norm_squared() / (radius * radius)).0
            }
            ProfileFn::RadialShell {
                amplitude,
                center,
                width,
            } => {
                let s = (x.norm() - center) / width;
                bump_shape(*amplitude, s * s).0
            }
            ProfileFn::OffsetBump {
                amplitude,
                center,
                radius,
            } => {
                let d = x - Point::new(center[0], center[1], center[2]);
                bump_shape(*amplitude, d.norm_squared() / (radius * radius)).0
            }
            ProfileFn::SmoothedDisk {
                amplitude,
                radius,
                width,
            } => {
                let r = x.norm();
                if r <= radius - width {
                    *amplitude
                } else if r >= radius + width {
                    0.0
                } else {
                    let t = (r - (radius - width)) / (2.0 * width);
                    amplitude * (1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t)))
                }
            }
            ProfileFn::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
            ProfileFn::Scaled { factor, inner } => factor * inner.eval(x),
            ProfileFn::Bohm {
                background,
                dim,
                inner,
            } => {
                // Δ√w / √w = Δf/(2w) − |∇f|²/(4w²) for w = b + f.
                let w = background + inner.eval(x);
                let g = inner.grad(x);
                let lap = inner.laplacian(x, *dim);
                lap / (2.0 * w) - g.norm_squared() / (4.0 * w * w)
            }
        }
    }

    pub fn grad(&self, x: &Point) -> Point {
        match self {
            ProfileFn::Constant(_) => Point::zeros(),
            ProfileFn::RadialBump { amplitude, radius } => {
                let rr = radius * radius;
                let (_, d1, _) = bump_shape(*amplitude, x.norm_squared() / rr);
                d1 * 2.0 / rr * x
            }
            ProfileFn::RadialShell {
                amplitude,
                center,
                width,
            } => {
                let r = x.norm();
                if r == 0.0 {
                    return Point::zeros();
                }
                let s = (r - center) / width;
                let (_, d1, _) = bump_shape(*amplitude, s * s);
                d1 * 2.0 * s / width * (x / r)
            }
            ProfileFn::OffsetBump {
                amplitude,
                center,
                radius,
            } => {
                let d = x - Point::new(center[0], center[1], center[2]);
                let rr = radius * radius;
                let (_, d1, _) = bump_shape(*amplitude, d.norm_squared() / rr);
                d1 * 2.0 / rr * d
            }
            ProfileFn::SmoothedDisk {
                amplitude,
                radius,
                width,
            } => {
                let r = x.norm();
                if r <= radius - width || r >= radius + width || r == 0.0 {
                    return Point::zeros();
                }
                let t = (r - (radius - width)) / (2.0 * width);
                let dv = -amplitude * 30.0 * t * t * (1.0 - t) * (1.0 - t) / (2.0 * width);
                dv * (x / r)
            }
            ProfileFn::Sum(parts) => parts.iter().map(|p| p.grad(x)).sum(),
            ProfileFn::Scaled { factor, inner } => *factor * inner.grad(x),
            ProfileFn::Bohm { dim, .. } => {
                let h = 1e-5;
                let mut g = Point::zeros();
                for axis in 0..*dim {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    g[axis] = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
                }
                g
            }
        }
    }

    pub fn laplacian(&self, x: &Point, dim: usize) -> f64 {
        match self {
            ProfileFn::Constant(_) => 0.0,
            ProfileFn::RadialBump { amplitude, radius } => {
                let rr = radius * radius;
                let s = x.norm_squared() / rr;
                let (_, d1, d2) = bump_shape(*amplitude, s);
                // Δf(s(|x|²)) with ∇s = 2x/R², Δs = 2d/R².
                d2 * 4.0 * s / rr + d1 * 2.0 * dim as f64 / rr
            }
            ProfileFn::RadialShell {
                amplitude,
                center,
                width,
            } => {
                let r = x.norm();
                if r == 0.0 {
                    return 0.0;
                }
                let s = (r - center) / width;
                let (_, d1, d2) = bump_shape(*amplitude, s * s);
                // f(r) with f_r = d1·2s/w: Δ = f_rr + (d−1)/r·f_r.
                let fr = d1 * 2.0 * s / width;
                let frr = (d2 * 4.0 * s * s + d1 * 2.0) / (width * width);
                frr + (dim as f64 - 1.0) / r * fr
            }
            ProfileFn::OffsetBump {
                amplitude,
                center,
                radius,
            } => {
                let d = x - Point::new(center[0], center[1], center[2]);
                let rr = radius * radius;
                let s = d.norm_squared() / rr;
                let (_, d1, d2) = bump_shape(*amplitude, s);
                d2 * 4.0 * s / rr + d1 * 2.0 * dim as f64 / rr
            }
            ProfileFn::SmoothedDisk {
                amplitude,
                radius,
                width,
            } => {
                let r = x.norm();
                if r <= radius - width || r >= radius + width || r == 0.0 {
                    return 0.0;
                }
                let h = 2.0 * width;
                let t = (r - (radius - width)) / h;
                let st = t * (1.0 - t);
                let fr = -amplitude * 30.0 * st * st / h;
                let frr = -amplitude * 60.0 * st * (1.0 - 2.0 * t) / (h * h);
                frr + (dim as f64 - 1.0) / r * fr
            }
            ProfileFn::Sum(parts) => parts.iter().map(|p| p.laplacian(x, dim)).sum(),
            ProfileFn::Scaled { factor, inner } => factor * inner.laplacian(x, dim),
            ProfileFn::Bohm { .. } => {
                let h = 1e-4;
                let center = self.eval(x);
                let mut acc = 0.0;
                for axis in 0..dim {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    acc += (self.eval(&xp) - 2.0 * center + self.eval(&xm)) / (h * h);
                }
                acc
            }
        }
    }

    fn hash_into(&self, h: &mut Fnv64) {
        match self {
            ProfileFn::Constant(a) => {
                h.write(b"const");
                h.write_f64(*a);
            }
            ProfileFn::RadialBump { amplitude, radius } => {
                h.write(b"rbump");
                h.write_f64(*amplitude);
                h.write_f64(*radius);
            }
            ProfileFn::RadialShell {
                amplitude,
                center,
                width,
            } => {
                h.write(b"rshell");
                h.write_f64(*amplitude);
                h.write_f64(*center);
                h.write_f64(*width);
            }
            ProfileFn::OffsetBump {
                amplitude,
                center,
                radius,
            } => {
                h.write(b"obump");
                h.write_f64(*amplitude);
                for c in center {
                    h.write_f64(*c);
                }
                h.write_f64(*radius);
            }
            ProfileFn::SmoothedDisk {
                amplitude,
                radius,
                width,
            } => {
                h.write(b"sdisk");
                h.write_f64(*amplitude);
                h.write_f64(*radius);
                h.write_f64(*width);
            }
            ProfileFn::Sum(parts) => {
                h.write(b"sum");
                h.write_usize(parts.len());
                for p in parts {
                    p.hash_into(h);
                }
            }
            ProfileFn::Scaled { factor, inner } => {
                h.write(b"scaled");
                h.write_f64(*factor);
                inner.hash_into(h);
            }
            ProfileFn::Bohm {
                background,
                dim,
                inner,
            } => {
                h.write(b"bohm");
                h.write_f64(*background);
                h.write_usize(*dim);
                inner.hash_into(h);
            }
        }
    }
}

#[derive(Clone, Debug)]
enum ProfileValues {
    Cellwise(Vec<f64>),
    Nodal(Vec<f64>),
    Analytic(ProfileFn),
}

/// A contrast profile attached to a reference mesh of B.
#[derive(Clone, Debug)]
pub struct InclusionProfile {
    mesh: Arc<VolumeMesh>,
    values: ProfileValues,
    regularity: Regularity,
    hash: u64,
}

impl InclusionProfile {
    pub fn analytic(mesh: Arc<VolumeMesh>, f: ProfileFn, regularity: Regularity) -> Self {
        let mut h = Fnv64::new();
        h.write_u64(mesh.hash());
        f.hash_into(&mut h);
        InclusionProfile {
            mesh,
            values: ProfileValues::Analytic(f),
            regularity,
            hash: h.finish(),
        }
    }

    pub fn cellwise(mesh: Arc<VolumeMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_cells() {
            return Err(Error::Config(format!(
                "profile has {} cell values for {} cells",
                values.len(),
                mesh.num_cells()
            )));
        }
        let mut h = Fnv64::new();
        h.write_u64(mesh.hash());
        h.write(b"cellwise");
        for v in &values {
            h.write_f64(*v);
        }
        Ok(InclusionProfile {
            mesh,
            values: ProfileValues::Cellwise(values),
            regularity: Regularity::Jump,
            hash: h.finish(),
        })
    }

    pub fn nodal(mesh: Arc<VolumeMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::Config(format!(
                "profile has {} nodal values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        let mut h = Fnv64::new();
        h.write_u64(mesh.hash());
        h.write(b"nodal");
        for v in &values {
            h.write_f64(*v);
        }
        Ok(InclusionProfile {
            mesh,
            values: ProfileValues::Nodal(values),
            regularity: Regularity::SmoothCompact,
            hash: h.finish(),
        })
    }

    pub fn mesh(&self) -> &Arc<VolumeMesh> {
        &self.mesh
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Profile value at a point x known to lie in cell c.
    pub fn value_at(&self, c: usize, x: &Point) -> f64 {
        match &self.values {
            ProfileValues::Cellwise(v) => v[c],
            ProfileValues::Nodal(v) => {
                let lam = self.mesh.barycentric(c, x);
                self.mesh
                    .cell(c)
                    .iter()
                    .zip(lam.iter())
                    .map(|(vert, l)| v[*vert] * l)
                    .sum()
            }
            ProfileValues::Analytic(f) => f.eval(x),
        }
    }

    /// Representative cell value (centroid sample).
    pub fn cell_value(&self, c: usize) -> f64 {
        match &self.values {
            ProfileValues::Cellwise(v) => v[c],
            _ => self.value_at(c, &self.mesh.cell_centroid(c)),
        }
    }

    /// Analytic gradient when available.
    pub fn gradient_at(&self, x: &Point) -> Option<Point> {
        match &self.values {
            ProfileValues::Analytic(f) => Some(f.grad(x)),
            _ => None,
        }
    }

    /// Analytic Laplacian when available.
    pub fn laplacian_at(&self, x: &Point) -> Option<f64> {
        match &self.values {
            ProfileValues::Analytic(f) => Some(f.laplacian(x, self.mesh.dim())),
            _ => None,
        }
    }

    pub fn closed_form(&self) -> Option<&ProfileFn> {
        match &self.values {
            ProfileValues::Analytic(f) => Some(f),
            _ => None,
        }
    }

    /// Quadrature integral ∫_B of the profile times a pointwise map.
    pub fn integrate(&self, map: impl Fn(f64) -> f64) -> f64 {
        let mesh = &self.mesh;
        let mut acc = 0.0;
        for c in 0..mesh.num_cells() {
            for (x, w) in mesh
                .cell_quad_points(c)
                .iter()
                .zip(mesh.cell_quad_weights(c))
            {
                acc += w * map(self.value_at(c, x));
            }
        }
        acc
    }

    pub fn integral(&self) -> f64 {
        self.integrate(|v| v)
    }

    pub fn abs_integral(&self) -> f64 {
        self.integrate(|v| v.abs())
    }

    /// Max |value| over quadrature points.
    pub fn linf(&self) -> f64 {
        let mesh = &self.mesh;
        let mut worst = 0.0f64;
        for c in 0..mesh.num_cells() {
            for x in mesh.cell_quad_points(c) {
                worst = worst.max(self.value_at(c, x).abs());
            }
        }
        worst
    }

    /// Min of d0 + value over quadrature points.
    pub fn min_total_coefficient(&self, d0: f64) -> f64 {
        let mesh = &self.mesh;
        let mut low = f64::INFINITY;
        for c in 0..mesh.num_cells() {
            for x in mesh.cell_quad_points(c) {
                low = low.min(d0 + self.value_at(c, x));
            }
        }
        low
    }

    /// Rejects profiles violating D₀(x₀) + D₁ ≥ C₀ > 0; returns the bound.
    pub fn check_positivity(&self, d0: f64) -> Result<f64> {
        let c0 = self.min_total_coefficient(d0);
        if c0 <= 1e-8 * d0 {
            return Err(Error::IllPosed(format!(
                "total coefficient lower bound {c0:.3e} violates positivity"
            )));
        }
        Ok(c0)
    }

    /// Profile scaled by a constant factor.
    pub fn scaled(&self, factor: f64) -> Self {
        match &self.values {
            ProfileValues::Cellwise(v) => InclusionProfile::cellwise(
                Arc::clone(&self.mesh),
                v.iter().map(|x| factor * x).collect(),
            )
            .expect("lengths preserved"),
            ProfileValues::Nodal(v) => InclusionProfile::nodal(
                Arc::clone(&self.mesh),
                v.iter().map(|x| factor * x).collect(),
            )
            .expect("lengths preserved"),
            ProfileValues::Analytic(f) => InclusionProfile::analytic(
                Arc::clone(&self.mesh),
                ProfileFn::Scaled {
                    factor,
                    inner: Box::new(f.clone()),
                },
                self.regularity,
            ),
        }
    }

    /// a + factor·b on the shared mesh.
    pub fn linear_combination(a: &Self, factor: f64, b: &Self) -> Result<Self> {
        if a.mesh.hash() != b.mesh.hash() {
            return Err(Error::Config(
                "profiles live on different meshes".into(),
            ));
        }
        match (a.closed_form(), b.closed_form()) {
            (Some(fa), Some(fb)) => Ok(InclusionProfile::analytic(
                Arc::clone(&a.mesh),
                ProfileFn::Sum(vec![
                    fa.clone(),
                    ProfileFn::Scaled {
                        factor,
                        inner: Box::new(fb.clone()),
                    },
                ]),
                if a.regularity == Regularity::Jump || b.regularity == Regularity::Jump {
                    Regularity::Jump
                } else {
                    Regularity::SmoothCompact
                },
            )),
            _ => {
                let vals: Vec<f64> = (0..a.mesh.num_cells())
                    .map(|c| a.cell_value(c) + factor * b.cell_value(c))
                    .collect();
                InclusionProfile::cellwise(Arc::clone(&a.mesh), vals)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::unit_disk_mesh;
    use approx::assert_relative_eq;

    fn disk() -> Arc<VolumeMesh> {
        Arc::new(unit_disk_mesh(10).unwrap())
    }

    #[test]
    fn radial_bump_derivatives_match_finite_differences() {
        let f = ProfileFn::RadialBump {
            amplitude: 1.5,
            radius: 0.8,
        };
        let x = Point::new(0.31, -0.22, 0.0);
        let h = 1e-5;
        let mut fd_grad = Point::zeros();
        let mut fd_lap = 0.0;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            fd_grad[a] = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            fd_lap += (f.eval(&xp) - 2.0 * f.eval(&x) + f.eval(&xm)) / (h * h);
        }
        assert_relative_eq!(f.grad(&x).x, fd_grad.x, max_relative = 1e-6);
        assert_relative_eq!(f.grad(&x).y, fd_grad.y, max_relative = 1e-6);
        assert_relative_eq!(f.laplacian(&x, 2), fd_lap, max_relative = 1e-4);
    }

    #[test]
    fn shell_and_offset_derivatives_match_finite_differences() {
        let fns = [
            ProfileFn::RadialShell {
                amplitude: -0.7,
                center: 0.6,
                width: 0.25,
            },
            ProfileFn::OffsetBump {
                amplitude: 0.9,
                center: [0.2, -0.1, 0.0],
                radius: 0.5,
            },
            ProfileFn::SmoothedDisk {
                amplitude: 1.0,
                radius: 0.7,
                width: 0.1,
            },
        ];
        let x = Point::new(0.45, 0.35, 0.0);
        let h = 1e-5;
        for f in &fns {
            let mut fd_grad = Point::zeros();
            let mut fd_lap = 0.0;
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                fd_grad[a] = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                fd_lap += (f.eval(&xp) - 2.0 * f.eval(&x) + f.eval(&xm)) / (h * h);
            }
            assert_relative_eq!(f.grad(&x).x, fd_grad.x, max_relative = 1e-5, epsilon = 1e-9);
            assert_relative_eq!(f.grad(&x).y, fd_grad.y, max_relative = 1e-5, epsilon = 1e-9);
            assert_relative_eq!(f.laplacian(&x, 2), fd_lap, max_relative = 1e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn smoothed_disk_is_c2_flat_at_transition_ends() {
        let f = ProfileFn::SmoothedDisk {
            amplitude: 2.0,
            radius: 0.7,
            width: 0.1,
        };
        assert_relative_eq!(f.eval(&Point::new(0.6, 0.0, 0.0)), 2.0);
        assert_relative_eq!(f.eval(&Point::new(0.8, 0.0, 0.0)), 0.0);
        assert_relative_eq!(f.eval(&Point::new(0.7, 0.0, 0.0)), 1.0);
        for r in [0.6, 0.8] {
            let x = Point::new(r, 0.0, 0.0);
            assert_relative_eq!(f.grad(&x).norm(), 0.0, epsilon = 1e-12);
            assert_relative_eq!(f.laplacian(&x, 2), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_profile_integral_is_area() {
        let p = InclusionProfile::analytic(
            disk(),
            ProfileFn::Constant(1.0),
            Regularity::SmoothCompact,
        );
        assert_relative_eq!(p.integral(), std::f64::consts::PI, max_relative = 1e-2);
        assert_relative_eq!(p.linf(), 1.0);
        assert_relative_eq!(p.min_total_coefficient(1.0), 2.0);
        assert!(p.check_positivity(1.0).is_ok());
        assert!(p.scaled(-1.0).check_positivity(1.0).is_err());
    }

    #[test]
    fn nodal_values_interpolate_linearly() {
        let mesh = disk();
        let vals: Vec<f64> = (0..mesh.num_vertices())
            .map(|v| 1.0 + mesh.vertex(v).x)
            .collect();
        let p = InclusionProfile::nodal(Arc::clone(&mesh), vals).unwrap();
        let c = 3;
        let x = mesh.cell_centroid(c);
        assert_relative_eq!(p.value_at(c, &x), 1.0 + x.x, max_relative = 1e-12);
    }

    #[test]
    fn hashes_distinguish_values_and_mesh() {
        let mesh = disk();
        let a = InclusionProfile::analytic(
            Arc::clone(&mesh),
            ProfileFn::Constant(1.0),
            Regularity::SmoothCompact,
        );
        let b = InclusionProfile::analytic(
            Arc::clone(&mesh),
            ProfileFn::Constant(2.0),
            Regularity::SmoothCompact,
        );
        assert_ne!(a.hash(), b.hash());
        let c = a.scaled(2.0);
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn combination_rejects_mismatched_meshes() {
        let a = InclusionProfile::analytic(
            disk(),
            ProfileFn::Constant(1.0),
            Regularity::SmoothCompact,
        );
        let other = Arc::new(unit_disk_mesh(4).unwrap());
        let b = InclusionProfile::analytic(
            other,
            ProfileFn::Constant(1.0),
            Regularity::SmoothCompact,
        );
        assert!(InclusionProfile::linear_combination(&a, 1.0, &b).is_err());
    }
}

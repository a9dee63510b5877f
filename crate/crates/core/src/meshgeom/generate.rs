//! Mesh generators for the reference shapes.
//!
//! The disk mesher places vertices on concentric rings (6k vertices on ring
//! k) and triangulates consecutive rings by an angular sweep, which keeps
//! triangles close to equilateral for near-uniform radii. The ball mesher
//! stacks scaled copies of a subdivided-octahedron sphere triangulation and
//! splits the resulting prisms into tetrahedra with globally consistent
//! diagonals. Polygons are ear-clipped and then uniformly refined.

use crate::error::{Error, Result};
use crate::meshgeom::mesh::{Point, VolumeMesh};
use std::collections::BTreeMap;

/// Shapes understood by [`build_reference_mesh`].
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceShape {
    UnitDisk,
    UnitBall,
    /// Simple polygon given by its vertices in order.
    Polygon(Vec<[f64; 2]>),
}

/// Meshes a reference shape so that every cell has diameter at most 2h.
pub fn build_reference_mesh(shape: &ReferenceShape, h: f64) -> Result<VolumeMesh> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("mesh size h = {h} must be positive")));
    }
    match shape {
        ReferenceShape::UnitDisk => {
            let n = (1.0 / h).ceil().max(2.0) as usize;
            unit_disk_mesh(n)
        }
        ReferenceShape::UnitBall => {
            let shells = (1.0 / h).ceil().max(2.0) as usize;
            let level = ((std::f64::consts::FRAC_PI_2 / h).log2().ceil().max(1.0)) as u32;
            unit_ball_mesh(shells, level)
        }
        ReferenceShape::Polygon(vs) => polygon_mesh(vs, h),
    }
}

/// Unit disk with n uniformly spaced rings.
pub fn unit_disk_mesh(n_rings: usize) -> Result<VolumeMesh> {
    let radii: Vec<f64> = (1..=n_rings).map(|k| k as f64 / n_rings as f64).collect();
    disk_rings(&radii)
}

/// Disk of radius `radii.last()` whose rings sit exactly at the given radii.
///
/// Ring k carries 6k vertices, so a circle of discontinuity or an inclusion
/// interface can be made to coincide with a ring.
pub fn disk_rings(radii: &[f64]) -> Result<VolumeMesh> {
    if radii.is_empty() {
        return Err(Error::Config("at least one ring radius required".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::Config(
            "ring radii must be positive and strictly increasing".into(),
        ));
    }
    let mut vertices = vec![Point::zeros()];
    let mut ring_start = vec![0usize];
    for (k, &r) in radii.iter().enumerate() {
        let count = 6 * (k + 1);
        ring_start.push(vertices.len());
        for m in 0..count {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / count as f64;
            vertices.push(Point::new(r * theta.cos(), r * theta.sin(), 0.0));
        }
    }
    let mut cells = Vec::new();
    for k in 0..radii.len() {
        let (inner, n_inner) = if k == 0 {
            (0usize, 0usize)
        } else {
            (ring_start[k], 6 * k)
        };
        let outer = ring_start[k + 1];
        let n_outer = 6 * (k + 1);
        stitch_rings(&mut cells, inner, n_inner, outer, n_outer);
    }
    VolumeMesh::new(2, vertices, cells)
}

/// Triangulates the annulus between two vertex rings by advancing whichever
/// ring has the smaller next angle. With `n_inner = 0` the inner "ring" is
/// the single center vertex at index `inner`.
fn stitch_rings(
    cells: &mut Vec<usize>,
    inner: usize,
    n_inner: usize,
    outer: usize,
    n_outer: usize,
) {
    if n_inner == 0 {
        for m in 0..n_outer {
            cells.extend_from_slice(&[inner, outer + m, outer + (m + 1) % n_outer]);
        }
        return;
    }
    let angle = |m: usize, n: usize| 2.0 * std::f64::consts::PI * m as f64 / n as f64;
    let (mut i, mut o) = (0usize, 0usize);
    while i < n_inner || o < n_outer {
        let next_inner = angle(i + 1, n_inner);
        let next_outer = angle(o + 1, n_outer);
        let iv = inner + i % n_inner;
        let ov = outer + o % n_outer;
        let advance_outer = o < n_outer && (i == n_inner || next_outer <= next_inner);
        if advance_outer {
            cells.extend_from_slice(&[iv, ov, outer + (o + 1) % n_outer]);
            o += 1;
        } else {
            cells.extend_from_slice(&[iv, ov, inner + (i + 1) % n_inner]);
            i += 1;
        }
    }
}

/// Unit disk with a ring placed exactly at the inclusion radius eps and
/// near-uniform spacing h ≈ 1/n_rings elsewhere.
pub fn inclusion_aligned_disk_mesh(eps: f64, n_rings: usize) -> Result<VolumeMesh> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::Config(format!(
            "inclusion radius eps = {eps} must lie in (0, 1)"
        )));
    }
    let n_in = ((eps * n_rings as f64).round() as usize).max(2);
    let n_out = n_rings.saturating_sub(n_in).max(2);
    let mut radii = Vec::with_capacity(n_in + n_out);
    for j in 1..=n_in {
        radii.push(eps * j as f64 / n_in as f64);
    }
    for j in 1..=n_out {
        radii.push(eps + (1.0 - eps) * j as f64 / n_out as f64);
    }
    disk_rings(&radii)
}

/// Anisotropically scaled copy of a mesh (an ellipse from a disk, an
/// ellipsoid from a ball).
pub fn scaled_mesh(mesh: &VolumeMesh, factors: [f64; 3]) -> Result<VolumeMesh> {
    if factors[..mesh.dim()].iter().any(|&f| f <= 0.0) {
        return Err(Error::Config("scale factors must be positive".into()));
    }
    let vertices: Vec<Point> = mesh
        .vertices()
        .iter()
        .map(|p| Point::new(p.x * factors[0], p.y * factors[1], p.z * factors[2]))
        .collect();
    let nv = mesh.dim() + 1;
    let mut cells = Vec::with_capacity(mesh.num_cells() * nv);
    for c in 0..mesh.num_cells() {
        cells.extend_from_slice(mesh.cell(c));
    }
    VolumeMesh::with_rule(mesh.dim(), vertices, cells, mesh.quad_rule().clone())
}

/// Triangulation of the unit sphere: an octahedron subdivided `level` times,
/// with all vertices projected back to the sphere.
fn sphere_triangulation(level: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut verts = vec![
        Point::new(1.0, 0.0, 0.0),
        Point::new(-1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, -1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
        Point::new(0.0, 0.0, -1.0),
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    for _ in 0..level {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mid = |a: usize, b: usize, verts: &mut Vec<Point>, map: &mut BTreeMap<(usize, usize), usize>| {
                let key = (a.min(b), a.max(b));
                *map.entry(key).or_insert_with(|| {
                    let p = (verts[a] + verts[b]).normalize();
                    verts.push(p);
                    verts.len() - 1
                })
            };
            let ab = mid(f[0], f[1], &mut verts, &mut midpoint);
            let bc = mid(f[1], f[2], &mut verts, &mut midpoint);
            let ca = mid(f[2], f[0], &mut verts, &mut midpoint);
            next.push([f[0], ab, ca]);
            next.push([ab, f[1], bc]);
            next.push([ca, bc, f[2]]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Unit ball from concentric spherical shells sharing one sphere
/// triangulation. Prisms between shells are split into three tetrahedra
/// with quad diagonals chosen through each quad's smallest global vertex,
/// which makes the decomposition conforming across neighboring prisms.
pub fn unit_ball_mesh(n_shells: usize, level: u32) -> Result<VolumeMesh> {
    if n_shells < 1 {
        return Err(Error::Config("at least one shell required".into()));
    }
    let (sphere_verts, faces) = sphere_triangulation(level);
    let vps = sphere_verts.len();
    let mut vertices = vec![Point::zeros()];
    for s in 1..=n_shells {
        let r = s as f64 / n_shells as f64;
        vertices.extend(sphere_verts.iter().map(|p| p * r));
    }
    let shell_index = |s: usize, v: usize| 1 + (s - 1) * vps + v;

    let mut cells = Vec::new();
    for f in &faces {
        cells.extend_from_slice(&[
            0,
            shell_index(1, f[0]),
            shell_index(1, f[1]),
            shell_index(1, f[2]),
        ]);
    }
    for s in 1..n_shells {
        for f in &faces {
            let bottom = [
                shell_index(s, f[0]),
                shell_index(s, f[1]),
                shell_index(s, f[2]),
            ];
            let top = [
                shell_index(s + 1, f[0]),
                shell_index(s + 1, f[1]),
                shell_index(s + 1, f[2]),
            ];
            split_prism(&mut cells, bottom, top);
        }
    }
    VolumeMesh::new(3, vertices, cells)
}

/// Splits the prism with bottom triangle `b` and top triangle `t` (matching
/// columns) into three tetrahedra fanned from its smallest global vertex.
fn split_prism(cells: &mut Vec<usize>, b: [usize; 3], t: [usize; 3]) {
    // Rotate columns so that the prism-wide minimum sits in column 0.
    let min_col = (0..3)
        .min_by_key(|&c| b[c].min(t[c]))
        .expect("three columns");
    let col = |c: usize| (b[(min_col + c) % 3], t[(min_col + c) % 3]);
    let (a0, a1) = col(0);
    let (b0, b1) = col(1);
    let (c0, c1) = col(2);
    let v = a0.min(a1);
    // Faces of the prism not containing v: one triangle and the quad
    // (b0, c0, c1, b1). The quad diagonal runs through its smallest vertex.
    let opposite_triangle = if v == a0 { [a1, b1, c1] } else { [a0, b0, c0] };
    cells.extend_from_slice(&[v, opposite_triangle[0], opposite_triangle[1], opposite_triangle[2]]);
    let quad_min = b0.min(c0).min(c1).min(b1);
    if quad_min == b0 || quad_min == c1 {
        cells.extend_from_slice(&[v, b0, c0, c1]);
        cells.extend_from_slice(&[v, b0, c1, b1]);
    } else {
        cells.extend_from_slice(&[v, b0, c0, b1]);
        cells.extend_from_slice(&[v, c0, c1, b1]);
    }
}

/// Ear-clipping triangulation of a simple polygon followed by uniform
/// refinement until all cells have diameter at most 2h.
pub fn polygon_mesh(polygon: &[[f64; 2]], h: f64) -> Result<VolumeMesh> {
    if polygon.len() < 3 {
        return Err(Error::InvalidMesh(format!(
            "polygon needs at least 3 vertices, got {}",
            polygon.len()
        )));
    }
    let mut pts: Vec<Point> = polygon
        .iter()
        .map(|&[x, y]| Point::new(x, y, 0.0))
        .collect();
    for w in pts.windows(2) {
        if (w[1] - w[0]).norm() < 1e-14 {
            return Err(Error::InvalidMesh("repeated consecutive vertex".into()));
        }
    }
    if (pts[0] - pts[pts.len() - 1]).norm() < 1e-14 {
        pts.pop();
        if pts.len() < 3 {
            return Err(Error::InvalidMesh("degenerate polygon".into()));
        }
    }
    let area = polygon_signed_area(&pts);
    if area.abs() < 1e-14 {
        return Err(Error::InvalidMesh("polygon has zero area".into()));
    }
    if area < 0.0 {
        pts.reverse();
    }
    check_simple(&pts)?;

    let mut cells = ear_clip(&pts)?;
    let mut vertices = pts;
    // Uniform quadrisection keeps conformity while shrinking diameters.
    loop {
        let max_diam = cells
            .chunks(3)
            .map(|c| {
                simplex_diameter3(&vertices[c[0]], &vertices[c[1]], &vertices[c[2]])
            })
            .fold(0.0f64, f64::max);
        if max_diam <= 2.0 * h {
            break;
        }
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut refined = Vec::with_capacity(cells.len() * 4);
        for c in cells.chunks(3) {
            let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    vertices.push(0.5 * (vertices[a] + vertices[b]));
                    vertices.len() - 1
                })
            };
            let ab = mid(c[0], c[1], &mut vertices);
            let bc = mid(c[1], c[2], &mut vertices);
            let ca = mid(c[2], c[0], &mut vertices);
            refined.extend_from_slice(&[c[0], ab, ca, ab, c[1], bc, ca, bc, c[2], ab, bc, ca]);
        }
        cells = refined;
    }
    VolumeMesh::new(2, vertices, cells)
}

fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for k in 0..n {
        let p = &pts[k];
        let q = &pts[(k + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}

fn check_simple(pts: &[Point]) -> Result<()> {
    let n = pts.len();
    for a in 0..n {
        for b in (a + 1)..n {
            // Skip adjacent edges (they share a vertex).
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            if segments_intersect(
                &pts[a],
                &pts[(a + 1) % n],
                &pts[b],
                &pts[(b + 1) % n],
            ) {
                return Err(Error::InvalidMesh(format!(
                    "polygon edges {a} and {b} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn orient2d(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    false
}

fn ear_clip(pts: &[Point]) -> Result<Vec<usize>> {
    let mut alive: Vec<usize> = (0..pts.len()).collect();
    let mut cells = Vec::new();
    while alive.len() > 3 {
        let n = alive.len();
        let mut clipped = false;
        for k in 0..n {
            let prev = alive[(k + n - 1) % n];
            let cur = alive[k];
            let next = alive[(k + 1) % n];
            if orient2d(&pts[prev], &pts[cur], &pts[next]) <= 1e-14 {
                continue;
            }
            let is_ear = alive.iter().all(|&other| {
                if other == prev || other == cur || other == next {
                    return true;
                }
                !point_in_triangle(&pts[other], &pts[prev], &pts[cur], &pts[next])
            });
            if is_ear {
                cells.extend_from_slice(&[prev, cur, next]);
                alive.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::InvalidMesh(
                "polygon could not be triangulated (not simple?)".into(),
            ));
        }
    }
    cells.extend_from_slice(&[alive[0], alive[1], alive[2]]);
    Ok(cells)
}

fn point_in_triangle(x: &Point, a: &Point, b: &Point, c: &Point) -> bool {
    let d1 = orient2d(a, b, x);
    let d2 = orient2d(b, c, x);
    let d3 = orient2d(c, a, x);
    d1 >= -1e-14 && d2 >= -1e-14 && d3 >= -1e-14
}

fn simplex_diameter3(a: &Point, b: &Point, c: &Point) -> f64 {
    (a - b).norm().max((b - c).norm()).max((a - c).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn disk_mesh_counts_and_area() {
        let mesh = unit_disk_mesh(10).unwrap();
        assert_eq!(mesh.num_vertices(), 1 + 3 * 10 * 11);
        assert_eq!(mesh.num_cells(), 6 * 10 * 10);
        assert_relative_eq!(mesh.total_measure(), PI, max_relative = 0.01);
        assert_eq!(mesh.boundary_facets().len(), 60);
    }

    #[test]
    fn disk_reference_mesh_meets_contract() {
        let h = 0.1;
        let mesh = build_reference_mesh(&ReferenceShape::UnitDisk, h).unwrap();
        assert!(mesh.max_cell_diameter() <= 2.0 * h);
        assert_relative_eq!(mesh.total_measure(), PI, max_relative = 0.01);
    }

    #[test]
    fn disk_boundary_normals_are_radial() {
        let mesh = unit_disk_mesh(6).unwrap();
        for f in mesh.boundary_facets() {
            let radial = f.centroid / f.centroid.norm();
            assert!(f.normal.dot(&radial) > 0.99);
        }
    }

    #[test]
    fn aligned_mesh_has_ring_at_eps() {
        let eps = 0.15;
        let mesh = inclusion_aligned_disk_mesh(eps, 40).unwrap();
        // Some vertices must sit exactly on |x| = eps.
        let on_ring = mesh
            .vertices()
            .iter()
            .filter(|p| (p.norm() - eps).abs() < 1e-12)
            .count();
        assert!(on_ring >= 12);
        // No cell straddles the interface: each is fully inside or outside.
        for c in 0..mesh.num_cells() {
            let rs: Vec<f64> = mesh.cell_vertices(c).iter().map(|p| p.norm()).collect();
            let centroid_r = mesh.cell_centroid(c).norm();
            if centroid_r < eps {
                assert!(rs.iter().all(|&r| r <= eps + 1e-12));
            } else {
                assert!(rs.iter().all(|&r| r >= eps - 1e-9 || r < 1e-12));
            }
        }
    }

    #[test]
    fn ball_mesh_volume_and_conformity() {
        let mesh = unit_ball_mesh(4, 2).unwrap();
        // Coarse tessellation; the h-driven contract test below is tighter.
        assert_relative_eq!(
            mesh.total_measure(),
            4.0 * PI / 3.0,
            max_relative = 0.1
        );
        // Construction already verifies conformity; spot-check Euler-style
        // counts: boundary facets = sphere faces.
        assert_eq!(mesh.boundary_facets().len(), 8 * 4usize.pow(2));
    }

    #[test]
    fn ball_reference_mesh_meets_contract() {
        let h = 0.2;
        let mesh = build_reference_mesh(&ReferenceShape::UnitBall, h).unwrap();
        assert!(mesh.max_cell_diameter() <= 2.0 * h);
        assert_relative_eq!(
            mesh.total_measure(),
            4.0 * PI / 3.0,
            max_relative = 0.03
        );
    }

    #[test]
    fn polygon_mesh_square() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mesh = polygon_mesh(&square, 0.2).unwrap();
        assert_relative_eq!(mesh.total_measure(), 1.0, epsilon = 1e-12);
        assert!(mesh.max_cell_diameter() <= 0.4);
    }

    #[test]
    fn polygon_mesh_nonconvex() {
        let lshape = vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ];
        let mesh = polygon_mesh(&lshape, 0.3).unwrap();
        assert_relative_eq!(mesh.total_measure(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        assert!(polygon_mesh(&[[0.0, 0.0], [1.0, 0.0]], 0.1).is_err());
        assert!(polygon_mesh(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 0.1).is_err());
        // Figure eight: self-intersecting.
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polygon_mesh(&bowtie, 0.1).is_err());
    }

    #[test]
    fn scaled_mesh_gives_ellipse() {
        let disk = unit_disk_mesh(8).unwrap();
        let ellipse = scaled_mesh(&disk, [2.0, 0.5, 1.0]).unwrap();
        assert_relative_eq!(
            ellipse.total_measure(),
            disk.total_measure(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let square_cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let mesh = polygon_mesh(&square_cw, 0.5).unwrap();
        assert_relative_eq!(mesh.total_measure(), 1.0, epsilon = 1e-12);
    }
}

//! Simplicial volume meshes with precomputed quadrature and P1 geometry.

use crate::error::{Error, Result};
use crate::meshgeom::quadrature::QuadratureRule;
use crate::Fnv64;
use std::collections::BTreeMap;

/// Points live in R^3 with a zero third component in two dimensions.
pub type Point = nalgebra::Vector3<f64>;

/// One boundary facet: an edge in 2D, a triangle in 3D.
#[derive(Clone, Debug)]
pub struct BoundaryFacet {
    nodes: [usize; 3],
    nv: u8,
    /// Index of the unique cell owning this facet.
    pub cell: usize,
    /// Unit outward normal.
    pub normal: Point,
    /// Length in 2D, area in 3D.
    pub measure: f64,
    pub centroid: Point,
}

impl BoundaryFacet {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.nv as usize]
    }
}

/// A conforming simplicial mesh of a bounded domain.
///
/// Construction fixes cell orientation (positive signed measure), verifies
/// conformity, extracts the boundary with outward normals and caches cell
/// measures, P1 shape-function gradients and physical quadrature points.
#[derive(Clone, Debug)]
pub struct VolumeMesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    rule: QuadratureRule,
    cell_measures: Vec<f64>,
    cell_diameters: Vec<f64>,
    grad_lambda: Vec<Point>,
    quad_points: Vec<Point>,
    quad_weights: Vec<f64>,
    facets: Vec<BoundaryFacet>,
    vertex_cells: Vec<Vec<usize>>,
    hash: u64,
}

impl VolumeMesh {
    /// Builds a mesh with the default degree-4 cell quadrature.
    pub fn new(dim: usize, vertices: Vec<Point>, cells: Vec<usize>) -> Result<Self> {
        let rule = QuadratureRule::simplex(dim, 4)?;
        Self::with_rule(dim, vertices, cells, rule)
    }

    pub fn with_rule(
        dim: usize,
        vertices: Vec<Point>,
        mut cells: Vec<usize>,
        rule: QuadratureRule,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if rule.dim() != dim {
            return Err(Error::Quadrature(format!(
                "rule dimension {} does not match mesh dimension {dim}",
                rule.dim()
            )));
        }
        let nv = dim + 1;
        if cells.is_empty() || cells.len() % nv != 0 {
            return Err(Error::InvalidMesh(format!(
                "cell list length {} is not a multiple of {nv}",
                cells.len()
            )));
        }
        if vertices.is_empty() {
            return Err(Error::InvalidMesh("empty vertex list".into()));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::InvalidMesh(format!(
                "cell references vertex {bad} out of {}",
                vertices.len()
            )));
        }
        if dim == 2 && vertices.iter().any(|p| p.z != 0.0) {
            return Err(Error::InvalidMesh(
                "2D mesh vertices must have zero third component".into(),
            ));
        }
        let n_cells = cells.len() / nv;

        // Orient: flip the last two vertices of any negatively oriented cell.
        let mut measures = Vec::with_capacity(n_cells);
        let scale = bounding_scale(&vertices);
        for c in 0..n_cells {
            let signed = signed_measure(dim, &vertices, &cells[c * nv..(c + 1) * nv]);
            if signed < 0.0 {
                cells.swap(c * nv + dim - 1, c * nv + dim);
            }
            let m = signed.abs();
            if m <= 1e-14 * scale.powi(dim as i32) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} is degenerate (measure {m:.3e})"
                )));
            }
            measures.push(m);
        }

        let facets = extract_boundary(dim, &vertices, &cells)?;

        let mut diameters = Vec::with_capacity(n_cells);
        let mut grads = Vec::with_capacity(n_cells * nv);
        for c in 0..n_cells {
            let vs = cell_vertex_positions(dim, &vertices, &cells, c);
            diameters.push(simplex_diameter(&vs));
            grads.extend(p1_gradients(dim, &vs, measures[c]));
        }

        let mut quad_points = Vec::with_capacity(n_cells * rule.len());
        let mut quad_weights = Vec::with_capacity(n_cells * rule.len());
        for c in 0..n_cells {
            let vs = cell_vertex_positions(dim, &vertices, &cells, c);
            for q in 0..rule.len() {
                quad_points.push(rule.point(q, &vs));
                quad_weights.push(rule.weights()[q] * measures[c]);
            }
        }

        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for c in 0..n_cells {
            for &v in &cells[c * nv..(c + 1) * nv] {
                vertex_cells[v].push(c);
            }
        }

        let mut hasher = Fnv64::new();
        hasher.write_usize(dim);
        hasher.write_usize(vertices.len());
        for p in &vertices {
            hasher.write_f64(p.x);
            hasher.write_f64(p.y);
            hasher.write_f64(p.z);
        }
        for &v in &cells {
            hasher.write_usize(v);
        }
        let hash = hasher.finish();

        Ok(VolumeMesh {
            dim,
            vertices,
            cells,
            rule,
            cell_measures: measures,
            cell_diameters: diameters,
            grad_lambda: grads,
            quad_points,
            quad_weights,
            facets,
            vertex_cells,
            hash,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex indices of cell c (dim+1 entries).
    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cell_vertices(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        self.cell_measures[c]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.cell_diameters[c]
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let nv = (self.dim + 1) as f64;
        self.cell(c)
            .iter()
            .map(|&v| self.vertices[v])
            .sum::<Point>()
            / nv
    }

    pub fn max_cell_diameter(&self) -> f64 {
        self.cell_diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.cell_measures.iter().sum()
    }

    /// Constant P1 shape-function gradients on cell c, one per local vertex.
    pub fn cell_p1_gradients(&self, c: usize) -> &[Point] {
        let nv = self.dim + 1;
        &self.grad_lambda[c * nv..(c + 1) * nv]
    }

    /// Gradient of the P1 interpolant of nodal values on cell c.
    pub fn p1_gradient(&self, c: usize, nodal: &[f64]) -> Point {
        let mut g = Point::zeros();
        for (&v, gl) in self.cell(c).iter().zip(self.cell_p1_gradients(c)) {
            g += nodal[v] * gl;
        }
        g
    }

    /// Barycentric coordinates of x with respect to cell c.
    pub fn barycentric(&self, c: usize, x: &Point) -> Vec<f64> {
        let first = self.vertices[self.cell(c)[0]];
        let d = x - first;
        let grads = self.cell_p1_gradients(c);
        let mut lambda = Vec::with_capacity(self.dim + 1);
        let mut rest_sum = 0.0;
        for grad in grads.iter().take(self.dim + 1).skip(1) {
            let l = grad.dot(&d);
            lambda.push(l);
            rest_sum += l;
        }
        lambda.insert(0, 1.0 - rest_sum);
        lambda
    }

    pub fn quad_rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Physical quadrature points of cell c.
    pub fn cell_quad_points(&self, c: usize) -> &[Point] {
        let n = self.rule.len();
        &self.quad_points[c * n..(c + 1) * n]
    }

    /// Physical quadrature weights of cell c (they sum to the cell measure).
    pub fn cell_quad_weights(&self, c: usize) -> &[f64] {
        let n = self.rule.len();
        &self.quad_weights[c * n..(c + 1) * n]
    }

    /// All quadrature points, flattened cell by cell.
    pub fn quad_points(&self) -> &[Point] {
        &self.quad_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    /// Sorted indices of vertices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .facets
            .iter()
            .flat_map(|f| f.nodes().iter().copied())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn boundary_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }

    /// Cells incident to a vertex.
    pub fn cells_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Mean diameter of the cells incident to a vertex.
    pub fn local_mesh_size(&self, v: usize) -> f64 {
        let cells = &self.vertex_cells[v];
        if cells.is_empty() {
            return self.max_cell_diameter();
        }
        cells.iter().map(|&c| self.cell_diameters[c]).sum::<f64>() / cells.len() as f64
    }

    /// Distance from x to the mesh boundary.
    pub fn distance_to_boundary(&self, x: &Point) -> f64 {
        self.facets
            .iter()
            .map(|f| self.distance_to_facet(f, x))
            .fold(f64::INFINITY, f64::min)
    }

    fn distance_to_facet(&self, f: &BoundaryFacet, x: &Point) -> f64 {
        let ps: Vec<Point> = f.nodes().iter().map(|&v| self.vertices[v]).collect();
        if self.dim == 2 {
            point_segment_distance(x, &ps[0], &ps[1])
        } else {
            point_triangle_distance(x, &ps[0], &ps[1], &ps[2])
        }
    }

    /// Index of a cell containing x, if any (linear scan; diagnostics only).
    pub fn locate(&self, x: &Point) -> Option<usize> {
        (0..self.num_cells()).find(|&c| {
            self.barycentric(c, x)
                .iter()
                .all(|&l| l >= -1e-10)
        })
    }

    /// Stable content hash over vertices and connectivity.
    pub fn hash(&self) -> u64 {
        self.hash
    }
}

/// Geometric domain a boundary-value problem is posed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitDisk,
    UnitBall,
    Polygonal,
}

/// A meshed domain together with the inclusion center and its clearance
/// from the boundary.
#[derive(Clone, Debug)]
pub struct Domain {
    pub kind: DomainKind,
    pub mesh: std::sync::Arc<VolumeMesh>,
    /// Inclusion center.
    pub x0: Point,
    /// Required clearance between the scaled inclusion and the boundary.
    pub d0: f64,
}

impl Domain {
    pub fn new(
        kind: DomainKind,
        mesh: std::sync::Arc<VolumeMesh>,
        x0: Point,
        d0: f64,
    ) -> Result<Self> {
        if d0 <= 0.0 {
            return Err(Error::Config(format!("clearance d0 = {d0} must be positive")));
        }
        let dist = mesh.distance_to_boundary(&x0);
        if dist <= d0 {
            return Err(Error::Config(format!(
                "inclusion center is {dist:.4} from the boundary, below the required clearance {d0}"
            )));
        }
        Ok(Domain { kind, mesh, x0, d0 })
    }

    /// Checks that the scaled inclusion ε·B (B inside the unit ball) stays
    /// at least d0 away from the boundary.
    pub fn check_clearance(&self, eps: f64, inclusion_radius: f64) -> Result<()> {
        let dist = self.mesh.distance_to_boundary(&self.x0);
        if dist - eps * inclusion_radius <= self.d0 {
            return Err(Error::Config(format!(
                "inclusion of scaled radius {:.4} at distance {dist:.4} from the boundary violates the clearance {}",
                eps * inclusion_radius,
                self.d0
            )));
        }
        Ok(())
    }
}

fn bounding_scale(vertices: &[Point]) -> f64 {
    vertices
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max)
        .max(1.0)
}

fn cell_vertex_positions(dim: usize, vertices: &[Point], cells: &[usize], c: usize) -> Vec<Point> {
    let nv = dim + 1;
    cells[c * nv..(c + 1) * nv]
        .iter()
        .map(|&v| vertices[v])
        .collect()
}

fn signed_measure(dim: usize, vertices: &[Point], cell: &[usize]) -> f64 {
    let p: Vec<&Point> = cell.iter().map(|&v| &vertices[v]).collect();
    if dim == 2 {
        let a = p[1] - p[0];
        let b = p[2] - p[0];
        0.5 * (a.x * b.y - a.y * b.x)
    } else {
        let a = p[1] - p[0];
        let b = p[2] - p[0];
        let c = p[3] - p[0];
        a.dot(&b.cross(&c)) / 6.0
    }
}

pub(crate) fn simplex_diameter(vs: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for a in 0..vs.len() {
        for b in (a + 1)..vs.len() {
            d = d.max((vs[a] - vs[b]).norm());
        }
    }
    d
}

fn p1_gradients(dim: usize, vs: &[Point], measure: f64) -> Vec<Point> {
    if dim == 2 {
        let perp = |v: Point| Point::new(-v.y, v.x, 0.0);
        let s = 1.0 / (2.0 * measure);
        vec![
            perp(vs[2] - vs[1]) * s,
            perp(vs[0] - vs[2]) * s,
            perp(vs[1] - vs[0]) * s,
        ]
    } else {
        let s = 1.0 / (6.0 * measure);
        let g1 = (vs[2] - vs[0]).cross(&(vs[3] - vs[0])) * s;
        let g2 = (vs[3] - vs[0]).cross(&(vs[1] - vs[0])) * s;
        let g3 = (vs[1] - vs[0]).cross(&(vs[2] - vs[0])) * s;
        vec![-(g1 + g2 + g3), g1, g2, g3]
    }
}

fn extract_boundary(
    dim: usize,
    vertices: &[Point],
    cells: &[usize],
) -> Result<Vec<BoundaryFacet>> {
    let nv = dim + 1;
    let n_cells = cells.len() / nv;
    // Key: sorted facet nodes. Value: (count, owning cell, oriented nodes).
    let mut table: BTreeMap<Vec<usize>, (usize, usize, Vec<usize>)> = BTreeMap::new();
    for c in 0..n_cells {
        let cell = &cells[c * nv..(c + 1) * nv];
        for skip in 0..nv {
            let facet: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != skip)
                .map(|(_, &v)| v)
                .collect();
            let mut key = facet.clone();
            key.sort_unstable();
            match table.get_mut(&key) {
                Some(entry) => {
                    entry.0 += 1;
                    if entry.0 > 2 {
                        return Err(Error::InvalidMesh(format!(
                            "facet {key:?} is shared by more than two cells"
                        )));
                    }
                }
                None => {
                    table.insert(key, (1, c, facet));
                }
            }
        }
    }
    let mut facets = Vec::new();
    for (_, (count, cell, nodes)) in table {
        if count != 1 {
            continue;
        }
        let ps: Vec<Point> = nodes.iter().map(|&v| vertices[v]).collect();
        let centroid = ps.iter().sum::<Point>() / ps.len() as f64;
        let (mut normal, measure) = if dim == 2 {
            let e = ps[1] - ps[0];
            (Point::new(e.y, -e.x, 0.0).normalize(), e.norm())
        } else {
            let n = (ps[1] - ps[0]).cross(&(ps[2] - ps[0]));
            (n.normalize(), 0.5 * n.norm())
        };
        let cell_centroid = cells[cell * nv..(cell + 1) * nv]
            .iter()
            .map(|&v| vertices[v])
            .sum::<Point>()
            / nv as f64;
        if normal.dot(&(centroid - cell_centroid)) < 0.0 {
            normal = -normal;
        }
        let mut node_arr = [0usize; 3];
        node_arr[..nodes.len()].copy_from_slice(&nodes);
        facets.push(BoundaryFacet {
            nodes: node_arr,
            nv: nodes.len() as u8,
            cell,
            normal,
            measure,
            centroid,
        });
    }
    if facets.is_empty() {
        return Err(Error::InvalidMesh("mesh has no boundary".into()));
    }
    Ok(facets)
}

fn point_segment_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (x - (a + t * ab)).norm()
}

fn point_triangle_distance(x: &Point, a: &Point, b: &Point, c: &Point) -> f64 {
    // Projection onto the supporting plane, then clamping to the triangle.
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    if nn == 0.0 {
        return point_segment_distance(x, a, b);
    }
    let d = (x - a).dot(&n) / nn;
    let proj = x - d * n;
    // Barycentric test of the projection.
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
        point_segment_distance(x, a, b)
            .min(point_segment_distance(x, b, c))
            .min(point_segment_distance(x, a, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square_mesh() -> VolumeMesh {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        // Second cell deliberately mis-oriented; construction must fix it.
        let cells = vec![0, 1, 2, 0, 3, 2];
        VolumeMesh::new(2, vertices, cells).unwrap()
    }

    #[test]
    fn square_mesh_geometry() {
        let mesh = unit_square_mesh();
        assert_eq!(mesh.num_cells(), 2);
        assert_relative_eq!(mesh.total_measure(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(mesh.cell_measure(0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(mesh.cell_measure(1), 0.5, epsilon = 1e-14);
        assert_eq!(mesh.boundary_facets().len(), 4);
        assert_relative_eq!(mesh.boundary_measure(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(mesh.max_cell_diameter(), 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn outward_normals_point_away() {
        let mesh = unit_square_mesh();
        for f in mesh.boundary_facets() {
            // For the unit square centered at (0.5, 0.5) the outward normal
            // satisfies n·(centroid − center) > 0.
            let center = Point::new(0.5, 0.5, 0.0);
            assert!(f.normal.dot(&(f.centroid - center)) > 0.0);
            assert_relative_eq!(f.normal.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn quadrature_integrates_affine_functions() {
        let mesh = unit_square_mesh();
        let mut acc = 0.0;
        for c in 0..mesh.num_cells() {
            for (x, w) in mesh
                .cell_quad_points(c)
                .iter()
                .zip(mesh.cell_quad_weights(c))
            {
                acc += w * (x.x + 2.0 * x.y);
            }
        }
        // ∫ over unit square of x + 2y = 0.5 + 1.0.
        assert_relative_eq!(acc, 1.5, epsilon = 1e-13);
    }

    #[test]
    fn p1_gradients_reproduce_linear_fields() {
        let mesh = unit_square_mesh();
        let nodal: Vec<f64> = mesh
            .vertices()
            .iter()
            .map(|p| 3.0 * p.x - 2.0 * p.y + 1.0)
            .collect();
        for c in 0..mesh.num_cells() {
            let g = mesh.p1_gradient(c, &nodal);
            assert_relative_eq!(g.x, 3.0, epsilon = 1e-12);
            assert_relative_eq!(g.y, -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn barycentric_coordinates_locate_points() {
        let mesh = unit_square_mesh();
        let x = Point::new(0.6, 0.2, 0.0);
        let c = mesh.locate(&x).unwrap();
        let l = mesh.barycentric(c, &x);
        assert_relative_eq!(l.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let vs = mesh.cell_vertices(c);
        let rebuilt: Point = l
            .iter()
            .zip(vs.iter())
            .map(|(&li, vi)| li * vi)
            .sum();
        assert_relative_eq!((rebuilt - x).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tetrahedral_mesh_geometry() {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let cells = vec![0, 2, 1, 3]; // mis-oriented on purpose
        let mesh = VolumeMesh::new(3, vertices, cells).unwrap();
        assert_relative_eq!(mesh.total_measure(), 1.0 / 6.0, epsilon = 1e-14);
        assert_eq!(mesh.boundary_facets().len(), 4);
        let nodal: Vec<f64> = mesh
            .vertices()
            .iter()
            .map(|p| 1.0 * p.x + 2.0 * p.y + 3.0 * p.z)
            .collect();
        let g = mesh.p1_gradient(0, &nodal);
        assert_relative_eq!((g - Point::new(1.0, 2.0, 3.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nonconforming_mesh_is_rejected() {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.5, 1.0, 0.0),
            Point::new(0.5, -1.0, 0.0),
            Point::new(1.5, 1.0, 0.0),
        ];
        // Three triangles sharing edge (0, 1).
        let cells = vec![0, 1, 2, 0, 1, 3, 0, 1, 4];
        let err = VolumeMesh::new(2, vertices, cells).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ];
        let err = VolumeMesh::new(2, vertices, vec![0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn boundary_distance() {
        let mesh = unit_square_mesh();
        let d = mesh.distance_to_boundary(&Point::new(0.5, 0.5, 0.0));
        assert_relative_eq!(d, 0.5, epsilon = 1e-12);
        let d_edge = mesh.distance_to_boundary(&Point::new(0.5, 0.9, 0.0));
        assert_relative_eq!(d_edge, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn domain_rejects_center_too_close_to_boundary() {
        let mesh = std::sync::Arc::new(unit_square_mesh());
        let bad = Domain::new(
            DomainKind::Polygonal,
            mesh.clone(),
            Point::new(0.95, 0.5, 0.0),
            0.2,
        );
        assert!(bad.is_err());
        let good = Domain::new(
            DomainKind::Polygonal,
            mesh,
            Point::new(0.5, 0.5, 0.0),
            0.2,
        )
        .unwrap();
        assert!(good.check_clearance(0.2, 1.0).is_ok());
        assert!(good.check_clearance(0.35, 1.0).is_err());
    }

    #[test]
    fn mesh_hash_is_stable_and_discriminating() {
        let a = unit_square_mesh();
        let b = unit_square_mesh();
        assert_eq!(a.hash(), b.hash());
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.1, 0.0),
        ];
        let c = VolumeMesh::new(2, vertices, vec![0, 1, 2, 0, 2, 3]).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}

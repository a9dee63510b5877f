//! Boundary-integral tensor for a constant jump contrast.
//!
//! When the contrast is a constant d1 on B, the corrected field is a
//! single-layer potential and the transmission problem collapses to a
//! second-kind equation for its density on ∂B:
//!
//!   (λ I + K*) ψ_j = −n·∇x^j,   λ = (2 d0 + d1) / (2 d1).
//!
//! Facet midpoints of the volume mesh's boundary serve as Nyström nodes;
//! the diagonal of K* takes the smooth curvature limit, with the
//! curvature estimated from adjacent facets. The tensor pairs the inner
//! conormal trace of the corrected field with boundary monomials.

use crate::error::{Error, Result};
use crate::linalg::DenseOp;
use crate::meshgeom::{multi_indices_range, MultiIndex, Point, VolumeMesh};

use super::tensor::{PolarizationTensor, Provenance, TensorKind};
use crate::Fnv64;

const RESONANCE_GUARD: f64 = 1e-6;
const INV_2PI: f64 = 0.5 / std::f64::consts::PI;

/// Solved boundary density for one monomial index, with both conormal
/// traces of the corrected field.
#[derive(Clone, Debug)]
pub struct TransmissionDensity {
    pub d0: f64,
    pub d1: f64,
    pub index: MultiIndex,
    pub midpoints: Vec<Point>,
    pub normals: Vec<Point>,
    pub weights: Vec<f64>,
    /// Nyström values of ψ at the facet midpoints.
    pub density: Vec<f64>,
    /// n·∇(x^j + S ψ) from inside B.
    pub inner_flux: Vec<f64>,
    /// The same trace from outside.
    pub outer_flux: Vec<f64>,
    /// Relative residual of the second-kind solve.
    pub residual: f64,
}

struct BoundaryNystrom {
    midpoints: Vec<Point>,
    normals: Vec<Point>,
    weights: Vec<f64>,
    op: DenseOp,
    lambda: f64,
}

fn check_contrast(d0: f64, d1: f64) -> Result<f64> {
    if d1 == 0.0 {
        return Err(Error::Config(
            "layer tensor needs a nonzero jump contrast".into(),
        ));
    }
    if (2.0 * d0 + d1).abs() < RESONANCE_GUARD * d0.abs() {
        return Err(Error::IllPosed(format!(
            "jump pair (d0, d1) = ({d0}, {d1}) sits at the transmission resonance"
        )));
    }
    Ok((2.0 * d0 + d1) / (2.0 * d1))
}

impl BoundaryNystrom {
    fn build(mesh: &VolumeMesh, d0: f64, d1: f64) -> Result<Self> {
        if mesh.dim() != 2 {
            return Err(Error::Dimension(mesh.dim()));
        }
        let lambda = check_contrast(d0, d1)?;
        let facets = mesh.boundary_facets();
        let nb = facets.len();
        if nb < 8 {
            return Err(Error::InvalidMesh(format!(
                "boundary has only {nb} facets, too coarse for a Nystrom rule"
            )));
        }
        let midpoints: Vec<Point> = facets.iter().map(|f| f.centroid).collect();
        let normals: Vec<Point> = facets.iter().map(|f| f.normal).collect();
        let weights: Vec<f64> = facets.iter().map(|f| f.measure).collect();

        // Curvature at each facet from its two edge-sharing neighbours.
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for (p, fp) in facets.iter().enumerate() {
            for (q, fq) in facets.iter().enumerate() {
                if p != q && fp.nodes().iter().any(|v| fq.nodes().contains(v)) {
                    neighbours[p].push(q);
                }
            }
        }
        let curvature: Vec<f64> = (0..nb)
            .map(|p| {
                let nb_p = &neighbours[p];
                if nb_p.len() < 2 {
                    return 0.0;
                }
                let (a, b) = (nb_p[0], nb_p[1]);
                let dm = midpoints[b] - midpoints[a];
                let dn = normals[b] - normals[a];
                let denom = dm.norm_squared();
                if denom == 0.0 {
                    0.0
                } else {
                    (dn.dot(&dm) / denom).clamp(-1e3, 1e3)
                }
            })
            .collect();

        let op = DenseOp::from_fn(nb, |p, q| {
            if p == q {
                -curvature[p] * INV_2PI * 0.5 * weights[p]
            } else {
                let d = midpoints[p] - midpoints[q];
                -INV_2PI * d.dot(&normals[p]) / d.norm_squared() * weights[q]
            }
        });
        Ok(BoundaryNystrom {
            midpoints,
            normals,
            weights,
            op,
            lambda,
        })
    }

    fn solve(&self, d0: f64, d1: f64, j: &MultiIndex) -> Result<TransmissionDensity> {
        let nb = self.midpoints.len();
        let rhs: Vec<f64> = (0..nb)
            .map(|p| -self.normals[p].dot(&j.grad(&self.midpoints[p])))
            .collect();
        let system = DenseOp::from_fn(nb, |p, q| {
            self.op.get(p, q) + if p == q { self.lambda } else { 0.0 }
        });
        let solver = system.clone().solver();
        let sol = solver.solve_checked(&system, &rhs)?;
        if !sol.residual.is_finite() || sol.residual > 1e-8 {
            return Err(Error::LinearSolve(format!(
                "transmission density solve left relative residual {:.3e}",
                sol.residual
            )));
        }
        let density = sol.x;
        let mut inner_flux = vec![0.0; nb];
        let mut outer_flux = vec![0.0; nb];
        for p in 0..nb {
            let mut conv = 0.0;
            for q in 0..nb {
                conv += self.op.get(p, q) * density[q];
            }
            let g = -rhs[p];
            inner_flux[p] = g + 0.5 * density[p] + conv;
            outer_flux[p] = g - 0.5 * density[p] + conv;
        }
        Ok(TransmissionDensity {
            d0,
            d1,
            index: *j,
            midpoints: self.midpoints.clone(),
            normals: self.normals.clone(),
            weights: self.weights.clone(),
            density,
            inner_flux,
            outer_flux,
            residual: sol.residual,
        })
    }
}

/// Density of the layer ansatz for one monomial index.
pub fn transmission_density(
    mesh: &VolumeMesh,
    d0: f64,
    d1: f64,
    j: &MultiIndex,
) -> Result<TransmissionDensity> {
    BoundaryNystrom::build(mesh, d0, d1)?.solve(d0, d1, j)
}

/// Layer tensor d1 ∮ n·∇(x^j + Sψ_j)|_- x^i dσ over the boundary of B.
pub fn tensor_layer(
    d0: f64,
    d1: f64,
    mesh: &VolumeMesh,
    max_order: u32,
) -> Result<PolarizationTensor> {
    if max_order == 0 {
        return Err(Error::Config("tensor order must be at least 1".into()));
    }
    let nystrom = BoundaryNystrom::build(mesh, d0, d1)?;
    let dim = mesh.dim();
    let indices = multi_indices_range(dim, 1, max_order);
    let n = indices.len();
    let mut values = vec![0.0; n * n];
    for (b, j) in indices.iter().enumerate() {
        let dens = nystrom.solve(d0, d1, j)?;
        for (a, i) in indices.iter().enumerate() {
            values[a * n + b] = d1
                * dens
                    .weights
                    .iter()
                    .zip(&dens.inner_flux)
                    .zip(&dens.midpoints)
                    .map(|((w, flux), m)| w * flux * i.eval(m))
                    .sum::<f64>();
        }
    }

    let mut h = Fnv64::new();
    h.write(b"layer");
    h.write_f64(d0);
    h.write_f64(d1);
    let prov = Provenance {
        profile_hash: h.finish_hex(),
        mesh_hash: format!("{:016x}", mesh.hash()),
        solver_tol: 1e-8,
    };
    PolarizationTensor::new(TensorKind::LayerM, dim, max_order, values, prov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::unit_disk_mesh;
    use std::f64::consts::PI;

    #[test]
    fn resonant_and_degenerate_contrasts_are_rejected() {
        let mesh = unit_disk_mesh(4).unwrap();
        assert!(tensor_layer(1.0, 0.0, &mesh, 1).is_err());
        assert!(tensor_layer(1.0, -2.0 + 1e-9, &mesh, 1).is_err());
        assert!(tensor_layer(1.0, -0.5, &mesh, 1).is_ok());
    }

    #[test]
    fn disk_density_matches_the_separated_solution() {
        let mesh = unit_disk_mesh(12).unwrap();
        let e1 = MultiIndex::unit(2, 0);
        let dens = transmission_density(&mesh, 1.0, 1.0, &e1).unwrap();
        assert!(dens.residual < 1e-10);
        let mut worst = 0.0f64;
        for (m, psi) in dens.midpoints.iter().zip(&dens.density) {
            let theta = m.y.atan2(m.x);
            worst = worst.max((psi - (-2.0 / 3.0 * theta.cos())).abs());
        }
        assert!(worst < 6e-3, "density error {worst}");
    }

    #[test]
    fn fluxes_satisfy_the_jump_identity() {
        let mesh = unit_disk_mesh(10).unwrap();
        let (d0, d1) = (1.3, -0.7);
        let j = MultiIndex::new(&[1, 1]).unwrap();
        let dens = transmission_density(&mesh, d0, d1, &j).unwrap();
        for (inner, outer) in dens.inner_flux.iter().zip(&dens.outer_flux) {
            let defect = d0 * outer - (d0 + d1) * inner;
            assert!(defect.abs() < 1e-9, "jump defect {defect}");
        }
    }

    #[test]
    fn disk_layer_tensor_hits_the_closed_form() {
        let mesh = unit_disk_mesh(16).unwrap();
        let t = tensor_layer(1.0, 1.0, &mesh, 1).unwrap();
        let block = t.first_order_block().unwrap();
        let exact = 2.0 * PI / 3.0;
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { exact } else { 0.0 };
                assert!(
                    (block[(r, c)] - want).abs() < 6e-3 * exact,
                    "entry ({r},{c}) = {}",
                    block[(r, c)]
                );
            }
        }
    }

    #[test]
    fn born_limit_recovers_the_area() {
        let mesh = unit_disk_mesh(12).unwrap();
        let d1 = 1e-6;
        let t = tensor_layer(1.0, d1, &mesh, 1).unwrap();
        let e1 = MultiIndex::unit(2, 0);
        let area = mesh.total_measure();
        let got = t.get(&e1, &e1).unwrap() / d1;
        assert!((got - area).abs() < 5e-3 * area, "born entry {got}");
    }
}

//! Volume-integral tensors assembled from corrector solves.
//!
//! The leading tensor is reported in two algebraically equivalent forms.
//! The defining form pairs the corrected field with monomial gradients
//! inside B only. The symmetric form moves the corrector into an energy
//! product over the whole space; its interior part uses the mesh
//! quadrature and its exterior part integrates the kernel extension of
//! each corrector over an annulus, with the truncated far field and the
//! mesh-versus-ball sliver returned as an explicit error bound. The
//! symmetric form is bitwise symmetric by construction and is the one
//! downstream code should consume; the disagreement between the two
//! forms is a discretization diagnostic.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lippmann::{
    CorrectorField, CorrectorWorkspace, InclusionProfile, ModelMode, SOLVE_TOL,
};
use crate::meshgeom::{
    gauss_legendre, multi_indices, multi_indices_range, MultiIndex, Point, VolumeMesh,
};

use super::tensor::{expected_aux_indices, PolarizationTensor, Provenance, TensorKind};

/// Outer radius of the annulus carrying the exterior energy integral.
pub(crate) const EXTERIOR_RADIUS: f64 = 8.0;

const RADIAL_NODES_2D: usize = 16;
const ANGULAR_NODES_2D: usize = 48;
const RADIAL_NODES_3D: usize = 12;
const POLAR_NODES_3D: usize = 12;
const AZIMUTH_NODES_3D: usize = 24;

/// The leading tensor together with its assembly diagnostics.
#[derive(Clone, Debug)]
pub struct TensorM {
    /// Energy-form tensor, bitwise symmetric.
    pub symmetric: PolarizationTensor,
    /// Collocation form straight from the defining integral.
    pub defining: PolarizationTensor,
    /// Largest relative gap between the two forms.
    pub form_disagreement: f64,
    /// Radius at which the exterior integral was truncated.
    pub exterior_radius: f64,
    /// Bound on the exterior truncation plus mesh sliver error.
    pub exterior_tail_bound: f64,
}

impl TensorM {
    pub fn tensor(&self) -> &PolarizationTensor {
        &self.symmetric
    }
}

pub(crate) fn provenance_for(profile: &InclusionProfile, solver_tol: f64) -> Provenance {
    Provenance {
        profile_hash: format!("{:016x}", profile.hash()),
        mesh_hash: format!("{:016x}", profile.mesh().hash()),
        solver_tol,
    }
}

fn require_diffusion(ws: &CorrectorWorkspace) -> Result<()> {
    if ws.model().mode() != ModelMode::Diffusion {
        return Err(Error::Config(
            "volume polarization tensors need a diffusion workspace".into(),
        ));
    }
    Ok(())
}

fn require_order(max_order: u32) -> Result<()> {
    if max_order == 0 {
        return Err(Error::Config("tensor order must be at least 1".into()));
    }
    Ok(())
}

/// Contrast-weighted quadrature data shared by all entries on one mesh.
pub(crate) struct ContrastQuadrature {
    mesh: Arc<VolumeMesh>,
    /// Per cell, per quadrature point: w_q · D₁(x_q).
    weighted: Vec<Vec<f64>>,
}

impl ContrastQuadrature {
    pub(crate) fn new(profile: &InclusionProfile) -> Self {
        let mesh = Arc::clone(profile.mesh());
        let weighted = (0..mesh.num_cells())
            .map(|c| {
                mesh.cell_quad_points(c)
                    .iter()
                    .zip(mesh.cell_quad_weights(c))
                    .map(|(x, w)| w * profile.value_at(c, x))
                    .collect()
            })
            .collect();
        ContrastQuadrature { mesh, weighted }
    }

    fn mesh(&self) -> &VolumeMesh {
        &self.mesh
    }

    /// V_i(c) = Σ_q w_q D₁(x_q) ∇x^i(x_q), one vector per cell.
    fn gradient_moment(&self, i: &MultiIndex) -> Vec<Point> {
        (0..self.mesh.num_cells())
            .map(|c| {
                self.mesh
                    .cell_quad_points(c)
                    .iter()
                    .zip(&self.weighted[c])
                    .map(|(x, t)| *t * i.grad(x))
                    .sum()
            })
            .collect()
    }

    /// b_ab = ∫ D₁ ∇x^a·∇x^b, assembled once per unordered pair.
    fn monomial_gradient_matrix(&self, indices: &[MultiIndex]) -> Vec<f64> {
        let n = indices.len();
        let mut out = vec![0.0; n * n];
        for c in 0..self.mesh.num_cells() {
            for (x, t) in self.mesh.cell_quad_points(c).iter().zip(&self.weighted[c]) {
                let grads: Vec<Point> = indices.iter().map(|i| i.grad(x)).collect();
                for a in 0..n {
                    for b in a..n {
                        out[a * n + b] += t * grads[a].dot(&grads[b]);
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                out[a * n + b] = out[b * n + a];
            }
        }
        out
    }

    /// Per cell Σ_q w_q (d0 + D₁(x_q)).
    fn total_coefficient_weights(&self, d0: f64) -> Vec<f64> {
        (0..self.mesh.num_cells())
            .map(|c| d0 * self.mesh.cell_measure(c) + self.weighted[c].iter().sum::<f64>())
            .collect()
    }

    /// Σ_c g(c)·V(c) for a cellwise-constant gradient field.
    fn pair_with_field(&self, moments: &[Point], field: &CorrectorField) -> f64 {
        moments
            .iter()
            .enumerate()
            .map(|(c, v)| field.cell_gradient(c).dot(v))
            .sum()
    }

    /// Entry Σ_c Σ_q w q₁ f(x_q) x^i(x_q) for a nodal scalar field.
    fn scalar_moment(&self, i: &MultiIndex, field: &CorrectorField) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.mesh.num_cells() {
            for (x, t) in self.mesh.cell_quad_points(c).iter().zip(&self.weighted[c]) {
                acc += t * field.value_at(c, x) * i.eval(x);
            }
        }
        acc
    }
}

/// Product quadrature on the annulus r0 < |x| < R, radially log-mapped,
/// together with a potential-sampling ring on r = R that recovers the
/// dipole moment of each corrector for the closed-form tail integral.
struct ExteriorRule {
    points: Vec<Point>,
    weights: Vec<f64>,
    inner_shell: Vec<usize>,
    outer_shell: Vec<usize>,
    tail_points: Vec<Point>,
    tail_weights: Vec<f64>,
    r0: f64,
}

impl ExteriorRule {
    fn build(mesh: &VolumeMesh) -> ExteriorRule {
        let dim = mesh.dim();
        let r0 = (0..mesh.num_vertices())
            .map(|v| mesh.vertex(v).norm())
            .fold(0.0f64, f64::max);
        let span = (EXTERIOR_RADIUS / r0).ln();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut inner_shell = Vec::new();
        let mut outer_shell = Vec::new();
        let mut tail_points = Vec::new();
        let mut tail_weights = Vec::new();
        if dim == 2 {
            let (rx, rw) = gauss_legendre(RADIAL_NODES_2D);
            let dtheta = 2.0 * PI / ANGULAR_NODES_2D as f64;
            for (ri, (xi, wr)) in rx.iter().zip(&rw).enumerate() {
                let s = r0.ln() + xi * span;
                let r = s.exp();
                let radial_w = wr * span * (2.0 * s).exp();
                for ai in 0..ANGULAR_NODES_2D {
                    let theta = dtheta * (ai as f64 + 0.5);
                    let idx = points.len();
                    points.push(Point::new(r * theta.cos(), r * theta.sin(), 0.0));
                    weights.push(radial_w * dtheta);
                    if ri == 0 {
                        inner_shell.push(idx);
                    }
                    if ri == RADIAL_NODES_2D - 1 {
                        outer_shell.push(idx);
                    }
                }
            }
            for ai in 0..ANGULAR_NODES_2D {
                let theta = dtheta * (ai as f64 + 0.5);
                tail_points.push(Point::new(
                    EXTERIOR_RADIUS * theta.cos(),
                    EXTERIOR_RADIUS * theta.sin(),
                    0.0,
                ));
                tail_weights.push(dtheta);
            }
        } else {
            let (rx, rw) = gauss_legendre(RADIAL_NODES_3D);
            let (px, pw) = gauss_legendre(POLAR_NODES_3D);
            let dphi = 2.0 * PI / AZIMUTH_NODES_3D as f64;
            for (ri, (xi, wr)) in rx.iter().zip(&rw).enumerate() {
                let s = r0.ln() + xi * span;
                let r = s.exp();
                let radial_w = wr * span * (3.0 * s).exp();
                for (pj, wp) in px.iter().zip(&pw) {
                    let u = 2.0 * pj - 1.0;
                    let sin_t = (1.0 - u * u).max(0.0).sqrt();
                    for ai in 0..AZIMUTH_NODES_3D {
                        let phi = dphi * (ai as f64 + 0.5);
                        let idx = points.len();
                        points.push(Point::new(
                            r * sin_t * phi.cos(),
                            r * sin_t * phi.sin(),
                            r * u,
                        ));
                        weights.push(radial_w * 2.0 * wp * dphi);
                        if ri == 0 {
                            inner_shell.push(idx);
                        }
                        if ri == RADIAL_NODES_3D - 1 {
                            outer_shell.push(idx);
                        }
                    }
                }
            }
            for (pj, wp) in px.iter().zip(&pw) {
                let u = 2.0 * pj - 1.0;
                let sin_t = (1.0 - u * u).max(0.0).sqrt();
                for ai in 0..AZIMUTH_NODES_3D {
                    let phi = dphi * (ai as f64 + 0.5);
                    tail_points.push(Point::new(
                        EXTERIOR_RADIUS * sin_t * phi.cos(),
                        EXTERIOR_RADIUS * sin_t * phi.sin(),
                        EXTERIOR_RADIUS * u,
                    ));
                    tail_weights.push(2.0 * wp * dphi);
                }
            }
        }
        ExteriorRule {
            points,
            weights,
            inner_shell,
            outer_shell,
            tail_points,
            tail_weights,
            r0,
        }
    }

    /// Dipole moment of a corrector from first-harmonic potential samples
    /// on the sphere r = R; higher even harmonics integrate out exactly.
    fn dipole_moment(
        &self,
        dim: usize,
        ws: &CorrectorWorkspace,
        field: &CorrectorField,
    ) -> Result<Point> {
        let r = EXTERIOR_RADIUS;
        let factor = if dim == 2 {
            r / PI
        } else {
            3.0 * r * r / (4.0 * PI)
        };
        let mut p = Point::zeros();
        for (y, w) in self.tail_points.iter().zip(&self.tail_weights) {
            let value = ws.extension_value(field, y)?;
            p += y * (factor * w * value / r);
        }
        Ok(p)
    }
}

/// ∫_{r>R} ∇(p_a·x/r^d)·∇(p_b·x/r^d) dx, which the angular orthogonality
/// of the multipole series reduces to a constant times p_a·p_b.
fn dipole_tail_factor(dim: usize) -> f64 {
    let r = EXTERIOR_RADIUS;
    if dim == 2 {
        PI / (r * r)
    } else {
        8.0 * PI / (3.0 * r * r * r)
    }
}

/// Unit-strength dipole gradient at y, the far-field model subtracted
/// before bounding what the closed-form tail misses.
fn dipole_gradient(dim: usize, p: &Point, y: &Point) -> Point {
    let r = y.norm();
    let hat = y / r;
    let coeff = dim as f64;
    (p - hat * (coeff * p.dot(&hat))) / r.powi(dim as i32)
}

fn sphere_surface(dim: usize) -> f64 {
    if dim == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    if dim == 2 {
        PI * r * r
    } else {
        4.0 * PI * r.powi(3) / 3.0
    }
}

/// Leading polarization tensor over all indices 1 ≤ |i|, |j| ≤ max_order.
pub fn tensor_m(ws: &CorrectorWorkspace, max_order: u32) -> Result<TensorM> {
    require_diffusion(ws)?;
    require_order(max_order)?;
    let dim = ws.mesh().dim();
    let indices = multi_indices_range(dim, 1, max_order);
    let zero = MultiIndex::zero(dim);
    let fields = indices
        .iter()
        .map(|j| ws.solve_corrector_base(j, &zero))
        .collect::<Result<Vec<_>>>()?;

    let quad = ContrastQuadrature::new(ws.profile());
    let moments: Vec<Vec<Point>> = indices.iter().map(|i| quad.gradient_moment(i)).collect();
    let base = quad.monomial_gradient_matrix(&indices);

    let n = indices.len();
    let mut defining = vec![0.0; n * n];
    for (a, row) in moments.iter().enumerate() {
        for (b, field) in fields.iter().enumerate() {
            defining[a * n + b] = base[a * n + b] + quad.pair_with_field(row, field);
        }
    }

    let d0 = ws.model().d0();
    let cell_weights = quad.total_coefficient_weights(d0);
    let rule = ExteriorRule::build(quad.mesh());
    let exterior: Vec<Vec<Point>> = fields
        .iter()
        .map(|f| {
            rule.points
                .par_iter()
                .map(|y| ws.extension_gradient(f, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let dipoles = fields
        .iter()
        .map(|f| rule.dipole_moment(dim, ws, f))
        .collect::<Result<Vec<_>>>()?;

    let tail_factor = d0 * dipole_tail_factor(dim);
    let mut energy = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for (c, w) in cell_weights.iter().enumerate() {
                acc += w * fields[a].cell_gradient(c).dot(&fields[b].cell_gradient(c));
            }
            for ((ga, gb), w) in exterior[a]
                .iter()
                .zip(&exterior[b])
                .zip(&rule.weights)
            {
                acc += d0 * w * ga.dot(gb);
            }
            acc += tail_factor * dipoles[a].dot(&dipoles[b]);
            energy[a * n + b] = acc;
            energy[b * n + a] = acc;
        }
    }

    let symmetric: Vec<f64> = base
        .iter()
        .zip(&energy)
        .map(|(b, e)| b - e)
        .collect();

    let mut decay_cap = 0.0f64;
    let mut near_cap = 0.0f64;
    for (ext, dipole) in exterior.iter().zip(&dipoles) {
        let mut c = 0.0f64;
        for &p in &rule.outer_shell {
            let y = &rule.points[p];
            let defect = (ext[p] - dipole_gradient(dim, dipole, y)).norm();
            c = c.max(defect * y.norm().powi(dim as i32 + 1));
        }
        decay_cap = decay_cap.max(c);
        for &p in &rule.inner_shell {
            near_cap = near_cap.max(ext[p].norm());
        }
    }
    let truncation = d0 * decay_cap * decay_cap * sphere_surface(dim)
        / ((dim as f64 + 2.0) * EXTERIOR_RADIUS.powi(dim as i32 + 2));
    let sliver = (ball_volume(dim, rule.r0) - quad.mesh().total_measure()).max(0.0)
        * d0
        * near_cap
        * near_cap;

    let prov = provenance_for(ws.profile(), SOLVE_TOL);
    let symmetric =
        PolarizationTensor::new(TensorKind::M, dim, max_order, symmetric, prov.clone())?;
    let defining = PolarizationTensor::new(TensorKind::M, dim, max_order, defining, prov)?;

    let scale = symmetric.max_abs().max(1e-300);
    let form_disagreement = symmetric
        .values()
        .iter()
        .zip(defining.values())
        .map(|(s, d)| (s - d).abs())
        .fold(0.0f64, f64::max)
        / scale;

    Ok(TensorM {
        symmetric,
        defining,
        form_disagreement,
        exterior_radius: EXTERIOR_RADIUS,
        exterior_tail_bound: truncation + sliver,
    })
}

/// Hierarchy tensor over (i, j) blocks and auxiliary pairs (k, l).
pub fn tensor_m2(ws: &CorrectorWorkspace, max_order: u32) -> Result<PolarizationTensor> {
    require_diffusion(ws)?;
    require_order(max_order)?;
    let dim = ws.mesh().dim();
    let indices = multi_indices_range(dim, 1, max_order);
    let aux = expected_aux_indices(TensorKind::M2, dim, max_order);
    let quad = ContrastQuadrature::new(ws.profile());
    let moments: Vec<Vec<Point>> = indices.iter().map(|i| quad.gradient_moment(i)).collect();

    let n = indices.len();
    let na = aux.len();
    let mut values = vec![0.0; n * n * na];
    for (b, j) in indices.iter().enumerate() {
        for (s, (k, l)) in aux.iter().enumerate() {
            let field = ws.solve_corrector_hierarchy(j, k, *l)?;
            for (a, row) in moments.iter().enumerate() {
                values[(a * n + b) * na + s] = quad.pair_with_field(row, &field);
            }
        }
    }
    PolarizationTensor::new(
        TensorKind::M2,
        dim,
        max_order,
        values,
        provenance_for(ws.profile(), SOLVE_TOL),
    )
}

/// Full-coefficient tensor at inclusion scale eps, background un-expanded.
pub fn tensor_m_eps(ws: &CorrectorWorkspace, eps: f64, max_order: u32) -> Result<PolarizationTensor> {
    require_diffusion(ws)?;
    require_order(max_order)?;
    let dim = ws.mesh().dim();
    let indices = multi_indices_range(dim, 1, max_order);
    let quad = ContrastQuadrature::new(ws.profile());
    let moments: Vec<Vec<Point>> = indices.iter().map(|i| quad.gradient_moment(i)).collect();
    let base = quad.monomial_gradient_matrix(&indices);

    let n = indices.len();
    let mut values = vec![0.0; n * n];
    for (b, j) in indices.iter().enumerate() {
        let field = ws.solve_psi_eps(j, eps)?;
        for (a, row) in moments.iter().enumerate() {
            values[a * n + b] = base[a * n + b] + quad.pair_with_field(row, &field);
        }
    }
    PolarizationTensor::new(
        TensorKind::MEps { eps },
        dim,
        max_order,
        values,
        provenance_for(ws.profile(), SOLVE_TOL),
    )
}

/// Moment tensor Q_ij = ∫ q₁ x^{i+j}; indices include order zero.
pub fn tensor_q(q1: &InclusionProfile, max_order: u32) -> Result<PolarizationTensor> {
    let dim = q1.mesh().dim();
    let indices = multi_indices(dim, max_order);
    let moment_indices = multi_indices(dim, 2 * max_order);
    let quad = ContrastQuadrature::new(q1);
    let moments: Vec<f64> = moment_indices
        .iter()
        .map(|m| {
            let mut acc = 0.0;
            for c in 0..quad.mesh().num_cells() {
                for (x, t) in quad.mesh().cell_quad_points(c).iter().zip(&quad.weighted[c]) {
                    acc += t * m.eval(x);
                }
            }
            acc
        })
        .collect();

    let n = indices.len();
    let mut values = vec![0.0; n * n];
    for (a, i) in indices.iter().enumerate() {
        for (b, j) in indices.iter().enumerate() {
            let key = i.add(j);
            let pos = moment_indices
                .iter()
                .position(|m| *m == key)
                .expect("moment table covers doubled order");
            values[a * n + b] = moments[pos];
        }
    }
    PolarizationTensor::new(
        TensorKind::Q,
        dim,
        max_order,
        values,
        provenance_for(q1, 0.0),
    )
}

/// Corrector-weighted tensor Q^η_ij = ∫ q₁ φ_j x^i at coupling eta.
pub fn tensor_q_eta(
    ws: &CorrectorWorkspace,
    eta: f64,
    eps: f64,
    max_order: u32,
) -> Result<PolarizationTensor> {
    if ws.model().mode() != ModelMode::Helmholtz {
        return Err(Error::Config(
            "corrector-weighted moment tensors need a Helmholtz workspace".into(),
        ));
    }
    let dim = ws.mesh().dim();
    let indices = multi_indices(dim, max_order);
    let quad = ContrastQuadrature::new(ws.profile());

    let n = indices.len();
    let mut values = vec![0.0; n * n];
    for (b, j) in indices.iter().enumerate() {
        let field = ws.solve_helmholtz_corrector(j, eta, eps)?;
        for (a, i) in indices.iter().enumerate() {
            values[a * n + b] = quad.scalar_moment(i, &field);
        }
    }
    PolarizationTensor::new(
        TensorKind::QEta { eta, eps },
        dim,
        max_order,
        values,
        provenance_for(ws.profile(), SOLVE_TOL),
    )
}

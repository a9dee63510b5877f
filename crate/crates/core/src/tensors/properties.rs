//! Structural checks: symmetry, variational bounds, definiteness.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lippmann::{BackgroundModel, CorrectorWorkspace, InclusionProfile};
use crate::meshgeom::{MultiIndex, Point};

use super::tensor::PolarizationTensor;
use super::volume::tensor_m;

const NUM_PROBES: usize = 10;

/// One randomized two-sided bound evaluation.
#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub lower: f64,
    pub quad: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    Negative,
    Indefinite,
}

/// Randomized verification of the tensor's structural properties.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    /// Worst relative defect of the pairing alpha' M beta = beta' M alpha.
    pub symmetry_residual: f64,
    pub bound_checks: Vec<BoundCheck>,
    pub bounds_hold: bool,
    pub first_order_eigenvalues: Vec<f64>,
    pub classification: Option<Definiteness>,
    /// Sign condition forcing a negative-definite first-order block.
    pub negative_criterion: bool,
    /// Sign condition forcing a positive-definite first-order block.
    pub positive_criterion: bool,
}

/// Evaluates the two-sided energy bounds for one coefficient vector.
///
/// The bracketing integrals weight |∇w|² for w = Σ alpha_a x^a by
/// d0 D₁/(d0+D₁) from below and by D₁ from above; both sides use the mesh
/// quadrature of the profile. The slack is relative to the spread of the
/// three numbers involved.
pub fn quadratic_form_bounds(
    profile: &InclusionProfile,
    d0: f64,
    indices: &[MultiIndex],
    alpha: &[f64],
    quad: f64,
    slack: f64,
) -> BoundCheck {
    let mesh = profile.mesh();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for c in 0..mesh.num_cells() {
        for (x, w) in mesh
            .cell_quad_points(c)
            .iter()
            .zip(mesh.cell_quad_weights(c))
        {
            let grad: Point = indices
                .iter()
                .zip(alpha)
                .map(|(i, a)| *a * i.grad(x))
                .sum();
            let g2 = grad.norm_squared();
            let d1 = profile.value_at(c, x);
            lower += w * d0 * d1 / (d0 + d1) * g2;
            upper += w * d1 * g2;
        }
    }
    let tol = slack * (lower.abs() + upper.abs() + quad.abs() + 1e-300);
    BoundCheck {
        lower,
        quad,
        upper,
        holds: quad >= lower - tol && quad <= upper + tol,
    }
}

fn pairing(values: &[f64], n: usize, alpha: &[f64], beta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += alpha[a] * values[a * n + b] * beta[b];
        }
    }
    acc
}

/// Randomized property report for a leading-form tensor.
pub fn property_report(
    m: &PolarizationTensor,
    profile: &InclusionProfile,
    model: &BackgroundModel,
    seed: u64,
) -> Result<PropertyReport> {
    if !m.hierarchy_indices().is_empty() {
        return Err(Error::Config(
            "property report applies to tensors without a hierarchy axis".into(),
        ));
    }
    if m.dim() != profile.mesh().dim() {
        return Err(Error::Dimension(m.dim()));
    }
    let d0 = model.d0();
    profile.check_positivity(d0)?;

    let indices = m.row_indices();
    let n = indices.len();
    let values = m.values();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut symmetry_residual = 0.0f64;
    for _ in 0..NUM_PROBES {
        let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ab = pairing(values, n, &alpha, &beta);
        let ba = pairing(values, n, &beta, &alpha);
        symmetry_residual = symmetry_residual.max((ab - ba).abs() / (ab.abs() + ba.abs() + 1e-300));
    }

    let mut bound_checks = Vec::with_capacity(NUM_PROBES);
    for _ in 0..NUM_PROBES {
        let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let quad = pairing(values, n, &alpha, &alpha);
        bound_checks.push(quadratic_form_bounds(profile, d0, indices, &alpha, quad, 1e-6));
    }
    let bounds_hold = bound_checks.iter().all(|c| c.holds);

    let block = m
        .first_order_block()
        .expect("aux-free tensor has a first-order block");
    let sym = DMatrix::from_fn(m.dim(), m.dim(), |r, c| 0.5 * (block[(r, c)] + block[(c, r)]));
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let classification = if scale == 0.0 {
        None
    } else if eigenvalues.iter().all(|l| *l > 1e-12 * scale) {
        Some(Definiteness::Positive)
    } else if eigenvalues.iter().all(|l| *l < -1e-12 * scale) {
        Some(Definiteness::Negative)
    } else {
        Some(Definiteness::Indefinite)
    };

    Ok(PropertyReport {
        symmetry_residual,
        bound_checks,
        bounds_hold,
        first_order_eigenvalues: eigenvalues,
        classification,
        negative_criterion: profile.integral() < 0.0,
        positive_criterion: profile.integrate(|v| v / (d0 + v)) > 0.0,
    })
}

/// Finite-difference Lipschitz ratio of the leading tensor between two
/// profiles on a shared mesh: ‖M(a) − M(b)‖_max over the L¹ contrast gap.
pub fn continuity_probe(
    a: &InclusionProfile,
    b: &InclusionProfile,
    model: &BackgroundModel,
) -> Result<f64> {
    if a.mesh().hash() != b.mesh().hash() {
        return Err(Error::Config("profiles live on different meshes".into()));
    }
    let mesh = a.mesh();
    let mut dist = 0.0;
    for c in 0..mesh.num_cells() {
        for (x, w) in mesh
            .cell_quad_points(c)
            .iter()
            .zip(mesh.cell_quad_weights(c))
        {
            dist += w * (a.value_at(c, x) - b.value_at(c, x)).abs();
        }
    }
    if dist == 0.0 {
        return Ok(0.0);
    }
    let ma = tensor_m(&CorrectorWorkspace::new(a.clone(), model.clone())?, 1)?;
    let mb = tensor_m(&CorrectorWorkspace::new(b.clone(), model.clone())?, 1)?;
    let gap = ma
        .symmetric
        .values()
        .iter()
        .zip(mb.symmetric.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    Ok(gap / dist)
}

//! Vertex-collocation discretization of the volume integral operators.

use super::background::BackgroundModel;
use super::profile::InclusionProfile;
use crate::error::{Error, Result};
use crate::kernels::KernelEval;
use crate::linalg::DenseOp;
use crate::meshgeom::Point;

/// Which integral operator the discretized matrix represents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    /// T₀φ(y) = D₀⁻¹ ∫_B D₁ ∇φ · ∇Γ(x−y) dx, background frozen at x₀.
    T0,
    /// Weight D₁ · Σ_{|m|≤d} tₘ (εx)^m, the degree-d Taylor truncation of
    /// the inverse background around x₀.
    T0d { eps: f64 },
    /// Tᵉφ(y) = ∫_B D₁(x) D₀⁻¹(x₀+εx) ∇φ · ∇Γ(x−y) dx. The background
    /// model stores polynomial inverse-coefficient data of degree ≤ d, so
    /// this coincides with [`OperatorKind::T0d`] entrywise; both names are
    /// kept because callers reason about them differently.
    TEps { eps: f64 },
    /// Tφ(y) = ∫_B q₁ φ Γ(x−y) dx for the Helmholtz corrector family.
    Helmholtz,
}

impl OperatorKind {
    fn includes_identity(&self) -> bool {
        !matches!(self, OperatorKind::Helmholtz)
    }
}

/// Dense collocation matrix for one operator kind.
///
/// Diffusion kinds store `I + T` directly, since that is the only matrix
/// ever factored; the Helmholtz kind stores the bare `T` because solves
/// need `I + s·T` for varying scale factors.
pub struct IntegralOperator {
    kind: OperatorKind,
    a: DenseOp,
    includes_identity: bool,
}

impl IntegralOperator {
    pub fn assemble(
        kind: OperatorKind,
        profile: &InclusionProfile,
        model: &BackgroundModel,
        eval: &KernelEval,
    ) -> Result<Self> {
        let mesh = profile.mesh();
        if mesh.dim() != model.dim() || mesh.dim() != eval.dim() {
            return Err(Error::Dimension(mesh.dim()));
        }
        let n = mesh.num_vertices();
        let a = match kind {
            OperatorKind::T0 => {
                let d0_inv = model.d0_inv();
                Self::assemble_gradient_rows(profile, eval, move |_c, _x| d0_inv)?
            }
            OperatorKind::T0d { eps } | OperatorKind::TEps { eps } => {
                if !(eps > 0.0) {
                    return Err(Error::Config(format!("nonpositive scale {eps}")));
                }
                Self::assemble_gradient_rows(profile, eval, move |_c, x| {
                    model.d0_inv_at(&(eps * x))
                })?
            }
            OperatorKind::Helmholtz => DenseOp::from_rows(n, |p| {
                let y = mesh.vertex(p);
                let mut row = vec![0.0; n];
                for c in 0..mesh.num_cells() {
                    let vals = eval.cell_weighted_gamma_p1(mesh, c, y, |x| {
                        profile.value_at(c, x)
                    });
                    for (q, vert) in mesh.cell(c).iter().enumerate() {
                        row[*vert] += vals[q];
                    }
                }
                row
            })?,
        };
        Ok(IntegralOperator {
            kind,
            a,
            includes_identity: kind.includes_identity(),
        })
    }

    /// Rows of I + T for a gradient-kernel operator with pointwise weight
    /// factor(c, x) multiplying the contrast.
    fn assemble_gradient_rows(
        profile: &InclusionProfile,
        eval: &KernelEval,
        factor: impl Fn(usize, &Point) -> f64 + Sync,
    ) -> Result<DenseOp> {
        let mesh = profile.mesh();
        let n = mesh.num_vertices();
        DenseOp::from_rows(n, |p| {
            let y = mesh.vertex(p);
            let mut row = vec![0.0; n];
            for c in 0..mesh.num_cells() {
                let g = eval.cell_weighted_grad_gamma(mesh, c, y, |x| {
                    profile.value_at(c, x) * factor(c, x)
                });
                for (vert, gl) in mesh.cell(c).iter().zip(mesh.cell_p1_gradients(c)) {
                    row[*vert] += g.dot(gl);
                }
            }
            row[p] += 1.0;
            row
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn includes_identity(&self) -> bool {
        self.includes_identity
    }

    /// The stored matrix: I + T for diffusion kinds, T for Helmholtz.
    pub fn matrix(&self) -> &DenseOp {
        &self.a
    }

    /// T x regardless of storage convention.
    pub fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a.apply(x);
        if self.includes_identity {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi -= xi;
            }
        }
        y
    }

    /// (I + T) x regardless of storage convention.
    pub fn apply_full(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a.apply(x);
        if !self.includes_identity {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += xi;
            }
        }
        y
    }

    /// Dense matrix of I + s·T, built on demand for scaled solves.
    pub fn scaled_system(&self, scale: f64) -> DenseOp {
        let with_id = self.includes_identity;
        DenseOp::from_fn(self.n(), |i, j| {
            let t = self.a.get(i, j) - f64::from(with_id && i == j);
            scale * t + f64::from(i == j)
        })
    }

    /// Re-applies T to nodal values by direct quadrature, bypassing the
    /// stored matrix; used to cross-check assembly.
    pub fn apply_t_quadrature(
        &self,
        profile: &InclusionProfile,
        model: &BackgroundModel,
        eval: &KernelEval,
        x: &[f64],
    ) -> Result<Vec<f64>> {
        let mesh = profile.mesh();
        let n = mesh.num_vertices();
        if x.len() != n {
            return Err(Error::Dimension(x.len()));
        }
        let cell_grads: Vec<Point> = (0..mesh.num_cells())
            .map(|c| mesh.p1_gradient(c, x))
            .collect();
        let mut out = vec![0.0; n];
        for p in 0..n {
            let y = mesh.vertex(p);
            let mut acc = 0.0;
            for c in 0..mesh.num_cells() {
                match self.kind {
                    OperatorKind::T0 => {
                        let g = cell_grads[c];
                        let d0_inv = model.d0_inv();
                        acc += eval.cell_vector_grad_gamma(mesh, c, y, |z| {
                            profile.value_at(c, z) * d0_inv * g
                        });
                    }
                    OperatorKind::T0d { eps } | OperatorKind::TEps { eps } => {
                        let g = cell_grads[c];
                        acc += eval.cell_vector_grad_gamma(mesh, c, y, |z| {
                            profile.value_at(c, z) * model.d0_inv_at(&(eps * z)) * g
                        });
                    }
                    OperatorKind::Helmholtz => {
                        acc += eval.cell_weighted_gamma(mesh, c, y, |z| {
                            let lam = mesh.barycentric(c, z);
                            let interp: f64 = mesh
                                .cell(c)
                                .iter()
                                .zip(lam.iter())
                                .map(|(vert, l)| x[*vert] * l)
                                .sum();
                            profile.value_at(c, z) * interp
                        });
                    }
                }
            }
            out[p] = acc;
        }
        Ok(out)
    }
}
